#pragma once

#include <stdexcept>
#include <string>

namespace chronocast {

/// Bad or inconsistent input data (malformed rows, gaps, schema violations, too-short series).
class DataError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
public:
	ParseError(std::size_t row, const std::string &what)
	    : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}

	std::size_t row() const noexcept { return row_; }

private:
	std::size_t row_;
};

class GapError : public DataError {
public:
	using DataError::DataError;
};

class SchemaError : public DataError {
public:
	using DataError::DataError;
};

/// A model could not be fitted, trained or evaluated.
class ModelError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

class ConvergenceError : public ModelError {
public:
	ConvergenceError(const std::string &what, double last_objective)
	    : ModelError(what), last_objective_(last_objective) {}

	double last_objective() const noexcept { return last_objective_; }

private:
	double last_objective_;
};

class TrainingError : public ModelError {
public:
	TrainingError(const std::string &what, int epoch) : ModelError(what), epoch_(epoch) {}

	int epoch() const noexcept { return epoch_; }

private:
	int epoch_;
};

} // namespace chronocast
