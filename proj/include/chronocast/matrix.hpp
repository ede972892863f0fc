#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace chronocast {

/// Dense row-major matrix of doubles.
class Matrix {
public:
	Matrix() = default;
	Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
	Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
	    : rows_(rows), cols_(cols), data_(std::move(data)) {
		if (data_.size() != rows_ * cols_) {
			throw std::invalid_argument("Matrix: data size does not match shape");
		}
	}

	std::size_t rows() const noexcept { return rows_; }
	std::size_t cols() const noexcept { return cols_; }
	bool empty() const noexcept { return data_.empty(); }

	double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
	double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

	std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
	std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

	std::span<double> data() noexcept { return data_; }
	std::span<const double> data() const noexcept { return data_; }

	bool operator==(const Matrix &) const = default;

private:
	std::size_t rows_ = 0;
	std::size_t cols_ = 0;
	std::vector<double> data_;
};

} // namespace chronocast
