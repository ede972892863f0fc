#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

namespace chronocast {

/// The five accuracy criteria over one set of (actual, predicted) pairs.
/// `mape_percent` is empty when some actual value is zero; `r2` is empty when the actuals are constant.
struct Accuracy {
	double mse = 0;
	double rmse = 0;
	double mae = 0;
	std::optional<double> mape_percent;
	std::optional<double> r2;
	std::size_t n = 0;
};

Accuracy evaluate(std::span<const double> actual, std::span<const double> predicted);

enum class Scale { Normalized, Physical };

std::string_view to_string(Scale scale);

struct EvaluationReport {
	std::string model_name;
	std::string split_name;
	Scale scale = Scale::Normalized;
	Accuracy accuracy;
};

/// Keys: model_name, split_name, scale, mse, rmse, mae, mape_percent, mape_defined, r2, r2_defined, n.
/// Undefined criteria serialize as null with the matching *_defined flag false.
void to_json(nlohmann::json &j, const EvaluationReport &report);

std::string csv_header();
/// model,scale,mse,rmse,mae,mape_percent,r2,n with 17 significant digits; undefined values are empty.
std::string csv_row(const EvaluationReport &report);

} // namespace chronocast
