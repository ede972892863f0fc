#include "chronocast/metrics.hpp"

#include "chronocast/error.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace chronocast {

Accuracy evaluate(std::span<const double> actual, std::span<const double> predicted) {
	if (actual.size() != predicted.size()) {
		throw std::invalid_argument("evaluate: actual and predicted differ in length");
	}
	if (actual.empty()) {
		throw std::invalid_argument("evaluate: empty input");
	}
	const std::size_t n = actual.size();
	const double nd = static_cast<double>(n);

	double mean = 0;
	for (std::size_t i = 0; i < n; ++i) {
		if (!std::isfinite(actual[i]) || !std::isfinite(predicted[i])) {
			throw std::invalid_argument("evaluate: non-finite value at index " + std::to_string(i));
		}
		mean += actual[i];
	}
	mean /= nd;

	double sse = 0, sae = 0, sape = 0, sst = 0;
	bool zero_actual = false;
	for (std::size_t i = 0; i < n; ++i) {
		const double e = actual[i] - predicted[i];
		sse += e * e;
		sae += std::abs(e);
		if (actual[i] == 0.0) {
			zero_actual = true;
		} else {
			sape += std::abs(e / actual[i]);
		}
		const double c = actual[i] - mean;
		sst += c * c;
	}

	Accuracy a;
	a.n = n;
	a.mse = sse / nd;
	a.rmse = std::sqrt(a.mse);
	a.mae = sae / nd;
	if (!zero_actual) {
		a.mape_percent = sape / nd * 100.0;
	}
	if (sst > 0) {
		a.r2 = 1.0 - sse / sst;
	}
	return a;
}

std::string_view to_string(Scale scale) { return scale == Scale::Normalized ? "normalized" : "physical"; }

void to_json(nlohmann::json &j, const EvaluationReport &report) {
	const Accuracy &a = report.accuracy;
	j = nlohmann::json{
	    {"model_name", report.model_name},
	    {"split_name", report.split_name},
	    {"scale", to_string(report.scale)},
	    {"mse", a.mse},
	    {"rmse", a.rmse},
	    {"mae", a.mae},
	    {"mape_percent", a.mape_percent ? nlohmann::json(*a.mape_percent) : nlohmann::json(nullptr)},
	    {"mape_defined", a.mape_percent.has_value()},
	    {"r2", a.r2 ? nlohmann::json(*a.r2) : nlohmann::json(nullptr)},
	    {"r2_defined", a.r2.has_value()},
	    {"n", a.n},
	};
}

namespace {

std::string number(double v) {
	char buf[32];
	std::snprintf(buf, sizeof(buf), "%.17g", v);
	return buf;
}

std::string optional_number(const std::optional<double> &v) { return v ? number(*v) : std::string{}; }

} // namespace

std::string csv_header() { return "model,scale,mse,rmse,mae,mape_percent,r2,n"; }

std::string csv_row(const EvaluationReport &report) {
	const Accuracy &a = report.accuracy;
	return report.model_name + "," + std::string(to_string(report.scale)) + "," + number(a.mse) + "," +
	       number(a.rmse) + "," + number(a.mae) + "," + optional_number(a.mape_percent) + "," +
	       optional_number(a.r2) + "," + std::to_string(a.n);
}

} // namespace chronocast
