#pragma once

#include "chronocast/calendar.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chronocast {

/// Gapless daily series of finite values. Construction enforces the invariants.
class TimeSeries {
public:
	TimeSeries(std::vector<Date> dates, std::vector<double> values);

	std::size_t size() const noexcept { return values_.size(); }
	std::span<const Date> dates() const noexcept { return dates_; }
	std::span<const double> values() const noexcept { return values_; }
	Date first_date() const { return dates_.front(); }
	Date last_date() const { return dates_.back(); }

private:
	std::vector<Date> dates_;
	std::vector<double> values_;
};

struct DateRange {
	Date first;
	Date last;
};

enum class InputFormat { CarbonMonitor, Tidy };

std::optional<InputFormat> parse_input_format(std::string_view name);

/// The six sectors that make up the national daily total.
std::span<const std::string_view> carbon_monitor_sectors();

/// Reads Carbon Monitor rows (country,date,sector,value; DD/MM/YYYY) and sums the sectors per day.
/// When `range` is given, rows outside it are ignored and every day inside it must be present.
/// When `country` is given, rows for other countries are ignored.
TimeSeries ingest_carbon_monitor(std::istream &in, std::optional<DateRange> range = std::nullopt,
                                 std::optional<std::string> country = std::nullopt);

/// Reads tidy rows (date,value; ISO dates), one row per day.
TimeSeries ingest_tidy(std::istream &in);

TimeSeries load_series(const std::filesystem::path &path, InputFormat format);

struct DescriptiveStats {
	std::size_t count = 0;
	double maximum = 0;
	double minimum = 0;
	double mean = 0;
	double median = 0;
	double range = 0;
	double skewness = 0;  // adjusted Fisher-Pearson G1
	double kurtosis = 0;  // bias-corrected excess kurtosis G2
	double standard_deviation = 0;  // n-1 denominator
	double standard_error = 0;
	double total = 0;
};

DescriptiveStats describe(std::span<const double> values);
inline DescriptiveStats describe(const TimeSeries &series) { return describe(series.values()); }

/// Min-max scaling fitted on a training range. Values outside that range map outside [0, 1].
class Normalizer {
public:
	Normalizer(double train_min, double train_max);

	static Normalizer fit(std::span<const double> training_values);

	double train_min() const noexcept { return min_; }
	double train_max() const noexcept { return max_; }

	double normalize(double x) const noexcept { return (x - min_) / (max_ - min_); }
	double denormalize(double z) const noexcept { return min_ + z * (max_ - min_); }
	std::vector<double> normalize(std::span<const double> xs) const;
	std::vector<double> denormalize(std::span<const double> zs) const;

private:
	double min_;
	double max_;
};

/// Half-open range of sample indices.
struct IndexRange {
	std::size_t begin = 0;
	std::size_t end = 0;

	std::size_t size() const noexcept { return end - begin; }
	bool empty() const noexcept { return begin == end; }
};

struct SplitRatios {
	double train = 0.8;
	double validation = 0.1;
	double test = 0.1;
};

/// Sliding windows: row i holds values[i .. i+width) and target values[i+width].
struct Windows {
	std::size_t width = 0;
	std::vector<double> inputs;  // row-major, count() x width
	std::vector<double> targets;

	std::size_t count() const noexcept { return targets.size(); }
	std::span<const double> input(std::size_t i) const { return {inputs.data() + i * width, width}; }
};

Windows make_windows(std::span<const double> values, std::size_t width);

struct PreparedData {
	std::vector<Date> dates;
	std::vector<double> physical;
	std::vector<double> normalized;
	Normalizer normalizer;
	Windows samples;  // over `normalized`
	IndexRange train;
	IndexRange validation;
	IndexRange test;

	std::size_t window_length() const noexcept { return samples.width; }
	/// Series position of a sample's target.
	std::size_t target_position(std::size_t sample) const noexcept { return sample + samples.width; }
	Date target_date(std::size_t sample) const { return dates[target_position(sample)]; }
};

/// Windows the series, splits samples chronologically (floor for train and validation, remainder
/// to test) and fits the normalizer on the raw values underlying the training samples only.
PreparedData window_and_split(const TimeSeries &series, std::size_t window_length = 3, SplitRatios ratios = {});

} // namespace chronocast
