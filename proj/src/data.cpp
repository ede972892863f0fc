#include "chronocast/data.hpp"

#include "chronocast/error.hpp"
#include "csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

namespace chronocast {
namespace {

constexpr std::array<std::string_view, 6> kSectors{
    "Power", "Industry", "Ground Transport", "Residential", "Domestic Aviation", "International Aviation"};

double parse_value(const std::string &field, std::size_t line) {
	const std::string text = detail::trim(field);
	double value = 0;
	auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
	if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
		throw ParseError(line, "malformed number '" + field + "'");
	}
	if (!std::isfinite(value)) {
		throw ParseError(line, "non-finite value '" + field + "'");
	}
	return value;
}

std::size_t column_index(const std::vector<std::string> &header, std::string_view name) {
	for (std::size_t i = 0; i < header.size(); ++i) {
		if (detail::trim(header[i]) == name) {
			return i;
		}
	}
	throw SchemaError("missing column '" + std::string(name) + "'");
}

TimeSeries from_daily_map(const std::map<Date, double> &daily, std::optional<DateRange> range) {
	if (daily.empty()) {
		throw DataError("empty series");
	}
	const Date first = range ? range->first : daily.begin()->first;
	const Date last = range ? range->last : daily.rbegin()->first;
	std::vector<Date> dates;
	std::vector<double> values;
	for (Date d = first; d <= last; d = add_days(d, 1)) {
		const auto it = daily.find(d);
		if (it == daily.end()) {
			throw GapError("missing day " + format_iso(d));
		}
		dates.push_back(d);
		values.push_back(it->second);
	}
	return TimeSeries(std::move(dates), std::move(values));
}

} // namespace

TimeSeries::TimeSeries(std::vector<Date> dates, std::vector<double> values)
    : dates_(std::move(dates)), values_(std::move(values)) {
	if (values_.empty()) {
		throw DataError("empty series");
	}
	if (dates_.size() != values_.size()) {
		throw DataError("dates and values differ in length");
	}
	for (std::size_t i = 0; i < values_.size(); ++i) {
		if (!std::isfinite(values_[i])) {
			throw DataError("non-finite value on " + format_iso(dates_[i]));
		}
		if (i > 0) {
			const auto step = days_between(dates_[i - 1], dates_[i]);
			if (step <= 0) {
				throw SchemaError("dates not strictly increasing at " + format_iso(dates_[i]));
			}
			if (step > 1) {
				throw GapError("missing day " + format_iso(add_days(dates_[i - 1], 1)));
			}
		}
	}
}

std::optional<InputFormat> parse_input_format(std::string_view name) {
	if (name == "carbon-monitor") {
		return InputFormat::CarbonMonitor;
	}
	if (name == "tidy") {
		return InputFormat::Tidy;
	}
	return std::nullopt;
}

std::span<const std::string_view> carbon_monitor_sectors() { return kSectors; }

TimeSeries ingest_carbon_monitor(std::istream &in, std::optional<DateRange> range, std::optional<std::string> country) {
	std::string line;
	if (!detail::read_csv_line(in, line)) {
		throw DataError("empty series");
	}
	const auto header = detail::split_csv_line(line);
	const std::size_t c_country = column_index(header, "country");
	const std::size_t c_date = column_index(header, "date");
	const std::size_t c_sector = column_index(header, "sector");
	const std::size_t c_value = column_index(header, "value");
	const std::size_t width = std::max({c_country, c_date, c_sector, c_value}) + 1;

	std::map<Date, double> daily;
	std::set<std::pair<Date, std::string>> seen;
	std::size_t line_no = 1;
	while (detail::read_csv_line(in, line)) {
		++line_no;
		const auto fields = detail::split_csv_line(line);
		if (fields.size() < width) {
			throw ParseError(line_no, "expected at least " + std::to_string(width) + " fields");
		}
		if (country && detail::trim(fields[c_country]) != *country) {
			continue;
		}
		const auto date = parse_dmy_date(detail::trim(fields[c_date]));
		if (!date) {
			throw ParseError(line_no, "malformed date '" + fields[c_date] + "' (expected DD/MM/YYYY)");
		}
		const double value = parse_value(fields[c_value], line_no);
		std::string sector = detail::trim(fields[c_sector]);
		if (std::find(kSectors.begin(), kSectors.end(), sector) == kSectors.end()) {
			throw SchemaError("line " + std::to_string(line_no) + ": unknown sector '" + sector + "'");
		}
		if (range && (*date < range->first || *date > range->last)) {
			continue;
		}
		if (!seen.emplace(*date, sector).second) {
			throw SchemaError("line " + std::to_string(line_no) + ": duplicate row for " + format_iso(*date) +
			                  " / " + sector);
		}
		daily[*date] += value;
	}
	return from_daily_map(daily, range);
}

TimeSeries ingest_tidy(std::istream &in) {
	std::string line;
	if (!detail::read_csv_line(in, line)) {
		throw DataError("empty series");
	}
	const auto header = detail::split_csv_line(line);
	const std::size_t c_date = column_index(header, "date");
	const std::size_t c_value = column_index(header, "value");
	const std::size_t width = std::max(c_date, c_value) + 1;

	std::map<Date, double> daily;
	std::size_t line_no = 1;
	while (detail::read_csv_line(in, line)) {
		++line_no;
		const auto fields = detail::split_csv_line(line);
		if (fields.size() < width) {
			throw ParseError(line_no, "expected at least " + std::to_string(width) + " fields");
		}
		const auto date = parse_iso_date(detail::trim(fields[c_date]));
		if (!date) {
			throw ParseError(line_no, "malformed date '" + fields[c_date] + "' (expected YYYY-MM-DD)");
		}
		const double value = parse_value(fields[c_value], line_no);
		if (!daily.emplace(*date, value).second) {
			throw SchemaError("line " + std::to_string(line_no) + ": duplicate date " + format_iso(*date));
		}
	}
	return from_daily_map(daily, std::nullopt);
}

TimeSeries load_series(const std::filesystem::path &path, InputFormat format) {
	std::ifstream in(path);
	if (!in) {
		throw DataError("cannot open " + path.string());
	}
	return format == InputFormat::CarbonMonitor ? ingest_carbon_monitor(in) : ingest_tidy(in);
}

DescriptiveStats describe(std::span<const double> values) {
	const std::size_t n = values.size();
	if (n < 2) {
		throw DataError("describe needs at least 2 values");
	}
	DescriptiveStats s;
	s.count = n;
	const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
	s.minimum = *lo;
	s.maximum = *hi;
	s.range = s.maximum - s.minimum;
	s.total = std::accumulate(values.begin(), values.end(), 0.0);
	s.mean = s.total / static_cast<double>(n);

	std::vector<double> sorted(values.begin(), values.end());
	std::sort(sorted.begin(), sorted.end());
	s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

	double m2 = 0, m3 = 0, m4 = 0;
	for (double v : values) {
		const double d = v - s.mean;
		const double d2 = d * d;
		m2 += d2;
		m3 += d2 * d;
		m4 += d2 * d2;
	}
	const double nd = static_cast<double>(n);
	s.standard_deviation = std::sqrt(m2 / (nd - 1));
	s.standard_error = s.standard_deviation / std::sqrt(nd);

	m2 /= nd;
	m3 /= nd;
	m4 /= nd;
	if (m2 > 0 && n > 2) {
		const double g1 = m3 / std::pow(m2, 1.5);
		s.skewness = g1 * std::sqrt(nd * (nd - 1)) / (nd - 2);
	}
	if (m2 > 0 && n > 3) {
		const double g2 = m4 / (m2 * m2) - 3.0;
		s.kurtosis = ((nd + 1) * g2 + 6.0) * (nd - 1) / ((nd - 2) * (nd - 3));
	}
	return s;
}

Normalizer::Normalizer(double train_min, double train_max) : min_(train_min), max_(train_max) {
	if (!(train_max > train_min)) {
		throw DataError("normalizer needs train_max > train_min");
	}
}

Normalizer Normalizer::fit(std::span<const double> training_values) {
	if (training_values.empty()) {
		throw DataError("normalizer fitted on empty range");
	}
	const auto [lo, hi] = std::minmax_element(training_values.begin(), training_values.end());
	if (!(*hi > *lo)) {
		throw DataError("constant training range; cannot normalize");
	}
	return Normalizer(*lo, *hi);
}

std::vector<double> Normalizer::normalize(std::span<const double> xs) const {
	std::vector<double> out(xs.size());
	std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return normalize(x); });
	return out;
}

std::vector<double> Normalizer::denormalize(std::span<const double> zs) const {
	std::vector<double> out(zs.size());
	std::transform(zs.begin(), zs.end(), out.begin(), [this](double z) { return denormalize(z); });
	return out;
}

Windows make_windows(std::span<const double> values, std::size_t width) {
	if (width == 0) {
		throw DataError("window length must be positive");
	}
	Windows w;
	w.width = width;
	if (values.size() <= width) {
		return w;
	}
	const std::size_t count = values.size() - width;
	w.inputs.reserve(count * width);
	w.targets.reserve(count);
	for (std::size_t i = 0; i < count; ++i) {
		w.inputs.insert(w.inputs.end(), values.begin() + i, values.begin() + i + width);
		w.targets.push_back(values[i + width]);
	}
	return w;
}

PreparedData window_and_split(const TimeSeries &series, std::size_t window_length, SplitRatios ratios) {
	if (window_length == 0) {
		throw DataError("window length must be positive");
	}
	if (series.size() <= window_length + 2) {
		throw DataError("series of length " + std::to_string(series.size()) + " too short for window " +
		                std::to_string(window_length));
	}
	if (ratios.train <= 0 || ratios.validation < 0 || ratios.test < 0 ||
	    std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
		throw DataError("split ratios must be non-negative and sum to 1");
	}
	const std::size_t n = series.size() - window_length;
	// The epsilon keeps exact products such as 0.1 * 10 from flooring one short.
	const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n) + 1e-9));
	const auto n_val = static_cast<std::size_t>(std::floor(ratios.validation * static_cast<double>(n) + 1e-9));
	if (n_train == 0 || n_train + n_val > n) {
		throw DataError("split leaves no training samples");
	}

	const auto raw = series.values();
	Normalizer normalizer = Normalizer::fit(raw.first(n_train + window_length));
	PreparedData prepared{
	    .dates = {series.dates().begin(), series.dates().end()},
	    .physical = {raw.begin(), raw.end()},
	    .normalized = normalizer.normalize(raw),
	    .normalizer = normalizer,
	    .samples = {},
	    .train = {0, n_train},
	    .validation = {n_train, n_train + n_val},
	    .test = {n_train + n_val, n},
	};
	prepared.samples = make_windows(prepared.normalized, window_length);
	return prepared;
}

} // namespace chronocast
