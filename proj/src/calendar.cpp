#include "chronocast/calendar.hpp"

#include <charconv>
#include <cstdio>

namespace chronocast {
namespace {

std::optional<int> parse_fixed(std::string_view text, std::size_t width) {
	if (text.size() != width) {
		return std::nullopt;
	}
	int value = 0;
	auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
	if (ec != std::errc{} || ptr != text.data() + text.size()) {
		return std::nullopt;
	}
	return value;
}

std::optional<Date> make_date(std::optional<int> y, std::optional<int> m, std::optional<int> d) {
	if (!y || !m || !d || *m < 1 || *d < 1) {
		return std::nullopt;
	}
	std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
	                                std::chrono::day{static_cast<unsigned>(*d)}};
	if (!ymd.ok()) {
		return std::nullopt;
	}
	return Date{ymd};
}

} // namespace

std::optional<Date> parse_iso_date(std::string_view text) {
	if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
		return std::nullopt;
	}
	return make_date(parse_fixed(text.substr(0, 4), 4), parse_fixed(text.substr(5, 2), 2),
	                 parse_fixed(text.substr(8, 2), 2));
}

std::optional<Date> parse_dmy_date(std::string_view text) {
	if (text.size() != 10 || text[2] != '/' || text[5] != '/') {
		return std::nullopt;
	}
	return make_date(parse_fixed(text.substr(6, 4), 4), parse_fixed(text.substr(3, 2), 2),
	                 parse_fixed(text.substr(0, 2), 2));
}

std::string format_iso(Date date) {
	const std::chrono::year_month_day ymd{date};
	char buf[16];
	std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
	              static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
	return buf;
}

} // namespace chronocast
