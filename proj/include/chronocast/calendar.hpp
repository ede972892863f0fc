#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace chronocast {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD. Returns nullopt on malformed or impossible dates.
std::optional<Date> parse_iso_date(std::string_view text);

/// Parses DD/MM/YYYY (Carbon Monitor export format).
std::optional<Date> parse_dmy_date(std::string_view text);

std::string format_iso(Date date);

inline Date add_days(Date date, long long n) { return date + std::chrono::days{n}; }

inline long long days_between(Date from, Date to) { return (to - from).count(); }

} // namespace chronocast
