#pragma once

#include <istream>
#include <string>
#include <vector>

namespace chronocast::detail {

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(const std::string &line);

/// Reads the next non-blank line, stripping a trailing '\r'. Returns false at end of stream.
bool read_csv_line(std::istream &in, std::string &line);

std::string trim(const std::string &s);

} // namespace chronocast::detail
