#include "csv.hpp"

namespace chronocast::detail {

std::vector<std::string> split_csv_line(const std::string &line) {
	std::vector<std::string> fields;
	std::string field;
	bool quoted = false;
	for (std::size_t i = 0; i < line.size(); ++i) {
		const char c = line[i];
		if (quoted) {
			if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
				field += '"';
				++i;
			} else if (c == '"') {
				quoted = false;
			} else {
				field += c;
			}
		} else if (c == '"') {
			quoted = true;
		} else if (c == ',') {
			fields.push_back(std::move(field));
			field.clear();
		} else {
			field += c;
		}
	}
	fields.push_back(std::move(field));
	return fields;
}

bool read_csv_line(std::istream &in, std::string &line) {
	while (std::getline(in, line)) {
		if (!line.empty() && line.back() == '\r') {
			line.pop_back();
		}
		if (line.find_first_not_of(" \t") != std::string::npos) {
			return true;
		}
	}
	return false;
}

std::string trim(const std::string &s) {
	const auto b = s.find_first_not_of(" \t");
	if (b == std::string::npos) {
		return {};
	}
	const auto e = s.find_last_not_of(" \t");
	return s.substr(b, e - b + 1);
}

} // namespace chronocast::detail
