#pragma once

#include <string>
#include <utility>
#include <vector>

namespace dmst {

// "key = value" lines; '#' starts a comment; blank lines ignored. Repeated
// keys are kept in file order (sensor layouts, per-person waypoints).
using KvFile = std::vector<std::pair<std::string, std::string>>;

KvFile parse_kv_text(const std::string& text);
KvFile read_kv_file(const std::string& path);

std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);

double parse_double(const std::string& s, const std::string& what);
long long parse_int(const std::string& s, const std::string& what);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dmst
