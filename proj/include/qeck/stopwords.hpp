#pragma once

#include <filesystem>
#include <set>
#include <string>

namespace qeck {

// Built-in English stop list (the SMART system list).
const std::set<std::string>& builtin_stopwords();

// One lowercase word per line; '#'-prefixed lines and blanks ignored.
std::set<std::string> load_stopword_file(const std::filesystem::path& path);

}  // namespace qeck
