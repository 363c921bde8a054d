#pragma once

#include <stdexcept>
#include <string>

namespace qeck {

// Invalid argument to a library operation (bad k, empty input where forbidden, ...).
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed input data: XML, JSONL, CSV, index files.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Index misuse: duplicate ids, unknown doc ids, reads before commit.
class IndexError : public std::runtime_error {
 public:
  explicit IndexError(const std::string& what) : std::runtime_error(what) {}
};

// Incompatible configuration, e.g. analyzer fingerprint mismatch between indexes.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qeck
