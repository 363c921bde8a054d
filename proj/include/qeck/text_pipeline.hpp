#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace qeck {

// Text analysis settings. The same config must be used for indexing and
// querying a given index; fingerprint() is recorded in the index manifest
// to enforce that.
struct AnalyzerConfig {
  std::set<std::string> stopword_list;  // empty set disables stop-word removal
  int min_token_length = 2;
  bool keep_digits = false;

  // Default config: built-in English stop list, min length 2, digits dropped.
  static AnalyzerConfig standard();

  // Stable hash of the full config, identical across runs and platforms.
  std::string fingerprint() const;
};

// Ordered multiset of analyzed terms.
struct TermBag {
  std::vector<std::string> terms;

  bool empty() const { return terms.empty(); }
  size_t size() const { return terms.size(); }
  bool operator==(const TermBag&) const = default;
};

// Splits text into lowercase tokens at camel-case boundaries and at every
// non-alphanumeric character. Digits act as separators unless keep_digits.
// Tokens shorter than min_token_length are dropped.
std::vector<std::string> tokenize(std::string_view text, const AnalyzerConfig& config);

// Order-preserving stop-word filter; applied before stemming.
std::vector<std::string> remove_stopwords(std::vector<std::string> tokens,
                                          const AnalyzerConfig& config);

// Porter stem of one token (see porter.hpp).
std::string stem(std::string_view token);

// stem . remove_stopwords . tokenize
TermBag analyze(std::string_view text, const AnalyzerConfig& config);

}  // namespace qeck
