#include "qeck/text_pipeline.hpp"

#include <algorithm>
#include <cstdint>

#include "qeck/porter.hpp"
#include "qeck/stopwords.hpp"

namespace qeck {
namespace {

bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

char to_lower(char c) { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }

uint64_t fnv1a(std::string_view data, uint64_t h) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Camel-case boundary before position i of a token run:
//   lower-or-digit followed by upper        getX|mlFile
//   upper followed by upper-then-lower      XML|Parser
bool camel_boundary(std::string_view run, size_t i) {
  if (i == 0 || i >= run.size()) return false;
  char prev = run[i - 1];
  char cur = run[i];
  if ((is_lower(prev) || is_digit(prev)) && is_upper(cur)) return true;
  if (is_upper(prev) && is_upper(cur) && i + 1 < run.size() && is_lower(run[i + 1])) return true;
  return false;
}

}  // namespace

AnalyzerConfig AnalyzerConfig::standard() {
  return AnalyzerConfig{builtin_stopwords(), 2, false};
}

std::string AnalyzerConfig::fingerprint() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a("analyzer/v1", h);
  h = fnv1a(keep_digits ? "|digits:1|" : "|digits:0|", h);
  h = fnv1a("minlen:" + std::to_string(min_token_length) + "|", h);
  for (const std::string& w : stopword_list) {
    h = fnv1a(w, h);
    h = fnv1a("\n", h);
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text, const AnalyzerConfig& config) {
  std::vector<std::string> tokens;
  auto in_run = [&](char c) {
    return is_lower(c) || is_upper(c) || (config.keep_digits && is_digit(c));
  };
  auto emit = [&](std::string_view piece) {
    if (static_cast<int>(piece.size()) < config.min_token_length) return;
    std::string token(piece);
    std::transform(token.begin(), token.end(), token.begin(), to_lower);
    tokens.push_back(std::move(token));
  };
  size_t i = 0;
  while (i < text.size()) {
    if (!in_run(text[i])) {
      ++i;
      continue;
    }
    size_t run_end = i;
    while (run_end < text.size() && in_run(text[run_end])) ++run_end;
    std::string_view run = text.substr(i, run_end - i);
    size_t piece_start = 0;
    for (size_t j = 1; j < run.size(); ++j) {
      if (camel_boundary(run, j)) {
        emit(run.substr(piece_start, j - piece_start));
        piece_start = j;
      }
    }
    emit(run.substr(piece_start));
    i = run_end;
  }
  return tokens;
}

std::vector<std::string> remove_stopwords(std::vector<std::string> tokens,
                                          const AnalyzerConfig& config) {
  if (config.stopword_list.empty()) return tokens;
  std::erase_if(tokens, [&](const std::string& t) { return config.stopword_list.count(t) > 0; });
  return tokens;
}

std::string stem(std::string_view token) { return porter_stem(token); }

TermBag analyze(std::string_view text, const AnalyzerConfig& config) {
  std::vector<std::string> tokens = remove_stopwords(tokenize(text, config), config);
  TermBag bag;
  bag.terms.reserve(tokens.size());
  for (const std::string& t : tokens) bag.terms.push_back(stem(t));
  return bag;
}

}  // namespace qeck
