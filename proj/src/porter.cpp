#include "qeck/porter.hpp"

#include <array>
#include <cstddef>

namespace qeck {
namespace {

bool is_vowel_letter(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// 'y' counts as a vowel when it follows a consonant.
bool is_consonant(const std::string& w, size_t i) {
  char c = w[i];
  if (is_vowel_letter(c)) return false;
  if (c == 'y') return i == 0 ? true : !is_consonant(w, i - 1);
  return true;
}

// m of w[0..n): the number of VC sequences in [C](VC)^m[V].
int measure(const std::string& w, size_t n) {
  int m = 0;
  size_t i = 0;
  while (i < n && is_consonant(w, i)) ++i;
  while (i < n) {
    while (i < n && !is_consonant(w, i)) ++i;
    if (i >= n) break;
    ++m;
    while (i < n && is_consonant(w, i)) ++i;
  }
  return m;
}

bool has_vowel(const std::string& w, size_t n) {
  for (size_t i = 0; i < n; ++i)
    if (!is_consonant(w, i)) return true;
  return false;
}

// w[i-1] == w[i] and both consonants.
bool ends_double_consonant(const std::string& w) {
  size_t n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// consonant-vowel-consonant ending at index i, final consonant not w/x/y.
bool cvc_at(const std::string& w, size_t i) {
  if (i < 2 || i >= w.size()) return false;
  if (!is_consonant(w, i) || is_consonant(w, i - 1) || !is_consonant(w, i - 2)) return false;
  char c = w[i];
  return c != 'w' && c != 'x' && c != 'y';
}

bool ends_with(const std::string& w, std::string_view suf) {
  return w.size() >= suf.size() && w.compare(w.size() - suf.size(), suf.size(), suf) == 0;
}

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
};

// Replaces the first matching suffix when m(stem) > threshold. A matched
// suffix with a failed measure still terminates the step, as in the
// reference implementation's switch dispatch.
template <size_t N>
void apply_rules(std::string& w, const std::array<Rule, N>& rules, int min_measure) {
  for (const Rule& r : rules) {
    if (!ends_with(w, r.suffix)) continue;
    size_t stem_len = w.size() - r.suffix.size();
    if (measure(w, stem_len) > min_measure) {
      w.resize(stem_len);
      w.append(r.replacement);
    }
    return;
  }
}

// Plurals and -ed/-ing.
void step1ab(std::string& w) {
  if (w.back() == 's') {
    if (ends_with(w, "sses")) {
      w.resize(w.size() - 2);
    } else if (ends_with(w, "ies")) {
      w.resize(w.size() - 3);
      w.push_back('i');
    } else if (w.size() >= 2 && w[w.size() - 2] != 's') {
      w.pop_back();
    }
  }
  if (ends_with(w, "eed")) {
    if (measure(w, w.size() - 3) > 0) w.pop_back();
    return;
  }
  size_t stem_len = 0;
  if (ends_with(w, "ed") && has_vowel(w, w.size() - 2)) {
    stem_len = w.size() - 2;
  } else if (ends_with(w, "ing") && has_vowel(w, w.size() - 3)) {
    stem_len = w.size() - 3;
  } else {
    return;
  }
  w.resize(stem_len);
  if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
    w.push_back('e');
  } else if (ends_double_consonant(w)) {
    char c = w.back();
    if (c != 'l' && c != 's' && c != 'z') w.pop_back();
  } else if (measure(w, w.size()) == 1 && cvc_at(w, w.size() - 1)) {
    w.push_back('e');
  }
}

// Terminal y -> i when the stem contains a vowel.
void step1c(std::string& w) {
  if (w.back() == 'y' && has_vowel(w, w.size() - 1)) w.back() = 'i';
}

void step2(std::string& w) {
  static constexpr std::array<Rule, 21> rules{{
      {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
      {"izer", "ize"},    {"bli", "ble"},     {"alli", "al"},   {"entli", "ent"},
      {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
      {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
      {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
      {"logi", "log"},
  }};
  apply_rules(w, rules, 0);
}

void step3(std::string& w) {
  static constexpr std::array<Rule, 7> rules{{
      {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
      {"ical", "ic"},  {"ful", ""},   {"ness", ""},
  }};
  apply_rules(w, rules, 0);
}

// Strips residual suffixes when m(stem) > 1; -ion only after s or t.
void step4(std::string& w) {
  static constexpr std::array<std::string_view, 19> suffixes{
      "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
      "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
  };
  for (std::string_view suf : suffixes) {
    if (!ends_with(w, suf)) continue;
    size_t stem_len = w.size() - suf.size();
    if (suf == "ion") {
      if (stem_len == 0) return;
      char prev = w[stem_len - 1];
      if (prev != 's' && prev != 't') return;
    }
    if (measure(w, stem_len) > 1) w.resize(stem_len);
    return;
  }
}

void step5(std::string& w) {
  if (w.back() == 'e') {
    int m = measure(w, w.size());
    if (m > 1 || (m == 1 && !cvc_at(w, w.size() - 2))) w.pop_back();
  }
  if (w.back() == 'l' && ends_double_consonant(w) && measure(w, w.size()) > 1) w.pop_back();
}

}  // namespace

std::string porter_stem(std::string_view word) {
  std::string w(word);
  if (w.size() <= 2) return w;
  step1ab(w);
  step1c(w);
  step2(w);
  step3(w);
  step4(w);
  step5(w);
  return w;
}

}  // namespace qeck
