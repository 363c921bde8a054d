#include "qeck/qa_ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include <json.hpp>

#include "qeck/errors.hpp"

namespace qeck {
namespace {

void append_utf8(std::string& out, uint32_t cp) {
  if (cp <= 0x7f) {
    out.push_back(static_cast<char>(cp));
  } else if (cp <= 0x7ff) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp <= 0xffff) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

// Decodes the entity starting at text[i] (text[i] == '&'). Returns the
// number of input characters consumed; 1 and a literal '&' when malformed.
size_t decode_entity_at(std::string_view text, size_t i, std::string& out) {
  size_t semi = text.find(';', i + 1);
  if (semi == std::string_view::npos || semi - i > 12) {
    out.push_back('&');
    return 1;
  }
  std::string_view name = text.substr(i + 1, semi - i - 1);
  if (name == "lt") out.push_back('<');
  else if (name == "gt") out.push_back('>');
  else if (name == "amp") out.push_back('&');
  else if (name == "quot") out.push_back('"');
  else if (name == "apos") out.push_back('\'');
  else if (!name.empty() && name[0] == '#') {
    uint32_t cp = 0;
    bool ok = name.size() > 1;
    if (name.size() > 2 && (name[1] == 'x' || name[1] == 'X')) {
      for (size_t k = 2; k < name.size() && ok; ++k) {
        char c = name[k];
        uint32_t digit;
        if (c >= '0' && c <= '9') digit = static_cast<uint32_t>(c - '0');
        else if (c >= 'a' && c <= 'f') digit = static_cast<uint32_t>(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F') digit = static_cast<uint32_t>(c - 'A' + 10);
        else { ok = false; break; }
        cp = cp * 16 + digit;
      }
    } else {
      for (size_t k = 1; k < name.size() && ok; ++k) {
        char c = name[k];
        if (c < '0' || c > '9') { ok = false; break; }
        cp = cp * 10 + static_cast<uint32_t>(c - '0');
      }
    }
    if (!ok || cp > 0x10ffff) {
      out.push_back('&');
      return 1;
    }
    append_utf8(out, cp);
  } else {
    out.push_back('&');
    return 1;
  }
  return semi - i + 1;
}

// Buffered scanner over an istream that tracks absolute byte offsets and
// can hold one element at a time.
class StreamScanner {
 public:
  explicit StreamScanner(std::istream& in) : in_(in) {}

  // Absolute offset of the next unread character.
  size_t offset() const { return base_ + pos_; }

  bool eof() { return peek() == EOF; }

  int peek() {
    if (pos_ >= buf_.size() && !refill()) return EOF;
    return static_cast<unsigned char>(buf_[pos_]);
  }

  int get() {
    int c = peek();
    if (c != EOF) ++pos_;
    return c;
  }

  // Advances past the next occurrence of `needle`; false on EOF.
  bool skip_past(std::string_view needle) {
    std::string tail;
    while (true) {
      int c = get();
      if (c == EOF) return false;
      tail.push_back(static_cast<char>(c));
      if (tail.size() > needle.size()) tail.erase(0, 1);
      if (tail == needle) return true;
    }
  }

 private:
  bool refill() {
    if (pos_ > 0) {
      base_ += pos_;
      buf_.erase(0, pos_);
      pos_ = 0;
    }
    char chunk[65536];
    in_.read(chunk, sizeof chunk);
    std::streamsize got = in_.gcount();
    if (got <= 0) return false;
    buf_.append(chunk, static_cast<size_t>(got));
    return true;
  }

  std::istream& in_;
  std::string buf_;
  size_t pos_ = 0;
  size_t base_ = 0;
};

[[noreturn]] void parse_fail(size_t offset, const std::string& what) {
  throw ParseError("posts.xml parse error at byte " + std::to_string(offset) + ": " + what);
}

bool name_char(int c) {
  return std::isalnum(c) != 0 || c == '_' || c == '-' || c == ':' || c == '.';
}

std::vector<std::string> parse_tag_list(const std::string& decoded) {
  std::vector<std::string> tags;
  if (decoded.find('<') != std::string::npos) {
    size_t i = 0;
    while ((i = decoded.find('<', i)) != std::string::npos) {
      size_t close = decoded.find('>', i + 1);
      if (close == std::string::npos) break;
      std::string tag = decoded.substr(i + 1, close - i - 1);
      if (!tag.empty()) tags.push_back(tag);
      i = close + 1;
    }
  } else {
    // Newer dumps use |tag1|tag2| instead of angle brackets.
    std::string current;
    for (char c : decoded) {
      if (c == '|') {
        if (!current.empty()) tags.push_back(current);
        current.clear();
      } else {
        current.push_back(c);
      }
    }
    if (!current.empty()) tags.push_back(current);
  }
  for (std::string& t : tags)
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return tags;
}

std::optional<int64_t> parse_int(const std::map<std::string, std::string>& attrs,
                                 const std::string& key) {
  auto it = attrs.find(key);
  if (it == attrs.end() || it->second.empty()) return std::nullopt;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '&') {
      i += decode_entity_at(text, i, out);
    } else {
      out.push_back(text[i]);
      ++i;
    }
  }
  return out;
}

std::string strip_html(std::string_view body) {
  std::string text;
  text.reserve(body.size());
  size_t i = 0;
  while (i < body.size()) {
    char c = body[i];
    if (c == '<') {
      if (body.compare(i, 4, "<!--") == 0) {
        size_t end = body.find("-->", i + 4);
        if (end == std::string_view::npos) break;
        i = end + 3;
      } else {
        size_t end = body.find('>', i + 1);
        if (end == std::string_view::npos) {
          // Unbalanced tail: keep it as text rather than dropping it.
          text.push_back(' ');
          ++i;
          continue;
        }
        i = end + 1;
      }
      text.push_back(' ');
    } else if (c == '&') {
      i += decode_entity_at(body, i, text);
    } else {
      text.push_back(c);
      ++i;
    }
  }

  std::string collapsed;
  collapsed.reserve(text.size());
  bool in_space = true;  // also trims leading whitespace
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) collapsed.push_back(' ');
      in_space = true;
    } else {
      collapsed.push_back(c);
      in_space = false;
    }
  }
  while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
  return collapsed;
}

void parse_posts(std::istream& in, const std::function<void(RawPost&&)>& emit,
                 PostsParseStats& stats) {
  StreamScanner scanner(in);
  while (true) {
    int c = scanner.get();
    if (c == EOF) break;
    if (c != '<') continue;

    size_t element_offset = scanner.offset() - 1;
    int next = scanner.peek();
    if (next == EOF) parse_fail(element_offset, "dangling '<' at end of input");
    if (next == '?') {
      if (!scanner.skip_past("?>")) parse_fail(element_offset, "unterminated declaration");
      continue;
    }
    if (next == '!') {
      scanner.get();
      if (scanner.peek() == '-') {
        if (!scanner.skip_past("-->")) parse_fail(element_offset, "unterminated comment");
      } else {
        if (!scanner.skip_past(">")) parse_fail(element_offset, "unterminated markup");
      }
      continue;
    }
    if (next == '/') {
      if (!scanner.skip_past(">")) parse_fail(element_offset, "unterminated closing tag");
      continue;
    }

    std::string name;
    while (name_char(scanner.peek())) name.push_back(static_cast<char>(scanner.get()));
    if (name.empty()) parse_fail(element_offset, "element without a name");

    // Attribute list, shared by <row> and anything else (e.g. <posts>).
    std::map<std::string, std::string> attrs;
    bool self_closing = false;
    while (true) {
      int ch = scanner.peek();
      if (ch == EOF) parse_fail(element_offset, "unterminated element <" + name + ">");
      if (std::isspace(ch)) {
        scanner.get();
        continue;
      }
      if (ch == '/') {
        scanner.get();
        if (scanner.get() != '>') parse_fail(scanner.offset(), "expected '>' after '/'");
        self_closing = true;
        break;
      }
      if (ch == '>') {
        scanner.get();
        break;
      }
      std::string attr_name;
      while (name_char(scanner.peek())) attr_name.push_back(static_cast<char>(scanner.get()));
      if (attr_name.empty())
        parse_fail(scanner.offset(), "malformed attribute in <" + name + ">");
      while (std::isspace(scanner.peek())) scanner.get();
      if (scanner.get() != '=') parse_fail(scanner.offset(), "expected '=' after attribute name");
      while (std::isspace(scanner.peek())) scanner.get();
      int quote = scanner.get();
      if (quote != '"' && quote != '\'')
        parse_fail(scanner.offset(), "expected quoted attribute value");
      std::string raw_value;
      while (true) {
        int vc = scanner.get();
        if (vc == EOF) parse_fail(scanner.offset(), "unterminated attribute value");
        if (vc == quote) break;
        raw_value.push_back(static_cast<char>(vc));
      }
      attrs[attr_name] = decode_entities(raw_value);
    }
    (void)self_closing;

    if (name != "row") continue;
    ++stats.rows_seen;

    std::optional<int64_t> id = parse_int(attrs, "Id");
    std::optional<int64_t> type = parse_int(attrs, "PostTypeId");
    if (!id || !type) {
      ++stats.skipped_missing_fields;
      continue;
    }
    if (*type != 1 && *type != 2) {
      ++stats.skipped_other_types;
      continue;
    }

    RawPost post;
    post.id = *id;
    post.post_type = *type == 1 ? PostType::question : PostType::answer;
    post.accepted_answer_id = parse_int(attrs, "AcceptedAnswerId");
    post.parent_id = parse_int(attrs, "ParentId");
    post.score = parse_int(attrs, "Score").value_or(0);
    if (auto it = attrs.find("Title"); it != attrs.end()) post.title = it->second;
    if (auto it = attrs.find("Body"); it != attrs.end()) post.body = it->second;
    if (auto it = attrs.find("Tags"); it != attrs.end()) post.tags = parse_tag_list(it->second);
    ++stats.posts_emitted;
    emit(std::move(post));
  }
}

std::vector<RawPost> parse_posts_to_vector(std::istream& in, PostsParseStats& stats) {
  std::vector<RawPost> posts;
  parse_posts(in, [&](RawPost&& p) { posts.push_back(std::move(p)); }, stats);
  return posts;
}

double so_score(int64_t question_votes, int64_t answer_votes, double question_weight,
                double answer_weight) {
  return question_weight * static_cast<double>(question_votes) +
         answer_weight * static_cast<double>(answer_votes);
}

namespace {

struct PendingQuestion {
  int64_t question_id = 0;
  int64_t score = 0;
  std::string title;
  std::string body;
  std::vector<std::string> tags;
};

// Accepted-answer join; tolerant of answers arriving before questions
// because questions are collected in a first full pass.
class QaJoiner {
 public:
  explicit QaJoiner(std::string tag_filter) : tag_(std::move(tag_filter)) {}

  void collect_question(const RawPost& post, PairStats& stats) {
    if (post.post_type != PostType::question) return;
    if (std::find(post.tags.begin(), post.tags.end(), tag_) == post.tags.end()) return;
    ++stats.tagged_questions;
    if (!post.accepted_answer_id) {
      ++stats.no_accepted_answer;
      return;
    }
    pending_[*post.accepted_answer_id] =
        PendingQuestion{post.id, post.score, post.title.value_or(""), post.body, post.tags};
  }

  std::optional<QAPair> match_answer(const RawPost& post, PairStats& stats) {
    if (post.post_type != PostType::answer) return std::nullopt;
    auto it = pending_.find(post.id);
    if (it == pending_.end()) return std::nullopt;
    const PendingQuestion& q = it->second;
    if (!post.parent_id || *post.parent_id != q.question_id) return std::nullopt;

    QAPair pair;
    pair.pair_id = std::to_string(q.question_id);
    pair.question_id = q.question_id;
    pair.answer_id = post.id;
    pair.title = q.title;
    pair.question_text = q.title.empty() ? strip_html(q.body) : q.title + " " + strip_html(q.body);
    pair.answer_text = strip_html(post.body);
    pair.tags = q.tags;
    pair.question_votes = q.score;
    pair.answer_votes = post.score;
    pending_.erase(it);
    ++stats.paired;
    return pair;
  }

  int64_t unmatched() const { return static_cast<int64_t>(pending_.size()); }

 private:
  std::string tag_;
  std::map<int64_t, PendingQuestion> pending_;  // accepted_answer_id -> question
};

}  // namespace

std::vector<QAPair> pair_posts(const std::vector<RawPost>& posts, const std::string& tag_filter,
                               PairStats& stats) {
  QaJoiner joiner(tag_filter);
  for (const RawPost& post : posts) joiner.collect_question(post, stats);
  std::vector<QAPair> pairs;
  for (const RawPost& post : posts) {
    if (auto pair = joiner.match_answer(post, stats)) pairs.push_back(std::move(*pair));
  }
  stats.accepted_answer_missing += joiner.unmatched();
  // Stable order: by question id, matching question order in well-formed dumps.
  std::sort(pairs.begin(), pairs.end(),
            [](const QAPair& a, const QAPair& b) { return a.question_id < b.question_id; });
  return pairs;
}

QaBuildResult build_qa_index(const std::vector<QAPair>& pairs, const AnalyzerConfig& analyzer,
                             const std::filesystem::path& out_dir,
                             const std::set<int64_t>& exclude_question_ids) {
  Index index(analyzer, out_dir);
  QaBuildResult result;
  for (const QAPair& pair : pairs) {
    if (exclude_question_ids.count(pair.question_id)) {
      ++result.excluded;
      continue;
    }
    TermBag terms =
        analyze(pair.title + " " + pair.question_text + " " + pair.answer_text, analyzer);
    if (terms.empty()) {
      ++result.empty_dropped;
      continue;
    }
    DocumentRecord rec;
    rec.doc_id = pair.pair_id;
    rec.fields["pair_id"] = pair.pair_id;
    rec.fields["title"] = pair.title;
    rec.fields["question_votes"] = std::to_string(pair.question_votes);
    rec.fields["answer_votes"] = std::to_string(pair.answer_votes);
    rec.term_bag = std::move(terms);
    index.add_document(std::move(rec));
    ++result.pairs_indexed;
  }
  index.commit();
  result.stats = index.stats();
  return result;
}

QaBuildResult build_qa_index_from_posts(const std::filesystem::path& posts_xml,
                                        const std::string& tag_filter,
                                        const AnalyzerConfig& analyzer,
                                        const std::filesystem::path& out_dir,
                                        const std::set<int64_t>& exclude_question_ids,
                                        PostsParseStats& parse_stats, PairStats& pair_stats) {
  QaJoiner joiner(tag_filter);
  {
    std::ifstream in(posts_xml, std::ios::binary);
    if (!in) throw ParseError("cannot open " + posts_xml.string());
    parse_posts(in, [&](RawPost&& p) { joiner.collect_question(p, pair_stats); }, parse_stats);
  }
  std::vector<QAPair> pairs;
  {
    std::ifstream in(posts_xml, std::ios::binary);
    if (!in) throw ParseError("cannot open " + posts_xml.string());
    PostsParseStats second_pass;  // identical numbers; not double counted
    parse_posts(in, [&](RawPost&& p) {
      if (auto pair = joiner.match_answer(p, pair_stats)) pairs.push_back(std::move(*pair));
    }, second_pass);
  }
  pair_stats.accepted_answer_missing += joiner.unmatched();
  std::sort(pairs.begin(), pairs.end(),
            [](const QAPair& a, const QAPair& b) { return a.question_id < b.question_id; });
  return build_qa_index(pairs, analyzer, out_dir, exclude_question_ids);
}

std::vector<QAPair> load_qa_pairs_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<QAPair> pairs;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      QAPair pair;
      pair.pair_id = j.at("pair_id").get<std::string>();
      pair.question_id = j.at("question_id").get<int64_t>();
      pair.answer_id = j.at("answer_id").get<int64_t>();
      pair.title = j.value("title", "");
      pair.question_text = j.at("question_text").get<std::string>();
      pair.answer_text = j.at("answer_text").get<std::string>();
      if (j.contains("tags"))
        for (const auto& t : j.at("tags")) pair.tags.push_back(t.get<std::string>());
      pair.question_votes = j.value("question_votes", int64_t{0});
      pair.answer_votes = j.value("answer_votes", int64_t{0});
      pairs.push_back(std::move(pair));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return pairs;
}

}  // namespace qeck
