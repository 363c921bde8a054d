#include "qeck/code_ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qeck/errors.hpp"

namespace qeck {
namespace fs = std::filesystem;
namespace {

const std::set<std::string, std::less<>> kNotMethodNames = {
    "if", "for", "while", "switch", "catch", "synchronized",
    "return", "throw", "assert", "this", "super", "do", "else", "try", "finally",
};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

std::string collapse_ws(std::string_view text) {
  std::string out;
  bool in_space = true;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

// Scanner state for one source file.
struct MethodScanner {
  MethodScanner(std::string_view source, const std::string& path, const std::string& proj)
      : src(source), file_path(path), project(proj) {}

  std::string_view src;
  const std::string& file_path;
  const std::string& project;

  size_t pos = 0;
  int line = 1;
  int depth = 0;

  std::string prev_token;      // previous significant token text
  std::string prev_prev_token;
  int prev_ident_line = 0;

  size_t stmt_start = 0;       // offset just past the last ';' '{' '}'
  std::string leading_comment;

  struct ParenGroup {
    std::string name;       // identifier right before '(' ("" when none)
    std::string before;     // significant token before that identifier
    int name_line = 0;
    size_t sig_from = 0;
    std::string comment;
  };
  std::vector<ParenGroup> paren_stack;

  bool candidate_active = false;
  bool candidate_in_throws = false;
  ParenGroup candidate;

  struct OpenMethod {
    ParenGroup info;
    size_t brace_open = 0;
    int depth_at_open = 0;  // depth value after the opening brace
  };
  std::vector<OpenMethod> open_methods;

  std::vector<CodeSnippet> snippets;

  void advance(size_t n) {
    for (size_t i = 0; i < n; ++i) {
      if (src[pos + i] == '\n') ++line;
    }
    pos += n;
  }

  bool whitespace_between(size_t from, size_t to) const {
    for (size_t i = from; i < to; ++i)
      if (!std::isspace(static_cast<unsigned char>(src[i]))) return false;
    return true;
  }

  void note_comment(size_t start, size_t end) {
    if (whitespace_between(stmt_start, start)) {
      std::string text(src.substr(start, end - start));
      if (leading_comment.empty())
        leading_comment = std::move(text);
      else
        leading_comment += "\n" + text;
      stmt_start = end;
    }
  }

  void statement_boundary(size_t after) {
    stmt_start = after;
    leading_comment.clear();
  }

  void drop_candidate() {
    candidate_active = false;
    candidate_in_throws = false;
  }

  void significant(const std::string& token) {
    prev_prev_token = std::move(prev_token);
    prev_token = token;
  }

  void handle_identifier(const std::string& word) {
    if (candidate_active) {
      if (!candidate_in_throws && word == "throws") {
        candidate_in_throws = true;
      } else if (!candidate_in_throws) {
        drop_candidate();
      }
      // inside a throws clause identifiers are fine
    }
    prev_ident_line = line;
    significant(word);
  }

  void open_paren() {
    ParenGroup group;
    if (!prev_token.empty() && ident_start(prev_token[0]) &&
        kNotMethodNames.find(prev_token) == kNotMethodNames.end()) {
      group.name = prev_token;
      group.before = prev_prev_token;
      group.name_line = prev_ident_line;
    }
    group.sig_from = stmt_start;
    group.comment = leading_comment;
    paren_stack.push_back(std::move(group));
    drop_candidate();
    significant("(");
  }

  void close_paren() {
    if (!paren_stack.empty()) {
      candidate = std::move(paren_stack.back());
      paren_stack.pop_back();
      candidate_active = !candidate.name.empty();
      candidate_in_throws = false;
    }
    significant(")");
  }

  void open_brace() {
    ++depth;
    if (candidate_active && candidate.before != "new" && candidate.before != ".") {
      open_methods.push_back({candidate, pos, depth});
    }
    drop_candidate();
    statement_boundary(pos + 1);
    significant("{");
  }

  void close_brace() {
    if (!open_methods.empty() && open_methods.back().depth_at_open == depth) {
      const OpenMethod& m = open_methods.back();
      CodeSnippet snippet;
      snippet.method_name = m.info.name;
      snippet.project = project;
      snippet.file_path = file_path;
      snippet.signature = collapse_ws(src.substr(m.info.sig_from, m.brace_open - m.info.sig_from));
      snippet.body_text = std::string(src.substr(m.brace_open, pos - m.brace_open + 1));
      snippet.leading_comment = m.info.comment;
      snippet.snippet_id = project + "/" + file_path + "#" + m.info.name + "@" +
                           std::to_string(m.info.name_line);
      snippets.push_back(std::move(snippet));
      open_methods.pop_back();
    }
    --depth;
    drop_candidate();
    statement_boundary(pos + 1);
    significant("}");
  }

  void run() {
    while (pos < src.size()) {
      char c = src[pos];

      if (c == '/' && pos + 1 < src.size() && src[pos + 1] == '/') {
        size_t start = pos;
        size_t end = src.find('\n', pos);
        if (end == std::string_view::npos) end = src.size();
        note_comment(start, end);
        advance(end - pos);
        continue;
      }
      if (c == '/' && pos + 1 < src.size() && src[pos + 1] == '*') {
        size_t start = pos;
        size_t end = src.find("*/", pos + 2);
        if (end == std::string_view::npos) {
          advance(src.size() - pos);
          continue;
        }
        note_comment(start, end + 2);
        advance(end + 2 - pos);
        continue;
      }
      if (c == '"' || c == '\'') {
        char quote = c;
        advance(1);
        while (pos < src.size()) {
          if (src[pos] == '\\' && pos + 1 < src.size()) {
            advance(2);
            continue;
          }
          if (src[pos] == quote) {
            advance(1);
            break;
          }
          advance(1);
        }
        if (candidate_active && !candidate_in_throws) drop_candidate();
        significant("\"\"");
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance(1);
        continue;
      }
      if (ident_start(c)) {
        size_t start = pos;
        while (pos < src.size() && ident_char(src[pos])) advance(1);
        handle_identifier(std::string(src.substr(start, pos - start)));
        continue;
      }
      switch (c) {
        case '(':
          open_paren();
          break;
        case ')':
          close_paren();
          break;
        case '{':
          open_brace();
          break;
        case '}':
          close_brace();
          break;
        case ';':
          drop_candidate();
          statement_boundary(pos + 1);
          significant(";");
          break;
        case ',':
        case '.':
          // allowed inside a throws clause
          if (candidate_active && !candidate_in_throws) drop_candidate();
          significant(std::string(1, c));
          break;
        case '@':
          significant("@");
          break;
        default:
          if (candidate_active && !candidate_in_throws) drop_candidate();
          significant(std::string(1, c));
          break;
      }
      advance(1);
    }
  }
};

CodeBuildResult index_snippets(const std::vector<CodeSnippet>& snippets,
                               const AnalyzerConfig& analyzer, const fs::path& out_dir,
                               int64_t files_processed, int64_t files_skipped) {
  Index index(analyzer, out_dir);
  CodeBuildResult result;
  result.files_processed = files_processed;
  result.files_skipped = files_skipped;
  for (const CodeSnippet& s : snippets) {
    DocumentRecord rec;
    rec.doc_id = s.snippet_id;
    rec.fields["snippet_id"] = s.snippet_id;
    rec.fields["project"] = s.project;
    rec.fields["file_path"] = s.file_path;
    rec.fields["method_name"] = s.method_name;
    rec.term_bag = analyze(
        s.method_name + " " + s.signature + " " + s.leading_comment + " " + s.body_text, analyzer);
    index.add_document(std::move(rec));
    ++result.snippets_indexed;
  }
  index.commit();
  result.stats = index.stats();
  return result;
}

}  // namespace

ExtractionResult extract_methods(std::string_view java_source, const std::string& file_path,
                                 const std::string& project) {
  MethodScanner scanner(java_source, file_path, project);
  scanner.run();
  ExtractionResult result;
  result.balanced = scanner.depth == 0 && scanner.open_methods.empty();
  if (result.balanced) result.snippets = std::move(scanner.snippets);
  return result;
}

CodeBuildResult ingest_tree(const fs::path& root_dir, const AnalyzerConfig& analyzer,
                            const fs::path& out_dir) {
  std::vector<fs::path> files;
  if (fs::exists(root_dir)) {
    for (const auto& entry : fs::recursive_directory_iterator(root_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".java")
        files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.string() < b.string(); });

  std::vector<CodeSnippet> snippets;
  int64_t processed = 0;
  int64_t skipped = 0;
  for (const fs::path& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      ++skipped;
      continue;
    }
    std::string source((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::string rel = fs::relative(file, root_dir).generic_string();
    ExtractionResult extracted = extract_methods(source, rel, root_dir.filename().string());
    if (!extracted.balanced) {
      ++skipped;
      continue;
    }
    ++processed;
    for (CodeSnippet& s : extracted.snippets) snippets.push_back(std::move(s));
  }
  return index_snippets(snippets, analyzer, out_dir, processed, skipped);
}

CodeBuildResult ingest_jsonl(const fs::path& file, const AnalyzerConfig& analyzer,
                             const fs::path& out_dir) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open " + file.string());
  std::vector<CodeSnippet> snippets;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      CodeSnippet s;
      s.snippet_id = j.at("snippet_id").get<std::string>();
      s.project = j.value("project", "");
      s.file_path = j.value("file_path", "");
      s.method_name = j.value("method_name", "");
      s.signature = j.value("signature", "");
      s.body_text = j.at("body_text").get<std::string>();
      s.leading_comment = j.value("leading_comment", "");
      if (s.body_text.empty())
        throw ParseError(file.string() + ":" + std::to_string(line_no) + ": empty body_text");
      snippets.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return index_snippets(snippets, analyzer, out_dir, 0, 0);
}

}  // namespace qeck
