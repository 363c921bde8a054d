#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qeck/inverted_index.hpp"
#include "qeck/text_pipeline.hpp"

namespace qeck {

// One extracted method: code text plus comments, the unit of the second
// retrieval pass.
struct CodeSnippet {
  std::string snippet_id;  // project/file-path#method-name@start-line
  std::string project;
  std::string file_path;
  std::string method_name;
  std::string signature;        // declaration text up to the opening brace
  std::string body_text;        // "{"..."}" inclusive, comments included
  std::string leading_comment;  // block/line comments directly above, if any
};

struct ExtractionResult {
  std::vector<CodeSnippet> snippets;
  bool balanced = true;  // false: unbalanced braces at EOF, caller skips file
};

struct CodeBuildResult {
  IndexStats stats;
  int64_t snippets_indexed = 0;
  int64_t files_processed = 0;
  int64_t files_skipped = 0;
};

// Lexical method segmenter: finds identifier + parameter list + '{' outside
// string/char/comment context (control-flow keywords and anonymous-class
// allocations excluded) and pairs it with its balance-matched '}'. Methods
// of nested and anonymous classes are emitted separately and also remain
// part of the enclosing method's text.
ExtractionResult extract_methods(std::string_view java_source, const std::string& file_path,
                                 const std::string& project);

// Recursively indexes every *.java under root (lexicographic traversal).
// Term field = analyze(name + signature + leading comment + body).
CodeBuildResult ingest_tree(const std::filesystem::path& root_dir, const AnalyzerConfig& analyzer,
                            const std::filesystem::path& out_dir);

// Fixture path: one CodeSnippet JSON object per line.
CodeBuildResult ingest_jsonl(const std::filesystem::path& file, const AnalyzerConfig& analyzer,
                             const std::filesystem::path& out_dir);

}  // namespace qeck
