#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qeck/inverted_index.hpp"
#include "qeck/text_pipeline.hpp"

namespace qeck {

enum class PostType { question, answer };

struct RawPost {
  int64_t id = 0;
  PostType post_type = PostType::question;
  std::optional<int64_t> accepted_answer_id;
  std::optional<int64_t> parent_id;
  int64_t score = 0;
  std::optional<std::string> title;
  std::string body;                // HTML, entities already decoded
  std::vector<std::string> tags;   // lowercase, without angle brackets
};

// A question joined with its accepted answer.
struct QAPair {
  std::string pair_id;  // question id as decimal string
  int64_t question_id = 0;
  int64_t answer_id = 0;
  std::string title;
  std::string question_text;  // title + stripped question body
  std::string answer_text;    // stripped accepted-answer body
  std::vector<std::string> tags;
  int64_t question_votes = 0;
  int64_t answer_votes = 0;
};

struct PostsParseStats {
  int64_t rows_seen = 0;
  int64_t posts_emitted = 0;
  int64_t skipped_missing_fields = 0;  // rows without Id or PostTypeId
  int64_t skipped_other_types = 0;     // PostTypeId outside {1,2}
};

struct PairStats {
  int64_t tagged_questions = 0;
  int64_t paired = 0;
  int64_t no_accepted_answer = 0;
  int64_t accepted_answer_missing = 0;
};

struct QaBuildResult {
  IndexStats stats;
  int64_t pairs_indexed = 0;
  int64_t empty_dropped = 0;  // pairs whose analyzed text came out empty
  int64_t excluded = 0;
};

// Streams a Stack Exchange posts.xml: one callback per <row> with
// PostTypeId 1 or 2. Never materializes the file. Malformed XML raises
// ParseError with the byte offset.
void parse_posts(std::istream& in, const std::function<void(RawPost&&)>& emit,
                 PostsParseStats& stats);

// Convenience for fixtures and tests.
std::vector<RawPost> parse_posts_to_vector(std::istream& in, PostsParseStats& stats);

// Removes tags (text inside <code>/<pre> kept), decodes entities,
// collapses whitespace. Pure scanning, no regex.
std::string strip_html(std::string_view body);

// Decodes &lt; &amp; &#nn; &#xhh; and friends; unknown entities pass through.
std::string decode_entities(std::string_view text);

// Eq. weights 0.7/0.3: weighted crowd-vote quality of a pair.
double so_score(int64_t question_votes, int64_t answer_votes,
                double question_weight = 0.7, double answer_weight = 0.3);

// Joins questions carrying tag_filter to their accepted answers. Order of
// emission follows question order in the input.
std::vector<QAPair> pair_posts(const std::vector<RawPost>& posts, const std::string& tag_filter,
                               PairStats& stats);

// Indexes pairs: term field = analyze(title + question_text + answer_text),
// stored fields pair_id / title / question_votes / answer_votes.
QaBuildResult build_qa_index(const std::vector<QAPair>& pairs, const AnalyzerConfig& analyzer,
                             const std::filesystem::path& out_dir,
                             const std::set<int64_t>& exclude_question_ids = {});

// Two-pass streaming build straight from a posts.xml file; answers may
// precede their questions in the dump.
QaBuildResult build_qa_index_from_posts(const std::filesystem::path& posts_xml,
                                        const std::string& tag_filter,
                                        const AnalyzerConfig& analyzer,
                                        const std::filesystem::path& out_dir,
                                        const std::set<int64_t>& exclude_question_ids,
                                        PostsParseStats& parse_stats, PairStats& pair_stats);

// Pre-paired JSONL fixture input: one QAPair object per line.
std::vector<QAPair> load_qa_pairs_jsonl(const std::filesystem::path& path);

}  // namespace qeck
