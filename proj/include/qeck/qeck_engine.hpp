#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "qeck/inverted_index.hpp"
#include "qeck/text_pipeline.hpp"

namespace qeck {

// Pipeline parameters. m/n may be zero, which degenerates the pipeline to
// plain BM25 over the original query.
struct QeckConfig {
  int m = 5;                 // PRF documents
  int n = 9;                 // expansion words
  int k = 10;                // recommended snippets
  int first_pass_pool = 50;  // BM25 candidates entering score fusion
  double df_cutoff = 0.25;   // expansion terms in more than this fraction of the collection are dropped
  double question_weight = 0.7;
  double answer_weight = 0.3;

  void validate() const;  // throws ParameterError
};

struct Query {
  std::string raw;
  TermBag terms;

  static Query parse(const std::string& raw, const AnalyzerConfig& analyzer);
};

struct ScoredQAPair {
  std::string pair_id;
  double lucene_score = 0.0;  // BM25
  double so_score = 0.0;      // weighted crowd votes
  double norm_l = 0.0;
  double norm_s = 0.0;
  double final_score = 0.0;   // norm_l + norm_s, in [0,2]
};

struct FeedbackSet {
  std::vector<ScoredQAPair> entries;  // final_score descending, pair_id tie-break

  bool empty() const { return entries.empty(); }
  size_t size() const { return entries.size(); }
};

struct ExpansionTerm {
  std::string term;
  double weight = 0.0;        // sum over feedback docs of sqrt(tf) * (ln(N/(df+1)) + 1)
  int64_t feedback_tf = 0;    // total occurrences across feedback docs
  int64_t collection_df = 0;
};

struct ExpandedQuery {
  Query base;
  std::vector<ExpansionTerm> expansion;
  TermBag combined_terms;  // base terms plus each expansion term once
};

struct QeckResult {
  ExpandedQuery expanded;
  FeedbackSet feedback;
  std::vector<SearchHit> hits;
};

// (v - min) / (max - min); all 1.0 when max == min. Empty input is an error.
std::vector<double> min_max_normalize(const std::vector<double>& values);

struct FusionCandidate {
  std::string pair_id;
  double lucene_score = 0.0;
  double so_score = 0.0;
};

// Normalizes both score lists over the candidate set, sums them, returns
// the top m by (final desc, pair_id asc).
FeedbackSet fuse_candidates(std::vector<FusionCandidate> candidates, int m);

// BM25 over the Q&A index, crowd-score fusion, top-m feedback documents.
FeedbackSet first_pass(const Index& qa_index, const Query& query, const QeckConfig& config);

// Candidate terms from the feedback documents, minus query terms, minus
// terms above the collection DF cutoff, ranked by summed sqrt-TF x IDF.
std::vector<ExpansionTerm> select_expansion_terms(const FeedbackSet& feedback, const Query& query,
                                                  const Index& qa_index, const QeckConfig& config);

ExpandedQuery expand(const Query& query, std::vector<ExpansionTerm> terms);

std::vector<SearchHit> second_pass(const Index& code_index, const ExpandedQuery& expanded,
                                   const QeckConfig& config);

// The full pipeline. Both indexes must share the analyzer fingerprint;
// the query is analyzed with the Q&A index's analyzer.
QeckResult qeck_search(const Index& qa_index, const Index& code_index,
                       const std::string& raw_query, const QeckConfig& config);

// Explainability document: feedback scores, chosen expansion terms, hits.
nlohmann::json explain_json(const QeckResult& result, const std::string& query_id);

}  // namespace qeck
