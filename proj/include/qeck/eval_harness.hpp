#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace qeck {

// Four-level relevance label for one (query, snippet) pair.
struct Judgment {
  std::string query_id;
  std::string snippet_id;
  int relevance = 1;  // 1..4; 3 and 4 count as relevant
};

struct QueryMetrics {
  std::string query_id;
  double precision_at_k = 0.0;
  double ndcg_at_k = 0.0;
  int k = 0;
};

struct SummaryStats {
  int64_t samples = 0;
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single value
};

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-) over nonzero differences
  double p_value = 1.0;
  int64_t n_nonzero = 0;
};

// query_id -> ranked snippet ids (best first).
using RunResults = std::map<std::string, std::vector<std::string>>;

struct RunReport {
  std::vector<QueryMetrics> per_query;  // sorted by query_id
  SummaryStats precision_summary;
  SummaryStats ndcg_summary;
};

struct ComparisonReport {
  RunReport first;
  RunReport second;
  WilcoxonResult precision_test;
  WilcoxonResult ndcg_test;
};

// Fraction of the first k entries with relevance >= 3; the denominator is
// always k, so short result lists are penalized.
double precision_at_k(const std::vector<int>& relevances, int k);

// Plain discounted cumulative gain over the first k entries, no relevance
// remapping: R1 + sum_{i=2..k} Ri / log2(i).
double dcg_at_k(const std::vector<int>& relevances, int k);

// Zero-modified NDCG: scores 1 and 2 map to 0 first, then DCG/IDCG with
// IDCG over the same entries sorted descending; 0 when IDCG is 0.
double ndcg_at_k(const std::vector<int>& relevances, int k);

SummaryStats summarize(const std::vector<double>& values);

// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
// are dropped and ties receive average ranks. Exact p by summing over all
// 2^n sign assignments for n <= 25, normal approximation with tie and
// continuity corrections beyond.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

// Per-query metrics plus summaries. Every query in results must appear in
// the judgments; snippets without a judgment count as relevance 1.
RunReport evaluate_run(const RunResults& results, const std::vector<Judgment>& judgments, int k);

// Evaluates both runs (which must cover the same queries) and tests the
// per-query metric differences.
ComparisonReport compare_runs(const RunResults& first, const RunResults& second,
                              const std::vector<Judgment>& judgments, int k);

// CSV: header optional, rows query_id,snippet_id,relevance.
std::vector<Judgment> load_judgments_csv(const std::filesystem::path& path);

// Accepts a {query_id: [snippet ids]} object, a single search explain
// document, or an array of explain documents.
RunResults load_run_json(const std::filesystem::path& path);

// Aligned-column statistical summary table.
struct SummaryRow {
  std::string metric;
  std::string approach;
  SummaryStats stats;
};
std::string format_summary_table(const std::vector<SummaryRow>& rows);

}  // namespace qeck
