#include "qeck/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qeck/errors.hpp"

namespace qeck {
namespace {

std::vector<int> zero_modified(const std::vector<int>& relevances, int k) {
  std::vector<int> out;
  out.reserve(static_cast<size_t>(k));
  for (size_t i = 0; i < relevances.size() && i < static_cast<size_t>(k); ++i)
    out.push_back(relevances[i] >= 3 ? relevances[i] : 0);
  return out;
}

double dcg(const std::vector<int>& relevances) {
  double sum = 0.0;
  for (size_t i = 0; i < relevances.size(); ++i) {
    double r = static_cast<double>(relevances[i]);
    sum += i == 0 ? r : r / std::log2(static_cast<double>(i + 1));
  }
  return sum;
}

// Normal tail via the complementary error function.
double normal_two_sided_p(double z_abs) {
  return std::erfc(z_abs / std::sqrt(2.0));
}

}  // namespace

double precision_at_k(const std::vector<int>& relevances, int k) {
  if (k < 1) throw ParameterError("precision_at_k: k must be >= 1");
  int relevant = 0;
  for (size_t i = 0; i < relevances.size() && i < static_cast<size_t>(k); ++i)
    if (relevances[i] >= 3) ++relevant;
  return static_cast<double>(relevant) / static_cast<double>(k);
}

double dcg_at_k(const std::vector<int>& relevances, int k) {
  if (k < 1) throw ParameterError("dcg_at_k: k must be >= 1");
  std::vector<int> window(relevances.begin(),
                          relevances.begin() +
                              std::min(relevances.size(), static_cast<size_t>(k)));
  return dcg(window);
}

double ndcg_at_k(const std::vector<int>& relevances, int k) {
  if (k < 1) throw ParameterError("ndcg_at_k: k must be >= 1");
  std::vector<int> zeroed = zero_modified(relevances, k);
  double gain = dcg(zeroed);
  std::sort(zeroed.begin(), zeroed.end(), std::greater<int>());
  double ideal = dcg(zeroed);
  return ideal == 0.0 ? 0.0 : gain / ideal;
}

SummaryStats summarize(const std::vector<double>& values) {
  if (values.empty()) throw ParameterError("summarize: empty input");
  SummaryStats stats;
  stats.samples = static_cast<int64_t>(values.size());
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  stats.min = sorted.front();
  stats.max = sorted.back();
  size_t n = sorted.size();
  stats.median = n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
  double sum = 0.0;
  for (double v : sorted) sum += v;
  stats.mean = sum / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - stats.mean) * (v - stats.mean);
    stats.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return stats;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ParameterError("wilcoxon_signed_rank: length mismatch");
  if (a.empty()) throw ParameterError("wilcoxon_signed_rank: empty input");

  std::vector<double> diffs;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult result;
  result.n_nonzero = static_cast<int64_t>(diffs.size());
  if (diffs.empty()) {
    result.statistic = 0.0;
    result.p_value = 1.0;
    return result;
  }

  size_t n = diffs.size();
  std::vector<double> abs_sorted;
  abs_sorted.reserve(n);
  for (double d : diffs) abs_sorted.push_back(std::fabs(d));
  std::sort(abs_sorted.begin(), abs_sorted.end());

  // Average ranks are multiples of 1/2; doubling them keeps everything in
  // exact integer arithmetic.
  std::vector<int64_t> scaled_ranks(n);
  for (size_t i = 0; i < n; ++i) {
    double v = std::fabs(diffs[i]);
    size_t lo = static_cast<size_t>(std::lower_bound(abs_sorted.begin(), abs_sorted.end(), v) -
                                    abs_sorted.begin());
    size_t hi = static_cast<size_t>(std::upper_bound(abs_sorted.begin(), abs_sorted.end(), v) -
                                    abs_sorted.begin());
    // average of ranks lo+1 .. hi, times 2
    scaled_ranks[i] = static_cast<int64_t>(lo + 1 + hi);
  }

  int64_t w_plus2 = 0;
  int64_t total2 = 0;
  for (size_t i = 0; i < n; ++i) {
    total2 += scaled_ranks[i];
    if (diffs[i] > 0) w_plus2 += scaled_ranks[i];
  }
  int64_t w_minus2 = total2 - w_plus2;
  int64_t t_min2 = std::min(w_plus2, w_minus2);
  result.statistic = static_cast<double>(t_min2) / 2.0;

  if (n <= 25) {
    // Distribution of W+ over all 2^n sign assignments, by counting.
    std::vector<uint64_t> ways(static_cast<size_t>(total2) + 1, 0);
    ways[0] = 1;
    for (size_t i = 0; i < n; ++i) {
      for (size_t w = ways.size(); w-- > static_cast<size_t>(scaled_ranks[i]);)
        ways[w] += ways[w - static_cast<size_t>(scaled_ranks[i])];
    }
    uint64_t extreme = 0;
    for (size_t w = 0; w < ways.size(); ++w) {
      int64_t tail = std::min<int64_t>(static_cast<int64_t>(w),
                                       total2 - static_cast<int64_t>(w));
      if (tail <= t_min2) extreme += ways[w];
    }
    result.p_value =
        std::min(1.0, static_cast<double>(extreme) / std::pow(2.0, static_cast<double>(n)));
  } else {
    double dn = static_cast<double>(n);
    double mean = dn * (dn + 1.0) / 4.0;
    double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0;
    // tie correction: sum over groups of (t^3 - t) / 48
    size_t i = 0;
    while (i < abs_sorted.size()) {
      size_t j = i;
      while (j < abs_sorted.size() && abs_sorted[j] == abs_sorted[i]) ++j;
      double t = static_cast<double>(j - i);
      var -= (t * t * t - t) / 48.0;
      i = j;
    }
    double t_stat = static_cast<double>(t_min2) / 2.0;
    if (var <= 0.0) {
      result.p_value = 1.0;
    } else {
      double z = (mean - t_stat - 0.5) / std::sqrt(var);
      result.p_value = std::min(1.0, normal_two_sided_p(std::fabs(z)));
    }
  }
  return result;
}

namespace {

QueryMetrics metrics_for(const std::string& query_id, const std::vector<std::string>& ranked,
                         const std::map<std::string, int>& judged, int k) {
  std::vector<int> relevances;
  relevances.reserve(ranked.size());
  for (const std::string& id : ranked) {
    auto it = judged.find(id);
    relevances.push_back(it == judged.end() ? 1 : it->second);
  }
  QueryMetrics m;
  m.query_id = query_id;
  m.k = k;
  m.precision_at_k = precision_at_k(relevances, k);
  m.ndcg_at_k = ndcg_at_k(relevances, k);
  return m;
}

}  // namespace

RunReport evaluate_run(const RunResults& results, const std::vector<Judgment>& judgments, int k) {
  if (k < 1) throw ParameterError("evaluate_run: k must be >= 1");
  std::map<std::string, std::map<std::string, int>> by_query;
  for (const Judgment& j : judgments) by_query[j.query_id][j.snippet_id] = j.relevance;

  RunReport report;
  std::vector<double> precisions;
  std::vector<double> ndcgs;
  for (const auto& [query_id, ranked] : results) {
    auto it = by_query.find(query_id);
    if (it == by_query.end())
      throw ParameterError("evaluate_run: no judgments for query id '" + query_id + "'");
    QueryMetrics m = metrics_for(query_id, ranked, it->second, k);
    precisions.push_back(m.precision_at_k);
    ndcgs.push_back(m.ndcg_at_k);
    report.per_query.push_back(std::move(m));
  }
  if (report.per_query.empty()) throw ParameterError("evaluate_run: no queries in run");
  report.precision_summary = summarize(precisions);
  report.ndcg_summary = summarize(ndcgs);
  return report;
}

ComparisonReport compare_runs(const RunResults& first, const RunResults& second,
                              const std::vector<Judgment>& judgments, int k) {
  std::set<std::string> queries_a;
  std::set<std::string> queries_b;
  for (const auto& [q, _] : first) queries_a.insert(q);
  for (const auto& [q, _] : second) queries_b.insert(q);
  if (queries_a != queries_b)
    throw ParameterError("compare_runs: the two runs cover different query sets");

  ComparisonReport report;
  report.first = evaluate_run(first, judgments, k);
  report.second = evaluate_run(second, judgments, k);

  std::vector<double> pa, pb, na, nb;
  for (size_t i = 0; i < report.first.per_query.size(); ++i) {
    pa.push_back(report.first.per_query[i].precision_at_k);
    pb.push_back(report.second.per_query[i].precision_at_k);
    na.push_back(report.first.per_query[i].ndcg_at_k);
    nb.push_back(report.second.per_query[i].ndcg_at_k);
  }
  report.precision_test = wilcoxon_signed_rank(pa, pb);
  report.ndcg_test = wilcoxon_signed_rank(na, nb);
  return report;
}

std::vector<Judgment> load_judgments_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<Judgment> judgments;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("query_id,", 0) == 0) continue;  // header
    size_t c1 = line.find(',');
    size_t c2 = line.rfind(',');
    if (c1 == std::string::npos || c2 == c1)
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected query_id,snippet_id,relevance");
    Judgment j;
    j.query_id = line.substr(0, c1);
    j.snippet_id = line.substr(c1 + 1, c2 - c1 - 1);
    try {
      j.relevance = std::stoi(line.substr(c2 + 1));
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad relevance value");
    }
    if (j.relevance < 1 || j.relevance > 4)
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": relevance must be 1..4, got " + std::to_string(j.relevance));
    judgments.push_back(std::move(j));
  }
  return judgments;
}

namespace {

void run_from_explain(const nlohmann::json& doc, RunResults& out, const std::string& where) {
  std::string query_id = doc.at("query_id").get<std::string>();
  std::vector<std::string> ids;
  for (const auto& hit : doc.at("hits")) ids.push_back(hit.at("snippet_id").get<std::string>());
  if (!out.emplace(std::move(query_id), std::move(ids)).second)
    throw ParseError(where + ": duplicate query id in run");
}

}  // namespace

RunResults load_run_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  RunResults results;
  try {
    if (doc.is_array()) {
      for (const auto& entry : doc) run_from_explain(entry, results, path.string());
    } else if (doc.is_object() && doc.contains("query_id") && doc.contains("hits")) {
      run_from_explain(doc, results, path.string());
    } else if (doc.is_object()) {
      for (const auto& [query_id, ids] : doc.items()) {
        std::vector<std::string> ranked;
        for (const auto& id : ids) ranked.push_back(id.get<std::string>());
        results.emplace(query_id, std::move(ranked));
      }
    } else {
      throw ParseError(path.string() + ": unrecognized run file shape");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (results.empty()) throw ParseError(path.string() + ": run file contains no queries");
  return results;
}

std::string format_summary_table(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  auto fmt = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
  };
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Metric", "Approach", "Samples", "Min", "Max", "Median", "Mean", "StdDev"});
  for (const SummaryRow& row : rows) {
    cells.push_back({row.metric, row.approach, std::to_string(row.stats.samples),
                     fmt(row.stats.min), fmt(row.stats.max), fmt(row.stats.median),
                     fmt(row.stats.mean), fmt(row.stats.stddev)});
  }
  std::vector<size_t> width(cells[0].size(), 0);
  for (const auto& row : cells)
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  for (const auto& row : cells) {
    for (size_t c = 0; c < row.size(); ++c) {
      out << std::left << std::setw(static_cast<int>(width[c]) + 2) << row[c];
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace qeck
