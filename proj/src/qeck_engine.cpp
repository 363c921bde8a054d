#include "qeck/qeck_engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "qeck/errors.hpp"
#include "qeck/qa_ingest.hpp"

namespace qeck {
namespace {

int64_t stored_int(const std::map<std::string, std::string>& fields, const std::string& key) {
  auto it = fields.find(key);
  if (it == fields.end() || it->second.empty()) return 0;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

void QeckConfig::validate() const {
  if (m < 0) throw ParameterError("m must be >= 0");
  if (n < 0) throw ParameterError("n must be >= 0");
  if (k < 1) throw ParameterError("k must be >= 1");
  if (first_pass_pool < 1 || first_pass_pool < m)
    throw ParameterError("first_pass_pool must be >= max(1, m)");
  if (!(df_cutoff > 0.0 && df_cutoff <= 1.0)) throw ParameterError("df_cutoff must be in (0, 1]");
  if (std::fabs(question_weight + answer_weight - 1.0) > 1e-9)
    throw ParameterError("question_weight + answer_weight must equal 1.0");
}

Query Query::parse(const std::string& raw, const AnalyzerConfig& analyzer) {
  return Query{raw, analyze(raw, analyzer)};
}

std::vector<double> min_max_normalize(const std::vector<double>& values) {
  if (values.empty()) throw ParameterError("min_max_normalize: empty input");
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(hi == lo ? 1.0 : (v - lo) / (hi - lo));
  return out;
}

FeedbackSet fuse_candidates(std::vector<FusionCandidate> candidates, int m) {
  FeedbackSet feedback;
  if (candidates.empty() || m <= 0) return feedback;

  std::vector<double> lucene;
  std::vector<double> so;
  lucene.reserve(candidates.size());
  so.reserve(candidates.size());
  for (const FusionCandidate& c : candidates) {
    lucene.push_back(c.lucene_score);
    so.push_back(c.so_score);
  }
  std::vector<double> norm_l = min_max_normalize(lucene);
  std::vector<double> norm_s = min_max_normalize(so);

  feedback.entries.reserve(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    ScoredQAPair scored;
    scored.pair_id = std::move(candidates[i].pair_id);
    scored.lucene_score = candidates[i].lucene_score;
    scored.so_score = candidates[i].so_score;
    scored.norm_l = norm_l[i];
    scored.norm_s = norm_s[i];
    scored.final_score = norm_l[i] + norm_s[i];
    feedback.entries.push_back(std::move(scored));
  }
  std::sort(feedback.entries.begin(), feedback.entries.end(),
            [](const ScoredQAPair& a, const ScoredQAPair& b) {
              if (a.final_score != b.final_score) return a.final_score > b.final_score;
              return a.pair_id < b.pair_id;
            });
  if (feedback.entries.size() > static_cast<size_t>(m))
    feedback.entries.resize(static_cast<size_t>(m));
  return feedback;
}

FeedbackSet first_pass(const Index& qa_index, const Query& query, const QeckConfig& config) {
  config.validate();
  if (config.m == 0) return {};
  std::vector<SearchHit> hits = qa_index.bm25_search(query.terms, config.first_pass_pool);
  std::vector<FusionCandidate> candidates;
  candidates.reserve(hits.size());
  for (SearchHit& hit : hits) {
    const auto& fields = qa_index.stored_fields(hit.doc_id);
    double so = so_score(stored_int(fields, "question_votes"), stored_int(fields, "answer_votes"),
                         config.question_weight, config.answer_weight);
    candidates.push_back({std::move(hit.doc_id), hit.score, so});
  }
  return fuse_candidates(std::move(candidates), config.m);
}

std::vector<ExpansionTerm> select_expansion_terms(const FeedbackSet& feedback, const Query& query,
                                                  const Index& qa_index,
                                                  const QeckConfig& config) {
  config.validate();
  if (feedback.empty() || config.n == 0) return {};

  const std::set<std::string> query_terms(query.terms.terms.begin(), query.terms.terms.end());

  struct Accum {
    double sum_sqrt_tf = 0.0;
    int64_t total_tf = 0;
  };
  std::map<std::string, Accum> candidates;
  for (const ScoredQAPair& entry : feedback.entries) {
    for (auto [term, tf] : qa_index.document_terms(entry.pair_id)) {
      std::string term_str(term);
      if (query_terms.count(term_str)) continue;
      Accum& acc = candidates[term_str];
      acc.sum_sqrt_tf += std::sqrt(static_cast<double>(tf));
      acc.total_tf += tf;
    }
  }

  const double n_docs = static_cast<double>(qa_index.doc_count());
  std::vector<ExpansionTerm> terms;
  terms.reserve(candidates.size());
  for (const auto& [term, acc] : candidates) {
    int64_t df = qa_index.document_frequency(term);
    if (static_cast<double>(df) > config.df_cutoff * n_docs) continue;
    ExpansionTerm et;
    et.term = term;
    et.weight = acc.sum_sqrt_tf * (std::log(n_docs / (static_cast<double>(df) + 1.0)) + 1.0);
    et.feedback_tf = acc.total_tf;
    et.collection_df = df;
    terms.push_back(std::move(et));
  }
  std::sort(terms.begin(), terms.end(), [](const ExpansionTerm& a, const ExpansionTerm& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.term < b.term;
  });
  if (terms.size() > static_cast<size_t>(config.n)) terms.resize(static_cast<size_t>(config.n));
  return terms;
}

ExpandedQuery expand(const Query& query, std::vector<ExpansionTerm> terms) {
  ExpandedQuery expanded;
  expanded.base = query;
  expanded.combined_terms = query.terms;
  expanded.expansion = std::move(terms);
  for (const ExpansionTerm& t : expanded.expansion)
    expanded.combined_terms.terms.push_back(t.term);
  return expanded;
}

std::vector<SearchHit> second_pass(const Index& code_index, const ExpandedQuery& expanded,
                                   const QeckConfig& config) {
  config.validate();
  return code_index.bm25_search(expanded.combined_terms, config.k);
}

QeckResult qeck_search(const Index& qa_index, const Index& code_index,
                       const std::string& raw_query, const QeckConfig& config) {
  config.validate();
  if (qa_index.stats().analyzer_fingerprint != code_index.stats().analyzer_fingerprint)
    throw ConfigError("analyzer fingerprint mismatch between Q&A index (" +
                      qa_index.stats().analyzer_fingerprint + ") and code index (" +
                      code_index.stats().analyzer_fingerprint + ")");

  Query query = Query::parse(raw_query, qa_index.analyzer());
  QeckResult result;
  result.feedback = first_pass(qa_index, query, config);
  std::vector<ExpansionTerm> terms =
      select_expansion_terms(result.feedback, query, qa_index, config);
  result.expanded = expand(query, std::move(terms));
  result.hits = second_pass(code_index, result.expanded, config);
  return result;
}

nlohmann::json explain_json(const QeckResult& result, const std::string& query_id) {
  nlohmann::json feedback = nlohmann::json::array();
  for (const ScoredQAPair& e : result.feedback.entries) {
    feedback.push_back({
        {"pair_id", e.pair_id},
        {"lucene_score", e.lucene_score},
        {"so_score", e.so_score},
        {"norm_l", e.norm_l},
        {"norm_s", e.norm_s},
        {"final_score", e.final_score},
    });
  }
  nlohmann::json expansion = nlohmann::json::array();
  for (const ExpansionTerm& t : result.expanded.expansion) {
    expansion.push_back({
        {"term", t.term},
        {"weight", t.weight},
        {"feedback_tf", t.feedback_tf},
        {"collection_df", t.collection_df},
    });
  }
  nlohmann::json hits = nlohmann::json::array();
  for (const SearchHit& h : result.hits) {
    hits.push_back({{"snippet_id", h.doc_id}, {"score", h.score}, {"rank", h.rank}});
  }
  return nlohmann::json{
      {"query_id", query_id},
      {"query", result.expanded.base.raw},
      {"query_terms", result.expanded.base.terms.terms},
      {"feedback", feedback},
      {"expansion", expansion},
      {"hits", hits},
  };
}

}  // namespace qeck
