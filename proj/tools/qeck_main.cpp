// qeck: crowd-knowledge query expansion for code search.
//
// Subcommands: build-qa-index, build-code-index, search, eval, sweep.
// JSON goes to stdout; diagnostics and tables go to stderr.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qeck/code_ingest.hpp"
#include "qeck/errors.hpp"
#include "qeck/eval_harness.hpp"
#include "qeck/inverted_index.hpp"
#include "qeck/qa_ingest.hpp"
#include "qeck/qeck_engine.hpp"
#include "qeck/stopwords.hpp"
#include "qeck/text_pipeline.hpp"
#include "qeck/version.hpp"

namespace {

using nlohmann::json;

std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// key = value lines; '#' comments. Used for QECK_CONFIG and --config.
std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qeck::ParseError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      size_t b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      size_t e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!key.empty() && !value.empty()) kv[key] = value;
  }
  return kv;
}

// Applies config-file values before CLI11 parses, so flags win.
void apply_config_file(qeck::QeckConfig& cfg, const std::map<std::string, std::string>& kv) {
  auto get_int = [&](const char* key, int& slot) {
    auto it = kv.find(key);
    if (it != kv.end()) slot = std::stoi(it->second);
  };
  auto get_double = [&](const char* key, double& slot) {
    auto it = kv.find(key);
    if (it != kv.end()) slot = std::stod(it->second);
  };
  get_int("m", cfg.m);
  get_int("n", cfg.n);
  get_int("k", cfg.k);
  get_int("first_pass_pool", cfg.first_pass_pool);
  get_double("df_cutoff", cfg.df_cutoff);
  get_double("question_weight", cfg.question_weight);
  get_double("answer_weight", cfg.answer_weight);
}

struct AnalyzerFlags {
  std::string stopwords_file;
  int min_token_length = 2;
  bool keep_digits = false;

  qeck::AnalyzerConfig build() const {
    qeck::AnalyzerConfig cfg = qeck::AnalyzerConfig::standard();
    if (!stopwords_file.empty()) cfg.stopword_list = qeck::load_stopword_file(stopwords_file);
    cfg.min_token_length = min_token_length;
    cfg.keep_digits = keep_digits;
    return cfg;
  }
};

void add_analyzer_flags(CLI::App* cmd, AnalyzerFlags& flags) {
  cmd->add_option("--stopwords", flags.stopwords_file,
                  "Stopword override file (one word per line, # comments)");
  cmd->add_option("--min-token-length", flags.min_token_length, "Minimum token length")
      ->capture_default_str();
  cmd->add_flag("--keep-digits", flags.keep_digits, "Keep digits in tokens");
}

std::set<int64_t> load_exclude_ids(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qeck::ParseError("cannot open exclude-ids file: " + path);
  std::set<int64_t> ids;
  std::string line;
  while (std::getline(in, line)) {
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    ids.insert(std::stoll(line.substr(b)));
  }
  return ids;
}

json config_json(const qeck::QeckConfig& cfg) {
  return json{
      {"m", cfg.m},
      {"n", cfg.n},
      {"k", cfg.k},
      {"first_pass_pool", cfg.first_pass_pool},
      {"df_cutoff", cfg.df_cutoff},
      {"question_weight", cfg.question_weight},
      {"answer_weight", cfg.answer_weight},
  };
}

json run_manifest(const qeck::QeckConfig& cfg, const std::string& qa_path,
                  const std::string& code_path, bool no_timestamp) {
  json manifest{
      {"config", config_json(cfg)},
      {"qa_index_path", qa_path},
      {"code_index_path", code_path},
      {"tool_version", qeck::kToolVersion},
  };
  if (!no_timestamp) manifest["timestamp"] = utc_timestamp();
  return manifest;
}

json summary_json(const qeck::SummaryStats& s) {
  return json{{"samples", s.samples}, {"min", s.min},   {"max", s.max},
              {"median", s.median},   {"mean", s.mean}, {"stddev", s.stddev}};
}

json report_json(const std::string& name, const qeck::RunReport& report) {
  json per_query = json::array();
  for (const auto& m : report.per_query) {
    per_query.push_back({{"query_id", m.query_id},
                         {"precision_at_k", m.precision_at_k},
                         {"ndcg_at_k", m.ndcg_at_k},
                         {"k", m.k}});
  }
  return json{{"name", name},
              {"per_query", per_query},
              {"summary",
               {{"precision", summary_json(report.precision_summary)},
                {"ndcg", summary_json(report.ndcg_summary)}}}};
}

json wilcoxon_json(const qeck::WilcoxonResult& r) {
  return json{{"statistic", r.statistic}, {"p_value", r.p_value}, {"n_nonzero", r.n_nonzero}};
}

qeck::RunResults run_queries(const qeck::Index& qa, const qeck::Index& code,
                             const std::map<std::string, std::string>& queries,
                             const qeck::QeckConfig& cfg) {
  qeck::RunResults results;
  for (const auto& [query_id, raw] : queries) {
    qeck::QeckResult r = qeck::qeck_search(qa, code, raw, cfg);
    std::vector<std::string> ids;
    for (const auto& hit : r.hits) ids.push_back(hit.doc_id);
    results[query_id] = std::move(ids);
  }
  return results;
}

std::map<std::string, std::string> load_queries_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qeck::ParseError("cannot open queries file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw qeck::ParseError(std::string(path) + ": " + e.what());
  }
  std::map<std::string, std::string> queries;
  for (const auto& [id, text] : doc.items()) queries[id] = text.get<std::string>();
  if (queries.empty()) throw qeck::ParseError(std::string(path) + ": no queries");
  return queries;
}

int cmd_build_qa_index(const std::string& posts, const std::string& jsonl, const std::string& tag,
                       const std::string& out, const AnalyzerFlags& analyzer_flags,
                       const std::string& exclude_file) {
  qeck::AnalyzerConfig analyzer = analyzer_flags.build();
  std::set<int64_t> exclude;
  if (!exclude_file.empty()) exclude = load_exclude_ids(exclude_file);

  qeck::PostsParseStats parse_stats;
  qeck::PairStats pair_stats;
  qeck::QaBuildResult result;
  if (!jsonl.empty()) {
    result = qeck::build_qa_index(qeck::load_qa_pairs_jsonl(jsonl), analyzer, out, exclude);
  } else {
    result = qeck::build_qa_index_from_posts(posts, tag, analyzer, out, exclude, parse_stats,
                                             pair_stats);
  }
  if (result.stats.doc_count == 0)
    std::cerr << "warning: index at " << out << " contains no documents\n";

  json output{
      {"out", out},
      {"pairs_indexed", result.pairs_indexed},
      {"excluded", result.excluded},
      {"empty_dropped", result.empty_dropped},
      {"doc_count", result.stats.doc_count},
      {"avg_doc_length", result.stats.avg_doc_length},
      {"analyzer_fingerprint", result.stats.analyzer_fingerprint},
      {"tool_version", qeck::kToolVersion},
  };
  if (jsonl.empty()) {
    output["parser"] = {{"rows_seen", parse_stats.rows_seen},
                        {"posts_emitted", parse_stats.posts_emitted},
                        {"skipped_missing_fields", parse_stats.skipped_missing_fields},
                        {"skipped_other_types", parse_stats.skipped_other_types}};
    output["pairing"] = {{"tagged_questions", pair_stats.tagged_questions},
                         {"paired", pair_stats.paired},
                         {"no_accepted_answer", pair_stats.no_accepted_answer},
                         {"accepted_answer_missing", pair_stats.accepted_answer_missing}};
  }
  std::cout << output.dump(2) << "\n";
  return 0;
}

int cmd_build_code_index(const std::string& src, const std::string& jsonl, const std::string& out,
                         const AnalyzerFlags& analyzer_flags) {
  qeck::AnalyzerConfig analyzer = analyzer_flags.build();
  qeck::CodeBuildResult result = jsonl.empty()
                                     ? qeck::ingest_tree(src, analyzer, out)
                                     : qeck::ingest_jsonl(jsonl, analyzer, out);
  if (result.stats.doc_count == 0)
    std::cerr << "warning: index at " << out << " contains no documents\n";
  json output{
      {"out", out},
      {"snippets_indexed", result.snippets_indexed},
      {"files_processed", result.files_processed},
      {"files_skipped", result.files_skipped},
      {"doc_count", result.stats.doc_count},
      {"avg_doc_length", result.stats.avg_doc_length},
      {"analyzer_fingerprint", result.stats.analyzer_fingerprint},
      {"tool_version", qeck::kToolVersion},
  };
  std::cout << output.dump(2) << "\n";
  return 0;
}

int cmd_search(const std::string& qa_path, const std::string& code_path, const std::string& query,
               const std::string& query_id, qeck::QeckConfig cfg, bool baseline, bool explain,
               bool no_timestamp) {
  if (baseline) cfg.n = 0;
  qeck::Index qa = qeck::Index::open(qa_path);
  qeck::Index code = qeck::Index::open(code_path);
  qeck::QeckResult result = qeck::qeck_search(qa, code, query, cfg);

  json output = qeck::explain_json(result, query_id);
  if (!explain) {
    output.erase("feedback");
    output.erase("expansion");
  }
  output["manifest"] = run_manifest(cfg, qa_path, code_path, no_timestamp);
  if (baseline) output["manifest"]["baseline"] = true;
  std::cout << output.dump(2) << "\n";
  return 0;
}

int cmd_eval(const std::vector<std::string>& run_files, std::vector<std::string> names,
             const std::string& judgments_file, int k, bool no_timestamp) {
  std::vector<qeck::Judgment> judgments = qeck::load_judgments_csv(judgments_file);
  while (names.size() < run_files.size()) {
    std::filesystem::path p = run_files[names.size()];
    names.push_back(p.stem().string());
  }

  json manifest{{"k", k},
                {"run_files", run_files},
                {"judgments_path", judgments_file},
                {"tool_version", qeck::kToolVersion}};
  if (!no_timestamp) manifest["timestamp"] = utc_timestamp();
  json output{{"k", k}, {"manifest", manifest}};

  std::vector<qeck::SummaryRow> table;
  if (run_files.size() == 1) {
    qeck::RunReport report = qeck::evaluate_run(qeck::load_run_json(run_files[0]), judgments, k);
    output["runs"] = json::array({report_json(names[0], report)});
    table.push_back({"Precision", names[0], report.precision_summary});
    table.push_back({"NDCG", names[0], report.ndcg_summary});
  } else {
    qeck::ComparisonReport report = qeck::compare_runs(
        qeck::load_run_json(run_files[0]), qeck::load_run_json(run_files[1]), judgments, k);
    output["runs"] =
        json::array({report_json(names[0], report.first), report_json(names[1], report.second)});
    output["wilcoxon"] = {{"precision", wilcoxon_json(report.precision_test)},
                          {"ndcg", wilcoxon_json(report.ndcg_test)}};
    table.push_back({"Precision", names[0], report.first.precision_summary});
    table.push_back({"Precision", names[1], report.second.precision_summary});
    table.push_back({"NDCG", names[0], report.first.ndcg_summary});
    table.push_back({"NDCG", names[1], report.second.ndcg_summary});
  }
  std::cout << output.dump(2) << "\n";
  std::cerr << qeck::format_summary_table(table);
  return 0;
}

int cmd_sweep(const std::string& qa_path, const std::string& code_path,
              const std::string& queries_file, const std::string& judgments_file,
              qeck::QeckConfig cfg, const std::string& n_values_csv, bool no_timestamp) {
  qeck::Index qa = qeck::Index::open(qa_path);
  qeck::Index code = qeck::Index::open(code_path);
  auto queries = load_queries_json(queries_file);
  auto judgments = qeck::load_judgments_csv(judgments_file);

  std::vector<int> n_values;
  std::stringstream ss(n_values_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) n_values.push_back(std::stoi(item));
  }
  if (n_values.empty()) throw qeck::ParameterError("--n-values produced an empty list");

  json rows = json::array();
  std::vector<qeck::SummaryRow> table;
  for (int n : n_values) {
    qeck::QeckConfig step = cfg;
    step.n = n;
    qeck::RunReport report = qeck::evaluate_run(run_queries(qa, code, queries, step), judgments,
                                                step.k);
    rows.push_back({{"n", n},
                    {"mean_precision", report.precision_summary.mean},
                    {"mean_ndcg", report.ndcg_summary.mean}});
    table.push_back({"Precision", "n=" + std::to_string(n), report.precision_summary});
    table.push_back({"NDCG", "n=" + std::to_string(n), report.ndcg_summary});
  }

  json output{{"manifest", run_manifest(cfg, qa_path, code_path, no_timestamp)},
              {"m", cfg.m},
              {"k", cfg.k},
              {"queries", static_cast<int64_t>(queries.size())},
              {"sweep", rows}};
  std::cout << output.dump(2) << "\n";
  std::cerr << qeck::format_summary_table(table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qeck: code search with crowd-knowledge query expansion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qeck::kToolVersion);

  qeck::QeckConfig cfg;
  std::string config_file;
  if (const char* env = std::getenv("QECK_CONFIG"); env != nullptr && *env != '\0')
    config_file = env;

  // Pre-scan for --config so file values land before flag parsing.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") config_file = argv[i + 1];
  }
  try {
    if (!config_file.empty()) apply_config_file(cfg, load_config_file(config_file));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::string config_file_sink;
  app.add_option("--config", config_file_sink, "Config file (key = value lines)");

  // build-qa-index
  auto* build_qa = app.add_subcommand("build-qa-index", "Build the Q&A pair index");
  std::string posts, qa_jsonl, tag = "android", qa_out, exclude_file;
  AnalyzerFlags qa_analyzer;
  auto* posts_opt = build_qa->add_option("--posts", posts, "Stack Exchange posts.xml");
  auto* qa_jsonl_opt = build_qa->add_option("--jsonl", qa_jsonl, "Pre-paired JSONL input");
  build_qa->add_option("--tag", tag, "Question tag filter")->capture_default_str();
  build_qa->add_option("--out", qa_out, "Output index directory")->required();
  build_qa->add_option("--exclude-ids", exclude_file, "Question ids to exclude, one per line");
  add_analyzer_flags(build_qa, qa_analyzer);
  posts_opt->excludes(qa_jsonl_opt);

  // build-code-index
  auto* build_code = app.add_subcommand("build-code-index", "Build the code snippet index");
  std::string src, code_jsonl, code_out;
  AnalyzerFlags code_analyzer;
  auto* src_opt = build_code->add_option("--src", src, "Java source tree root");
  auto* code_jsonl_opt = build_code->add_option("--jsonl", code_jsonl, "Snippet JSONL input");
  build_code->add_option("--out", code_out, "Output index directory")->required();
  add_analyzer_flags(build_code, code_analyzer);
  src_opt->excludes(code_jsonl_opt);

  // search
  auto* search = app.add_subcommand("search", "Run one query through the two-pass pipeline");
  std::string qa_path, code_path, query, query_id = "query";
  bool baseline = false, explain = false, no_timestamp = false;
  search->add_option("--qa", qa_path, "Q&A index directory")->required();
  search->add_option("--code", code_path, "Code index directory")->required();
  search->add_option("--query", query, "Free-form query text")->required();
  search->add_option("--query-id", query_id, "Query id used in the output")->capture_default_str();
  search->add_option("--m", cfg.m, "PRF documents")->capture_default_str();
  search->add_option("--n", cfg.n, "Expansion words")->capture_default_str();
  search->add_option("--k", cfg.k, "Results returned")->capture_default_str();
  search->add_option("--pool", cfg.first_pass_pool, "First-pass candidate pool")
      ->capture_default_str();
  search->add_option("--df-cutoff", cfg.df_cutoff, "Expansion DF cutoff fraction")
      ->capture_default_str();
  search->add_option("--question-weight", cfg.question_weight, "Question vote weight")
      ->capture_default_str();
  search->add_option("--answer-weight", cfg.answer_weight, "Answer vote weight")
      ->capture_default_str();
  search->add_flag("--baseline", baseline, "Plain BM25 over the original query (same as --n 0)");
  search->add_flag("--explain", explain, "Include feedback pairs and expansion terms");
  search->add_flag("--no-timestamp", no_timestamp, "Omit the timestamp from the manifest");

  // eval
  auto* eval = app.add_subcommand("eval", "Score runs against relevance judgments");
  std::vector<std::string> run_files, run_names;
  std::string judgments_file;
  int eval_k = 10;
  eval->add_option("--run", run_files, "Run file (repeat for a comparison, max 2)")
      ->required()
      ->expected(1, 2);
  eval->add_option("--name", run_names, "Label for the corresponding --run")->expected(0, 2);
  eval->add_option("--judgments", judgments_file, "Judgments CSV")->required();
  eval->add_option("--k", eval_k, "Cutoff K")->capture_default_str();
  eval->add_flag("--no-timestamp", no_timestamp, "Omit the timestamp");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Metrics for a range of expansion word counts");
  std::string sweep_qa, sweep_code, queries_file, sweep_judgments;
  std::string n_values = "1,2,3,4,5,6,7,8,9,10,15,20";
  sweep->add_option("--qa", sweep_qa, "Q&A index directory")->required();
  sweep->add_option("--code", sweep_code, "Code index directory")->required();
  sweep->add_option("--queries", queries_file, "JSON object: query id -> text")->required();
  sweep->add_option("--judgments", sweep_judgments, "Judgments CSV")->required();
  sweep->add_option("--m", cfg.m, "PRF documents")->capture_default_str();
  sweep->add_option("--k", cfg.k, "Results per query")->capture_default_str();
  sweep->add_option("--n-values", n_values, "Comma-separated expansion word counts")
      ->capture_default_str();
  sweep->add_flag("--no-timestamp", no_timestamp, "Omit the timestamp");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (build_qa->parsed()) {
      if (posts.empty() && qa_jsonl.empty())
        throw qeck::ParameterError("build-qa-index needs --posts or --jsonl");
      return cmd_build_qa_index(posts, qa_jsonl, tag, qa_out, qa_analyzer, exclude_file);
    }
    if (build_code->parsed()) {
      if (src.empty() == code_jsonl.empty())
        throw qeck::ParameterError("build-code-index needs exactly one of --src or --jsonl");
      return cmd_build_code_index(src, code_jsonl, code_out, code_analyzer);
    }
    if (search->parsed())
      return cmd_search(qa_path, code_path, query, query_id, cfg, baseline, explain, no_timestamp);
    if (eval->parsed()) return cmd_eval(run_files, run_names, judgments_file, eval_k, no_timestamp);
    if (sweep->parsed())
      return cmd_sweep(sweep_qa, sweep_code, queries_file, sweep_judgments, cfg, n_values,
                       no_timestamp);
  } catch (const qeck::ParameterError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
