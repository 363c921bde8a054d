#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qeck/text_pipeline.hpp"

namespace qeck {

struct DocumentRecord {
  std::string doc_id;
  std::map<std::string, std::string> fields;  // stored, not searched
  TermBag term_bag;
};

struct SearchHit {
  std::string doc_id;
  double score = 0.0;
  int rank = 0;  // 1-based
};

struct IndexStats {
  int64_t doc_count = 0;
  double avg_doc_length = 0.0;
  std::string analyzer_fingerprint;
};

// BM25-ranked inverted index over term-bag documents. Single writer until
// commit(); immutable and freely shareable afterwards.
//
// On disk an index is a directory: manifest.json (format version, stats,
// analyzer config) plus terms.dat / postings.dat / docs.dat. Postings are
// kept in doc_id order, so ordinals double as the ranking tie-break.
class Index {
 public:
  static constexpr int kFormatVersion = 1;
  static constexpr double kBm25K1 = 1.2;
  static constexpr double kBm25B = 0.75;

  explicit Index(AnalyzerConfig config, std::optional<std::filesystem::path> dir = {});

  Index(Index&&) = default;
  Index& operator=(Index&&) = default;

  static Index open(const std::filesystem::path& dir);

  void add_document(DocumentRecord record);

  // Finalizes stats and postings, persists atomically when a directory is
  // bound. Idempotent.
  void commit();

  bool committed() const { return committed_; }
  const IndexStats& stats() const;
  const AnalyzerConfig& analyzer() const { return analyzer_; }

  int64_t doc_count() const;
  double avg_doc_length() const;
  bool has_document(std::string_view doc_id) const;
  std::vector<std::string> doc_ids() const;

  int64_t document_frequency(std::string_view term) const;
  int64_t term_frequency(std::string_view term, std::string_view doc_id) const;

  // (term, tf) pairs of one document, term-sorted. Views stay valid for the
  // life of the index.
  std::vector<std::pair<std::string_view, int64_t>> document_terms(std::string_view doc_id) const;
  const std::map<std::string, std::string>& stored_fields(std::string_view doc_id) const;

  // Top-scoring documents under BM25 (k1=1.2, b=0.75, idf with +1 smoothing
  // inside the log). Query terms contribute per occurrence. Documents with
  // zero score are omitted; ties break by doc_id ascending.
  std::vector<SearchHit> bm25_search(const TermBag& query, int top_r) const;

 private:
  struct Posting {
    uint32_t doc = 0;
    uint32_t tf = 0;
  };
  struct Doc {
    std::string doc_id;
    std::map<std::string, std::string> fields;
    int64_t length = 0;
    std::vector<std::pair<uint32_t, uint32_t>> terms;  // (term ordinal, tf)
  };

  void require_committed(const char* op) const;
  uint32_t doc_ordinal(std::string_view doc_id) const;  // throws if unknown
  int64_t term_ordinal(std::string_view term) const;    // -1 if unknown
  void persist() const;

  AnalyzerConfig analyzer_;
  std::optional<std::filesystem::path> dir_;
  bool committed_ = false;

  std::vector<DocumentRecord> pending_;
  std::set<std::string> pending_ids_;

  std::vector<Doc> docs_;                       // sorted by doc_id
  std::vector<std::string> terms_;              // sorted
  std::vector<std::vector<Posting>> postings_;  // parallel to terms_
  IndexStats stats_;
};

}  // namespace qeck
