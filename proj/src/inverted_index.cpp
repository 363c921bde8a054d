#include "qeck/inverted_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "qeck/errors.hpp"

namespace qeck {
namespace fs = std::filesystem;
namespace {

constexpr uint32_t kTermsMagic = 0x4d525451;     // "QTRM"
constexpr uint32_t kPostingsMagic = 0x54535051;  // "QPST"
constexpr uint32_t kDocsMagic = 0x434f4451;      // "QDOC"

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, uint64_t v) {
  write_u32(out, static_cast<uint32_t>(v));
  write_u32(out, static_cast<uint32_t>(v >> 32));
}

void write_str(std::ostream& out, std::string_view s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t read_u32(std::istream& in, const std::string& file) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("truncated index file: " + file);
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

uint64_t read_u64(std::istream& in, const std::string& file) {
  uint64_t lo = read_u32(in, file);
  uint64_t hi = read_u32(in, file);
  return lo | hi << 32;
}

std::string read_str(std::istream& in, const std::string& file) {
  uint32_t len = read_u32(in, file);
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), len)) throw ParseError("truncated index file: " + file);
  return s;
}

void check_header(std::istream& in, uint32_t magic, const std::string& file) {
  if (read_u32(in, file) != magic) throw ParseError("not an index file: " + file);
  uint32_t version = read_u32(in, file);
  if (version != Index::kFormatVersion)
    throw ParseError("unsupported index format version " + std::to_string(version) + " in " + file);
}

class TempFile {
 public:
  TempFile(const fs::path& target) : target_(target), tmp_(target.string() + ".tmp") {}
  ~TempFile() {
    std::error_code ec;
    if (!renamed_) fs::remove(tmp_, ec);
  }
  const fs::path& path() const { return tmp_; }
  void rename_into_place() {
    fs::rename(tmp_, target_);
    renamed_ = true;
  }

 private:
  fs::path target_;
  fs::path tmp_;
  bool renamed_ = false;
};

}  // namespace

Index::Index(AnalyzerConfig config, std::optional<fs::path> dir)
    : analyzer_(std::move(config)), dir_(std::move(dir)) {
  stats_.analyzer_fingerprint = analyzer_.fingerprint();
}

void Index::add_document(DocumentRecord record) {
  if (committed_) throw IndexError("add_document on committed index");
  if (!pending_ids_.insert(record.doc_id).second)
    throw IndexError("duplicate doc_id: " + record.doc_id);
  pending_.push_back(std::move(record));
}

void Index::commit() {
  if (committed_) return;

  std::sort(pending_.begin(), pending_.end(),
            [](const DocumentRecord& a, const DocumentRecord& b) { return a.doc_id < b.doc_id; });

  std::set<std::string> vocab;
  for (const DocumentRecord& rec : pending_)
    vocab.insert(rec.term_bag.terms.begin(), rec.term_bag.terms.end());
  terms_.assign(vocab.begin(), vocab.end());
  postings_.assign(terms_.size(), {});

  int64_t total_length = 0;
  docs_.reserve(pending_.size());
  for (DocumentRecord& rec : pending_) {
    Doc doc;
    doc.doc_id = std::move(rec.doc_id);
    doc.fields = std::move(rec.fields);
    doc.length = static_cast<int64_t>(rec.term_bag.terms.size());
    total_length += doc.length;

    std::map<uint32_t, uint32_t> freqs;
    for (const std::string& t : rec.term_bag.terms) {
      int64_t ord = term_ordinal(t);
      ++freqs[static_cast<uint32_t>(ord)];
    }
    doc.terms.assign(freqs.begin(), freqs.end());
    uint32_t doc_ord = static_cast<uint32_t>(docs_.size());
    for (auto [term_ord, tf] : doc.terms) postings_[term_ord].push_back({doc_ord, tf});
    docs_.push_back(std::move(doc));
  }
  pending_.clear();
  pending_.shrink_to_fit();
  pending_ids_.clear();

  stats_.doc_count = static_cast<int64_t>(docs_.size());
  stats_.avg_doc_length =
      docs_.empty() ? 0.0 : static_cast<double>(total_length) / static_cast<double>(docs_.size());

  committed_ = true;
  if (dir_) persist();
}

void Index::persist() const {
  fs::create_directories(*dir_);

  TempFile terms_tmp(*dir_ / "terms.dat");
  {
    std::ofstream out(terms_tmp.path(), std::ios::binary);
    if (!out) throw IndexError("cannot write " + terms_tmp.path().string());
    write_u32(out, kTermsMagic);
    write_u32(out, kFormatVersion);
    write_u64(out, terms_.size());
    for (const std::string& t : terms_) write_str(out, t);
    if (!out.flush()) throw IndexError("write failure on " + terms_tmp.path().string());
  }

  TempFile postings_tmp(*dir_ / "postings.dat");
  {
    std::ofstream out(postings_tmp.path(), std::ios::binary);
    if (!out) throw IndexError("cannot write " + postings_tmp.path().string());
    write_u32(out, kPostingsMagic);
    write_u32(out, kFormatVersion);
    write_u64(out, postings_.size());
    for (const std::vector<Posting>& plist : postings_) {
      write_u64(out, plist.size());
      for (const Posting& p : plist) {
        write_u32(out, p.doc);
        write_u32(out, p.tf);
      }
    }
    if (!out.flush()) throw IndexError("write failure on " + postings_tmp.path().string());
  }

  TempFile docs_tmp(*dir_ / "docs.dat");
  {
    std::ofstream out(docs_tmp.path(), std::ios::binary);
    if (!out) throw IndexError("cannot write " + docs_tmp.path().string());
    write_u32(out, kDocsMagic);
    write_u32(out, kFormatVersion);
    write_u64(out, docs_.size());
    for (const Doc& doc : docs_) {
      write_str(out, doc.doc_id);
      write_u32(out, static_cast<uint32_t>(doc.fields.size()));
      for (const auto& [key, value] : doc.fields) {
        write_str(out, key);
        write_str(out, value);
      }
      write_u64(out, static_cast<uint64_t>(doc.length));
      write_u32(out, static_cast<uint32_t>(doc.terms.size()));
      for (auto [term_ord, tf] : doc.terms) {
        write_u32(out, term_ord);
        write_u32(out, tf);
      }
    }
    if (!out.flush()) throw IndexError("write failure on " + docs_tmp.path().string());
  }

  TempFile manifest_tmp(*dir_ / "manifest.json");
  {
    nlohmann::json analyzer_json{
        {"keep_digits", analyzer_.keep_digits},
        {"min_token_length", analyzer_.min_token_length},
        {"stopwords", analyzer_.stopword_list},
    };
    nlohmann::json manifest{
        {"format_version", kFormatVersion},
        {"doc_count", stats_.doc_count},
        {"avg_doc_length", stats_.avg_doc_length},
        {"analyzer_fingerprint", stats_.analyzer_fingerprint},
        {"analyzer", analyzer_json},
    };
    std::ofstream out(manifest_tmp.path(), std::ios::binary);
    if (!out) throw IndexError("cannot write " + manifest_tmp.path().string());
    out << manifest.dump(2) << "\n";
    if (!out.flush()) throw IndexError("write failure on " + manifest_tmp.path().string());
  }

  terms_tmp.rename_into_place();
  postings_tmp.rename_into_place();
  docs_tmp.rename_into_place();
  manifest_tmp.rename_into_place();
}

Index Index::open(const fs::path& dir) {
  fs::path manifest_path = dir / "manifest.json";
  std::ifstream manifest_in(manifest_path, std::ios::binary);
  if (!manifest_in) throw IndexError("no index at " + dir.string());
  nlohmann::json manifest;
  try {
    manifest_in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad manifest " + manifest_path.string() + ": " + e.what());
  }
  int version = manifest.value("format_version", -1);
  if (version != kFormatVersion)
    throw ParseError("unsupported index format version " + std::to_string(version) + " in " +
                     manifest_path.string());

  AnalyzerConfig config;
  const nlohmann::json& analyzer_json = manifest.at("analyzer");
  config.keep_digits = analyzer_json.at("keep_digits").get<bool>();
  config.min_token_length = analyzer_json.at("min_token_length").get<int>();
  for (const auto& w : analyzer_json.at("stopwords"))
    config.stopword_list.insert(w.get<std::string>());

  Index index(std::move(config), dir);

  {
    std::string file = (dir / "terms.dat").string();
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IndexError("missing " + file);
    check_header(in, kTermsMagic, file);
    uint64_t count = read_u64(in, file);
    index.terms_.reserve(count);
    for (uint64_t i = 0; i < count; ++i) index.terms_.push_back(read_str(in, file));
  }
  {
    std::string file = (dir / "postings.dat").string();
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IndexError("missing " + file);
    check_header(in, kPostingsMagic, file);
    uint64_t count = read_u64(in, file);
    if (count != index.terms_.size())
      throw ParseError("postings/terms count mismatch in " + file);
    index.postings_.resize(count);
    for (uint64_t i = 0; i < count; ++i) {
      uint64_t n = read_u64(in, file);
      index.postings_[i].reserve(n);
      for (uint64_t j = 0; j < n; ++j) {
        Posting p;
        p.doc = read_u32(in, file);
        p.tf = read_u32(in, file);
        index.postings_[i].push_back(p);
      }
    }
  }
  {
    std::string file = (dir / "docs.dat").string();
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IndexError("missing " + file);
    check_header(in, kDocsMagic, file);
    uint64_t count = read_u64(in, file);
    index.docs_.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
      Doc doc;
      doc.doc_id = read_str(in, file);
      uint32_t nfields = read_u32(in, file);
      for (uint32_t f = 0; f < nfields; ++f) {
        std::string key = read_str(in, file);
        doc.fields[key] = read_str(in, file);
      }
      doc.length = static_cast<int64_t>(read_u64(in, file));
      uint32_t nterms = read_u32(in, file);
      doc.terms.reserve(nterms);
      for (uint32_t t = 0; t < nterms; ++t) {
        uint32_t term_ord = read_u32(in, file);
        uint32_t tf = read_u32(in, file);
        doc.terms.emplace_back(term_ord, tf);
      }
      index.docs_.push_back(std::move(doc));
    }
  }

  index.stats_.doc_count = manifest.at("doc_count").get<int64_t>();
  index.stats_.avg_doc_length = manifest.at("avg_doc_length").get<double>();
  index.stats_.analyzer_fingerprint = manifest.at("analyzer_fingerprint").get<std::string>();
  if (index.stats_.doc_count != static_cast<int64_t>(index.docs_.size()))
    throw ParseError("doc_count mismatch between manifest and docs.dat in " + dir.string());
  index.committed_ = true;
  return index;
}

void Index::require_committed(const char* op) const {
  if (!committed_) throw IndexError(std::string(op) + " requires a committed index");
}

uint32_t Index::doc_ordinal(std::string_view doc_id) const {
  auto it = std::lower_bound(docs_.begin(), docs_.end(), doc_id,
                             [](const Doc& d, std::string_view id) { return d.doc_id < id; });
  if (it == docs_.end() || it->doc_id != doc_id)
    throw IndexError("unknown doc_id: " + std::string(doc_id));
  return static_cast<uint32_t>(it - docs_.begin());
}

int64_t Index::term_ordinal(std::string_view term) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), term);
  if (it == terms_.end() || *it != term) return -1;
  return it - terms_.begin();
}

const IndexStats& Index::stats() const {
  require_committed("stats");
  return stats_;
}

int64_t Index::doc_count() const {
  require_committed("doc_count");
  return stats_.doc_count;
}

double Index::avg_doc_length() const {
  require_committed("avg_doc_length");
  return stats_.avg_doc_length;
}

bool Index::has_document(std::string_view doc_id) const {
  require_committed("has_document");
  auto it = std::lower_bound(docs_.begin(), docs_.end(), doc_id,
                             [](const Doc& d, std::string_view id) { return d.doc_id < id; });
  return it != docs_.end() && it->doc_id == doc_id;
}

std::vector<std::string> Index::doc_ids() const {
  require_committed("doc_ids");
  std::vector<std::string> ids;
  ids.reserve(docs_.size());
  for (const Doc& d : docs_) ids.push_back(d.doc_id);
  return ids;
}

int64_t Index::document_frequency(std::string_view term) const {
  require_committed("document_frequency");
  int64_t ord = term_ordinal(term);
  return ord < 0 ? 0 : static_cast<int64_t>(postings_[ord].size());
}

int64_t Index::term_frequency(std::string_view term, std::string_view doc_id) const {
  require_committed("term_frequency");
  const Doc& doc = docs_[doc_ordinal(doc_id)];
  int64_t ord = term_ordinal(term);
  if (ord < 0) return 0;
  auto it = std::lower_bound(doc.terms.begin(), doc.terms.end(),
                             std::make_pair(static_cast<uint32_t>(ord), uint32_t{0}));
  if (it == doc.terms.end() || it->first != static_cast<uint32_t>(ord)) return 0;
  return it->second;
}

std::vector<std::pair<std::string_view, int64_t>> Index::document_terms(
    std::string_view doc_id) const {
  require_committed("document_terms");
  const Doc& doc = docs_[doc_ordinal(doc_id)];
  std::vector<std::pair<std::string_view, int64_t>> out;
  out.reserve(doc.terms.size());
  for (auto [term_ord, tf] : doc.terms) out.emplace_back(terms_[term_ord], tf);
  return out;
}

const std::map<std::string, std::string>& Index::stored_fields(std::string_view doc_id) const {
  require_committed("stored_fields");
  return docs_[doc_ordinal(doc_id)].fields;
}

std::vector<SearchHit> Index::bm25_search(const TermBag& query, int top_r) const {
  require_committed("bm25_search");
  if (top_r < 1) throw ParameterError("top_r must be >= 1, got " + std::to_string(top_r));

  const double n_docs = static_cast<double>(stats_.doc_count);
  const double avg_len = stats_.avg_doc_length;
  std::unordered_map<uint32_t, double> scores;
  for (const std::string& term : query.terms) {
    int64_t ord = term_ordinal(term);
    if (ord < 0) continue;
    const std::vector<Posting>& plist = postings_[ord];
    double df = static_cast<double>(plist.size());
    double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
    for (const Posting& p : plist) {
      double tf = p.tf;
      double len = static_cast<double>(docs_[p.doc].length);
      double norm = tf + kBm25K1 * (1.0 - kBm25B + kBm25B * len / avg_len);
      scores[p.doc] += idf * tf * (kBm25K1 + 1.0) / norm;
    }
  }

  std::vector<std::pair<uint32_t, double>> ranked;
  ranked.reserve(scores.size());
  for (auto [doc, score] : scores) {
    if (score > 0.0) ranked.emplace_back(doc, score);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;  // ordinal order is doc_id order
  });
  if (ranked.size() > static_cast<size_t>(top_r)) ranked.resize(static_cast<size_t>(top_r));

  std::vector<SearchHit> hits;
  hits.reserve(ranked.size());
  for (size_t i = 0; i < ranked.size(); ++i)
    hits.push_back({docs_[ranked[i].first].doc_id, ranked[i].second, static_cast<int>(i) + 1});
  return hits;
}

}  // namespace qeck
