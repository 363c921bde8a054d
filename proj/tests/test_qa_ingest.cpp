#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "qeck/errors.hpp"
#include "qeck/qa_ingest.hpp"

using namespace qeck;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = QECK_FIXTURES_DIR;

std::vector<RawPost> parse_fixture(PostsParseStats& stats) {
  std::ifstream in(kFixtures / "posts_fixture.xml", std::ios::binary);
  REQUIRE(in.good());
  return parse_posts_to_vector(in, stats);
}

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("qeck_qa_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("strip_html removes tags and keeps code text") {
  CHECK(strip_html("<p>take a screenshot</p>") == "take a screenshot");
  CHECK(strip_html("<code>MediaRecorder</code>") == "MediaRecorder");
  CHECK(strip_html("a &amp; b") == "a & b");
  CHECK(strip_html("") == "");
  CHECK(strip_html("<p>one</p><p>two</p>") == "one two");
  CHECK(strip_html("<!-- note -->visible") == "visible");
  CHECK(strip_html("text <b>bold unclosed") == "text bold unclosed");
  CHECK(strip_html("broken < tail") == "broken tail");
  CHECK(strip_html("x &#65; &#x42; y") == "x A B y");
  CHECK(strip_html("keep &unknown; marker") == "keep &unknown; marker");
}

TEST_CASE("decode_entities handles the XML five and numeric forms") {
  CHECK(decode_entities("&lt;android&gt;") == "<android>");
  CHECK(decode_entities("&quot;q&quot; &apos;a&apos;") == "\"q\" 'a'");
  CHECK(decode_entities("&amp;amp;") == "&amp;");
  CHECK(decode_entities("caf&#233;") == "caf\xc3\xa9");
}

TEST_CASE("parse_posts streams the fixture with accurate counters") {
  PostsParseStats stats;
  std::vector<RawPost> posts = parse_fixture(stats);
  CHECK(stats.rows_seen == 22);
  CHECK(stats.posts_emitted == 19);
  CHECK(stats.skipped_other_types == 1);
  CHECK(stats.skipped_missing_fields == 2);
  CHECK(posts.size() == 19);

  const RawPost& q1 = posts[0];
  CHECK(q1.id == 1);
  CHECK(q1.post_type == PostType::question);
  CHECK(q1.accepted_answer_id == 11);
  CHECK(q1.score == 224);
  CHECK(q1.title == "Take a screenshot in Android");
  CHECK(q1.tags == std::vector<std::string>{"android", "screenshot"});
  CHECK(q1.body.find("<p>") != std::string::npos);  // entities decoded to HTML

  const RawPost& a11 = posts[1];
  CHECK(a11.post_type == PostType::answer);
  CHECK(a11.parent_id == 1);
  CHECK_FALSE(a11.title.has_value());
}

TEST_CASE("parse_posts on an empty posts element") {
  std::istringstream in("<?xml version=\"1.0\"?>\n<posts>\n</posts>\n");
  PostsParseStats stats;
  CHECK(parse_posts_to_vector(in, stats).empty());
  CHECK(stats.rows_seen == 0);
}

TEST_CASE("parse_posts reports malformed XML with a byte offset") {
  std::istringstream in("<posts><row Id=\"1\" PostTypeId=\"1\" Body=\"unterminated></posts>");
  PostsParseStats stats;
  try {
    parse_posts_to_vector(in, stats);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
}

TEST_CASE("parse_posts survives comments with extra dashes") {
  std::istringstream in(
      "<posts><!-- note with trailing dashes ---><row Id=\"1\" PostTypeId=\"1\" Title=\"t\" "
      "Body=\"b\" Tags=\"&lt;android&gt;\" /></posts>");
  PostsParseStats stats;
  auto posts = parse_posts_to_vector(in, stats);
  REQUIRE(posts.size() == 1);
  CHECK(posts[0].id == 1);
}

TEST_CASE("parse_posts accepts pipe-delimited tag values") {
  std::istringstream in(
      "<posts><row Id=\"1\" PostTypeId=\"1\" Title=\"t\" Body=\"b\" Tags=\"|android|layout|\" /></posts>");
  PostsParseStats stats;
  auto posts = parse_posts_to_vector(in, stats);
  REQUIRE(posts.size() == 1);
  CHECK(posts[0].tags == std::vector<std::string>{"android", "layout"});
}

TEST_CASE("parse_posts handles elements larger than the read chunk") {
  // A body several times the scanner's 64KB chunk, so one element spans
  // multiple refills.
  std::string big_body;
  for (int i = 0; i < 30000; ++i) big_body += "word" + std::to_string(i % 100) + " ";
  REQUIRE(big_body.size() > 150000);
  std::string xml = "<posts><row Id=\"1\" PostTypeId=\"1\" Title=\"big\" Body=\"" + big_body +
                    "\" Tags=\"&lt;android&gt;\" AcceptedAnswerId=\"2\" Score=\"1\" />"
                    "<row Id=\"2\" PostTypeId=\"2\" ParentId=\"1\" Score=\"1\" Body=\"ok\" />"
                    "</posts>";
  std::istringstream in(xml);
  PostsParseStats stats;
  auto posts = parse_posts_to_vector(in, stats);
  REQUIRE(posts.size() == 2);
  CHECK(posts[0].body.size() == big_body.size());
  PairStats pair_stats;
  CHECK(pair_posts(posts, "android", pair_stats).size() == 1);
}

TEST_CASE("pair_posts joins accepted answers under the tag filter") {
  PostsParseStats parse_stats;
  std::vector<RawPost> posts = parse_fixture(parse_stats);
  PairStats stats;
  std::vector<QAPair> pairs = pair_posts(posts, "android", stats);

  REQUIRE(pairs.size() == 5);
  CHECK(stats.paired == 5);
  CHECK(stats.tagged_questions == 8);
  CHECK(stats.no_accepted_answer == 1);       // q3
  CHECK(stats.accepted_answer_missing == 2);  // q5 (absent), q9 (parent mismatch)

  const QAPair& p1 = pairs[0];
  CHECK(p1.pair_id == "1");
  CHECK(p1.question_id == 1);
  CHECK(p1.answer_id == 11);
  CHECK(p1.question_votes == 224);
  CHECK(p1.answer_votes == 453);
  CHECK(p1.question_text ==
        "Take a screenshot in Android How can I take a screenshot of the current view "
        "programmatically?");
  CHECK(p1.answer_text.find("rootView.setDrawingCacheEnabled(true);") != std::string::npos);

  // Answer-before-question still pairs; negative votes carried through.
  CHECK(pairs[4].question_id == 8);
  CHECK(pairs[3].question_id == 7);
  CHECK(pairs[2].question_votes == -2);
}

TEST_CASE("pair_posts drops questions lacking the filter tag") {
  PostsParseStats parse_stats;
  std::vector<RawPost> posts = parse_fixture(parse_stats);
  PairStats stats;
  std::vector<QAPair> pairs = pair_posts(posts, "base64", stats);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].question_id == 8);
}

TEST_CASE("every emitted pair satisfies the join invariants") {
  PostsParseStats parse_stats;
  std::vector<RawPost> posts = parse_fixture(parse_stats);
  PairStats stats;
  std::vector<QAPair> pairs = pair_posts(posts, "android", stats);
  for (const QAPair& pair : pairs) {
    const RawPost* question = nullptr;
    const RawPost* answer = nullptr;
    for (const RawPost& p : posts) {
      if (p.id == pair.question_id && p.post_type == PostType::question) question = &p;
      if (p.id == pair.answer_id && p.post_type == PostType::answer) answer = &p;
    }
    REQUIRE(question != nullptr);
    REQUIRE(answer != nullptr);
    CHECK(question->accepted_answer_id == answer->id);
    CHECK(answer->parent_id == question->id);
    CHECK(std::find(pair.tags.begin(), pair.tags.end(), "android") != pair.tags.end());
  }
  CHECK(static_cast<int64_t>(pairs.size()) <= stats.tagged_questions);
}

TEST_CASE("so_score applies the 0.7/0.3 weighting") {
  CHECK(so_score(10, 0) == doctest::Approx(7.0));
  CHECK(so_score(0, 0) == doctest::Approx(0.0));
  CHECK(so_score(-2, 10) == doctest::Approx(1.6));
}

TEST_CASE("so_score is linear in the question votes") {
  for (int64_t sq : {-5, 0, 3, 100}) {
    for (int64_t sa : {-1, 0, 42}) {
      for (int64_t bump : {1, 7, 1000}) {
        CHECK(so_score(sq + bump, sa) - so_score(sq, sa) ==
              doctest::Approx(0.7 * static_cast<double>(bump)));
      }
    }
  }
}

TEST_CASE("build_qa_index stores fields and is deterministic") {
  PostsParseStats parse_stats;
  std::vector<RawPost> posts = parse_fixture(parse_stats);
  PairStats pair_stats;
  std::vector<QAPair> pairs = pair_posts(posts, "android", pair_stats);

  fs::path dir1 = temp_dir("build1");
  fs::path dir2 = temp_dir("build2");
  QaBuildResult r1 = build_qa_index(pairs, AnalyzerConfig::standard(), dir1);
  QaBuildResult r2 = build_qa_index(pairs, AnalyzerConfig::standard(), dir2);
  CHECK(r1.pairs_indexed == 5);
  CHECK(r1.stats.doc_count == 5);
  CHECK(slurp(dir1 / "manifest.json") == slurp(dir2 / "manifest.json"));
  CHECK(slurp(dir1 / "terms.dat") == slurp(dir2 / "terms.dat"));
  CHECK(slurp(dir1 / "postings.dat") == slurp(dir2 / "postings.dat"));
  CHECK(slurp(dir1 / "docs.dat") == slurp(dir2 / "docs.dat"));

  Index index = Index::open(dir1);
  CHECK(index.stored_fields("1").at("question_votes") == "224");
  CHECK(index.stored_fields("1").at("answer_votes") == "453");
  CHECK(index.stored_fields("6").at("question_votes") == "-2");

  auto hits = index.bm25_search(analyze("take screenshot", AnalyzerConfig::standard()), 10);
  REQUIRE(!hits.empty());
  CHECK(hits[0].doc_id == "1");

  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("build_qa_index honors the exclusion list") {
  PostsParseStats parse_stats;
  std::vector<RawPost> posts = parse_fixture(parse_stats);
  PairStats pair_stats;
  std::vector<QAPair> pairs = pair_posts(posts, "android", pair_stats);

  fs::path dir = temp_dir("exclude");
  QaBuildResult r = build_qa_index(pairs, AnalyzerConfig::standard(), dir, {1, 8});
  CHECK(r.excluded == 2);
  CHECK(r.stats.doc_count == 3);
  Index index = Index::open(dir);
  CHECK_FALSE(index.has_document("1"));
  fs::remove_all(dir);
}

TEST_CASE("build_qa_index_from_posts streams the file twice and matches pair_posts") {
  fs::path dir = temp_dir("stream");
  PostsParseStats parse_stats;
  PairStats pair_stats;
  QaBuildResult r = build_qa_index_from_posts(kFixtures / "posts_fixture.xml", "android",
                                              AnalyzerConfig::standard(), dir, {}, parse_stats,
                                              pair_stats);
  CHECK(r.pairs_indexed == 5);
  CHECK(pair_stats.paired == 5);
  CHECK(parse_stats.rows_seen == 22);  // first pass only
  Index index = Index::open(dir);
  CHECK(index.doc_count() == 5);
  fs::remove_all(dir);
}

TEST_CASE("pairs with empty analyzed text are dropped and counted") {
  QAPair husk;
  husk.pair_id = "77";
  husk.question_id = 77;
  husk.answer_id = 78;
  husk.title = "a of the";           // nothing survives the analyzer
  husk.question_text = "is in and";
  husk.answer_text = "!!! ???";
  QAPair real;
  real.pair_id = "79";
  real.question_id = 79;
  real.answer_id = 80;
  real.title = "Record audio";
  real.question_text = "Record audio sound";
  real.answer_text = "Use MediaRecorder";

  fs::path dir = temp_dir("husk");
  QaBuildResult r = build_qa_index({husk, real}, AnalyzerConfig::standard(), dir);
  CHECK(r.empty_dropped == 1);
  CHECK(r.pairs_indexed == 1);
  CHECK(r.stats.doc_count == 1);
  fs::remove_all(dir);
}

TEST_CASE("empty pair list builds a valid empty index") {
  fs::path dir = temp_dir("empty");
  QaBuildResult r = build_qa_index({}, AnalyzerConfig::standard(), dir);
  CHECK(r.stats.doc_count == 0);
  Index index = Index::open(dir);
  CHECK(index.bm25_search(analyze("anything", AnalyzerConfig::standard()), 5).empty());
  fs::remove_all(dir);
}

TEST_CASE("jsonl pair loader") {
  fs::path dir = temp_dir("jsonl");
  fs::path file = dir / "pairs.jsonl";

  SUBCASE("zero lines") {
    std::ofstream(file) << "";
    CHECK(load_qa_pairs_jsonl(file).empty());
  }
  SUBCASE("valid lines round-trip") {
    std::ofstream out(file);
    out << R"({"pair_id":"10","question_id":10,"answer_id":20,"title":"t","question_text":"q text","answer_text":"a text","tags":["android"],"question_votes":3,"answer_votes":4})"
        << "\n";
    out << R"({"pair_id":"11","question_id":11,"answer_id":21,"question_text":"q2","answer_text":"a2"})"
        << "\n";
    out.close();
    auto pairs = load_qa_pairs_jsonl(file);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].pair_id == "10");
    CHECK(pairs[0].question_votes == 3);
    CHECK(pairs[1].title.empty());
  }
  SUBCASE("malformed line reports its number") {
    std::ofstream out(file);
    out << R"({"pair_id":"10","question_id":10,"answer_id":20,"question_text":"q","answer_text":"a"})"
        << "\n";
    out << R"({"pair_id":"11", "question_id": broken)" << "\n";
    out.close();
    try {
      load_qa_pairs_jsonl(file);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
  }
  fs::remove_all(dir);
}
