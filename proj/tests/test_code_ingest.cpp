#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "qeck/code_ingest.hpp"
#include "qeck/errors.hpp"

using namespace qeck;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = QECK_FIXTURES_DIR;

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("qeck_code_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Structural brace balance: literals and comments don't count.
bool braces_balance(const std::string& body) {
  int depth = 0;
  size_t i = 0;
  while (i < body.size()) {
    char c = body[i];
    if (c == '/' && i + 1 < body.size() && body[i + 1] == '/') {
      i = body.find('\n', i);
      if (i == std::string::npos) break;
      continue;
    }
    if (c == '/' && i + 1 < body.size() && body[i + 1] == '*') {
      i = body.find("*/", i + 2);
      if (i == std::string::npos) break;
      i += 2;
      continue;
    }
    if (c == '"' || c == '\'') {
      char q = c;
      ++i;
      while (i < body.size()) {
        if (body[i] == '\\') { i += 2; continue; }
        if (body[i] == q) { ++i; break; }
        ++i;
      }
      continue;
    }
    if (c == '{') ++depth;
    if (c == '}') --depth;
    if (depth < 0) return false;
    ++i;
  }
  return depth == 0;
}

}  // namespace

TEST_CASE("extract_methods on a one-method class") {
  auto result = extract_methods("class A { void f() { int x; } }", "A.java", "proj");
  REQUIRE(result.balanced);
  REQUIRE(result.snippets.size() == 1);
  const CodeSnippet& s = result.snippets[0];
  CHECK(s.method_name == "f");
  CHECK(s.body_text == "{ int x; }");
  CHECK(s.signature == "void f()");
  CHECK(s.snippet_id == "proj/A.java#f@1");
  CHECK(s.leading_comment.empty());
}

TEST_CASE("extract_methods on a method-free class") {
  auto result = extract_methods("class A { }", "A.java", "proj");
  CHECK(result.balanced);
  CHECK(result.snippets.empty());
}

TEST_CASE("extract_methods on empty and junk input") {
  CHECK(extract_methods("", "e.java", "p").snippets.empty());
  auto junk = extract_methods("\x01\x02 ]]]] not java at all &&& ", "junk.java", "p");
  CHECK(junk.snippets.empty());  // never crashes on arbitrary bytes
}

TEST_CASE("unbalanced braces mark the file for skipping") {
  auto result = extract_methods("class A { void f() { int x; ", "A.java", "proj");
  CHECK_FALSE(result.balanced);
  CHECK(result.snippets.empty());

  auto stray = extract_methods("class A { } }", "A.java", "proj");
  CHECK_FALSE(stray.balanced);
}

TEST_CASE("control-flow keywords never become methods") {
  const char* source =
      "class A { void f() {"
      " if (x) { g(); }"
      " for (int i = 0; i < 3; i++) { g(); }"
      " while (x) { g(); }"
      " switch (x) { case 1: break; }"
      " try { g(); } catch (Exception e) { h(); }"
      " synchronized (lock) { g(); }"
      "} }";
  auto result = extract_methods(source, "A.java", "proj");
  REQUIRE(result.balanced);
  REQUIRE(result.snippets.size() == 1);
  CHECK(result.snippets[0].method_name == "f");
}

TEST_CASE("ten-method fixture segments exactly as annotated") {
  std::string source = slurp(kFixtures / "java_tree/app/src/ScreenCapture.java");
  REQUIRE(!source.empty());
  auto result = extract_methods(source, "src/ScreenCapture.java", "app");
  REQUIRE(result.balanced);

  // Emission order is closing-brace order, so the anonymous-class run()
  // appears before its enclosing captureLater().
  std::vector<std::string> names;
  for (const auto& s : result.snippets) names.push_back(s.method_name);
  CHECK(names == std::vector<std::string>{
                     "takeScreenshot", "saveBitmap", "writeFile", "run", "captureLater",
                     "repeat", "innerHelper", "ScreenCapture", "getCount", "describe"});

  const CodeSnippet& shot = result.snippets[0];
  CHECK(shot.snippet_id == "app/src/ScreenCapture.java#takeScreenshot@17");
  CHECK(shot.signature == "public Bitmap takeScreenshot(View rootView)");
  CHECK(shot.leading_comment == "/** Takes a screenshot of the given view. */");
  CHECK(shot.body_text.front() == '{');
  CHECK(shot.body_text.back() == '}');
  CHECK(shot.body_text.find("getDrawingCache") != std::string::npos);

  const CodeSnippet& save = result.snippets[1];
  CHECK(save.signature == "public void saveBitmap(Bitmap bitmap, String path) throws IOException");
  CHECK(save.leading_comment == "// void fake() { this is inside a comment }");
  CHECK(braces_balance(save.body_text));  // braces inside string literals ignored

  const CodeSnippet& run = result.snippets[3];
  const CodeSnippet& later = result.snippets[4];
  CHECK(run.signature == "@Override public void run()");
  CHECK(later.body_text.find(run.body_text) != std::string::npos);  // strict nesting

  const CodeSnippet& inner = result.snippets[6];
  CHECK(inner.leading_comment == "/* block comment for inner method */");
  CHECK(inner.signature == "int innerHelper(int a, int b)");

  const CodeSnippet& ctor = result.snippets[7];
  CHECK(ctor.method_name == "ScreenCapture");
  CHECK(ctor.snippet_id == "app/src/ScreenCapture.java#ScreenCapture@61");

  for (const auto& s : result.snippets) {
    CAPTURE(s.snippet_id);
    CHECK(!s.body_text.empty());
    CHECK(braces_balance(s.body_text));
    CHECK(s.body_text.front() == '{');
    CHECK(s.body_text.back() == '}');
  }
}

TEST_CASE("non-overlap outside nesting") {
  std::string source = slurp(kFixtures / "java_tree/app/src/ScreenCapture.java");
  auto result = extract_methods(source, "f.java", "p");
  // Recover spans via unique body text search.
  struct Span { size_t begin, end; };
  std::vector<Span> spans;
  for (const auto& s : result.snippets) {
    size_t at = source.find(s.body_text);
    REQUIRE(at != std::string::npos);
    spans.push_back({at, at + s.body_text.size()});
  }
  for (size_t i = 0; i < spans.size(); ++i) {
    for (size_t j = i + 1; j < spans.size(); ++j) {
      const Span& a = spans[i];
      const Span& b = spans[j];
      bool disjoint = a.end <= b.begin || b.end <= a.begin;
      bool nested = (a.begin <= b.begin && b.end <= a.end) || (b.begin <= a.begin && a.end <= b.end);
      CHECK((disjoint || nested));
    }
  }
}

TEST_CASE("ingest_tree walks lexicographically and is deterministic") {
  fs::path dir1 = temp_dir("tree1");
  fs::path dir2 = temp_dir("tree2");
  CodeBuildResult r1 = ingest_tree(kFixtures / "java_tree", AnalyzerConfig::standard(), dir1);
  CodeBuildResult r2 = ingest_tree(kFixtures / "java_tree", AnalyzerConfig::standard(), dir2);

  CHECK(r1.snippets_indexed == 12);  // 10 + 2 from Probe.java
  CHECK(r1.stats.doc_count == 12);
  CHECK(r1.files_processed == 2);
  CHECK(r1.files_skipped == 0);
  CHECK(slurp(dir1 / "manifest.json") == slurp(dir2 / "manifest.json"));
  CHECK(slurp(dir1 / "docs.dat") == slurp(dir2 / "docs.dat"));

  Index index = Index::open(dir1);
  auto hits = index.bm25_search(analyze("drawing cache", AnalyzerConfig::standard()), 5);
  REQUIRE(!hits.empty());
  CHECK(hits[0].doc_id.find("takeScreenshot") != std::string::npos);

  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("ingest_tree doc count equals the per-file extraction sum") {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(kFixtures / "java_tree"))
    if (e.is_regular_file() && e.path().extension() == ".java") files.push_back(e.path());
  int64_t expected = 0;
  for (const fs::path& f : files) {
    auto r = extract_methods(slurp(f), f.filename().string(), "p");
    expected += static_cast<int64_t>(r.snippets.size());
  }
  fs::path dir = temp_dir("sum");
  CodeBuildResult r = ingest_tree(kFixtures / "java_tree", AnalyzerConfig::standard(), dir);
  CHECK(r.snippets_indexed == expected);
  fs::remove_all(dir);
}

TEST_CASE("ingest_tree on an empty directory") {
  fs::path src = temp_dir("emptysrc");
  fs::path out = temp_dir("emptyout");
  CodeBuildResult r = ingest_tree(src, AnalyzerConfig::standard(), out);
  CHECK(r.stats.doc_count == 0);
  CHECK(r.files_processed == 0);
  fs::remove_all(src);
  fs::remove_all(out);
}

TEST_CASE("ingest_tree skips files with unbalanced braces") {
  fs::path src = temp_dir("badsrc");
  fs::path out = temp_dir("badout");
  std::ofstream(src / "Good.java") << "class G { void ok() { } }";
  std::ofstream(src / "Bad.java") << "class B { void broken() { ";
  CodeBuildResult r = ingest_tree(src, AnalyzerConfig::standard(), out);
  CHECK(r.files_processed == 1);
  CHECK(r.files_skipped == 1);
  CHECK(r.snippets_indexed == 1);
  fs::remove_all(src);
  fs::remove_all(out);
}

TEST_CASE("ingest_jsonl") {
  fs::path dir = temp_dir("jsonl");
  fs::path file = dir / "snippets.jsonl";
  fs::path out = dir / "index";

  SUBCASE("zero lines build an empty index") {
    std::ofstream(file) << "";
    CodeBuildResult r = ingest_jsonl(file, AnalyzerConfig::standard(), out);
    CHECK(r.stats.doc_count == 0);
  }
  SUBCASE("five valid lines") {
    std::ofstream outf(file);
    for (int i = 0; i < 5; ++i)
      outf << R"({"snippet_id":"p/f.java#m)" << i << R"(@1","method_name":"m)" << i
           << R"(","body_text":"{ return )" << i << R"(; }"})" << "\n";
    outf.close();
    CodeBuildResult r = ingest_jsonl(file, AnalyzerConfig::standard(), out);
    CHECK(r.stats.doc_count == 5);
  }
  SUBCASE("missing body_text names the line") {
    std::ofstream outf(file);
    outf << R"({"snippet_id":"p/f.java#a@1","body_text":"{ }"})" << "\n";
    outf << R"({"snippet_id":"p/f.java#b@2"})" << "\n";
    outf.close();
    try {
      ingest_jsonl(file, AnalyzerConfig::standard(), out);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
  }
  fs::remove_all(dir);
}
