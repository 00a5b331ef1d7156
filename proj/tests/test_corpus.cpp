#include <doctest.h>

#include <sstream>

#include "mindscan/corpus.hpp"
#include "mindscan/error.hpp"

using namespace mindscan;
using namespace mindscan::corpus;

namespace {

XaiTermList terms(const std::string& text, bool boundary = false) {
  std::istringstream in(text);
  auto t = load_xai_terms(in);
  t.require_word_boundary = boundary;
  return t;
}

PaperRecord paper(std::string id, std::string title, std::string abstract = "") {
  PaperRecord p;
  p.paper_id = std::move(id);
  p.title = std::move(title);
  p.abstract = std::move(abstract);
  return p;
}

}  // namespace

TEST_CASE("normalize folds case, hyphens and whitespace") {
  CHECK(normalize("  Third-Wave\tAI  ") == "third wave ai");
  CHECK(normalize("black-box") == normalize("Black  box"));
}

TEST_CASE("XAI filter matches term variants across title, abstract and venue") {
  const auto t = terms("explainable artificial intelligence\tXAI\texplainable AI\nblack box\n# comment\n");
  CHECK(t.terms.size() == 2);
  CHECK(is_xai_paper(paper("a", "An XAI toolkit"), t));
  CHECK(is_xai_paper(paper("b", "Opening the Black-Box"), t));
  CHECK(is_xai_paper(paper("c", "Nothing", "We build explainable ai tools."), t));
  auto v = paper("d", "Nothing");
  v.venue = "Workshop on Explainable Artificial Intelligence";
  CHECK(is_xai_paper(v, t));
  CHECK_FALSE(is_xai_paper(paper("e", "Sorting networks"), t));
}

TEST_CASE("word-boundary knob") {
  CHECK(is_xai_paper(paper("a", "xaixai"), terms("XAI\n")));
  CHECK_FALSE(is_xai_paper(paper("a", "xaixai"), terms("XAI\n", true)));
  CHECK(is_xai_paper(paper("a", "an XAI, indeed"), terms("XAI\n", true)));
}

TEST_CASE("terms never match across field boundaries") {
  auto p = paper("a", "black", "box office");
  CHECK_FALSE(is_xai_paper(p, terms("black box\n")));
}

TEST_CASE("empty term list keeps nothing and filter preserves order") {
  const std::vector<PaperRecord> ps = {paper("1", "XAI one"), paper("2", "other"), paper("3", "XAI three")};
  CHECK(filter_corpus(ps, terms("")).empty());
  const auto kept = filter_corpus(ps, terms("XAI\n"));
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].paper_id == "1");
  CHECK(kept[1].paper_id == "3");
}

TEST_CASE("paper records round-trip and reject bad lines") {
  std::istringstream in(
      "{\"paper_id\":\"p1\",\"title\":\"T\",\"abstract\":\"A\",\"authors\":[\"x\",\"y\"],\"body_sentences\":[\"s1\",\"s2\"]}\n"
      "\n"
      "{\"paper_id\":\"p2\",\"title\":\"U\",\"abstract_sentences\":[\"a1\"]}\n");
  const auto ps = load_papers(in);
  REQUIRE(ps.size() == 2);
  CHECK(ps[0].authors.size() == 2);
  CHECK(ps[1].venue.empty());
  std::istringstream again(paper_to_json_line(ps[0]) + paper_to_json_line(ps[1]));
  CHECK(load_papers(again) == ps);

  std::istringstream bad("{\"paper_id\":\"p1\"}\n{oops\n");
  try {
    load_papers(bad, "papers.jsonl");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream dup("{\"paper_id\":\"p1\"}\n{\"paper_id\":\"p1\"}\n");
  CHECK_THROWS_AS(load_papers(dup), DataError);
  std::istringstream wrong_type("{\"paper_id\":\"p1\",\"authors\":\"x\"}\n");
  CHECK_THROWS_AS(load_papers(wrong_type), DataError);
}

TEST_CASE("text units prefer body sentences and number from one") {
  auto p = paper("p9", "t");
  p.abstract_sentences = std::vector<std::string>{"a1", "a2"};
  auto units = select_text_units(p);
  REQUIRE(units.size() == 2);
  CHECK(units[0] == TextUnit{"p9:1", "a1"});
  p.body_sentences = std::vector<std::string>{"b1", "b2", "b3"};
  units = select_text_units(p);
  REQUIRE(units.size() == 3);
  CHECK(units[2] == TextUnit{"p9:3", "b3"});
  p.body_sentences = std::vector<std::string>{};
  CHECK(select_text_units(p).size() == 2);
  CHECK(unit_id("x", 12) == "x:12");
}
