#include <doctest.h>

#include <fstream>
#include <sstream>

#include "mindscan/annotation.hpp"
#include "mindscan/error.hpp"
#include "mindscan/util.hpp"
#include "subject_fixture.hpp"

using namespace mindscan;
using namespace mindscan::annotation;

namespace {

const std::string kSrc = MINDSCAN_SOURCE_DIR;

TargetLexicon shipped_lexicon() {
  std::ifstream in(kSrc + "/data/target_words.tsv");
  return load_target_lexicon(in);
}

std::vector<AnnotatedSentence> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_conllu(in, "t.conllu");
}

std::string block(const std::string& rows, const std::string& text = "x") {
  return "# paper_id = p\n# sent_id = p:1\n# text = " + text + "\n" + rows + "\n";
}

// Minimal sentence builder: (surface, upos, head, deprel).
AnnotatedSentence sentence(std::vector<std::tuple<std::string, std::string, int, std::string>> rows,
                           std::string text = "") {
  AnnotatedSentence s;
  s.paper_id = "p";
  s.sent_id = "p:1";
  int i = 0;
  for (auto& [surface, upos, head, deprel] : rows) {
    Token t;
    t.index = ++i;
    t.surface = surface;
    t.lemma = to_lower_ascii(surface);
    t.upos = upos;
    t.head = head;
    t.deprel = deprel;
    s.tokens.push_back(t);
    text += (text.empty() ? "" : " ") + surface;
  }
  s.text = text;
  return s;
}

}  // namespace

TEST_CASE("shipped target list") {
  const auto lex = shipped_lexicon();
  CHECK(lex.targets().size() == 29);
  CHECK(lex.targets().front() == "model");
  CHECK(lex.targets().back() == "WGAN");
}

TEST_CASE("CoNLL-U round trip keeps multiword ranges, empty nodes and comments") {
  const std::string text =
      "# newdoc id = d\n"
      "# paper_id = p\n# sent_id = p:3\n# text = It doesn't stop.\n"
      "1\tIt\tit\tPRON\tPRP\t_\t3\tnsubj\t_\t_\n"
      "2-3\tdoesn't\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "2\tdoes\tdo\tAUX\tVBZ\t_\t4\taux\t_\t_\n"
      "3\tn't\tnot\tPART\tRB\t_\t4\tadvmod\t_\t_\n"
      "3.1\tx\tx\tX\t_\t_\t_\t_\t4:dep\t_\n"
      "4\tstop\tstop\tVERB\tVB\t_\t0\troot\t_\tSpaceAfter=No\n"
      "5\t.\t.\tPUNCT\t.\t_\t4\tpunct\t_\t_\n\n";
  // Token 1 points at token 3 which is an advmod; fine structurally.
  const auto v = parse(text);
  REQUIRE(v.size() == 1);
  CHECK(v[0].tokens.size() == 5);
  CHECK(v[0].extra_lines.size() == 2);
  const auto again = parse(write_conllu(v[0]));
  REQUIRE(again.size() == 1);
  CHECK(again[0] == v[0]);
  CHECK(span_text(v[0], {2, 4}) == "doesn't stop");
}

TEST_CASE("malformed CoNLL-U names the offending line") {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of(block("1\tA\ta\tNOUN\t_\t_\t0\troot\t_\n")) == 4);                                      // 9 columns
  CHECK(line_of(block("1\tA\ta\tNOUN\t_\t_\t0\troot\t_\t_\n2\tB\tb\tVERB\t_\t_\t7\tdep\t_\t_\n")) == 5);  // head out of range
  CHECK(line_of(block("1\tA\ta\tNOUN\t_\t_\t0\troot\t_\t_\n3\tB\tb\tVERB\t_\t_\t1\tdep\t_\t_\n")) == 5);  // gap
  CHECK(line_of(block("1\tA\ta\tNOUN\t_\t_\t1\troot\t_\t_\n")) == 4);                                    // self head
  CHECK(line_of(block("1\tA\ta\tNOUN\t_\t_\tx\troot\t_\t_\n")) == 4);                                    // bad head
  CHECK(line_of("# sent_id = p:1\n# text = A\n1\tA\ta\tNOUN\t_\t_\t0\troot\t_\t_\n\n") > 0);            // no paper_id
  CHECK(line_of(block("1\tA\ta\tNOUN\t_\t_\t0\troot\t_\t_\n2\tB\tb\tNOUN\t_\t_\t0\troot\t_\t_\n")) > 0);  // two roots
}

TEST_CASE("target lexicon case rules") {
  CHECK(TargetLexicon::is_exact_case_form("CNN"));
  CHECK(TargetLexicon::is_exact_case_form("GANs"));
  CHECK(TargetLexicon::is_exact_case_form("AI"));
  CHECK_FALSE(TargetLexicon::is_exact_case_form("ResNet"));
  CHECK_FALSE(TargetLexicon::is_exact_case_form("model"));

  const auto lex = shipped_lexicon();
  auto s = sentence({{"Ai", "PROPN", 2, "nsubj"}, {"helps", "VERB", 0, "root"}});
  CHECK(match_targets(s, lex).empty());
  s = sentence({{"AI", "PROPN", 2, "nsubj"}, {"helps", "VERB", 0, "root"}});
  REQUIRE(match_targets(s, lex).size() == 1);
  CHECK(match_targets(s, lex)[0].target == "artificial intelligence");
  s = sentence({{"Models", "NOUN", 2, "nsubj"}, {"help", "VERB", 0, "root"}});
  REQUIRE(match_targets(s, lex).size() == 1);
  CHECK(match_targets(s, lex)[0].target == "model");
  s = sentence({{"RESNET", "PROPN", 2, "nsubj"}, {"wins", "VERB", 0, "root"}});
  CHECK(match_targets(s, lex).size() == 1);
}

TEST_CASE("multiword and hyphen-split forms match the longest run") {
  const auto lex = shipped_lexicon();
  auto s = sentence({{"The", "DET", 4, "det"},
                     {"auto", "NOUN", 4, "compound"},
                     {"-", "PUNCT", 4, "punct"},
                     {"encoder", "NOUN", 5, "nsubj"},
                     {"compresses", "VERB", 0, "root"}});
  auto m = match_targets(s, lex);
  REQUIRE(m.size() == 1);
  CHECK(m[0].target == "auto-encoder");
  CHECK(m[0].span == TokenSpan{2, 4});
  CHECK(m[0].head == 4);

  s = sentence({{"A", "DET", 4, "det"},
                {"generative", "ADJ", 4, "amod"},
                {"adversarial", "ADJ", 4, "amod"},
                {"network", "NOUN", 5, "nsubj"},
                {"draws", "VERB", 0, "root"}});
  m = match_targets(s, lex);
  REQUIRE(m.size() == 1);
  CHECK(m[0].target == "GAN");

  s = sentence({{"The", "DET", 2, "det"}, {"model", "VERB", 0, "root"}});
  CHECK(match_targets(s, lex).empty());
}

TEST_CASE("hand-annotated subject fixture") {
  std::ifstream in(kSrc + "/tests/fixtures/subjects.conllu");
  const auto sentences = parse_conllu(in, "subjects.conllu");
  REQUIRE(sentences.size() == 10);
  const auto lex = shipped_lexicon();
  std::vector<TargetOccurrence> got;
  for (const auto& s : sentences)
    for (auto& o : extract_subject_occurrences(s, lex)) got.push_back(o);
  const auto& want = expected_subjects();
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CAPTURE(i);
    CHECK(got[i].sent_id == want[i].sent_id);
    CHECK(got[i].target == want[i].target);
    CHECK(got[i].token_span == TokenSpan{want[i].first, want[i].last});
    CHECK(got[i].predicate_index == want[i].predicate);
    CHECK(got[i].clause_span == TokenSpan{want[i].clause_first, want[i].clause_last});
    CHECK(got[i].clause_text == want[i].clause_text);
    CHECK(got[i].first_person == want[i].first_person);
    CHECK(got[i].occurrence_id ==
          make_occurrence_id("fx", want[i].sent_id, TokenSpan{want[i].first, want[i].last}));
  }
}

TEST_CASE("sentence clause mode covers the whole sentence") {
  std::ifstream in(kSrc + "/tests/fixtures/subjects.conllu");
  const auto sentences = parse_conllu(in);
  const auto occ = extract_subject_occurrences(sentences[1], shipped_lexicon(), ClauseMode::Sentence);
  REQUIRE(occ.size() == 1);
  CHECK(occ[0].clause_span == TokenSpan{1, 11});
  CHECK(occ[0].clause_text == sentences[1].text);
}

TEST_CASE("occurrence ids are stable and occurrences round-trip") {
  CHECK(make_occurrence_id("p", "p:4", {2, 3}) == "p/p:4/2-3");
  std::ifstream in(kSrc + "/tests/fixtures/subjects.conllu");
  const auto sentences = parse_conllu(in);
  std::string buf;
  std::vector<TargetOccurrence> all;
  for (const auto& s : sentences)
    for (auto& o : extract_subject_occurrences(s, shipped_lexicon())) {
      buf += occurrence_to_json_line(o);
      all.push_back(o);
    }
  std::istringstream back(buf);
  CHECK(load_occurrences(back) == all);
  std::istringstream dup(buf + occurrence_to_json_line(all[0]));
  CHECK_THROWS_AS(load_occurrences(dup), ParseError);
}

TEST_CASE("span text falls back to SpaceAfter when text does not align") {
  auto s = sentence({{"It", "PRON", 2, "nsubj"}, {"runs", "VERB", 0, "root"}, {".", "PUNCT", 2, "punct"}});
  s.tokens[1].misc = "SpaceAfter=No";
  s.text = "completely different";
  CHECK_FALSE(align_tokens(s).has_value());
  CHECK(span_text(s, {1, 3}) == "It runs.");
}
