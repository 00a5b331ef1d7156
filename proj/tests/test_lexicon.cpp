#include <doctest.h>

#include <sstream>

#include "mindscan/error.hpp"
#include "mindscan/lexicon.hpp"

using namespace mindscan;
using namespace mindscan::lexicon;
using annotation::Token;

namespace {

std::vector<Token> toks(std::vector<std::pair<std::string, std::string>> lemma_upos) {
  std::vector<Token> out;
  int i = 0;
  for (auto& [lemma, upos] : lemma_upos) {
    Token t;
    t.index = ++i;
    t.surface = lemma;
    t.lemma = lemma;
    t.upos = upos;
    out.push_back(t);
  }
  return out;
}

MindLexicon mpd(const std::string& text, Warnings* w = nullptr) {
  std::istringstream in(text);
  return load_mpd(in, w);
}

VerbNormLexicon mpvn(const std::string& text, Warnings* w = nullptr) {
  std::istringstream in(text);
  return load_mpvn(in, w);
}

}  // namespace

TEST_CASE("lexicon loading") {
  Warnings w;
  const auto m = mpd("Think\n# c\nknow\nthink\n\n", &w);
  CHECK(m.entries.size() == 2);
  CHECK(m.entries.count("think"));
  CHECK(w.size() == 1);

  w.clear();
  const auto v = mpvn("think\t90\nrun\t10.5\nthink\t80\n", &w);
  CHECK(v.entries.at("think") == 80.0);
  CHECK(v.entries.at("run") == 10.5);
  CHECK(w.size() == 1);
  CHECK_THROWS_AS(mpvn("think\tninety\n"), ParseError);
  CHECK_THROWS_AS(mpvn("think\t101\n"), ParseError);
  CHECK_THROWS_AS(mpvn("think\n"), ParseError);
}

TEST_CASE("MPD counts tokens, optionally types and surfaces") {
  const auto lex = mpd("think\nknow\n");
  auto t = toks({{"model", "NOUN"}, {"think", "VERB"}, {"it", "PRON"}, {"think", "VERB"}, {"know", "VERB"}});
  CHECK(mpd_match_count(t, lex) == 3);
  CHECK(mpd_match_count(t, lex, {false, true, false}) == 2);
  t[1].surface = "thinks";
  CHECK(mpd_match_count(t, lex, {true, false, false}) == 2);
}

TEST_CASE("n = 30 with 18 MPD matches normalizes to 0.6") {
  const auto lex = mpd("learn\n");
  const auto hit = toks({{"model", "NOUN"}, {"learn", "VERB"}});
  const auto miss = toks({{"model", "NOUN"}, {"run", "VERB"}});
  std::vector<TokenSlice> members;
  for (int i = 0; i < 18; ++i) members.emplace_back(hit);
  for (int i = 0; i < 12; ++i) members.emplace_back(miss);
  const auto s = cluster_mpd_score(members, lex);
  CHECK(s.matches == 18);
  CHECK(s.normalized == doctest::Approx(0.6));
}

TEST_CASE("MPVN averages covered verbs and stays within their range") {
  const auto lex = mpvn("think\t90\nrun\t10\nbe\t80\n");
  const auto a = toks({{"model", "NOUN"}, {"think", "VERB"}, {"be", "AUX"}});
  const auto b = toks({{"model", "NOUN"}, {"run", "VERB"}, {"fly", "VERB"}});
  std::vector<TokenSlice> members = {a, b};
  const auto s = cluster_mpvn_score(members, lex);
  REQUIRE(s.has_value());
  CHECK(*s == doctest::Approx(50.0));
  CHECK(*s >= 10.0);
  CHECK(*s <= 90.0);
  const auto with_aux = cluster_mpvn_score(members, lex, {false, false, true});
  CHECK(*with_aux == doctest::Approx(60.0));

  const auto none = toks({{"model", "NOUN"}, {"fly", "VERB"}});
  std::vector<TokenSlice> uncovered = {none};
  CHECK_FALSE(cluster_mpvn_score(uncovered, lex).has_value());
}

TEST_CASE("empty clusters score zero") {
  std::vector<TokenSlice> none;
  CHECK(cluster_mpd_score(none, mpd("x\n")).normalized == 0.0);
  CHECK_FALSE(cluster_mpvn_score(none, mpvn("x\t1\n")).has_value());
}
