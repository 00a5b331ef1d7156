#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mindscan/embedding.hpp"
#include "mindscan/error.hpp"
#include "oracles.hpp"

using namespace mindscan;
using namespace mindscan::embedding;
using annotation::AnnotatedSentence;
using annotation::TargetOccurrence;

namespace {

TargetOccurrence occ(std::string id) {
  TargetOccurrence o;
  o.occurrence_id = std::move(id);
  return o;
}

// "The model <verb> <a> <b> ." with the mention at token 2.
std::pair<TargetOccurrence, AnnotatedSentence> clause(const std::vector<std::string>& lemmas) {
  AnnotatedSentence s;
  s.paper_id = "p";
  s.sent_id = "p:1";
  int i = 0;
  for (const auto& l : lemmas) {
    annotation::Token t;
    t.index = ++i;
    t.surface = l;
    t.lemma = l;
    t.upos = l == "." ? "PUNCT" : "X";
    t.head = i == 3 ? 0 : 3;
    s.tokens.push_back(t);
  }
  TargetOccurrence o;
  o.occurrence_id = "p/p:1/2-2";
  o.target = "model";
  o.token_span = {2, 2};
  o.predicate_index = 3;
  o.clause_span = {1, i};
  return {o, s};
}

}  // namespace

TEST_CASE("write then read is lossless for random float vectors") {
  std::mt19937_64 rng(11);
  std::normal_distribution<float> g(0.0f, 3.0f);
  for (int round = 0; round < 20; ++round) {
    const std::size_t dim = 1 + rng() % 40;
    std::vector<EmbeddingRecord> recs;
    for (int r = 0; r < 15; ++r) {
      EmbeddingRecord e{"occ" + std::to_string(r), std::vector<float>(dim)};
      for (auto& x : e.vector) x = g(rng) * std::pow(10.0f, static_cast<float>(static_cast<int>(rng() % 9) - 4));
      recs.push_back(e);
    }
    std::ostringstream out;
    write_embeddings(out, recs, dim, {{"encoder", "test"}});
    std::istringstream in(out.str());
    const auto f = read_embeddings(in);
    CHECK(f.dim == dim);
    CHECK(f.header["encoder"] == "test");
    CHECK(f.records == recs);
  }
}

TEST_CASE("reader rejects dimension mismatch, non-finite values and duplicates") {
  auto fails_with = [](const std::string& text) -> std::string {
    std::istringstream in(text);
    try {
      read_embeddings(in, "e.jsonl");
    } catch (const ParseError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(fails_with("{\"dim\":2}\n{\"occurrence_id\":\"a\",\"vector\":[1,2,3]}\n").find("'a'") != std::string::npos);
  CHECK(fails_with("{\"dim\":2}\n{\"occurrence_id\":\"b\",\"vector\":[1,NaN]}\n").find("b") != std::string::npos);
  CHECK(fails_with("{\"dim\":2}\n{\"occurrence_id\":\"c\",\"vector\":[Infinity,1]}\n").find("c") != std::string::npos);
  CHECK(fails_with("{\"dim\":2}\n{\"occurrence_id\":\"d\",\"vector\":[1,1]}\n{\"occurrence_id\":\"d\",\"vector\":[1,1]}\n") !=
        "");
  CHECK(fails_with("{\"nodim\":2}\n") != "");
  std::ostringstream out;
  std::vector<EmbeddingRecord> bad = {{"x", {1.0f, NAN}}};
  CHECK_THROWS_AS(write_embeddings(out, bad, 2), DataError);
}

TEST_CASE("validation reports skipped occurrences and rejects orphans") {
  const std::vector<TargetOccurrence> occs = {occ("a"), occ("b"), occ("c")};
  std::vector<EmbeddingRecord> recs = {{"a", {1}}, {"c", {1}}};
  const auto rep = validate_embeddings(recs, occs);
  CHECK(rep.ok());
  CHECK(rep.skipped == std::vector<std::string>{"b"});
  recs.push_back({"zz", {1}});
  CHECK(check_coverage(recs, occs).orphans == std::vector<std::string>{"zz"});
  CHECK_THROWS_AS(validate_embeddings(recs, occs), DataError);
}

TEST_CASE("mock encoder is deterministic, unit length and seed dependent") {
  auto [o, s] = clause({"the", "model", "think", "that", "answer", "be", "correct", "."});
  const auto a = mock_encode(o, s, 64, 7);
  const auto b = mock_encode(o, s, 64, 7);
  CHECK(a == b);
  double n2 = 0;
  for (float x : a.vector) n2 += double(x) * x;
  CHECK(std::sqrt(n2) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_FALSE(mock_encode(o, s, 64, 8) == a);
  CHECK_THROWS_AS(mock_encode(o, s, 4, 7), UsageError);
  // Punctuation never contributes.
  auto [o2, s2] = clause({"the", "model", "think", "that", "answer", "be", "correct"});
  CHECK(mock_encode(o2, s2, 64, 7) == a);
}

TEST_CASE("mock vectors are closer within a context family than across") {
  const std::vector<std::vector<std::string>> mind = {{"the", "model", "think", "that", "answer", "be", "correct"},
                                                      {"the", "model", "believe", "that", "label", "be", "correct"},
                                                      {"the", "model", "know", "that", "answer", "be", "wrong"}};
  const std::vector<std::vector<std::string>> phys = {{"the", "model", "run", "on", "the", "gpu", "in"},
                                                      {"the", "model", "execute", "on", "the", "server", "in"},
                                                      {"the", "model", "compute", "on", "the", "gpu", "in"}};
  auto enc = [](const std::vector<std::string>& l) {
    auto [o, s] = clause(l);
    return mock_encode(o, s, 64, 7).vector;
  };
  double within = 0, between = 0;
  int nw = 0, nb = 0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      if (i < j) {
        within += oracle::sqdist(enc(mind[i]), enc(mind[j])) + oracle::sqdist(enc(phys[i]), enc(phys[j]));
        nw += 2;
      }
      between += oracle::sqdist(enc(mind[i]), enc(phys[j]));
      ++nb;
    }
  CHECK(within / nw < between / nb);
}

TEST_CASE("window stays inside the clause") {
  auto [o, s] = clause({"a", "model", "b", "c", "d", "e", "f", "g", "h", "i"});
  const auto wide = mock_encode(o, s, 32, 1);
  o.clause_span = {1, 4};
  CHECK_FALSE(mock_encode(o, s, 32, 1) == wide);
  auto [o2, s2] = clause({"a", "model", "b", "c", "d", "e", "f", "g"});
  CHECK(mock_encode(o2, s2, 32, 1) == wide);  // tokens beyond +5 are ignored
}
