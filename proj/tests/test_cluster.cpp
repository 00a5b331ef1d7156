#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "mindscan/cluster.hpp"
#include "mindscan/error.hpp"
#include "oracles.hpp"

using namespace mindscan;
using namespace mindscan::cluster;

namespace {

std::vector<Vector> line(std::initializer_list<float> xs) {
  std::vector<Vector> v;
  for (float x : xs) v.push_back({x});
  return v;
}

}  // namespace

TEST_CASE("median preference matches the off-diagonal median") {
  std::mt19937_64 rng(3);
  for (int r = 0; r < 10; ++r) {
    const auto pts = oracle::random_points(rng, 2 + rng() % 9, 3);
    const auto s = pairwise_similarities(pts);
    CHECK(s.preference(0) == doctest::Approx(oracle::median_off_diagonal(pts)));
  }
  const auto s = pairwise_similarities(line({0, 1, 3}), -2.5);
  CHECK(s.preference(2) == -2.5);
  CHECK(s(0, 2) == -9.0);
}

TEST_CASE("affinity propagation reaches the exhaustive optimum on small inputs") {
  std::mt19937_64 rng(20240601);
  int exact = 0;
  for (int r = 0; r < 40; ++r) {
    const std::size_t n = 2 + rng() % 6;
    const auto pts = oracle::random_points(rng, n, 2, 10.0);
    const auto s = pairwise_similarities(pts);
    const auto a = affinity_propagation(s);
    const auto dense = oracle::similarity(pts, s.preference(0));
    const auto best = oracle::best_exemplar_set(dense);
    const double got = oracle::net_of(dense, a.labels, a.exemplars);
    CAPTURE(r);
    CHECK(got == doctest::Approx(net_similarity(s, a)).epsilon(1e-9));
    CHECK(got >= best.net - 0.05 * std::abs(best.net));
    exact += std::abs(got - best.net) < 1e-9;
  }
  CHECK(exact >= 30);
}

TEST_CASE("exemplar refinement never lowers net similarity") {
  std::mt19937_64 rng(55);
  AffinityParams raw;
  raw.refine = false;
  for (int round = 0; round < 30; ++round) {
    const auto pts = oracle::random_points(rng, 5 + rng() % 40, 2, 10.0);
    const auto s = pairwise_similarities(pts);
    const auto plain = affinity_propagation(s, raw);
    const auto refined = affinity_propagation(s);
    CAPTURE(round);
    CHECK(net_similarity(s, refined) >= net_similarity(s, plain) - 1e-9);
    CHECK(refined.converged == plain.converged);
  }
}

TEST_CASE("two well separated blobs give two clusters") {
  const auto pts = line({0.0f, 0.1f, 0.2f, 0.15f, 10.0f, 10.1f, 10.2f, 10.05f});
  const auto a = affinity_propagation(pairwise_similarities(pts));
  CHECK(a.converged);
  CHECK(oracle::same_partition(a.labels, {0, 0, 0, 0, 1, 1, 1, 1}));
}

TEST_CASE("duplicate pairs collapse into one cluster each") {
  const auto pts = line({0, 0, 5, 5, 20, 20});
  const auto s = pairwise_similarities(pts);
  const auto a = affinity_propagation(s);
  const auto best = oracle::best_exemplar_set(oracle::similarity(pts, s.preference(0)));
  CHECK(oracle::same_partition(a.labels, {0, 0, 1, 1, 2, 2}) == (best.exemplars.size() == 3));
  // Identical points never end up in different clusters.
  CHECK(a.labels[0] == a.labels[1]);
  CHECK(a.labels[2] == a.labels[3]);
  CHECK(a.labels[4] == a.labels[5]);
}

TEST_CASE("result is invariant to input permutation") {
  std::mt19937_64 rng(5);
  for (int r = 0; r < 10; ++r) {
    const auto pts = oracle::random_points(rng, 12, 3, 5.0);
    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Vector> shuffled;
    for (auto p : perm) shuffled.push_back(pts[p]);
    const auto a = affinity_propagation(pairwise_similarities(pts));
    const auto b = affinity_propagation(pairwise_similarities(shuffled));
    std::vector<int> b_back(pts.size());
    for (std::size_t i = 0; i < perm.size(); ++i) b_back[perm[i]] = b.labels[i];
    CAPTURE(r);
    CHECK(oracle::same_partition(a.labels, b_back));
  }
}

TEST_CASE("degenerate inputs") {
  auto a = affinity_propagation(pairwise_similarities(line({4})));
  CHECK(a.cluster_count() == 1);
  CHECK(a.labels == std::vector<int>{0});

  // All points identical: one cluster with the median preference.
  a = affinity_propagation(pairwise_similarities(line({1, 1, 1, 1})));
  CHECK(a.cluster_count() == 1);
  // Equal similarities and a preference above them: every point alone.
  a = affinity_propagation(pairwise_similarities(line({1, 1, 1}), 1.0));
  CHECK(a.cluster_count() == 3);

  CHECK_THROWS_AS(pairwise_similarities(std::vector<Vector>{}), DataError);
  CHECK_THROWS_AS(pairwise_similarities(std::vector<Vector>{{1, 2}, {1}}), DataError);
  CHECK_THROWS_AS(affinity_propagation(pairwise_similarities(line({1, 2})), {0.3, 200, 15}), UsageError);
}

TEST_CASE("non-convergence is reported") {
  const auto pts = line({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto a = affinity_propagation(pairwise_similarities(pts), {0.5, 2, 15});
  CHECK_FALSE(a.converged);
  CHECK(a.iterations == 2);
  CHECK(a.cluster_count() >= 1);
  CHECK(a.labels.size() == pts.size());
}

TEST_CASE("silhouette on the one-dimensional fixture") {
  const auto pts = line({0, 1, 10, 11});
  const std::vector<int> labels = {0, 0, 1, 1};
  const auto s = silhouette(pts, labels);
  CHECK(s.mean == doctest::Approx(0.8997494).epsilon(1e-6));
  CHECK(s.mean == doctest::Approx(oracle::silhouette_mean(pts, labels)).epsilon(1e-12));
  REQUIRE(s.per_cluster.size() == 2);
  CHECK(s.per_cluster[0] == doctest::Approx(s.per_cluster[1]));
}

TEST_CASE("silhouette conventions and oracle agreement") {
  const auto pts = line({0, 1, 10});
  const auto s = silhouette(pts, std::vector<int>{0, 0, 1});
  CHECK(s.per_sample[2] == 0.0);
  CHECK_THROWS_AS(silhouette(pts, std::vector<int>{0, 0, 0}), DataError);

  std::mt19937_64 rng(9);
  for (int r = 0; r < 20; ++r) {
    const std::size_t n = 3 + rng() % 15;
    const auto p = oracle::random_points(rng, n, 4);
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng() % 3);
    labels[0] = 0;
    labels[1] = 1;
    labels[2] = 2;
    CHECK(silhouette(p, labels).mean == doctest::Approx(oracle::silhouette_mean(p, labels)).epsilon(1e-9));
  }
}

TEST_CASE("target exclusion rules") {
  const std::vector<std::string> ids = {"a", "b", "c", "d"};
  auto tc = cluster_target_word("model", ids, line({0, 1, 10, 11}));
  CHECK_FALSE(tc.excluded);
  REQUIRE(tc.silhouette.has_value());

  tc = cluster_target_word("model", ids, line({0, 0, 0, 0}));
  CHECK(tc.excluded);
  CHECK(tc.exclusion_reason == "silhouette_undefined");

  tc = cluster_target_word("model", {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"},
                           line({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}), {0.5, 2, 15});
  CHECK(tc.excluded);
  CHECK(tc.exclusion_reason == "not_converged");

  // Round trip through JSON.
  tc = cluster_target_word("model", ids, line({0, 1, 10, 11}));
  const auto back = TargetClustering::from_json(tc.to_json());
  CHECK(back.assignment.labels == tc.assignment.labels);
  CHECK(back.silhouette->mean == tc.silhouette->mean);
  CHECK(back.occurrence_ids == ids);
}
