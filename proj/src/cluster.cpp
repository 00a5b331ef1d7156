#include "mindscan/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mindscan/error.hpp"
#include "mindscan/util.hpp"

namespace mindscan::cluster {

using nlohmann::json;

SimilarityMatrix::SimilarityMatrix(std::size_t n, std::vector<double> values) : n_(n), s_(std::move(values)) {
  if (s_.size() != n * n) throw DataError("similarity matrix size does not match n*n");
}

void SimilarityMatrix::set_preference(double p) {
  for (std::size_t k = 0; k < n_; ++k) s_[k * n_ + k] = p;
}

double SimilarityMatrix::off_diagonal_median() const {
  if (n_ < 2) return 0.0;
  std::vector<double> off;
  off.reserve(n_ * (n_ - 1));
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = 0; k < n_; ++k)
      if (i != k) off.push_back(s_[i * n_ + k]);
  const std::size_t mid = off.size() / 2;
  std::nth_element(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(mid), off.end());
  const double upper = off[mid];
  if (off.size() % 2 == 1) return upper;
  const double lower = *std::max_element(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

namespace {

double squared_distance(const Vector& a, const Vector& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    d += diff * diff;
  }
  return d;
}

void check_dimensions(std::span<const Vector> vectors) {
  if (vectors.empty()) throw DataError("clustering needs at least one vector");
  const auto dim = vectors.front().size();
  for (std::size_t i = 0; i < vectors.size(); ++i)
    if (vectors[i].size() != dim)
      throw DataError("vector " + std::to_string(i) + " has dimension " + std::to_string(vectors[i].size()) +
                      ", expected " + std::to_string(dim));
}

// Every off-diagonal similarity equal and every preference equal: message
// passing cannot break the symmetry, so decide directly.
std::optional<ClusterAssignment> degenerate_case(const SimilarityMatrix& s) {
  const std::size_t n = s.size();
  ClusterAssignment a;
  a.converged = true;
  if (n == 1) {
    a.labels = {0};
    a.exemplars = {0};
    return a;
  }
  const double off = s(0, 1);
  const double pref = s.preference(0);
  for (std::size_t i = 0; i < n; ++i) {
    if (s.preference(i) != pref) return std::nullopt;
    for (std::size_t k = 0; k < n; ++k)
      if (i != k && s(i, k) != off) return std::nullopt;
  }
  if (pref > off) {
    for (std::size_t i = 0; i < n; ++i) {
      a.labels.push_back(static_cast<int>(i));
      a.exemplars.push_back(static_cast<int>(i));
    }
  } else {
    a.labels.assign(n, 0);
    a.exemplars = {0};
  }
  return a;
}

// Local search over exemplar sets. Each round takes the single best move
// among: add a point as exemplar, drop an exemplar, or hand an exemplar's
// role to one of its members. Gains are computed in O(n) per move from each
// point's best and second-best exemplar. Strict improvement only, so it
// terminates; ties keep the first move found in index order.
std::vector<std::size_t> refine_exemplars(const SimilarityMatrix& s, std::vector<std::size_t> ex) {
  const std::size_t n = s.size();
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  std::vector<char> is_ex(n);
  std::vector<double> b1(n), b2(n);
  std::vector<std::size_t> owner(n);
  for (;;) {
    std::fill(is_ex.begin(), is_ex.end(), 0);
    for (std::size_t e : ex) is_ex[e] = 1;
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (is_ex[i]) {
        owner[i] = i;
        b1[i] = s.preference(i);
        b2[i] = kNone;
        scale += std::abs(b1[i]);
        continue;
      }
      b1[i] = b2[i] = kNone;
      for (std::size_t e : ex) {
        const double v = s(i, e);
        if (v > b1[i]) {
          b2[i] = b1[i];
          b1[i] = v;
          owner[i] = e;
        } else if (v > b2[i]) {
          b2[i] = v;
        }
      }
      scale += std::abs(b1[i]);
    }
    // Best similarity from exemplar e to any other exemplar.
    auto nearest_other = [&](std::size_t e) {
      double b = kNone;
      for (std::size_t k : ex)
        if (k != e) b = std::max(b, s(e, k));
      return b;
    };

    const double tol = 1e-12 * scale;
    double best_gain = tol;
    std::vector<std::size_t> best_set;
    auto consider = [&](double gain, auto make) {
      if (gain > best_gain) {
        best_gain = gain;
        best_set = make();
      }
    };

    for (std::size_t j = 0; j < n; ++j) {
      if (is_ex[j]) continue;
      double g = s.preference(j) - b1[j];
      for (std::size_t i = 0; i < n; ++i)
        if (!is_ex[i] && i != j) g += std::max(0.0, s(i, j) - b1[i]);
      consider(g, [&] {
        auto f = ex;
        f.insert(std::upper_bound(f.begin(), f.end(), j), j);
        return f;
      });
    }
    if (ex.size() > 1)
      for (std::size_t e : ex) {
        double g = nearest_other(e) - s.preference(e);
        for (std::size_t i = 0; i < n; ++i)
          if (!is_ex[i] && owner[i] == e) g += b2[i] - b1[i];
        consider(g, [&] {
          auto f = ex;
          f.erase(std::find(f.begin(), f.end(), e));
          return f;
        });
      }
    for (std::size_t e : ex) {
      const double other = nearest_other(e);
      for (std::size_t j = 0; j < n; ++j) {
        if (is_ex[j] || owner[j] != e) continue;
        double g = s.preference(j) - b1[j] + std::max(s(e, j), other) - s.preference(e);
        for (std::size_t i = 0; i < n; ++i) {
          if (is_ex[i] || i == j) continue;
          const double rest = owner[i] == e ? b2[i] : b1[i];
          g += std::max(s(i, j), rest) - b1[i];
        }
        consider(g, [&] {
          auto f = ex;
          f.erase(std::find(f.begin(), f.end(), e));
          f.insert(std::upper_bound(f.begin(), f.end(), j), j);
          return f;
        });
      }
    }
    if (best_set.empty()) return ex;
    ex = std::move(best_set);
  }
}

}  // namespace

SimilarityMatrix pairwise_similarities(std::span<const Vector> vectors, std::optional<double> preference) {
  check_dimensions(vectors);
  const std::size_t n = vectors.size();
  std::vector<double> values(n * n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t k = 0; k < n; ++k)
      if (k != i) values[i * n + k] = -squared_distance(vectors[i], vectors[k]);
  });
  SimilarityMatrix s(n, std::move(values));
  s.set_preference(preference ? *preference : s.off_diagonal_median());
  return s;
}

ClusterAssignment affinity_propagation(const SimilarityMatrix& s, const AffinityParams& params) {
  const std::size_t n = s.size();
  if (n == 0) throw DataError("affinity propagation needs at least one point");
  if (!(params.damping >= 0.5 && params.damping < 1.0)) throw UsageError("damping must lie in [0.5, 1.0)");
  if (params.max_iter < 1 || params.convergence_window < 1)
    throw UsageError("max_iter and convergence_window must be positive");
  if (auto a = degenerate_case(s)) return *a;

  const double keep = params.damping;
  const double fresh_w = 1.0 - params.damping;
  std::vector<double> R(n * n, 0.0), A(n * n, 0.0);
  const std::size_t window = static_cast<std::size_t>(params.convergence_window);
  std::vector<std::vector<char>> history(window, std::vector<char>(n, 0));
  std::vector<char> current(n, 0);

  auto update_responsibilities = [&](std::size_t i) {
    double best = -std::numeric_limits<double>::infinity();
    double second = best;
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = A[i * n + k] + s(i, k);
      if (v > best) {
        second = best;
        best = v;
        best_k = k;
      } else if (v > second) {
        second = v;
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double competitor = k == best_k ? second : best;
      const double fresh = s(i, k) - competitor;
      R[i * n + k] = keep * R[i * n + k] + fresh_w * fresh;
    }
  };

  auto update_availabilities = [&](std::size_t k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = R[i * n + k];
      total += i == k ? r : std::max(0.0, r);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double r = R[i * n + k];
      double fresh;
      if (i == k) {
        fresh = total - r;
      } else {
        fresh = std::min(0.0, total - std::max(0.0, r));
      }
      A[i * n + k] = keep * A[i * n + k] + fresh_w * fresh;
    }
  };

  // Row and column updates are independent; parallelize only when the
  // matrix is large enough to amortize thread start-up.
  const bool wide = n >= 512;
  auto for_each_index = [&](auto&& fn) {
    if (wide)
      parallel_for(n, fn);
    else
      for (std::size_t i = 0; i < n; ++i) fn(i);
  };

  ClusterAssignment result;
  int it = 0;
  for (; it < params.max_iter; ++it) {
    for_each_index(update_responsibilities);
    for_each_index(update_availabilities);

    std::size_t exemplar_count = 0;
    for (std::size_t k = 0; k < n; ++k) {
      current[k] = (A[k * n + k] + R[k * n + k]) > 0.0 ? 1 : 0;
      exemplar_count += current[k];
    }
    history[static_cast<std::size_t>(it) % window] = current;
    if (static_cast<std::size_t>(it + 1) >= window && exemplar_count > 0) {
      const bool stable = std::all_of(history.begin(), history.end(), [&](const auto& h) { return h == current; });
      if (stable) {
        result.converged = true;
        ++it;
        break;
      }
    }
  }
  result.iterations = it;

  std::vector<std::size_t> exemplars;
  for (std::size_t k = 0; k < n; ++k)
    if (A[k * n + k] + R[k * n + k] > 0.0) exemplars.push_back(k);
  if (exemplars.empty()) {
    result.converged = false;
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (A[k * n + k] + R[k * n + k] > A[best * n + best] + R[best * n + best]) best = k;
    exemplars.push_back(best);
  }
  // Identical points never head separate clusters: keep the lowest index.
  std::vector<std::size_t> unique;
  for (std::size_t k : exemplars) {
    const bool dup = std::any_of(unique.begin(), unique.end(), [&](std::size_t u) { return s(k, u) == 0.0; });
    if (!dup) unique.push_back(k);
  }
  exemplars = std::move(unique);
  if (params.refine) exemplars = refine_exemplars(s, std::move(exemplars));

  result.labels.assign(n, -1);
  for (std::size_t c = 0; c < exemplars.size(); ++c) {
    result.labels[exemplars[c]] = static_cast<int>(c);
    result.exemplars.push_back(static_cast<int>(exemplars[c]));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (result.labels[i] >= 0) continue;
    std::size_t best_c = 0;
    for (std::size_t c = 1; c < exemplars.size(); ++c)
      if (s(i, exemplars[c]) > s(i, exemplars[best_c])) best_c = c;
    result.labels[i] = static_cast<int>(best_c);
  }
  return result;
}

double net_similarity(const SimilarityMatrix& s, const ClusterAssignment& a) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const auto ex = static_cast<std::size_t>(a.exemplars[static_cast<std::size_t>(a.labels[i])]);
    total += ex == i ? s.preference(i) : s(i, ex);
  }
  return total;
}

SilhouetteResult silhouette(std::span<const Vector> vectors, std::span<const int> labels) {
  check_dimensions(vectors);
  if (labels.size() != vectors.size()) throw DataError("silhouette: one label per vector required");
  const std::size_t n = vectors.size();
  int max_label = -1;
  for (int l : labels) {
    if (l < 0) throw DataError("silhouette: negative label");
    max_label = std::max(max_label, l);
  }
  const auto k = static_cast<std::size_t>(max_label + 1);
  std::vector<std::size_t> sizes(k, 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  const auto populated = std::count_if(sizes.begin(), sizes.end(), [](std::size_t c) { return c > 0; });
  if (populated < 2) throw DataError("silhouette undefined: fewer than two clusters");

  SilhouetteResult out;
  out.per_sample.assign(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    const auto own = static_cast<std::size_t>(labels[i]);
    if (sizes[own] < 2) return;
    std::vector<double> sums(k, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[static_cast<std::size_t>(labels[j])] += std::sqrt(squared_distance(vectors[i], vectors[j]));
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(a, b);
    out.per_sample[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  });

  out.per_cluster.assign(k, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.per_cluster[static_cast<std::size_t>(labels[i])] += out.per_sample[i];
    total += out.per_sample[i];
  }
  for (std::size_t c = 0; c < k; ++c)
    if (sizes[c] > 0) out.per_cluster[c] /= static_cast<double>(sizes[c]);
  out.mean = total / static_cast<double>(n);
  return out;
}

TargetClustering cluster_target_word(std::string target, std::vector<std::string> occurrence_ids,
                                     std::span<const Vector> vectors, const AffinityParams& params,
                                     std::optional<double> preference) {
  if (occurrence_ids.size() != vectors.size()) throw DataError("cluster_target_word: ids and vectors differ in length");
  TargetClustering tc;
  tc.target = std::move(target);
  tc.occurrence_ids = std::move(occurrence_ids);
  const auto s = pairwise_similarities(vectors, preference);
  tc.assignment = affinity_propagation(s, params);
  if (tc.assignment.cluster_count() >= 2) tc.silhouette = silhouette(vectors, tc.assignment.labels);
  if (!tc.assignment.converged) {
    tc.excluded = true;
    tc.exclusion_reason = "not_converged";
  } else if (!tc.silhouette) {
    tc.excluded = true;
    tc.exclusion_reason = "silhouette_undefined";
  } else if (tc.silhouette->mean < 0.0) {
    tc.excluded = true;
    tc.exclusion_reason = "negative_silhouette";
  }
  return tc;
}

json TargetClustering::to_json() const {
  json j = {{"target", target},
            {"occurrence_ids", occurrence_ids},
            {"labels", assignment.labels},
            {"exemplars", assignment.exemplars},
            {"converged", assignment.converged},
            {"iterations", assignment.iterations},
            {"excluded", excluded},
            {"exclusion_reason", exclusion_reason}};
  if (silhouette) {
    j["mean_silhouette"] = silhouette->mean;
    j["cluster_silhouette"] = silhouette->per_cluster;
  } else {
    j["mean_silhouette"] = nullptr;
    j["cluster_silhouette"] = json::array();
  }
  return j;
}

TargetClustering TargetClustering::from_json(const json& j) {
  TargetClustering tc;
  tc.target = j.at("target").get<std::string>();
  tc.occurrence_ids = j.at("occurrence_ids").get<std::vector<std::string>>();
  tc.assignment.labels = j.at("labels").get<std::vector<int>>();
  tc.assignment.exemplars = j.at("exemplars").get<std::vector<int>>();
  tc.assignment.converged = j.at("converged").get<bool>();
  tc.assignment.iterations = j.at("iterations").get<int>();
  tc.excluded = j.at("excluded").get<bool>();
  tc.exclusion_reason = j.value("exclusion_reason", "");
  if (!j.at("mean_silhouette").is_null()) {
    SilhouetteResult sr;
    sr.mean = j["mean_silhouette"].get<double>();
    sr.per_cluster = j.at("cluster_silhouette").get<std::vector<double>>();
    tc.silhouette = std::move(sr);
  }
  return tc;
}

}  // namespace mindscan::cluster
