#pragma once

// Affinity propagation over negative squared Euclidean similarities, and
// silhouette diagnostics used to exclude poorly separated target words.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace mindscan::cluster {

using Vector = std::vector<float>;

/// Dense n x n similarities, row-major. Off-diagonal s(i,k) = -||x_i - x_k||^2;
/// the diagonal holds each point's preference.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t n, std::vector<double> values);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t k) const { return s_[i * n_ + k]; }
  double preference(std::size_t k) const { return s_[k * n_ + k]; }
  void set_preference(double p);
  std::span<const double> row(std::size_t i) const { return {s_.data() + i * n_, n_}; }

  /// Median of the off-diagonal entries; 0 when n < 2.
  double off_diagonal_median() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> s_;
};

/// Throws DataError on empty input or mismatched dimensions. The preference
/// defaults to the off-diagonal median.
SimilarityMatrix pairwise_similarities(std::span<const Vector> vectors, std::optional<double> preference = {});

struct AffinityParams {
  double damping = 0.5;
  int max_iter = 200;
  int convergence_window = 15;
  // Hill-climb the exemplar set (add, drop, or move an exemplar within its
  // cluster) after message passing until net similarity stops improving.
  bool refine = true;
};

struct ClusterAssignment {
  std::vector<int> labels;     // dense cluster index per point
  std::vector<int> exemplars;  // point index of each cluster's exemplar, by cluster index
  bool converged = false;
  int iterations = 0;

  std::size_t cluster_count() const { return exemplars.size(); }
};

/// Responsibility/availability message passing with damping. Ties resolve to
/// the lowest index and all reductions run in ascending index order, so the
/// result is bit-reproducible. Non-convergence is reported, not thrown.
/// With params.refine the returned net similarity is never below that of
/// the raw message-passing exemplars.
ClusterAssignment affinity_propagation(const SimilarityMatrix& s, const AffinityParams& params = {});

/// Sum of s(i, exemplar(i)) over non-exemplars plus preferences of exemplars.
double net_similarity(const SimilarityMatrix& s, const ClusterAssignment& a);

struct SilhouetteResult {
  std::vector<double> per_sample;
  std::vector<double> per_cluster;  // indexed by label
  double mean = 0.0;
};

/// Euclidean silhouette. Members of singleton clusters score 0. Throws
/// DataError("silhouette undefined ...") with fewer than two clusters.
SilhouetteResult silhouette(std::span<const Vector> vectors, std::span<const int> labels);

struct TargetClustering {
  std::string target;
  std::vector<std::string> occurrence_ids;
  ClusterAssignment assignment;
  std::optional<SilhouetteResult> silhouette;  // empty when fewer than two clusters
  bool excluded = false;
  std::string exclusion_reason;  // "", "not_converged", "negative_silhouette", "silhouette_undefined"

  nlohmann::json to_json() const;
  static TargetClustering from_json(const nlohmann::json& j);
};

/// Clusters one target's vectors and applies the exclusion rule: a target is
/// dropped if clustering did not converge or the mean silhouette is negative
/// or undefined.
TargetClustering cluster_target_word(std::string target, std::vector<std::string> occurrence_ids,
                                     std::span<const Vector> vectors, const AffinityParams& params = {},
                                     std::optional<double> preference = {});

}  // namespace mindscan::cluster
