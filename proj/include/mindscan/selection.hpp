#pragma once

// Cluster exclusion rules and the five review-set selection criteria.

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mindscan/lexicon.hpp"

namespace mindscan::selection {

enum class Criterion { Big, Mpvn, NoMpvn, Mpd, NoMpd };

inline constexpr Criterion kAllCriteria[] = {Criterion::Big, Criterion::Mpvn, Criterion::NoMpvn, Criterion::Mpd,
                                             Criterion::NoMpd};

std::string_view criterion_name(Criterion c);

/// A cluster with its scores and the provenance the exclusion rules need.
struct ClusterCandidate {
  int cluster_id = 0;
  std::string target;
  std::set<std::string> papers;
  std::set<std::string> authors;
  lexicon::ClusterScores scores;

  std::size_t n() const { return scores.n; }
};

struct ExclusionRules {
  std::size_t min_size = 20;
  std::size_t min_papers = 2;
  std::size_t min_authors = 2;
};

/// Keeps clusters with n >= min_size drawn from at least min_papers papers
/// and min_authors distinct authors. Input order is preserved.
std::vector<ClusterCandidate> apply_exclusions(std::span<const ClusterCandidate> clusters,
                                               const ExclusionRules& rules = {});

struct SelectedCluster {
  int cluster_id = 0;
  std::size_t n = 0;
  std::vector<Criterion> criteria;  // in kAllCriteria order

  bool operator==(const SelectedCluster&) const = default;
};

struct SelectionReport {
  std::vector<SelectedCluster> clusters;  // ascending cluster_id
  std::size_t clusters_in = 0;
  std::size_t clusters_after_exclusion = 0;

  std::size_t selected() const { return clusters.size(); }
  nlohmann::json to_json() const;
  static SelectionReport from_json(const nlohmann::json& j);
};

/// Cluster ids ranked for one criterion, best first. Score ties fall back to
/// larger n, then smaller cluster_id. Clusters without an MPVN score are left
/// out of both MPVN rankings.
std::vector<int> rank_for(Criterion c, std::span<const ClusterCandidate> clusters);

/// Union of the top `list_size` clusters of every criterion, each annotated
/// with all criteria it satisfies.
SelectionReport select_for_review(std::span<const ClusterCandidate> retained, std::size_t list_size = 10,
                                  std::size_t clusters_in = 0);

}  // namespace mindscan::selection
