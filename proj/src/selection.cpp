#include "mindscan/selection.hpp"

#include <algorithm>
#include <map>

#include "mindscan/error.hpp"

namespace mindscan::selection {

using nlohmann::json;

std::string_view criterion_name(Criterion c) {
  switch (c) {
    case Criterion::Big: return "big";
    case Criterion::Mpvn: return "MPVN";
    case Criterion::NoMpvn: return "NoMPVN";
    case Criterion::Mpd: return "MPD";
    case Criterion::NoMpd: return "NoMPD";
  }
  return "?";
}

namespace {

Criterion criterion_from_name(std::string_view s) {
  for (auto c : kAllCriteria)
    if (criterion_name(c) == s) return c;
  throw DataError("unknown selection criterion '" + std::string(s) + "'");
}

}  // namespace

std::vector<ClusterCandidate> apply_exclusions(std::span<const ClusterCandidate> clusters, const ExclusionRules& rules) {
  std::vector<ClusterCandidate> kept;
  for (const auto& c : clusters)
    if (c.n() >= rules.min_size && c.papers.size() >= rules.min_papers && c.authors.size() >= rules.min_authors)
      kept.push_back(c);
  return kept;
}

std::vector<int> rank_for(Criterion c, std::span<const ClusterCandidate> clusters) {
  std::vector<const ClusterCandidate*> pool;
  for (const auto& x : clusters) {
    if ((c == Criterion::Mpvn || c == Criterion::NoMpvn) && !x.scores.mpvn_score) continue;
    pool.push_back(&x);
  }
  auto key = [c](const ClusterCandidate& x) -> double {
    switch (c) {
      case Criterion::Big: return static_cast<double>(x.n());
      case Criterion::Mpvn: return *x.scores.mpvn_score;
      case Criterion::NoMpvn: return -*x.scores.mpvn_score;
      case Criterion::Mpd: return x.scores.mpd_normalized;
      case Criterion::NoMpd: return -x.scores.mpd_normalized;
    }
    return 0.0;
  };
  std::stable_sort(pool.begin(), pool.end(), [&](const ClusterCandidate* a, const ClusterCandidate* b) {
    const double ka = key(*a), kb = key(*b);
    if (ka != kb) return ka > kb;
    if (a->n() != b->n()) return a->n() > b->n();
    return a->cluster_id < b->cluster_id;
  });
  std::vector<int> ids;
  ids.reserve(pool.size());
  for (const auto* x : pool) ids.push_back(x->cluster_id);
  return ids;
}

SelectionReport select_for_review(std::span<const ClusterCandidate> retained, std::size_t list_size,
                                  std::size_t clusters_in) {
  std::map<int, SelectedCluster> chosen;
  std::map<int, std::size_t> sizes;
  for (const auto& c : retained) sizes[c.cluster_id] = c.n();
  for (auto criterion : kAllCriteria) {
    const auto ranked = rank_for(criterion, retained);
    const auto take = std::min(list_size, ranked.size());
    for (std::size_t i = 0; i < take; ++i) {
      auto& entry = chosen[ranked[i]];
      entry.cluster_id = ranked[i];
      entry.n = sizes[ranked[i]];
      entry.criteria.push_back(criterion);
    }
  }
  SelectionReport report;
  report.clusters_in = std::max(clusters_in, retained.size());
  report.clusters_after_exclusion = retained.size();
  for (auto& [id, entry] : chosen) report.clusters.push_back(std::move(entry));
  return report;
}

json SelectionReport::to_json() const {
  json list = json::array();
  for (const auto& c : clusters) {
    json names = json::array();
    for (auto cr : c.criteria) names.push_back(criterion_name(cr));
    list.push_back({{"cluster_id", c.cluster_id}, {"n", c.n}, {"criteria", names}});
  }
  return {{"clusters", list},
          {"totals",
           {{"clusters_in", clusters_in},
            {"clusters_after_exclusion", clusters_after_exclusion},
            {"clusters_selected", clusters.size()}}}};
}

SelectionReport SelectionReport::from_json(const json& j) {
  SelectionReport r;
  for (const auto& c : j.at("clusters")) {
    SelectedCluster s;
    s.cluster_id = c.at("cluster_id").get<int>();
    s.n = c.at("n").get<std::size_t>();
    for (const auto& name : c.at("criteria")) s.criteria.push_back(criterion_from_name(name.get<std::string>()));
    r.clusters.push_back(std::move(s));
  }
  r.clusters_in = j.at("totals").at("clusters_in").get<std::size_t>();
  r.clusters_after_exclusion = j.at("totals").at("clusters_after_exclusion").get<std::size_t>();
  return r;
}

}  // namespace mindscan::selection
