#pragma once

// Independent reference computations. Nothing here calls into the library's
// algorithms; they are the slow, obvious versions the fast code is checked
// against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

using Points = std::vector<std::vector<float>>;

inline double sqdist(const std::vector<float>& a, const std::vector<float>& b) {
  double d = 0;
  for (std::size_t j = 0; j < a.size(); ++j) d += (double(a[j]) - b[j]) * (double(a[j]) - b[j]);
  return d;
}

// Full similarity matrix with `pref` on the diagonal.
inline std::vector<std::vector<double>> similarity(const Points& x, double pref) {
  const auto n = x.size();
  std::vector<std::vector<double>> s(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) s[i][k] = i == k ? pref : -sqdist(x[i], x[k]);
  return s;
}

inline double median_off_diagonal(const Points& x) {
  std::vector<double> v;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t k = 0; k < x.size(); ++k)
      if (i != k) v.push_back(-sqdist(x[i], x[k]));
  std::sort(v.begin(), v.end());
  const auto m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

struct ExemplarOptimum {
  double net = -std::numeric_limits<double>::infinity();
  std::vector<int> exemplars;  // point indices
};

// Tries every non-empty exemplar subset; each other point joins its most
// similar exemplar.
inline ExemplarOptimum best_exemplar_set(const std::vector<std::vector<double>>& s) {
  const auto n = s.size();
  ExemplarOptimum best;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    double net = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) {
        net += s[i][i];
        continue;
      }
      double b = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k)
        if (mask >> k & 1u) b = std::max(b, s[i][k]);
      net += b;
    }
    if (net > best.net) {
      best.net = net;
      best.exemplars.clear();
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1u) best.exemplars.push_back(static_cast<int>(i));
    }
  }
  return best;
}

// Net similarity of a labeling given the exemplar of each label.
inline double net_of(const std::vector<std::vector<double>>& s, const std::vector<int>& labels,
                     const std::vector<int>& exemplars) {
  double net = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int e = exemplars[static_cast<std::size_t>(labels[i])];
    net += s[i][static_cast<std::size_t>(e)];
  }
  return net;
}

// Two labelings describe the same partition (up to renaming).
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

// Textbook silhouette straight from the definition.
inline double silhouette_mean(const Points& x, const std::vector<int>& labels) {
  const auto n = x.size();
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<int, std::pair<double, int>> by;  // label -> (sum distance, count)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      auto& e = by[labels[j]];
      e.first += std::sqrt(sqdist(x[i], x[j]));
      e.second += 1;
    }
    if (!by.count(labels[i])) continue;  // singleton scores 0
    const double a = by[labels[i]].first / by[labels[i]].second;
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [l, e] : by)
      if (l != labels[i]) b = std::min(b, e.first / e.second);
    const double m = std::max(a, b);
    total += m > 0 ? (b - a) / m : 0.0;
  }
  return total / double(n);
}

struct TfIdfRow {
  std::string term;
  double score;
};

// docs[d] is a list of member token streams (already lowercased and
// filtered). Terms are unigrams and adjacent bigrams within one member.
inline std::vector<std::vector<TfIdfRow>> tfidf(const std::vector<std::vector<std::vector<std::string>>>& docs,
                                                std::size_t top_k) {
  auto terms_of = [](const std::vector<std::string>& m) {
    std::vector<std::string> t(m.begin(), m.end());
    for (std::size_t i = 0; i + 1 < m.size(); ++i) t.push_back(m[i] + " " + m[i + 1]);
    return t;
  };
  std::set<std::string> vocab;
  for (const auto& d : docs)
    for (const auto& m : d)
      for (const auto& t : terms_of(m)) vocab.insert(t);
  const double N = double(docs.size());
  std::vector<std::vector<TfIdfRow>> out;
  for (const auto& d : docs) {
    std::vector<TfIdfRow> rows;
    for (const auto& term : vocab) {
      double tf = 0;
      for (const auto& m : d)
        for (const auto& t : terms_of(m)) tf += t == term;
      if (tf == 0) continue;
      double df = 0;
      for (const auto& other : docs) {
        bool hit = false;
        for (const auto& m : other)
          for (const auto& t : terms_of(m)) hit = hit || t == term;
        df += hit;
      }
      rows.push_back({term, tf * (std::log((1 + N) / (1 + df)) + 1)});
    }
    std::sort(rows.begin(), rows.end(), [](const TfIdfRow& a, const TfIdfRow& b) {
      return std::tie(b.score, a.term) < std::tie(a.score, b.term);
    });
    if (rows.size() > top_k) rows.resize(top_k);
    out.push_back(rows);
  }
  return out;
}

struct SelRow {
  int id;
  std::size_t n;
  std::size_t papers;
  std::size_t authors;
  double mpd;
  bool has_mpvn;
  double mpvn;
};

// Exclusion, five full sorts, top-k of each, union of ids.
inline std::set<int> selection_union(const std::vector<SelRow>& rows, std::size_t k = 10) {
  std::vector<SelRow> kept;
  for (const auto& r : rows)
    if (r.n >= 20 && r.papers >= 2 && r.authors >= 2) kept.push_back(r);
  std::set<int> out;
  auto take = [&](std::vector<std::tuple<double, long, int>> keyed) {
    // Ascending on (-score, -n, id) is best first.
    std::sort(keyed.begin(), keyed.end());
    for (std::size_t i = 0; i < std::min(k, keyed.size()); ++i) out.insert(std::get<2>(keyed[i]));
  };
  std::vector<std::tuple<double, long, int>> big, mpvn, nompvn, mpd, nompd;
  for (const auto& r : kept) {
    const long nn = -static_cast<long>(r.n);
    big.emplace_back(-double(r.n), nn, r.id);
    mpd.emplace_back(-r.mpd, nn, r.id);
    nompd.emplace_back(r.mpd, nn, r.id);
    if (r.has_mpvn) {
      mpvn.emplace_back(-r.mpvn, nn, r.id);
      nompvn.emplace_back(r.mpvn, nn, r.id);
    }
  }
  take(big);
  take(mpvn);
  take(nompvn);
  take(mpd);
  take(nompd);
  return out;
}

// Random points in [0, scale)^dim.
inline Points random_points(std::mt19937_64& rng, std::size_t n, std::size_t dim, double scale = 1.0) {
  std::uniform_real_distribution<double> u(0.0, scale);
  Points p(n, std::vector<float>(dim));
  for (auto& v : p)
    for (auto& x : v) x = static_cast<float>(u(rng));
  return p;
}

}  // namespace oracle
