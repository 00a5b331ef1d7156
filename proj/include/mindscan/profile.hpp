#pragma once

// Cluster profiles for manual review: distinctive keywords, centroid
// sentences, manual labels, and the rendered report.

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindscan/cluster.hpp"
#include "mindscan/lexicon.hpp"
#include "mindscan/selection.hpp"

namespace mindscan::profile {

enum class TermBasis { Surface, Lemma };

struct KeywordOptions {
  std::size_t top_k = 5;
  TermBasis basis = TermBasis::Surface;
  bool remove_stopwords = true;
};

struct KeywordScore {
  std::string term;  // unigram or "w1 w2"
  std::size_t tf = 0;
  std::size_t df = 0;
  double idf = 0.0;
  double score = 0.0;

  bool operator==(const KeywordScore&) const = default;
};

bool is_stopword(std::string_view lowercase_word);

/// Lowercased terms of one member after dropping tokens without a letter and
/// (optionally) stopwords. Bigrams are formed over this stream.
std::vector<std::string> keyword_stream(lexicon::TokenSlice tokens, const KeywordOptions& opt);

/// One document per cluster (its members' token slices). Scores are
/// tf * (ln((1 + N) / (1 + df)) + 1); each list holds the top_k terms by
/// score, ties broken alphabetically.
std::vector<std::vector<KeywordScore>> tfidf_keywords(std::span<const std::vector<lexicon::TokenSlice>> clusters,
                                                      const KeywordOptions& opt = {});

struct CentralSentence {
  std::string occurrence_id;
  std::string text;
  double distance = 0.0;

  bool operator==(const CentralSentence&) const = default;
};

/// Members ordered by Euclidean distance to the cluster centroid (ties keep
/// member order); the first k are returned.
std::vector<CentralSentence> central_sentences(std::span<const std::string> occurrence_ids,
                                               std::span<const std::string> texts,
                                               std::span<const cluster::Vector> vectors, std::size_t k = 5);

enum class Label { Metaphorical, Awareness, Agency, Other, None };

inline constexpr Label kAllLabels[] = {Label::Metaphorical, Label::Awareness, Label::Agency, Label::Other,
                                       Label::None};

std::string_view label_name(Label l);
std::optional<Label> parse_label(std::string_view s);

/// "cluster_id<TAB>label" lines; '#' comments.
std::map<int, Label> load_labels(std::istream& in, const std::string& source = "<labels>");

struct ClusterProfile {
  std::string target;
  int cluster_id = 0;
  std::size_t n = 0;
  std::vector<selection::Criterion> criteria;
  lexicon::ClusterScores scores;
  std::vector<KeywordScore> keywords;
  std::vector<CentralSentence> central;
  double first_person_share = 0.0;  // members whose mention follows "our"
  std::optional<Label> label;

  nlohmann::json to_json() const;
  static ClusterProfile from_json(const nlohmann::json& j);
};

struct Aggregation {
  std::map<Label, std::size_t> sentences;  // sum of n per label
  std::map<Label, std::size_t> clusters;   // cluster count per label

  nlohmann::json to_json() const;
};

/// Attaches labels to profiles and sums cluster sizes per label. A label for
/// a cluster id without a profile is a DataError.
Aggregation aggregate_labels(std::vector<ClusterProfile>& profiles, const std::map<int, Label>& labels);

struct RenderedReport {
  std::string json;
  std::string markdown;
};

/// Byte-deterministic for fixed input. `context` (totals, seed, ...) is
/// copied into the JSON document under "context".
RenderedReport render_report(std::span<const ClusterProfile> profiles, const std::optional<Aggregation>& aggregation,
                             const nlohmann::json& context = nlohmann::json::object());

}  // namespace mindscan::profile
