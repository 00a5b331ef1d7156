#include "mindscan/profile.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "mindscan/error.hpp"
#include "mindscan/util.hpp"

namespace mindscan::profile {

using nlohmann::json;

namespace {

// Function words only; content verbs and modals-as-content stay in.
const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a",     "about", "also",  "am",    "an",    "and",   "are",   "as",     "at",    "be",    "been",
      "being", "both",  "but",   "by",    "can",   "could", "did",   "do",     "does",  "each",  "either",
      "for",   "from",  "had",   "has",   "have",  "having", "he",   "her",    "his",   "how",   "i",
      "if",    "in",    "into",  "is",    "it",    "its",   "may",   "might",  "must",  "neither", "no",
      "nor",   "not",   "of",    "on",    "or",    "our",   "shall", "she",    "should", "so",   "such",
      "than",  "that",  "the",   "their", "them",  "then",  "there", "these",  "they",  "this",  "those",
      "to",    "us",    "was",   "we",    "were",  "what",  "when",  "where",  "whether", "which", "while",
      "who",   "whom",  "whose", "why",   "will",  "with",  "you",   "your"};
  return words;
}

bool has_letter(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; });
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

bool is_stopword(std::string_view w) { return stopwords().count(w) > 0; }

std::vector<std::string> keyword_stream(lexicon::TokenSlice tokens, const KeywordOptions& opt) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (t.upos == "PUNCT") continue;
    const auto& raw = opt.basis == TermBasis::Lemma && t.lemma != "_" ? t.lemma : t.surface;
    if (!has_letter(raw)) continue;
    auto w = to_lower_ascii(raw);
    if (opt.remove_stopwords && is_stopword(w)) continue;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<std::vector<KeywordScore>> tfidf_keywords(std::span<const std::vector<lexicon::TokenSlice>> clusters,
                                                      const KeywordOptions& opt) {
  std::vector<std::map<std::string, std::size_t>> tf(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (const auto& member : clusters[c]) {
      const auto stream = keyword_stream(member, opt);
      for (std::size_t i = 0; i < stream.size(); ++i) {
        ++tf[c][stream[i]];
        if (i + 1 < stream.size()) ++tf[c][stream[i] + " " + stream[i + 1]];
      }
    }
  }
  std::map<std::string, std::size_t> df;
  for (const auto& doc : tf)
    for (const auto& [term, count] : doc) ++df[term];

  const double n_docs = static_cast<double>(clusters.size());
  std::vector<std::vector<KeywordScore>> out(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    std::vector<KeywordScore> scored;
    scored.reserve(tf[c].size());
    for (const auto& [term, count] : tf[c]) {
      KeywordScore k;
      k.term = term;
      k.tf = count;
      k.df = df[term];
      k.idf = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(k.df))) + 1.0;
      k.score = static_cast<double>(k.tf) * k.idf;
      scored.push_back(std::move(k));
    }
    std::stable_sort(scored.begin(), scored.end(), [](const KeywordScore& a, const KeywordScore& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.term < b.term;
    });
    if (scored.size() > opt.top_k) scored.resize(opt.top_k);
    out[c] = std::move(scored);
  }
  return out;
}

std::vector<CentralSentence> central_sentences(std::span<const std::string> occurrence_ids,
                                               std::span<const std::string> texts,
                                               std::span<const cluster::Vector> vectors, std::size_t k) {
  if (occurrence_ids.size() != vectors.size() || texts.size() != vectors.size())
    throw DataError("central_sentences: ids, texts and vectors differ in length");
  if (vectors.empty()) return {};
  const std::size_t dim = vectors.front().size();
  std::vector<double> centroid(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dim) throw DataError("central_sentences: inconsistent vector dimension");
    for (std::size_t j = 0; j < dim; ++j) centroid[j] += v[j];
  }
  for (auto& x : centroid) x /= static_cast<double>(vectors.size());

  std::vector<double> dist(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double diff = vectors[i][j] - centroid[j];
      d += diff * diff;
    }
    dist[i] = std::sqrt(d);
  }
  std::vector<std::size_t> order(vectors.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  std::vector<CentralSentence> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i)
    out.push_back({occurrence_ids[order[i]], texts[order[i]], dist[order[i]]});
  return out;
}

std::string_view label_name(Label l) {
  switch (l) {
    case Label::Metaphorical: return "metaphorical";
    case Label::Awareness: return "awareness";
    case Label::Agency: return "agency";
    case Label::Other: return "other";
    case Label::None: return "none";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view s) {
  const auto lower = to_lower_ascii(trim(s));
  for (auto l : kAllLabels)
    if (label_name(l) == lower) return l;
  return std::nullopt;
}

std::map<int, Label> load_labels(std::istream& in, const std::string& source) {
  std::map<int, Label> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) throw ParseError(source, line_no, "expected 'cluster_id<TAB>label'");
    int id = 0;
    try {
      std::size_t used = 0;
      const std::string idtext(trim(fields[0]));
      id = std::stoi(idtext, &used);
      if (used != idtext.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError(source, line_no, "bad cluster id '" + fields[0] + "'");
    }
    const auto label = parse_label(fields[1]);
    if (!label) throw ParseError(source, line_no, "unknown label '" + fields[1] + "'");
    if (!labels.emplace(id, *label).second) throw ParseError(source, line_no, "cluster " + fields[0] + " labeled twice");
  }
  return labels;
}

json Aggregation::to_json() const {
  json s = json::object(), c = json::object();
  for (auto l : kAllLabels) {
    const auto it = sentences.find(l);
    s[std::string(label_name(l))] = it == sentences.end() ? 0 : it->second;
    const auto jt = clusters.find(l);
    c[std::string(label_name(l))] = jt == clusters.end() ? 0 : jt->second;
  }
  return {{"sentences", s}, {"clusters", c}};
}

Aggregation aggregate_labels(std::vector<ClusterProfile>& profiles, const std::map<int, Label>& labels) {
  std::map<int, ClusterProfile*> by_id;
  for (auto& p : profiles) by_id[p.cluster_id] = &p;
  for (const auto& [id, label] : labels)
    if (!by_id.count(id)) throw DataError("label given for unknown cluster_id " + std::to_string(id));
  Aggregation agg;
  for (auto& p : profiles) {
    const auto it = labels.find(p.cluster_id);
    if (it == labels.end()) {
      p.label.reset();
      continue;
    }
    p.label = it->second;
    agg.sentences[it->second] += p.n;
    agg.clusters[it->second] += 1;
  }
  return agg;
}

json ClusterProfile::to_json() const {
  json crit = json::array();
  for (auto c : criteria) crit.push_back(selection::criterion_name(c));
  json kw = json::array();
  for (const auto& k : keywords)
    kw.push_back({{"term", k.term}, {"tf", k.tf}, {"df", k.df}, {"idf", k.idf}, {"score", k.score}});
  json cs = json::array();
  for (const auto& c : central)
    cs.push_back({{"occurrence_id", c.occurrence_id}, {"text", c.text}, {"distance", c.distance}});
  return {{"target", target},
          {"cluster_id", cluster_id},
          {"n", n},
          {"cluster_set", crit},
          {"scores",
           {{"mpd_matches", scores.mpd_matches},
            {"mpd_normalized", scores.mpd_normalized},
            {"mpvn_score", scores.mpvn_score ? json(*scores.mpvn_score) : json(nullptr)},
            {"mean_silhouette", scores.mean_silhouette}}},
          {"keywords", kw},
          {"central_sentences", cs},
          {"first_person_share", first_person_share},
          {"label", label ? json(std::string(label_name(*label))) : json(nullptr)}};
}

ClusterProfile ClusterProfile::from_json(const json& j) {
  ClusterProfile p;
  p.target = j.at("target").get<std::string>();
  p.cluster_id = j.at("cluster_id").get<int>();
  p.n = j.at("n").get<std::size_t>();
  for (const auto& name : j.at("cluster_set")) {
    const auto s = name.get<std::string>();
    for (auto c : selection::kAllCriteria)
      if (selection::criterion_name(c) == s) p.criteria.push_back(c);
  }
  const auto& sc = j.at("scores");
  p.scores.cluster_id = p.cluster_id;
  p.scores.n = p.n;
  p.scores.mpd_matches = sc.at("mpd_matches").get<std::size_t>();
  p.scores.mpd_normalized = sc.at("mpd_normalized").get<double>();
  if (!sc.at("mpvn_score").is_null()) p.scores.mpvn_score = sc["mpvn_score"].get<double>();
  p.scores.mean_silhouette = sc.at("mean_silhouette").get<double>();
  for (const auto& k : j.at("keywords"))
    p.keywords.push_back({k.at("term").get<std::string>(), k.at("tf").get<std::size_t>(),
                          k.at("df").get<std::size_t>(), k.at("idf").get<double>(), k.at("score").get<double>()});
  for (const auto& c : j.at("central_sentences"))
    p.central.push_back(
        {c.at("occurrence_id").get<std::string>(), c.at("text").get<std::string>(), c.at("distance").get<double>()});
  p.first_person_share = j.at("first_person_share").get<double>();
  if (!j.at("label").is_null()) p.label = parse_label(j["label"].get<std::string>());
  return p;
}

RenderedReport render_report(std::span<const ClusterProfile> profiles, const std::optional<Aggregation>& aggregation,
                             const json& context) {
  json doc;
  doc["context"] = context;
  doc["clusters"] = json::array();
  for (const auto& p : profiles) doc["clusters"].push_back(p.to_json());
  doc["aggregation"] = aggregation ? aggregation->to_json() : json(nullptr);

  std::ostringstream md;
  md << "# Cluster overview\n\n";
  if (context.contains("totals")) {
    const auto& t = context["totals"];
    md << "Clusters: " << t.value("clusters_in", 0) << " clustered, " << t.value("clusters_after_exclusion", 0)
       << " after exclusion, " << t.value("clusters_selected", 0) << " selected for review.\n\n";
  }
  for (const auto& p : profiles) {
    md << "## target word: \"" << p.target << "\", cluster: " << p.cluster_id << " (n=" << p.n << ")\n\n";
    md << "| field | value |\n|---|---|\n";
    md << "| cluster set | ";
    for (std::size_t i = 0; i < p.criteria.size(); ++i)
      md << (i ? ", " : "") << selection::criterion_name(p.criteria[i]);
    md << " |\n";
    md << "| scores | MPVN score=" << (p.scores.mpvn_score ? fixed2(*p.scores.mpvn_score) : std::string("n/a"))
       << ", number of matches with MPD =" << p.scores.mpd_matches << " |\n";
    md << "| keywords | ";
    for (std::size_t i = 0; i < p.keywords.size(); ++i) md << (i ? ", " : "") << '"' << p.keywords[i].term << '"';
    md << " |\n";
    for (std::size_t i = 0; i < p.central.size(); ++i) {
      if (i == 0)
        md << "| centre (sentence 1) | ";
      else
        md << "| sentence " << i + 1 << " | ";
      std::string text = p.central[i].text;
      for (std::size_t pos = 0; (pos = text.find('|', pos)) != std::string::npos; pos += 2) text.replace(pos, 1, "\\|");
      md << '"' << text << "\" |\n";
    }
    md << "| label | " << (p.label ? label_name(*p.label) : std::string_view("unlabeled")) << " |\n\n";
  }
  if (aggregation) {
    md << "## Sentences per mind-attribution type\n\n";
    md << "| type | clusters | sentences | |\n|---|---|---|---|\n";
    constexpr Label kTypes[] = {Label::Metaphorical, Label::Agency, Label::Awareness};
    std::size_t widest = 1;
    for (auto l : kTypes)
      if (const auto it = aggregation->sentences.find(l); it != aggregation->sentences.end())
        widest = std::max(widest, it->second);
    for (auto l : kTypes) {
      const auto it = aggregation->sentences.find(l);
      const std::size_t n = it == aggregation->sentences.end() ? 0 : it->second;
      const auto jt = aggregation->clusters.find(l);
      const std::size_t c = jt == aggregation->clusters.end() ? 0 : jt->second;
      const auto bar = static_cast<std::size_t>(std::lround(40.0 * static_cast<double>(n) / static_cast<double>(widest)));
      md << "| " << label_name(l) << " | " << c << " | " << n << " | " << std::string(bar, '#') << " |\n";
    }
    md << "\n";
  }
  return {doc.dump(2) + "\n", md.str()};
}

}  // namespace mindscan::profile
