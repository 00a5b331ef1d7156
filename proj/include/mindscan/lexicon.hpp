#pragma once

// Mind Perception Dictionary (MPD) and Mental-Physical Verb Norms (MPVN)
// lexicons, and the per-cluster scores derived from them.

#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mindscan/annotation.hpp"

namespace mindscan::lexicon {

struct MindLexicon {
  std::set<std::string, std::less<>> entries;
};

struct VerbNormLexicon {
  std::map<std::string, double, std::less<>> entries;  // lemma -> mentalness, 0..100
};

/// Loader diagnostics (duplicate lemmas), one line each.
using Warnings = std::vector<std::string>;

/// One lemma per line, '#' comments. Lowercased.
MindLexicon load_mpd(std::istream& in, Warnings* warnings = nullptr, const std::string& source = "<mpd>");

/// "lemma<TAB>score" per line. Duplicates: last wins, with a warning.
/// Throws ParseError on an unparsable or out-of-range score.
VerbNormLexicon load_mpvn(std::istream& in, Warnings* warnings = nullptr, const std::string& source = "<mpvn>");

struct ScoringOptions {
  bool mpd_match_surface = false;  // match MPD on surface forms instead of lemmas
  bool mpd_count_types = false;    // count distinct matching lemmas per sentence instead of tokens
  bool mpvn_include_aux = false;   // treat AUX tokens as verbs for MPVN
};

/// The token slice a cluster member contributes: the clause fed to the encoder.
using TokenSlice = std::span<const annotation::Token>;

TokenSlice clause_tokens(const annotation::AnnotatedSentence& sentence, annotation::TokenSpan clause);

std::size_t mpd_match_count(TokenSlice tokens, const MindLexicon& lex, const ScoringOptions& opt = {});
std::size_t mpd_match_count(const annotation::AnnotatedSentence& sentence, const MindLexicon& lex,
                            const ScoringOptions& opt = {});

struct MpdScore {
  std::size_t matches = 0;
  double normalized = 0.0;
};

/// matches summed over members; normalized = matches / member count.
MpdScore cluster_mpd_score(std::span<const TokenSlice> members, const MindLexicon& lex, const ScoringOptions& opt = {});

/// Mean norm over every VERB token (AUX optional) found in the lexicon, or
/// nullopt when none is covered.
std::optional<double> cluster_mpvn_score(std::span<const TokenSlice> members, const VerbNormLexicon& lex,
                                         const ScoringOptions& opt = {});

struct ClusterScores {
  int cluster_id = 0;
  std::size_t n = 0;
  std::size_t mpd_matches = 0;
  double mpd_normalized = 0.0;
  std::optional<double> mpvn_score;
  double mean_silhouette = 0.0;
};

}  // namespace mindscan::lexicon
