#include "mindscan/lexicon.hpp"

#include <charconv>
#include <cmath>

#include "mindscan/error.hpp"
#include "mindscan/util.hpp"

namespace mindscan::lexicon {

namespace {

std::string strip_comment(std::string line) {
  if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
  return line;
}

}  // namespace

MindLexicon load_mpd(std::istream& in, Warnings* warnings, const std::string& source) {
  MindLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto entry = to_lower_ascii(trim(strip_comment(line)));
    if (entry.empty()) continue;
    if (!lex.entries.insert(entry).second && warnings)
      warnings->push_back(source + ":" + std::to_string(line_no) + ": duplicate lemma '" + entry + "'");
  }
  return lex;
}

VerbNormLexicon load_mpvn(std::istream& in, Warnings* warnings, const std::string& source) {
  VerbNormLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_comment(line);
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) throw ParseError(source, line_no, "expected 'lemma<TAB>score'");
    const auto lemma = to_lower_ascii(trim(fields[0]));
    const auto text = trim(fields[1]);
    double score = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), score);
    if (lemma.empty() || ec != std::errc{} || ptr != text.data() + text.size())
      throw ParseError(source, line_no, "unparsable score '" + std::string(text) + "'");
    if (!std::isfinite(score) || score < 0.0 || score > 100.0)
      throw ParseError(source, line_no, "score outside [0, 100]: " + std::string(text));
    if (lex.entries.count(lemma) && warnings)
      warnings->push_back(source + ":" + std::to_string(line_no) + ": duplicate lemma '" + lemma + "', last wins");
    lex.entries[lemma] = score;
  }
  return lex;
}

TokenSlice clause_tokens(const annotation::AnnotatedSentence& sentence, annotation::TokenSpan clause) {
  const auto first = static_cast<std::size_t>(clause.first - 1);
  const auto count = static_cast<std::size_t>(clause.last - clause.first + 1);
  return TokenSlice(sentence.tokens).subspan(first, count);
}

std::size_t mpd_match_count(TokenSlice tokens, const MindLexicon& lex, const ScoringOptions& opt) {
  std::set<std::string, std::less<>> seen;
  std::size_t count = 0;
  for (const auto& t : tokens) {
    const auto key = to_lower_ascii(opt.mpd_match_surface ? t.surface : t.lemma);
    if (!lex.entries.count(key)) continue;
    if (opt.mpd_count_types && !seen.insert(key).second) continue;
    ++count;
  }
  return count;
}

std::size_t mpd_match_count(const annotation::AnnotatedSentence& sentence, const MindLexicon& lex,
                            const ScoringOptions& opt) {
  return mpd_match_count(TokenSlice(sentence.tokens), lex, opt);
}

MpdScore cluster_mpd_score(std::span<const TokenSlice> members, const MindLexicon& lex, const ScoringOptions& opt) {
  MpdScore score;
  for (const auto& m : members) score.matches += mpd_match_count(m, lex, opt);
  if (!members.empty()) score.normalized = static_cast<double>(score.matches) / static_cast<double>(members.size());
  return score;
}

std::optional<double> cluster_mpvn_score(std::span<const TokenSlice> members, const VerbNormLexicon& lex,
                                         const ScoringOptions& opt) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (const auto& m : members) {
    for (const auto& t : m) {
      if (t.upos != "VERB" && !(opt.mpvn_include_aux && t.upos == "AUX")) continue;
      const auto it = lex.entries.find(to_lower_ascii(t.lemma));
      if (it == lex.entries.end()) continue;
      sum += it->second;
      ++hits;
    }
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

}  // namespace mindscan::lexicon
