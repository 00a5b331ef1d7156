#pragma once

// Dependency-annotated sentences (CoNLL-U), target-word matching, and
// extraction of subject-position target occurrences.

#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mindscan::annotation {

struct Token {
  int index = 0;  // 1-based
  std::string surface;
  std::string lemma;
  std::string upos;
  std::string xpos = "_";
  std::string feats = "_";
  int head = 0;  // 0 = root
  std::string deprel;
  std::string deps = "_";
  std::string misc = "_";

  bool operator==(const Token&) const = default;
};

/// A CoNLL-U line that is not a word line (multiword range "1-2" or empty
/// node "3.1"). Kept verbatim for serialization; never used for matching.
struct ExtraLine {
  int after_word = 0;  // emitted after this word index, 0 = before the first word
  std::string raw;

  bool operator==(const ExtraLine&) const = default;
};

struct AnnotatedSentence {
  std::string paper_id;
  std::string sent_id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<ExtraLine> extra_lines;
  std::vector<std::string> comments;  // other "# ..." lines, without the leading "# "

  const Token& token(int index) const { return tokens.at(static_cast<std::size_t>(index - 1)); }
  bool operator==(const AnnotatedSentence&) const = default;
};

/// Inclusive range of 1-based token indices.
struct TokenSpan {
  int first = 0;
  int last = 0;

  bool contains(const TokenSpan& other) const { return first <= other.first && other.last <= last; }
  bool operator==(const TokenSpan&) const = default;
};

/// Parses CoNLL-U. Every block needs "# paper_id =", "# sent_id =" and
/// "# text =" comments. Throws ParseError naming the offending line.
std::vector<AnnotatedSentence> parse_conllu(std::istream& in, const std::string& source = "<conllu>");
std::string write_conllu(const AnnotatedSentence& sentence);

/// Surface form -> canonical target word.
///
/// Forms whose letters are all uppercase, optionally followed by a plural
/// "s" ("CNN", "GANs", "AI"), match with exact case; every other form
/// matches case-insensitively. Multiword and hyphenated forms match runs of
/// tokens whose concatenated surfaces equal the form with whitespace removed,
/// so "auto-encoder" matches both one token and "auto" "-" "encoder".
class TargetLexicon {
 public:
  void add(std::string_view form, std::string_view canonical);

  /// Longest form matching tokens starting at `start`; returns the canonical
  /// target and the number of tokens consumed.
  std::optional<std::pair<std::string, int>> match_at(std::span<const Token> tokens, std::size_t start) const;

  /// Canonical targets in insertion order.
  const std::vector<std::string>& targets() const { return targets_; }
  std::size_t form_count() const { return exact_.size() + folded_.size(); }

  static bool is_exact_case_form(std::string_view form);

 private:
  std::map<std::string, std::string, std::less<>> exact_;
  std::map<std::string, std::string, std::less<>> folded_;
  std::vector<std::string> targets_;
  std::size_t max_key_ = 0;
};

/// Tab-separated: canonical target, then its variant forms; '#' comments.
TargetLexicon load_target_lexicon(std::istream& in);

struct Mention {
  std::string target;
  TokenSpan span;
  int head = 0;  // token index of the mention's syntactic head

  bool operator==(const Mention&) const = default;
};

/// Non-overlapping mentions, scanning left to right with the longest form
/// winning at each position. The mention head must be tagged NOUN or PROPN.
std::vector<Mention> match_targets(const AnnotatedSentence& sentence, const TargetLexicon& lexicon);

enum class ClauseMode {
  Subtree,   // contiguous cover of the predicate's dependency subtree
  Sentence,  // the whole sentence
};

struct TargetOccurrence {
  std::string occurrence_id;
  std::string paper_id;
  std::string sent_id;
  std::string target;
  TokenSpan token_span;
  int predicate_index = 0;
  TokenSpan clause_span;
  std::string clause_text;
  bool first_person = false;

  bool operator==(const TargetOccurrence&) const = default;
};

inline bool is_subject_relation(std::string_view deprel) {
  return deprel == "nsubj" || deprel == "nsubjpass" || deprel == "nsubj:pass";
}

std::vector<TargetOccurrence> extract_subject_occurrences(const AnnotatedSentence& sentence,
                                                          const TargetLexicon& lexicon,
                                                          ClauseMode mode = ClauseMode::Subtree);

/// True iff the token right before the mention is "our" (any case).
bool flag_first_person_method(const TargetOccurrence& occurrence, const AnnotatedSentence& sentence);

/// Deterministic from (paper_id, sent_id, token_span).
std::string make_occurrence_id(std::string_view paper_id, std::string_view sent_id, TokenSpan span);

/// Character range [begin, end) of every token in sentence.text, or nullopt
/// if the surfaces cannot be aligned with the text.
std::optional<std::vector<std::pair<std::size_t, std::size_t>>> align_tokens(const AnnotatedSentence& sentence);

/// Text covered by the inclusive token range. Falls back to joining
/// surfaces (honouring SpaceAfter=No) when alignment fails.
std::string span_text(const AnnotatedSentence& sentence, TokenSpan span);

std::string occurrence_to_json_line(const TargetOccurrence& occurrence);
std::vector<TargetOccurrence> load_occurrences(std::istream& in, const std::string& source = "<occurrences>");

}  // namespace mindscan::annotation
