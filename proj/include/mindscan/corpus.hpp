#pragma once

// Paper records, XAI paper filtering, and text-unit selection.

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mindscan::corpus {

struct PaperRecord {
  std::string paper_id;
  std::string title;
  std::string abstract;
  std::string venue;
  std::string journal;
  std::vector<std::string> authors;
  std::optional<std::vector<std::string>> body_sentences;
  std::optional<std::vector<std::string>> abstract_sentences;

  bool operator==(const PaperRecord&) const = default;
};

/// One filter term and its variant forms, all stored normalized.
struct XaiTerm {
  std::string term;
  std::vector<std::string> variants;
};

struct XaiTermList {
  std::vector<XaiTerm> terms;
  /// Off by default: terms match as plain substrings ("XAI" also hits
  /// "xai-based"). When on, a match must start and end at a word boundary.
  bool require_word_boundary = false;

  bool empty() const { return terms.empty(); }
};

struct TextUnit {
  std::string unit_id;
  std::string text;

  bool operator==(const TextUnit&) const = default;
};

/// Lowercase, hyphens to spaces, whitespace runs collapsed to one space, trimmed.
std::string normalize(std::string_view text);

/// Line-delimited JSON, one paper per line. Blank lines are ignored.
/// Throws ParseError (with line number) on malformed lines and DataError on
/// duplicate paper_id.
std::vector<PaperRecord> load_papers(std::istream& in, const std::string& source = "<papers>");
std::string paper_to_json_line(const PaperRecord& paper);

/// One term per line; tab-separated variant forms after the term; '#' starts
/// a comment.
XaiTermList load_xai_terms(std::istream& in);

bool is_xai_paper(const PaperRecord& paper, const XaiTermList& terms);
std::vector<PaperRecord> filter_corpus(const std::vector<PaperRecord>& papers, const XaiTermList& terms);

/// Body sentences win over abstract sentences. unit_id is "<paper_id>:<n>"
/// with n counting from 1; annotation files must use it as sent_id.
std::vector<TextUnit> select_text_units(const PaperRecord& paper);
std::string unit_id(std::string_view paper_id, std::size_t ordinal);

}  // namespace mindscan::corpus
