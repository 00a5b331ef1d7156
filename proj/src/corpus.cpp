#include "mindscan/corpus.hpp"

#include <cctype>
#include <unordered_set>

#include <json.hpp>

#include "mindscan/error.hpp"
#include "mindscan/util.hpp"

namespace mindscan::corpus {

using nlohmann::json;

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (c == '-') c = ' ';
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

namespace {

std::string string_field(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw DataError(where + ": field '" + key + "' must be a string");
  return it->get<std::string>();
}

std::vector<std::string> string_list(const json& value, const char* key, const std::string& where) {
  if (!value.is_array()) throw DataError(where + ": field '" + key + "' must be an array of strings");
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto& v : value) {
    if (!v.is_string()) throw DataError(where + ": field '" + key + "' must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::optional<std::vector<std::string>> optional_list(const json& obj, const char* key,
                                                      const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return string_list(*it, key, where);
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool contains_form(std::string_view haystack, std::string_view needle, bool word_boundary) {
  if (needle.empty()) return false;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + 1)) {
    if (!word_boundary) return true;
    const auto end = pos + needle.size();
    const bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
    const bool right_ok = end == haystack.size() || !is_word_char(haystack[end]);
    if (left_ok && right_ok) return true;
  }
  return false;
}

}  // namespace

std::vector<PaperRecord> load_papers(std::istream& in, const std::string& source) {
  std::vector<PaperRecord> papers;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, line_no, std::string("malformed JSON: ") + e.what());
    }
    const std::string where = source + ":" + std::to_string(line_no);
    if (!obj.is_object()) throw ParseError(source, line_no, "expected a JSON object");
    PaperRecord p;
    p.paper_id = string_field(obj, "paper_id", where);
    if (p.paper_id.empty()) throw ParseError(source, line_no, "missing paper_id");
    if (!seen.insert(p.paper_id).second)
      throw DataError(where + ": duplicate paper_id '" + p.paper_id + "'");
    p.title = string_field(obj, "title", where);
    p.abstract = string_field(obj, "abstract", where);
    p.venue = string_field(obj, "venue", where);
    p.journal = string_field(obj, "journal", where);
    if (const auto it = obj.find("authors"); it != obj.end() && !it->is_null())
      p.authors = string_list(*it, "authors", where);
    p.body_sentences = optional_list(obj, "body_sentences", where);
    p.abstract_sentences = optional_list(obj, "abstract_sentences", where);
    papers.push_back(std::move(p));
  }
  return papers;
}

std::string paper_to_json_line(const PaperRecord& paper) {
  json obj = {{"paper_id", paper.paper_id}, {"title", paper.title},     {"abstract", paper.abstract},
              {"venue", paper.venue},       {"journal", paper.journal}, {"authors", paper.authors}};
  if (paper.body_sentences) obj["body_sentences"] = *paper.body_sentences;
  if (paper.abstract_sentences) obj["abstract_sentences"] = *paper.abstract_sentences;
  return obj.dump() + "\n";
}

XaiTermList load_xai_terms(std::istream& in) {
  XaiTermList list;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    auto fields = split(line, '\t');
    XaiTerm term;
    term.term = normalize(fields.front());
    for (std::size_t i = 1; i < fields.size(); ++i) {
      auto v = normalize(fields[i]);
      if (!v.empty()) term.variants.push_back(std::move(v));
    }
    list.terms.push_back(std::move(term));
  }
  return list;
}

bool is_xai_paper(const PaperRecord& paper, const XaiTermList& terms) {
  // Fields are joined with a separator no normalized term can contain, so a
  // term never matches across a field boundary.
  const std::string haystack = normalize(paper.title) + " | " + normalize(paper.abstract) + " | " +
                               normalize(paper.venue) + " | " + normalize(paper.journal);
  for (const auto& t : terms.terms) {
    if (contains_form(haystack, t.term, terms.require_word_boundary)) return true;
    for (const auto& v : t.variants)
      if (contains_form(haystack, v, terms.require_word_boundary)) return true;
  }
  return false;
}

std::vector<PaperRecord> filter_corpus(const std::vector<PaperRecord>& papers, const XaiTermList& terms) {
  std::vector<char> keep(papers.size(), 0);
  parallel_for(papers.size(), [&](std::size_t i) { keep[i] = is_xai_paper(papers[i], terms) ? 1 : 0; });
  std::vector<PaperRecord> out;
  for (std::size_t i = 0; i < papers.size(); ++i)
    if (keep[i]) out.push_back(papers[i]);
  return out;
}

std::string unit_id(std::string_view paper_id, std::size_t ordinal) {
  return std::string(paper_id) + ":" + std::to_string(ordinal);
}

std::vector<TextUnit> select_text_units(const PaperRecord& paper) {
  const std::vector<std::string>* source = nullptr;
  if (paper.body_sentences && !paper.body_sentences->empty())
    source = &*paper.body_sentences;
  else if (paper.abstract_sentences)
    source = &*paper.abstract_sentences;
  std::vector<TextUnit> units;
  if (!source) return units;
  units.reserve(source->size());
  for (std::size_t i = 0; i < source->size(); ++i)
    units.push_back({unit_id(paper.paper_id, i + 1), (*source)[i]});
  return units;
}

}  // namespace mindscan::corpus
