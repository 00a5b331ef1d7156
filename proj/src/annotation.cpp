#include "mindscan/annotation.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "mindscan/error.hpp"
#include "mindscan/util.hpp"

namespace mindscan::annotation {

using nlohmann::json;

namespace {

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct BlockBuilder {
  AnnotatedSentence sentence;
  std::size_t first_line = 0;
  std::vector<std::size_t> token_lines;
  bool has_paper = false, has_sent = false, has_text = false;
  bool active = false;
};

void finish_block(BlockBuilder& b, const std::string& source, std::vector<AnnotatedSentence>& out) {
  if (!b.active) return;
  auto fail = [&](const std::string& what) {
    throw ParseError(source, b.first_line, "sentence block: " + what);
  };
  if (!b.has_paper) fail("missing '# paper_id =' comment");
  if (!b.has_sent) fail("missing '# sent_id =' comment");
  if (!b.has_text) fail("missing '# text =' comment");
  auto& tokens = b.sentence.tokens;
  if (tokens.empty()) fail("no word lines");
  const int n = static_cast<int>(tokens.size());
  int roots = 0;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const auto& t = tokens[k];
    const std::size_t at = b.token_lines[k];
    if (t.head < 0 || t.head > n)
      throw ParseError(source, at, "token " + std::to_string(t.index) + " has head out of range");
    if (t.head == t.index) throw ParseError(source, at, "token " + std::to_string(t.index) + " is its own head");
    if (t.head == 0) ++roots;
  }
  if (roots != 1) fail("expected exactly one root, found " + std::to_string(roots));
  out.push_back(std::move(b.sentence));
  b = BlockBuilder{};
}

void read_comment(BlockBuilder& b, std::string_view line) {
  std::string_view body = line.substr(1);
  if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
  const auto eq = body.find('=');
  if (eq != std::string_view::npos) {
    const auto key = trim(body.substr(0, eq));
    std::string_view value = body.substr(eq + 1);
    if (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    if (key == "paper_id") {
      b.sentence.paper_id = std::string(trim(value));
      b.has_paper = true;
      return;
    }
    if (key == "sent_id") {
      b.sentence.sent_id = std::string(trim(value));
      b.has_sent = true;
      return;
    }
    if (key == "text") {
      b.sentence.text = std::string(value);
      b.has_text = true;
      return;
    }
  }
  b.sentence.comments.emplace_back(body);
}

bool has_no_space_after(const Token& t) { return t.misc.find("SpaceAfter=No") != std::string::npos; }

struct Range {
  int first, last;
  std::string surface;
};

std::vector<Range> multiword_ranges(const AnnotatedSentence& s) {
  std::vector<Range> out;
  for (const auto& e : s.extra_lines) {
    const auto cols = split(e.raw, '\t');
    const auto dash = cols[0].find('-');
    if (dash == std::string::npos || cols.size() < 2) continue;
    const auto a = parse_int(std::string_view(cols[0]).substr(0, dash));
    const auto z = parse_int(std::string_view(cols[0]).substr(dash + 1));
    if (a && z && *a <= *z) out.push_back({*a, *z, cols[1]});
  }
  return out;
}

}  // namespace

std::vector<AnnotatedSentence> parse_conllu(std::istream& in, const std::string& source) {
  std::vector<AnnotatedSentence> out;
  BlockBuilder b;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      finish_block(b, source, out);
      continue;
    }
    if (!b.active) {
      b.active = true;
      b.first_line = line_no;
    }
    if (line.front() == '#') {
      read_comment(b, line);
      continue;
    }
    auto cols = split(line, '\t');
    if (cols.size() != 10)
      throw ParseError(source, line_no, "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
    const auto& id = cols[0];
    if (id.find('-') != std::string::npos || id.find('.') != std::string::npos) {
      b.sentence.extra_lines.push_back({static_cast<int>(b.sentence.tokens.size()), line});
      continue;
    }
    const auto index = parse_int(id);
    const int expected = static_cast<int>(b.sentence.tokens.size()) + 1;
    if (!index) throw ParseError(source, line_no, "bad token id '" + id + "'");
    if (*index != expected)
      throw ParseError(source, line_no,
                       "token ids must be contiguous from 1; expected " + std::to_string(expected));
    const auto head = parse_int(cols[6]);
    if (!head) throw ParseError(source, line_no, "bad head '" + cols[6] + "'");
    Token t;
    t.index = *index;
    t.surface = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    t.xpos = cols[4];
    t.feats = cols[5];
    t.head = *head;
    t.deprel = cols[7];
    t.deps = cols[8];
    t.misc = cols[9];
    b.sentence.tokens.push_back(std::move(t));
    b.token_lines.push_back(line_no);
  }
  finish_block(b, source, out);
  return out;
}

std::string write_conllu(const AnnotatedSentence& s) {
  std::ostringstream os;
  os << "# paper_id = " << s.paper_id << "\n# sent_id = " << s.sent_id << "\n# text = " << s.text << "\n";
  for (const auto& c : s.comments) os << "# " << c << "\n";
  auto extras = s.extra_lines.begin();
  auto flush_extras = [&](int after) {
    while (extras != s.extra_lines.end() && extras->after_word == after) os << (extras++)->raw << "\n";
  };
  flush_extras(0);
  for (const auto& t : s.tokens) {
    os << t.index << '\t' << t.surface << '\t' << t.lemma << '\t' << t.upos << '\t' << t.xpos << '\t' << t.feats
       << '\t' << t.head << '\t' << t.deprel << '\t' << t.deps << '\t' << t.misc << "\n";
    flush_extras(t.index);
  }
  for (; extras != s.extra_lines.end(); ++extras) os << extras->raw << "\n";
  os << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Target lexicon

bool TargetLexicon::is_exact_case_form(std::string_view form) {
  std::string_view core = form;
  if (core.size() > 1 && core.back() == 's') core.remove_suffix(1);
  bool any_letter = false;
  for (char c : core) {
    if (c >= 'a' && c <= 'z') return false;
    if (c >= 'A' && c <= 'Z') any_letter = true;
  }
  return any_letter;
}

namespace {
std::string lexicon_key(std::string_view form) {
  std::string key;
  for (char c : form)
    if (c != ' ' && c != '\t') key.push_back(c);
  return key;
}
}  // namespace

void TargetLexicon::add(std::string_view form, std::string_view canonical) {
  const auto f = trim(form);
  if (f.empty()) return;
  const std::string key = lexicon_key(f);
  if (is_exact_case_form(f))
    exact_[key] = std::string(canonical);
  else
    folded_[to_lower_ascii(key)] = std::string(canonical);
  max_key_ = std::max(max_key_, key.size());
  if (std::find(targets_.begin(), targets_.end(), canonical) == targets_.end())
    targets_.emplace_back(canonical);
}

std::optional<std::pair<std::string, int>> TargetLexicon::match_at(std::span<const Token> tokens,
                                                                    std::size_t start) const {
  std::optional<std::pair<std::string, int>> best;
  std::string candidate;
  for (std::size_t j = start; j < tokens.size(); ++j) {
    candidate += tokens[j].surface;
    if (candidate.size() > max_key_) break;
    const int len = static_cast<int>(j - start + 1);
    if (auto it = exact_.find(candidate); it != exact_.end()) {
      best = std::make_pair(it->second, len);
      continue;
    }
    if (auto it = folded_.find(to_lower_ascii(candidate)); it != folded_.end())
      best = std::make_pair(it->second, len);
  }
  return best;
}

TargetLexicon load_target_lexicon(std::istream& in) {
  TargetLexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    const std::string canonical(trim(fields.front()));
    lex.add(canonical, canonical);
    for (std::size_t i = 1; i < fields.size(); ++i) lex.add(fields[i], canonical);
  }
  return lex;
}

// ---------------------------------------------------------------------------
// Matching and extraction

namespace {

int span_head(const AnnotatedSentence& s, TokenSpan span) {
  int head = span.last;
  for (int i = span.first; i <= span.last; ++i) {
    const int h = s.token(i).head;
    if (h < span.first || h > span.last) head = i;
  }
  return head;
}

std::vector<std::vector<int>> children_of(const AnnotatedSentence& s) {
  std::vector<std::vector<int>> kids(s.tokens.size() + 1);
  for (const auto& t : s.tokens) kids[static_cast<std::size_t>(t.head)].push_back(t.index);
  return kids;
}

TokenSpan subtree_cover(const std::vector<std::vector<int>>& kids, int root) {
  TokenSpan span{root, root};
  std::vector<int> stack{root};
  std::vector<char> seen(kids.size(), 0);
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(node)]) continue;
    seen[static_cast<std::size_t>(node)] = 1;
    span.first = std::min(span.first, node);
    span.last = std::max(span.last, node);
    for (int c : kids[static_cast<std::size_t>(node)]) stack.push_back(c);
  }
  return span;
}

}  // namespace

std::vector<Mention> match_targets(const AnnotatedSentence& sentence, const TargetLexicon& lexicon) {
  std::vector<Mention> out;
  const std::span<const Token> tokens(sentence.tokens);
  std::size_t i = 0;
  while (i < tokens.size()) {
    const auto m = lexicon.match_at(tokens, i);
    if (!m) {
      ++i;
      continue;
    }
    const TokenSpan span{static_cast<int>(i) + 1, static_cast<int>(i) + m->second};
    const int head = span_head(sentence, span);
    const auto& upos = sentence.token(head).upos;
    if (upos == "NOUN" || upos == "PROPN") out.push_back({m->first, span, head});
    i += static_cast<std::size_t>(m->second);
  }
  return out;
}

std::string make_occurrence_id(std::string_view paper_id, std::string_view sent_id, TokenSpan span) {
  return std::string(paper_id) + "/" + std::string(sent_id) + "/" + std::to_string(span.first) + "-" +
         std::to_string(span.last);
}

std::vector<TargetOccurrence> extract_subject_occurrences(const AnnotatedSentence& sentence,
                                                          const TargetLexicon& lexicon, ClauseMode mode) {
  std::vector<TargetOccurrence> out;
  const auto mentions = match_targets(sentence, lexicon);
  if (mentions.empty()) return out;
  const auto kids = children_of(sentence);
  const int n = static_cast<int>(sentence.tokens.size());
  for (const auto& m : mentions) {
    const auto& head = sentence.token(m.head);
    if (!is_subject_relation(head.deprel) || head.head == 0) continue;
    TargetOccurrence occ;
    occ.paper_id = sentence.paper_id;
    occ.sent_id = sentence.sent_id;
    occ.target = m.target;
    occ.token_span = m.span;
    occ.occurrence_id = make_occurrence_id(sentence.paper_id, sentence.sent_id, m.span);
    occ.predicate_index = head.head;
    occ.clause_span = mode == ClauseMode::Sentence ? TokenSpan{1, n} : subtree_cover(kids, head.head);
    occ.clause_text = span_text(sentence, occ.clause_span);
    occ.first_person = flag_first_person_method(occ, sentence);
    out.push_back(std::move(occ));
  }
  return out;
}

bool flag_first_person_method(const TargetOccurrence& occurrence, const AnnotatedSentence& sentence) {
  const int before = occurrence.token_span.first - 1;
  if (before < 1 || before > static_cast<int>(sentence.tokens.size())) return false;
  return to_lower_ascii(sentence.token(before).surface) == "our";
}

std::optional<std::vector<std::pair<std::size_t, std::size_t>>> align_tokens(const AnnotatedSentence& s) {
  std::vector<std::pair<std::size_t, std::size_t>> offsets(s.tokens.size());
  const auto ranges = multiword_ranges(s);
  const std::string& text = s.text;
  std::size_t pos = 0;
  auto place = [&](const std::string& surface) -> std::optional<std::size_t> {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    if (text.compare(pos, surface.size(), surface) != 0) return std::nullopt;
    const auto begin = pos;
    pos += surface.size();
    return begin;
  };
  int w = 1;
  const int n = static_cast<int>(s.tokens.size());
  while (w <= n) {
    const auto r = std::find_if(ranges.begin(), ranges.end(), [&](const Range& x) { return x.first == w; });
    if (r != ranges.end() && r->last <= n) {
      const auto begin = place(r->surface);
      if (!begin) return std::nullopt;
      for (int k = r->first; k <= r->last; ++k) offsets[static_cast<std::size_t>(k - 1)] = {*begin, pos};
      w = r->last + 1;
      continue;
    }
    const auto begin = place(s.token(w).surface);
    if (!begin) return std::nullopt;
    offsets[static_cast<std::size_t>(w - 1)] = {*begin, pos};
    ++w;
  }
  return offsets;
}

std::string span_text(const AnnotatedSentence& sentence, TokenSpan span) {
  if (const auto offsets = align_tokens(sentence)) {
    const auto begin = (*offsets)[static_cast<std::size_t>(span.first - 1)].first;
    const auto end = (*offsets)[static_cast<std::size_t>(span.last - 1)].second;
    return sentence.text.substr(begin, end - begin);
  }
  std::string out;
  for (int i = span.first; i <= span.last; ++i) {
    const auto& t = sentence.token(i);
    out += t.surface;
    if (i != span.last && !has_no_space_after(t)) out.push_back(' ');
  }
  return out;
}

// ---------------------------------------------------------------------------
// Occurrence interchange

std::string occurrence_to_json_line(const TargetOccurrence& o) {
  json obj = {{"occurrence_id", o.occurrence_id},
              {"paper_id", o.paper_id},
              {"sent_id", o.sent_id},
              {"target", o.target},
              {"token_span", {o.token_span.first, o.token_span.last}},
              {"predicate_index", o.predicate_index},
              {"clause_span", {o.clause_span.first, o.clause_span.last}},
              {"clause_text", o.clause_text},
              {"first_person", o.first_person}};
  return obj.dump() + "\n";
}

std::vector<TargetOccurrence> load_occurrences(std::istream& in, const std::string& source) {
  std::vector<TargetOccurrence> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto obj = json::parse(line);
      TargetOccurrence o;
      o.occurrence_id = obj.at("occurrence_id").get<std::string>();
      o.paper_id = obj.at("paper_id").get<std::string>();
      o.sent_id = obj.at("sent_id").get<std::string>();
      o.target = obj.at("target").get<std::string>();
      o.token_span = {obj.at("token_span").at(0).get<int>(), obj.at("token_span").at(1).get<int>()};
      o.predicate_index = obj.at("predicate_index").get<int>();
      o.clause_span = {obj.at("clause_span").at(0).get<int>(), obj.at("clause_span").at(1).get<int>()};
      o.clause_text = obj.at("clause_text").get<std::string>();
      o.first_person = obj.value("first_person", false);
      if (!o.clause_span.contains(o.token_span))
        throw ParseError(source, line_no, "token_span not inside clause_span for " + o.occurrence_id);
      if (!seen.insert(o.occurrence_id).second)
        throw ParseError(source, line_no, "duplicate occurrence_id " + o.occurrence_id);
      out.push_back(std::move(o));
    } catch (const json::exception& e) {
      throw ParseError(source, line_no, std::string("bad occurrence record: ") + e.what());
    }
  }
  return out;
}

}  // namespace mindscan::annotation
