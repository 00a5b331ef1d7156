#include "mindscan/embedding.hpp"

#include <charconv>
#include <cmath>
#include <unordered_set>

#include "mindscan/error.hpp"
#include "mindscan/util.hpp"

namespace mindscan::embedding {

using nlohmann::json;

namespace {

// Python's json module writes NaN/Infinity as bare tokens; swap them for
// null outside string literals so the record parses and the non-finite
// component can be reported by id.
std::string neutralize_non_finite(std::string_view line) {
  std::string out;
  out.reserve(line.size());
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      out.push_back(c);
      if (c == '\\' && i + 1 < line.size()) {
        out.push_back(line[++i]);
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out.push_back(c);
      continue;
    }
    bool replaced = false;
    for (std::string_view tok : {"-Infinity", "Infinity", "-NaN", "NaN"}) {
      if (line.substr(i, tok.size()) == tok) {
        out += "null";
        i += tok.size() - 1;
        replaced = true;
        break;
      }
    }
    if (!replaced) out.push_back(c);
  }
  return out;
}

void append_float(std::string& out, float v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

// SplitMix64.
struct SplitMix {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform_signed() { return static_cast<double>(next() >> 11) * 0x1.0p-52 - 1.0; }
};

}  // namespace

EmbeddingFile read_embeddings(std::istream& in, const std::string& source) {
  EmbeddingFile file;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(neutralize_non_finite(line));
    } catch (const json::parse_error& e) {
      throw ParseError(source, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!have_header) {
      if (!obj.is_object() || !obj.contains("dim") || !obj["dim"].is_number_unsigned())
        throw ParseError(source, line_no, "first line must be a header {\"dim\": D}");
      file.dim = obj["dim"].get<std::size_t>();
      if (file.dim == 0) throw ParseError(source, line_no, "dim must be positive");
      file.header = obj;
      have_header = true;
      continue;
    }
    if (!obj.is_object() || !obj.contains("occurrence_id") || !obj["occurrence_id"].is_string() ||
        !obj.contains("vector") || !obj["vector"].is_array())
      throw ParseError(source, line_no, "record needs string occurrence_id and array vector");
    EmbeddingRecord rec;
    rec.occurrence_id = obj["occurrence_id"].get<std::string>();
    const auto& vec = obj["vector"];
    if (vec.size() != file.dim)
      throw ParseError(source, line_no,
                       "dimension mismatch for occurrence '" + rec.occurrence_id + "': expected " +
                           std::to_string(file.dim) + ", found " + std::to_string(vec.size()));
    rec.vector.reserve(file.dim);
    for (const auto& v : vec) {
      if (!v.is_number()) throw ParseError(source, line_no, "non-finite component in occurrence " + rec.occurrence_id);
      const auto f = static_cast<float>(v.get<double>());
      if (!std::isfinite(f))
        throw ParseError(source, line_no, "non-finite component in occurrence " + rec.occurrence_id);
      rec.vector.push_back(f);
    }
    if (!seen.insert(rec.occurrence_id).second)
      throw ParseError(source, line_no, "duplicate occurrence_id " + rec.occurrence_id);
    file.records.push_back(std::move(rec));
  }
  if (!have_header) throw ParseError(source, 0, "missing header line");
  return file;
}

void write_embeddings(std::ostream& out, std::span<const EmbeddingRecord> records, std::size_t dim,
                      const json& meta) {
  json header = meta.is_object() ? meta : json::object();
  header["dim"] = dim;
  std::string buf = header.dump() + "\n";
  for (const auto& r : records) {
    if (r.vector.size() != dim)
      throw DataError("dimension mismatch for occurrence '" + r.occurrence_id + "': expected " + std::to_string(dim) +
                      ", found " + std::to_string(r.vector.size()));
    buf += "{\"occurrence_id\":" + json(r.occurrence_id).dump() + ",\"vector\":[";
    for (std::size_t i = 0; i < r.vector.size(); ++i) {
      if (!std::isfinite(r.vector[i])) throw DataError("non-finite component in occurrence " + r.occurrence_id);
      if (i) buf.push_back(',');
      append_float(buf, r.vector[i]);
    }
    buf += "]}\n";
  }
  out << buf;
}

json ValidationReport::to_json() const { return {{"skipped", skipped}, {"orphans", orphans}}; }

ValidationReport check_coverage(std::span<const EmbeddingRecord> records,
                                std::span<const annotation::TargetOccurrence> occurrences) {
  ValidationReport report;
  std::unordered_set<std::string> known;
  for (const auto& o : occurrences) known.insert(o.occurrence_id);
  std::unordered_set<std::string> covered;
  for (const auto& r : records) {
    covered.insert(r.occurrence_id);
    if (!known.count(r.occurrence_id)) report.orphans.push_back(r.occurrence_id);
  }
  for (const auto& o : occurrences)
    if (!covered.count(o.occurrence_id)) report.skipped.push_back(o.occurrence_id);
  return report;
}

ValidationReport validate_embeddings(std::span<const EmbeddingRecord> records,
                                     std::span<const annotation::TargetOccurrence> occurrences) {
  auto report = check_coverage(records, occurrences);
  if (!report.ok()) {
    std::string ids;
    for (const auto& id : report.orphans) ids += (ids.empty() ? "" : ", ") + id;
    throw DataError("embedding vectors without an occurrence: " + ids);
  }
  return report;
}

std::vector<double> lemma_direction(std::string_view lemma, std::size_t dim, std::uint64_t seed) {
  SplitMix rng{fnv1a64(lemma) ^ (seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL)};
  std::vector<double> v(dim);
  double norm2 = 0.0;
  for (auto& x : v) {
    x = rng.uniform_signed();
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

EmbeddingRecord mock_encode(const annotation::TargetOccurrence& occurrence,
                            const annotation::AnnotatedSentence& sentence, std::size_t dim, std::uint64_t seed) {
  if (dim < kMockMinDim) throw UsageError("mock encoder needs dim >= " + std::to_string(kMockMinDim));
  const int lo = std::max(occurrence.clause_span.first, occurrence.token_span.first - kMockWindow);
  const int hi = std::min(occurrence.clause_span.last, occurrence.token_span.last + kMockWindow);
  std::vector<double> sum(dim, 0.0);
  bool any = false;
  for (int i = lo; i <= hi; ++i) {
    const auto& t = sentence.token(i);
    if (t.upos == "PUNCT") continue;
    const std::string lemma = to_lower_ascii(t.lemma == "_" || t.lemma.empty() ? t.surface : t.lemma);
    const auto dir = lemma_direction(lemma, dim, seed);
    for (std::size_t k = 0; k < dim; ++k) sum[k] += dir[k];
    any = true;
  }
  if (!any) sum = lemma_direction(to_lower_ascii(occurrence.target), dim, seed);
  double norm2 = 0.0;
  for (double x : sum) norm2 += x * x;
  if (norm2 == 0.0) {
    sum = lemma_direction(to_lower_ascii(occurrence.target), dim, seed);
    norm2 = 1.0;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  EmbeddingRecord rec{occurrence.occurrence_id, std::vector<float>(dim)};
  for (std::size_t k = 0; k < dim; ++k) rec.vector[k] = static_cast<float>(sum[k] * inv);
  return rec;
}

}  // namespace mindscan::embedding
