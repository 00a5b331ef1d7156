#pragma once

// Embedding interchange files, coverage validation, and the deterministic
// mock encoder used for desk-scale runs.
//
// File layout (line-delimited JSON):
//   {"dim": D, ...optional metadata}
//   {"occurrence_id": "...", "vector": [f32, ...]}
//   ...
//
// Encoders feeding this format average the last four hidden layers and the
// subword pieces of the target, skip clauses over the 512-token input limit,
// and use D = 768. Only structure is checked here.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindscan/annotation.hpp"

namespace mindscan::embedding {

inline constexpr std::size_t kReferenceDim = 768;
inline constexpr std::size_t kEncoderTokenLimit = 512;

struct EmbeddingRecord {
  std::string occurrence_id;
  std::vector<float> vector;

  bool operator==(const EmbeddingRecord&) const = default;
};

struct EmbeddingFile {
  std::size_t dim = 0;
  nlohmann::json header;  // the full header object, including "dim"
  std::vector<EmbeddingRecord> records;
};

/// Throws ParseError on malformed lines, dimension mismatch (naming the
/// occurrence_id), non-finite components, or duplicate ids.
EmbeddingFile read_embeddings(std::istream& in, const std::string& source = "<embeddings>");

/// `meta` keys are merged into the header line. Throws DataError on a
/// dimension mismatch or a non-finite component.
void write_embeddings(std::ostream& out, std::span<const EmbeddingRecord> records, std::size_t dim,
                      const nlohmann::json& meta = nlohmann::json::object());

struct ValidationReport {
  std::vector<std::string> skipped;  // occurrences without a vector (over-length clauses)
  std::vector<std::string> orphans;  // vectors without an occurrence

  bool ok() const { return orphans.empty(); }
  nlohmann::json to_json() const;
};

/// Lists occurrences the encoder skipped. Throws DataError if any vector has
/// no matching occurrence.
ValidationReport validate_embeddings(std::span<const EmbeddingRecord> records,
                                     std::span<const annotation::TargetOccurrence> occurrences);
ValidationReport check_coverage(std::span<const EmbeddingRecord> records,
                                std::span<const annotation::TargetOccurrence> occurrences);

inline constexpr int kMockWindow = 5;
inline constexpr std::size_t kMockMinDim = 8;

/// L2-normalized sum of per-lemma pseudo-random unit vectors over the
/// non-punctuation clause tokens within kMockWindow tokens of the mention.
/// Bit-identical across platforms for the same (seed, window lemmas, dim).
EmbeddingRecord mock_encode(const annotation::TargetOccurrence& occurrence,
                            const annotation::AnnotatedSentence& sentence, std::size_t dim, std::uint64_t seed);

/// Unit vector for one lemma; exposed for tests.
std::vector<double> lemma_direction(std::string_view lemma, std::size_t dim, std::uint64_t seed);

}  // namespace mindscan::embedding
