#pragma once

// Stage orchestration with a digest manifest. Every stage reads files,
// writes files atomically into the output directory, and records input
// digests, a parameter snapshot, output digests and funnel counts. A stage
// whose inputs, parameters and outputs all match its manifest entry is a
// cache hit and is not recomputed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mindscan/annotation.hpp"
#include "mindscan/lexicon.hpp"
#include "mindscan/profile.hpp"

namespace mindscan::pipeline {

namespace fs = std::filesystem;

struct Paths {
  fs::path corpus;
  fs::path conllu;
  fs::path embeddings;  // external encoder output; unused with the mock encoder
  fs::path mpd;
  fs::path mpvn;
  fs::path labels;  // optional
  fs::path output_dir;
};

struct Parameters {
  fs::path targets_file;
  fs::path xai_terms_file;
  bool xai_word_boundary = false;
  annotation::ClauseMode clause_mode = annotation::ClauseMode::Subtree;
  double damping = 0.5;
  int max_iter = 200;
  int convergence_window = 15;
  bool refine_exemplars = true;
  std::optional<double> preference;  // nullopt = off-diagonal median
  std::size_t top_k = 5;
  std::size_t central_k = 5;
  std::size_t selection_size = 10;
  std::size_t min_cluster_size = 20;
  std::size_t min_papers = 2;
  std::size_t min_authors = 2;
  std::uint64_t seed = 0;
  bool mock_encoder = true;
  std::size_t mock_dim = 64;
  std::size_t max_tokens = 512;
  lexicon::ScoringOptions scoring;
  profile::TermBasis keyword_basis = profile::TermBasis::Surface;
};

struct PipelineConfig {
  Paths paths;
  Parameters params;

  /// Relative paths resolve against `base_dir`. Unknown keys are a UsageError.
  static PipelineConfig from_json(const nlohmann::json& j, const fs::path& base_dir);
  nlohmann::json to_json() const;
};

PipelineConfig load_config(const fs::path& file);

/// Shipped target-word and XAI-term lists.
fs::path default_data_dir();

enum class Stage {
  FilterPapers,
  ExtractOccurrences,
  EmbedMock,
  ImportEmbeddings,
  Cluster,
  Score,
  Select,
  Profile,
  Report,
};

inline constexpr Stage kStageOrder[] = {Stage::FilterPapers, Stage::ExtractOccurrences, Stage::EmbedMock,
                                        Stage::ImportEmbeddings, Stage::Cluster, Stage::Score,
                                        Stage::Select, Stage::Profile, Stage::Report};

std::string_view stage_name(Stage s);
std::optional<Stage> parse_stage(std::string_view name);

/// Output file names inside the output directory.
namespace files {
inline constexpr const char* kPapers = "papers.xai.jsonl";
inline constexpr const char* kOccurrences = "occurrences.jsonl";
inline constexpr const char* kMockEmbeddings = "mock_embeddings.jsonl";
inline constexpr const char* kEmbeddings = "embeddings.jsonl";
inline constexpr const char* kEmbeddingReport = "embedding_validation.json";
inline constexpr const char* kClusters = "clusters.json";
inline constexpr const char* kScores = "scores.json";
inline constexpr const char* kSelection = "selection.json";
inline constexpr const char* kProfiles = "profiles.json";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportMarkdown = "report.md";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kLock = ".mindscan.lock";
}  // namespace files

struct RunOptions {
  bool strict = false;  // an output whose digest no longer matches the manifest is an error
  bool force = false;   // recompute even on a cache hit
  std::ostream* log = nullptr;
};

enum class StageStatus { Computed, Cached, Skipped };
std::string_view status_name(StageStatus s);

struct StageOutcome {
  Stage stage;
  StageStatus status;
};

/// Holds the output-directory lock for its lifetime.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, RunOptions options = {});
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  StageOutcome run(Stage stage);
  std::vector<StageOutcome> run_all();

  const nlohmann::json& manifest() const { return manifest_; }
  const PipelineConfig& config() const { return config_; }

 private:
  struct StageResult;

  fs::path out(const char* name) const { return config_.paths.output_dir / name; }
  void log(const std::string& msg) const;
  void save_manifest();

  StageResult filter_papers();
  StageResult extract_occurrences();
  StageResult embed_mock();
  StageResult import_embeddings();
  StageResult cluster();
  StageResult score();
  StageResult select();
  StageResult profile();
  StageResult report();

  PipelineConfig config_;
  RunOptions options_;
  nlohmann::json manifest_;
  fs::path lock_path_;
};

}  // namespace mindscan::pipeline
