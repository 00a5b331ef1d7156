#include "mindscan/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fcntl.h>
#include <unistd.h>

#include "mindscan/cluster.hpp"
#include "mindscan/corpus.hpp"
#include "mindscan/embedding.hpp"
#include "mindscan/error.hpp"
#include "mindscan/selection.hpp"
#include "mindscan/util.hpp"

#ifndef MINDSCAN_DATA_DIR
#define MINDSCAN_DATA_DIR "data"
#endif

namespace mindscan::pipeline {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

fs::path default_data_dir() {
  if (const char* env = std::getenv("MINDSCAN_DATA_DIR"); env && *env) return env;
  return MINDSCAN_DATA_DIR;
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const char* section) {
  for (const auto& [key, value] : obj.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw UsageError(std::string("config: unknown key '") + key + "' in " + section);
}

fs::path resolve(const json& obj, const char* key, const fs::path& base, const fs::path& fallback = {}) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  const fs::path p = obj[key].get<std::string>();
  if (p.empty()) return {};
  return p.is_absolute() ? p : base / p;
}

std::string clause_mode_name(annotation::ClauseMode m) {
  return m == annotation::ClauseMode::Sentence ? "sentence" : "subtree";
}

std::string basis_name(profile::TermBasis b) { return b == profile::TermBasis::Lemma ? "lemma" : "surface"; }

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  reject_unknown(j, {"paths", "parameters"}, "top level");
  PipelineConfig cfg;
  const json paths = j.value("paths", json::object());
  reject_unknown(paths, {"corpus", "conllu", "embeddings", "mpd", "mpvn", "labels", "output_dir"}, "paths");
  cfg.paths.corpus = resolve(paths, "corpus", base);
  cfg.paths.conllu = resolve(paths, "conllu", base);
  cfg.paths.embeddings = resolve(paths, "embeddings", base);
  cfg.paths.mpd = resolve(paths, "mpd", base);
  cfg.paths.mpvn = resolve(paths, "mpvn", base);
  cfg.paths.labels = resolve(paths, "labels", base);
  cfg.paths.output_dir = resolve(paths, "output_dir", base);

  const json p = j.value("parameters", json::object());
  reject_unknown(p,
                 {"targets_file", "xai_terms_file", "xai_word_boundary", "clause_mode", "damping", "max_iter",
                  "convergence_window", "refine_exemplars", "preference", "top_k", "central_k", "selection_size", "min_cluster_size",
                  "min_papers", "min_authors", "seed", "mock_encoder", "mock_dim", "max_tokens", "mpd_match_surface",
                  "mpd_count_types", "mpvn_include_aux", "keyword_basis"},
                 "parameters");
  auto& prm = cfg.params;
  try {
    prm.targets_file = resolve(p, "targets_file", base, default_data_dir() / "target_words.tsv");
    prm.xai_terms_file = resolve(p, "xai_terms_file", base, default_data_dir() / "xai_terms.txt");
    prm.xai_word_boundary = p.value("xai_word_boundary", prm.xai_word_boundary);
    const auto mode = p.value("clause_mode", std::string("subtree"));
    if (mode == "subtree")
      prm.clause_mode = annotation::ClauseMode::Subtree;
    else if (mode == "sentence")
      prm.clause_mode = annotation::ClauseMode::Sentence;
    else
      throw UsageError("config: clause_mode must be 'subtree' or 'sentence'");
    prm.damping = p.value("damping", prm.damping);
    prm.max_iter = p.value("max_iter", prm.max_iter);
    prm.convergence_window = p.value("convergence_window", prm.convergence_window);
    prm.refine_exemplars = p.value("refine_exemplars", prm.refine_exemplars);
    if (p.contains("preference") && !p["preference"].is_null()) {
      if (p["preference"].is_string()) {
        if (p["preference"].get<std::string>() != "median")
          throw UsageError("config: preference must be \"median\" or a number");
      } else {
        prm.preference = p["preference"].get<double>();
      }
    }
    prm.top_k = p.value("top_k", prm.top_k);
    prm.central_k = p.value("central_k", prm.central_k);
    prm.selection_size = p.value("selection_size", prm.selection_size);
    prm.min_cluster_size = p.value("min_cluster_size", prm.min_cluster_size);
    prm.min_papers = p.value("min_papers", prm.min_papers);
    prm.min_authors = p.value("min_authors", prm.min_authors);
    prm.seed = p.value("seed", prm.seed);
    prm.mock_encoder = p.value("mock_encoder", prm.mock_encoder);
    prm.mock_dim = p.value("mock_dim", prm.mock_dim);
    prm.max_tokens = p.value("max_tokens", prm.max_tokens);
    prm.scoring.mpd_match_surface = p.value("mpd_match_surface", false);
    prm.scoring.mpd_count_types = p.value("mpd_count_types", false);
    prm.scoring.mpvn_include_aux = p.value("mpvn_include_aux", false);
    const auto basis = p.value("keyword_basis", std::string("surface"));
    if (basis == "surface")
      prm.keyword_basis = profile::TermBasis::Surface;
    else if (basis == "lemma")
      prm.keyword_basis = profile::TermBasis::Lemma;
    else
      throw UsageError("config: keyword_basis must be 'surface' or 'lemma'");
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return cfg;
}

json PipelineConfig::to_json() const {
  const auto& p = params;
  return {{"paths",
           {{"corpus", paths.corpus.string()},
            {"conllu", paths.conllu.string()},
            {"embeddings", paths.embeddings.string()},
            {"mpd", paths.mpd.string()},
            {"mpvn", paths.mpvn.string()},
            {"labels", paths.labels.string()},
            {"output_dir", paths.output_dir.string()}}},
          {"parameters",
           {{"targets_file", p.targets_file.string()},
            {"xai_terms_file", p.xai_terms_file.string()},
            {"xai_word_boundary", p.xai_word_boundary},
            {"clause_mode", clause_mode_name(p.clause_mode)},
            {"damping", p.damping},
            {"max_iter", p.max_iter},
            {"convergence_window", p.convergence_window},
            {"refine_exemplars", p.refine_exemplars},
            {"preference", p.preference ? json(*p.preference) : json("median")},
            {"top_k", p.top_k},
            {"central_k", p.central_k},
            {"selection_size", p.selection_size},
            {"min_cluster_size", p.min_cluster_size},
            {"min_papers", p.min_papers},
            {"min_authors", p.min_authors},
            {"seed", p.seed},
            {"mock_encoder", p.mock_encoder},
            {"mock_dim", p.mock_dim},
            {"max_tokens", p.max_tokens},
            {"mpd_match_surface", p.scoring.mpd_match_surface},
            {"mpd_count_types", p.scoring.mpd_count_types},
            {"mpvn_include_aux", p.scoring.mpvn_include_aux},
            {"keyword_basis", basis_name(p.keyword_basis)}}}};
}

PipelineConfig load_config(const fs::path& file) {
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::parse_error& e) {
    throw UsageError("config " + file.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  return PipelineConfig::from_json(j, file.parent_path());
}

// ---------------------------------------------------------------------------
// Stage names

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::FilterPapers: return "filter-papers";
    case Stage::ExtractOccurrences: return "extract-occurrences";
    case Stage::EmbedMock: return "embed-mock";
    case Stage::ImportEmbeddings: return "import-embeddings";
    case Stage::Cluster: return "cluster";
    case Stage::Score: return "score";
    case Stage::Select: return "select";
    case Stage::Profile: return "profile";
    case Stage::Report: return "report";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (auto s : kStageOrder)
    if (stage_name(s) == name) return s;
  return std::nullopt;
}

std::string_view status_name(StageStatus s) {
  switch (s) {
    case StageStatus::Computed: return "computed";
    case StageStatus::Cached: return "cached";
    case StageStatus::Skipped: return "skipped";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Shared loaders

namespace {

template <class Fn>
auto with_stream(const fs::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return fn(in);
}

std::string sentence_key(std::string_view paper_id, std::string_view sent_id) {
  return std::string(paper_id) + '\x1f' + std::string(sent_id);
}

struct SentenceIndex {
  std::vector<annotation::AnnotatedSentence> sentences;
  std::unordered_map<std::string, std::size_t> by_key;

  const annotation::AnnotatedSentence& at(const annotation::TargetOccurrence& o) const {
    const auto it = by_key.find(sentence_key(o.paper_id, o.sent_id));
    if (it == by_key.end())
      throw DataError("occurrence " + o.occurrence_id + " refers to a sentence missing from the CoNLL-U input");
    return sentences[it->second];
  }
};

SentenceIndex load_sentences(const fs::path& path) {
  SentenceIndex idx;
  idx.sentences = with_stream(path, [&](std::istream& in) { return annotation::parse_conllu(in, path.string()); });
  for (std::size_t i = 0; i < idx.sentences.size(); ++i) {
    const auto& s = idx.sentences[i];
    if (!idx.by_key.emplace(sentence_key(s.paper_id, s.sent_id), i).second)
      throw DataError(path.string() + ": duplicate sentence " + s.paper_id + " / " + s.sent_id);
  }
  return idx;
}

std::vector<annotation::TargetOccurrence> load_occurrence_file(const fs::path& path) {
  return with_stream(path, [&](std::istream& in) { return annotation::load_occurrences(in, path.string()); });
}

embedding::EmbeddingFile load_embedding_file(const fs::path& path) {
  return with_stream(path, [&](std::istream& in) { return embedding::read_embeddings(in, path.string()); });
}

json load_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

}  // namespace

// ---------------------------------------------------------------------------
// Pipeline

struct Pipeline::StageResult {
  json counts = json::object();
};

namespace {

struct StageInput {
  std::string name;
  fs::path path;
  std::string hint;
  bool optional = false;
  bool internal = false;  // produced by an upstream stage
};

struct StagePlan {
  bool skip = false;
  std::vector<StageInput> inputs;
  json params = json::object();
  std::vector<std::string> outputs;
};

json* find_entry(json& manifest, std::string_view name) {
  for (auto& e : manifest["stages"])
    if (e.at("stage").get<std::string>() == name) return &e;
  return nullptr;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config, RunOptions options)
    : config_(std::move(config)), options_(options) {
  if (config_.paths.output_dir.empty()) throw UsageError("no output directory configured");
  fs::create_directories(config_.paths.output_dir);
  lock_path_ = out(files::kLock);
  const int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    lock_path_.clear();
    throw DataError("output directory " + config_.paths.output_dir.string() +
                    " is locked by another run (remove " + files::kLock + " if it is stale)");
  }
  const auto pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);

  const auto manifest_path = out(files::kManifest);
  if (fs::exists(manifest_path)) {
    manifest_ = load_json(manifest_path);
    if (!manifest_.is_object() || !manifest_.contains("stages") || !manifest_["stages"].is_array())
      throw DataError(manifest_path.string() + ": not a pipeline manifest");
  } else {
    manifest_ = {{"format", 1}, {"stages", json::array()}};
  }
  manifest_["seed"] = config_.params.seed;
}

Pipeline::~Pipeline() {
  if (!lock_path_.empty()) {
    std::error_code ec;
    fs::remove(lock_path_, ec);
  }
}

void Pipeline::log(const std::string& msg) const {
  if (options_.log) *options_.log << msg << "\n";
}

void Pipeline::save_manifest() {
  // Stage entries in pipeline order, then the funnel derived from them.
  json ordered = json::array();
  for (auto s : kStageOrder)
    if (auto* e = find_entry(manifest_, stage_name(s))) ordered.push_back(*e);
  manifest_["stages"] = ordered;

  json funnel = json::object();
  for (const auto& e : manifest_["stages"])
    for (const auto& [k, v] : e["counts"].items()) funnel[k] = v;
  manifest_["funnel"] = funnel;
  write_json(out(files::kManifest), manifest_);
}

StageOutcome Pipeline::run(Stage stage) {
  const auto& prm = config_.params;
  const auto name = std::string(stage_name(stage));
  auto upstream = [&](const char* file, std::string_view producer) {
    return StageInput{file, out(file), std::string("missing ") + file + ": run " + std::string(producer) + " first",
                      false, true};
  };
  auto external = [](const char* logical, const fs::path& p, const char* what) {
    return StageInput{logical, p, std::string(what) + " not found: '" + p.string() + "'", false, false};
  };

  StagePlan plan;
  plan.params["seed"] = prm.seed;
  switch (stage) {
    case Stage::FilterPapers:
      plan.inputs = {external("corpus", config_.paths.corpus, "corpus file"),
                     external("xai_terms", prm.xai_terms_file, "XAI term list")};
      plan.params["xai_word_boundary"] = prm.xai_word_boundary;
      plan.outputs = {files::kPapers};
      break;
    case Stage::ExtractOccurrences:
      plan.inputs = {upstream(files::kPapers, "filter-papers"), external("conllu", config_.paths.conllu, "CoNLL-U file"),
                     external("targets", prm.targets_file, "target word list")};
      plan.params["clause_mode"] = clause_mode_name(prm.clause_mode);
      plan.outputs = {files::kOccurrences};
      break;
    case Stage::EmbedMock:
      plan.skip = !prm.mock_encoder;
      plan.inputs = {upstream(files::kOccurrences, "extract-occurrences"),
                     external("conllu", config_.paths.conllu, "CoNLL-U file")};
      plan.params["dim"] = prm.mock_dim;
      plan.params["max_tokens"] = prm.max_tokens;
      plan.params["window"] = embedding::kMockWindow;
      plan.outputs = {files::kMockEmbeddings};
      break;
    case Stage::ImportEmbeddings:
      plan.inputs = {prm.mock_encoder ? upstream(files::kMockEmbeddings, "embed-mock")
                                      : external("embeddings", config_.paths.embeddings, "external embeddings file"),
                     upstream(files::kOccurrences, "extract-occurrences")};
      plan.params["mock_encoder"] = prm.mock_encoder;
      plan.outputs = {files::kEmbeddings, files::kEmbeddingReport};
      break;
    case Stage::Cluster:
      plan.inputs = {upstream(files::kOccurrences, "extract-occurrences"),
                     {files::kEmbeddings, out(files::kEmbeddings),
                      std::string("missing ") + files::kEmbeddings + ": run embed-mock or import-embeddings first", false,
                      true},
                     external("targets", prm.targets_file, "target word list")};
      plan.params["damping"] = prm.damping;
      plan.params["max_iter"] = prm.max_iter;
      plan.params["convergence_window"] = prm.convergence_window;
      plan.params["refine_exemplars"] = prm.refine_exemplars;
      plan.params["preference"] = prm.preference ? json(*prm.preference) : json("median");
      plan.outputs = {files::kClusters};
      break;
    case Stage::Score:
      plan.inputs = {upstream(files::kClusters, "cluster"), upstream(files::kOccurrences, "extract-occurrences"),
                     upstream(files::kPapers, "filter-papers"), external("conllu", config_.paths.conllu, "CoNLL-U file"),
                     external("mpd", config_.paths.mpd, "MPD lexicon"),
                     external("mpvn", config_.paths.mpvn, "MPVN lexicon")};
      plan.params["mpd_match_surface"] = prm.scoring.mpd_match_surface;
      plan.params["mpd_count_types"] = prm.scoring.mpd_count_types;
      plan.params["mpvn_include_aux"] = prm.scoring.mpvn_include_aux;
      plan.outputs = {files::kScores};
      break;
    case Stage::Select:
      plan.inputs = {upstream(files::kScores, "score")};
      plan.params["selection_size"] = prm.selection_size;
      plan.params["min_cluster_size"] = prm.min_cluster_size;
      plan.params["min_papers"] = prm.min_papers;
      plan.params["min_authors"] = prm.min_authors;
      plan.outputs = {files::kSelection};
      break;
    case Stage::Profile:
      plan.inputs = {upstream(files::kSelection, "select"),
                     upstream(files::kScores, "score"),
                     upstream(files::kClusters, "cluster"),
                     upstream(files::kOccurrences, "extract-occurrences"),
                     {files::kEmbeddings, out(files::kEmbeddings),
                      std::string("missing ") + files::kEmbeddings + ": run embed-mock or import-embeddings first", false,
                      true},
                     external("conllu", config_.paths.conllu, "CoNLL-U file")};
      plan.params["top_k"] = prm.top_k;
      plan.params["central_k"] = prm.central_k;
      plan.params["keyword_basis"] = basis_name(prm.keyword_basis);
      plan.outputs = {files::kProfiles};
      break;
    case Stage::Report:
      plan.inputs = {upstream(files::kProfiles, "profile")};
      if (!config_.paths.labels.empty()) plan.inputs.push_back(external("labels", config_.paths.labels, "label file"));
      plan.outputs = {files::kReportJson, files::kReportMarkdown};
      break;
  }

  json* entry = find_entry(manifest_, name);
  if (plan.skip) {
    json e = {{"stage", name}, {"status", "skipped"}, {"inputs", json::object()}, {"params", plan.params},
              {"outputs", json::object()}, {"counts", json::object()}};
    if (entry)
      *entry = e;
    else
      manifest_["stages"].push_back(e);
    save_manifest();
    log(name + ": skipped");
    return {stage, StageStatus::Skipped};
  }

  json input_digests = json::object();
  for (const auto& in : plan.inputs) {
    if (!fs::exists(in.path)) {
      if (in.optional) {
        input_digests[in.name] = nullptr;
        continue;
      }
      throw DataError(name + ": " + in.hint);
    }
    input_digests[in.name] = file_digest(in.path);
    if (options_.strict && in.internal) {
      // The upstream stage recorded what it wrote; anything else means the
      // file was edited behind the pipeline's back.
      for (const auto& e : manifest_["stages"]) {
        const auto& outs = e["outputs"];
        if (outs.contains(in.name) && outs[in.name] != input_digests[in.name])
          throw DataError(name + ": digest mismatch for " + in.name + " (modified since " +
                          e["stage"].get<std::string>() + " wrote it)");
      }
    }
  }

  if (entry && !options_.force && (*entry)["inputs"] == input_digests && (*entry)["params"] == plan.params &&
      (*entry)["status"] != "skipped") {
    bool fresh = true;
    for (const auto& o : plan.outputs) {
      const auto p = out(o.c_str());
      if (!fs::exists(p) || !(*entry)["outputs"].contains(o)) {
        fresh = false;
        break;
      }
      if (file_digest(p) != (*entry)["outputs"][o]) {
        if (options_.strict) throw DataError(name + ": digest mismatch for output " + o);
        fresh = false;
        break;
      }
    }
    if (fresh) {
      (*entry)["status"] = "cached";
      save_manifest();
      log(name + ": cache hit");
      return {stage, StageStatus::Cached};
    }
  }

  StageResult result;
  switch (stage) {
    case Stage::FilterPapers: result = filter_papers(); break;
    case Stage::ExtractOccurrences: result = extract_occurrences(); break;
    case Stage::EmbedMock: result = embed_mock(); break;
    case Stage::ImportEmbeddings: result = import_embeddings(); break;
    case Stage::Cluster: result = cluster(); break;
    case Stage::Score: result = score(); break;
    case Stage::Select: result = select(); break;
    case Stage::Profile: result = profile(); break;
    case Stage::Report: result = report(); break;
  }

  json output_digests = json::object();
  for (const auto& o : plan.outputs) output_digests[o] = file_digest(out(o.c_str()));
  json e = {{"stage", name},           {"status", "computed"},          {"inputs", input_digests},
            {"params", plan.params},   {"outputs", output_digests},     {"counts", result.counts}};
  entry = find_entry(manifest_, name);
  if (entry)
    *entry = e;
  else
    manifest_["stages"].push_back(e);
  save_manifest();
  log(name + ": computed");
  return {stage, StageStatus::Computed};
}

std::vector<StageOutcome> Pipeline::run_all() {
  std::vector<StageOutcome> outcomes;
  for (auto s : kStageOrder) outcomes.push_back(run(s));
  return outcomes;
}

// ---------------------------------------------------------------------------
// Stages

Pipeline::StageResult Pipeline::filter_papers() {
  const auto papers = with_stream(config_.paths.corpus, [&](std::istream& in) {
    return corpus::load_papers(in, config_.paths.corpus.string());
  });
  auto terms = with_stream(config_.params.xai_terms_file, [](std::istream& in) { return corpus::load_xai_terms(in); });
  terms.require_word_boundary = config_.params.xai_word_boundary;
  const auto kept = corpus::filter_corpus(papers, terms);
  std::string buf;
  for (const auto& p : kept) buf += corpus::paper_to_json_line(p);
  write_file_atomic(out(files::kPapers), buf);
  return {{{"papers_in", papers.size()}, {"papers_xai", kept.size()}}};
}

Pipeline::StageResult Pipeline::extract_occurrences() {
  const auto papers = with_stream(out(files::kPapers), [&](std::istream& in) {
    return corpus::load_papers(in, files::kPapers);
  });
  const auto lexicon =
      with_stream(config_.params.targets_file, [](std::istream& in) { return annotation::load_target_lexicon(in); });
  const auto index = load_sentences(config_.paths.conllu);

  // Text units decide which annotated sentences belong to the analysis: the
  // body when a paper has one, the abstract otherwise.
  std::vector<const annotation::AnnotatedSentence*> selected;
  std::size_t units = 0;
  for (const auto& p : papers) {
    for (const auto& u : corpus::select_text_units(p)) {
      ++units;
      const auto it = index.by_key.find(sentence_key(p.paper_id, u.unit_id));
      if (it != index.by_key.end()) selected.push_back(&index.sentences[it->second]);
    }
  }
  if (units > 0 && selected.empty())
    log("extract-occurrences: warning: no CoNLL-U sentence carries a text-unit sent_id (<paper_id>:<n>)");

  std::vector<std::vector<annotation::TargetOccurrence>> per_sentence(selected.size());
  std::vector<char> has_mention(selected.size(), 0);
  parallel_for(selected.size(), [&](std::size_t i) {
    has_mention[i] = annotation::match_targets(*selected[i], lexicon).empty() ? 0 : 1;
    per_sentence[i] = annotation::extract_subject_occurrences(*selected[i], lexicon, config_.params.clause_mode);
  });

  std::string buf;
  std::set<std::string> ids;
  std::size_t occurrences = 0, target_sentences = 0, subject_sentences = 0;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    target_sentences += has_mention[i];
    subject_sentences += per_sentence[i].empty() ? 0 : 1;
    for (const auto& o : per_sentence[i]) {
      if (!ids.insert(o.occurrence_id).second) throw DataError("duplicate occurrence id " + o.occurrence_id);
      buf += annotation::occurrence_to_json_line(o);
      ++occurrences;
    }
  }
  write_file_atomic(out(files::kOccurrences), buf);
  return {{{"text_units", units},
           {"sentences", selected.size()},
           {"target_sentences", target_sentences},
           {"subject_sentences", subject_sentences},
           {"occurrences", occurrences}}};
}

Pipeline::StageResult Pipeline::embed_mock() {
  const auto occurrences = load_occurrence_file(out(files::kOccurrences));
  const auto index = load_sentences(config_.paths.conllu);
  const auto& prm = config_.params;
  std::vector<std::optional<embedding::EmbeddingRecord>> encoded(occurrences.size());
  parallel_for(occurrences.size(), [&](std::size_t i) {
    const auto& o = occurrences[i];
    const auto clause_len = static_cast<std::size_t>(o.clause_span.last - o.clause_span.first + 1);
    if (clause_len > prm.max_tokens) return;
    encoded[i] = embedding::mock_encode(o, index.at(o), prm.mock_dim, prm.seed);
  });
  std::vector<embedding::EmbeddingRecord> records;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    if (encoded[i]) {
      records.push_back(std::move(*encoded[i]));
    } else {
      ++skipped;
      log("embed-mock: skipped over-length clause " + occurrences[i].occurrence_id);
    }
  }
  std::ostringstream os;
  embedding::write_embeddings(os, records, prm.mock_dim, {{"encoder", "mock"}, {"seed", prm.seed}});
  write_file_atomic(out(files::kMockEmbeddings), os.str());
  return {{{"mock_encoded", records.size()}, {"mock_skipped", skipped}}};
}

Pipeline::StageResult Pipeline::import_embeddings() {
  const auto source = config_.params.mock_encoder ? out(files::kMockEmbeddings) : config_.paths.embeddings;
  const auto file = load_embedding_file(source);
  const auto occurrences = load_occurrence_file(out(files::kOccurrences));
  const auto report = embedding::validate_embeddings(file.records, occurrences);
  for (const auto& id : report.skipped) log("import-embeddings: no vector for " + id + " (skipped by encoder)");

  // Canonical order: occurrence order.
  std::unordered_map<std::string, const embedding::EmbeddingRecord*> by_id;
  for (const auto& r : file.records) by_id[r.occurrence_id] = &r;
  std::vector<embedding::EmbeddingRecord> ordered;
  for (const auto& o : occurrences)
    if (auto it = by_id.find(o.occurrence_id); it != by_id.end()) ordered.push_back(*it->second);
  json meta = file.header;
  meta["seed"] = config_.params.seed;
  std::ostringstream os;
  embedding::write_embeddings(os, ordered, file.dim, meta);
  write_file_atomic(out(files::kEmbeddings), os.str());
  json rep = report.to_json();
  rep["seed"] = config_.params.seed;
  rep["dim"] = file.dim;
  write_json(out(files::kEmbeddingReport), rep);
  return {{{"embedded", ordered.size()}, {"embedding_skipped", report.skipped.size()}}};
}

Pipeline::StageResult Pipeline::cluster() {
  const auto occurrences = load_occurrence_file(out(files::kOccurrences));
  const auto file = load_embedding_file(out(files::kEmbeddings));
  const auto lexicon =
      with_stream(config_.params.targets_file, [](std::istream& in) { return annotation::load_target_lexicon(in); });
  embedding::validate_embeddings(file.records, occurrences);

  std::unordered_map<std::string, const embedding::EmbeddingRecord*> by_id;
  for (const auto& r : file.records) by_id[r.occurrence_id] = &r;

  // Targets in lexicon order, then any target the lexicon does not list.
  std::vector<std::string> order = lexicon.targets();
  for (const auto& o : occurrences)
    if (std::find(order.begin(), order.end(), o.target) == order.end()) order.push_back(o.target);

  struct Job {
    std::string target;
    std::vector<std::string> ids;
    std::vector<cluster::Vector> vectors;
  };
  std::vector<Job> jobs;
  for (const auto& t : order) {
    Job job{t, {}, {}};
    for (const auto& o : occurrences) {
      if (o.target != t) continue;
      const auto it = by_id.find(o.occurrence_id);
      if (it == by_id.end()) continue;
      job.ids.push_back(o.occurrence_id);
      job.vectors.push_back(it->second->vector);
    }
    if (!job.ids.empty()) jobs.push_back(std::move(job));
  }

  const cluster::AffinityParams ap{config_.params.damping, config_.params.max_iter, config_.params.convergence_window,
                                     config_.params.refine_exemplars};
  std::vector<cluster::TargetClustering> results(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    results[i] = cluster::cluster_target_word(jobs[i].target, std::move(jobs[i].ids), jobs[i].vectors, ap,
                                              config_.params.preference);
  });

  json targets = json::array();
  int next_id = 1;
  std::size_t total = 0, excluded = 0;
  for (const auto& r : results) {
    json j = r.to_json();
    json ids = json::array();
    if (!r.excluded) {
      for (std::size_t c = 0; c < r.assignment.cluster_count(); ++c) ids.push_back(next_id++);
      total += r.assignment.cluster_count();
    } else {
      ++excluded;
      log("cluster: excluded target '" + r.target + "' (" + r.exclusion_reason + ")");
    }
    j["cluster_ids"] = ids;
    targets.push_back(j);
  }
  write_json(out(files::kClusters), {{"seed", config_.params.seed}, {"targets", targets}});
  return {{{"targets_clustered", results.size()}, {"targets_excluded", excluded}, {"clusters_total", total}}};
}

Pipeline::StageResult Pipeline::score() {
  const auto clusters = load_json(out(files::kClusters));
  const auto occurrences = load_occurrence_file(out(files::kOccurrences));
  const auto papers = with_stream(out(files::kPapers), [&](std::istream& in) {
    return corpus::load_papers(in, files::kPapers);
  });
  const auto index = load_sentences(config_.paths.conllu);
  lexicon::Warnings warnings;
  const auto mpd = with_stream(config_.paths.mpd, [&](std::istream& in) {
    return lexicon::load_mpd(in, &warnings, config_.paths.mpd.string());
  });
  const auto mpvn = with_stream(config_.paths.mpvn, [&](std::istream& in) {
    return lexicon::load_mpvn(in, &warnings, config_.paths.mpvn.string());
  });
  for (const auto& w : warnings) log("score: warning: " + w);

  std::unordered_map<std::string, const annotation::TargetOccurrence*> occ;
  for (const auto& o : occurrences) occ[o.occurrence_id] = &o;
  std::unordered_map<std::string, const corpus::PaperRecord*> paper_by_id;
  for (const auto& p : papers) paper_by_id[p.paper_id] = &p;

  json out_clusters = json::array();
  for (const auto& t : clusters.at("targets")) {
    if (t.at("excluded").get<bool>()) continue;
    const auto tc = cluster::TargetClustering::from_json(t);
    const auto cluster_ids = t.at("cluster_ids").get<std::vector<int>>();
    for (std::size_t c = 0; c < cluster_ids.size(); ++c) {
      std::vector<std::string> members;
      std::vector<lexicon::TokenSlice> slices;
      std::set<std::string> paper_ids, authors;
      for (std::size_t i = 0; i < tc.occurrence_ids.size(); ++i) {
        if (tc.assignment.labels[i] != static_cast<int>(c)) continue;
        const auto it = occ.find(tc.occurrence_ids[i]);
        if (it == occ.end()) throw DataError("clusters.json references unknown occurrence " + tc.occurrence_ids[i]);
        const auto& o = *it->second;
        members.push_back(o.occurrence_id);
        slices.push_back(lexicon::clause_tokens(index.at(o), o.clause_span));
        paper_ids.insert(o.paper_id);
        if (const auto pt = paper_by_id.find(o.paper_id); pt != paper_by_id.end())
          authors.insert(pt->second->authors.begin(), pt->second->authors.end());
      }
      const auto mpd_score = lexicon::cluster_mpd_score(slices, mpd, config_.params.scoring);
      const auto mpvn_score = lexicon::cluster_mpvn_score(slices, mpvn, config_.params.scoring);
      const double sil = tc.silhouette ? tc.silhouette->per_cluster.at(c) : 0.0;
      out_clusters.push_back({{"cluster_id", cluster_ids[c]},
                              {"target", tc.target},
                              {"n", members.size()},
                              {"mpd_matches", mpd_score.matches},
                              {"mpd_normalized", mpd_score.normalized},
                              {"mpvn_score", mpvn_score ? json(*mpvn_score) : json(nullptr)},
                              {"mean_silhouette", sil},
                              {"papers", paper_ids},
                              {"authors", authors},
                              {"members", members}});
    }
  }
  write_json(out(files::kScores), {{"seed", config_.params.seed}, {"clusters", out_clusters}});
  return {{{"clusters_scored", out_clusters.size()}}};
}

namespace {

selection::ClusterCandidate candidate_from_json(const json& c) {
  selection::ClusterCandidate x;
  x.cluster_id = c.at("cluster_id").get<int>();
  x.target = c.at("target").get<std::string>();
  x.papers = c.at("papers").get<std::set<std::string>>();
  x.authors = c.at("authors").get<std::set<std::string>>();
  x.scores.cluster_id = x.cluster_id;
  x.scores.n = c.at("n").get<std::size_t>();
  x.scores.mpd_matches = c.at("mpd_matches").get<std::size_t>();
  x.scores.mpd_normalized = c.at("mpd_normalized").get<double>();
  if (!c.at("mpvn_score").is_null()) x.scores.mpvn_score = c["mpvn_score"].get<double>();
  x.scores.mean_silhouette = c.at("mean_silhouette").get<double>();
  return x;
}

}  // namespace

Pipeline::StageResult Pipeline::select() {
  const auto scores = load_json(out(files::kScores));
  std::vector<selection::ClusterCandidate> all;
  for (const auto& c : scores.at("clusters")) all.push_back(candidate_from_json(c));
  const selection::ExclusionRules rules{config_.params.min_cluster_size, config_.params.min_papers,
                                        config_.params.min_authors};
  const auto retained = selection::apply_exclusions(all, rules);
  const auto report = selection::select_for_review(retained, config_.params.selection_size, all.size());
  json j = report.to_json();
  j["seed"] = config_.params.seed;
  json kept = json::array();
  for (const auto& c : retained) kept.push_back(c.cluster_id);
  j["retained"] = kept;
  write_json(out(files::kSelection), j);
  return {{{"clusters_after_exclusion", retained.size()}, {"clusters_selected", report.selected()}}};
}

Pipeline::StageResult Pipeline::profile() {
  const auto selection_doc = load_json(out(files::kSelection));
  const auto selection = selection::SelectionReport::from_json(selection_doc);
  const auto scores = load_json(out(files::kScores));
  const auto occurrences = load_occurrence_file(out(files::kOccurrences));
  const auto file = load_embedding_file(out(files::kEmbeddings));
  const auto index = load_sentences(config_.paths.conllu);

  std::unordered_map<std::string, const annotation::TargetOccurrence*> occ;
  for (const auto& o : occurrences) occ[o.occurrence_id] = &o;
  std::unordered_map<std::string, const embedding::EmbeddingRecord*> vec;
  for (const auto& r : file.records) vec[r.occurrence_id] = &r;
  std::map<int, const selection::SelectedCluster*> chosen;
  for (const auto& s : selection.clusters) chosen[s.cluster_id] = &s;

  // Keyword documents are all clusters of the same target.
  std::map<std::string, std::vector<const json*>> by_target;
  std::vector<std::string> target_order;
  for (const auto& c : scores.at("clusters")) {
    const auto t = c.at("target").get<std::string>();
    if (!by_target.count(t)) target_order.push_back(t);
    by_target[t].push_back(&c);
  }

  const profile::KeywordOptions kw_opt{config_.params.top_k, config_.params.keyword_basis, true};
  std::vector<profile::ClusterProfile> profiles;
  for (const auto& t : target_order) {
    const auto& docs = by_target[t];
    const bool any_selected = std::any_of(docs.begin(), docs.end(), [&](const json* c) {
      return chosen.count(c->at("cluster_id").get<int>()) > 0;
    });
    if (!any_selected) continue;
    std::vector<std::vector<lexicon::TokenSlice>> slices(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d)
      for (const auto& id : docs[d]->at("members")) {
        const auto& o = *occ.at(id.get<std::string>());
        slices[d].push_back(lexicon::clause_tokens(index.at(o), o.clause_span));
      }
    const auto keywords = profile::tfidf_keywords(slices, kw_opt);
    for (std::size_t d = 0; d < docs.size(); ++d) {
      const auto& c = *docs[d];
      const int id = c.at("cluster_id").get<int>();
      const auto sel = chosen.find(id);
      if (sel == chosen.end()) continue;
      profile::ClusterProfile p;
      p.target = t;
      p.cluster_id = id;
      p.criteria = sel->second->criteria;
      const auto cand = candidate_from_json(c);
      p.scores = cand.scores;
      p.n = cand.scores.n;
      p.keywords = keywords[d];
      std::vector<std::string> ids, texts;
      std::vector<cluster::Vector> vectors;
      std::size_t first_person = 0;
      for (const auto& m : c.at("members")) {
        const auto mid = m.get<std::string>();
        const auto& o = *occ.at(mid);
        ids.push_back(mid);
        texts.push_back(o.clause_text);
        vectors.push_back(vec.at(mid)->vector);
        first_person += o.first_person ? 1 : 0;
      }
      p.central = profile::central_sentences(ids, texts, vectors, config_.params.central_k);
      p.first_person_share = ids.empty() ? 0.0 : static_cast<double>(first_person) / static_cast<double>(ids.size());
      profiles.push_back(std::move(p));
    }
  }
  std::sort(profiles.begin(), profiles.end(),
            [](const auto& a, const auto& b) { return a.cluster_id < b.cluster_id; });
  json list = json::array();
  for (const auto& p : profiles) list.push_back(p.to_json());
  write_json(out(files::kProfiles),
             {{"seed", config_.params.seed}, {"totals", selection_doc.at("totals")}, {"profiles", list}});
  return {{{"clusters_profiled", profiles.size()}}};
}

Pipeline::StageResult Pipeline::report() {
  const auto doc = load_json(out(files::kProfiles));
  std::vector<profile::ClusterProfile> profiles;
  for (const auto& p : doc.at("profiles")) profiles.push_back(profile::ClusterProfile::from_json(p));
  std::optional<profile::Aggregation> agg;
  if (!config_.paths.labels.empty()) {
    const auto labels = with_stream(config_.paths.labels, [&](std::istream& in) {
      return profile::load_labels(in, config_.paths.labels.string());
    });
    agg = profile::aggregate_labels(profiles, labels);
  }
  const json context = {{"seed", config_.params.seed}, {"totals", doc.at("totals")}};
  const auto rendered = profile::render_report(profiles, agg, context);
  write_file_atomic(out(files::kReportJson), rendered.json);
  write_file_atomic(out(files::kReportMarkdown), rendered.markdown);
  json counts = {{"clusters_reported", profiles.size()}};
  if (agg) {
    std::size_t labeled = 0;
    for (const auto& [label, n] : agg->clusters) labeled += n;
    counts["clusters_labeled"] = labeled;
  }
  return {counts};
}

}  // namespace mindscan::pipeline
