// Command-line front end: one subcommand per pipeline stage plus "all".
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mindscan/error.hpp"
#include "mindscan/pipeline.hpp"

namespace ms = mindscan;
namespace mp = mindscan::pipeline;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> out, corpus, conllu, embeddings, mpd, mpvn, labels, targets, xai_terms;
  std::optional<std::string> clause_mode, keyword_basis, preference;
  std::optional<std::uint64_t> seed;
  std::optional<double> damping;
  std::optional<int> max_iter, convergence_window;
  std::optional<std::size_t> top_k, central_k, selection_size, min_cluster_size, min_papers, min_authors, mock_dim,
      max_tokens;
  std::optional<bool> mock, word_boundary, refine;
  bool strict = false, force = false, quiet = false;
};

mp::PipelineConfig build_config(const Overrides& o) {
  mp::PipelineConfig cfg = o.config.empty() ? mp::PipelineConfig::from_json(nlohmann::json::object(), ".")
                                            : mp::load_config(o.config);
  auto& p = cfg.paths;
  if (o.out) p.output_dir = *o.out;
  if (o.corpus) p.corpus = *o.corpus;
  if (o.conllu) p.conllu = *o.conllu;
  if (o.embeddings) p.embeddings = *o.embeddings;
  if (o.mpd) p.mpd = *o.mpd;
  if (o.mpvn) p.mpvn = *o.mpvn;
  if (o.labels) p.labels = *o.labels;

  auto& q = cfg.params;
  if (o.targets) q.targets_file = *o.targets;
  if (o.xai_terms) q.xai_terms_file = *o.xai_terms;
  if (o.word_boundary) q.xai_word_boundary = *o.word_boundary;
  if (o.clause_mode) {
    if (*o.clause_mode == "subtree")
      q.clause_mode = ms::annotation::ClauseMode::Subtree;
    else if (*o.clause_mode == "sentence")
      q.clause_mode = ms::annotation::ClauseMode::Sentence;
    else
      throw ms::UsageError("--clause-mode must be 'subtree' or 'sentence'");
  }
  if (o.keyword_basis) {
    if (*o.keyword_basis == "surface")
      q.keyword_basis = ms::profile::TermBasis::Surface;
    else if (*o.keyword_basis == "lemma")
      q.keyword_basis = ms::profile::TermBasis::Lemma;
    else
      throw ms::UsageError("--keyword-basis must be 'surface' or 'lemma'");
  }
  if (o.preference) {
    if (*o.preference == "median") {
      q.preference.reset();
    } else {
      try {
        std::size_t used = 0;
        q.preference = std::stod(*o.preference, &used);
        if (used != o.preference->size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ms::UsageError("--preference must be 'median' or a number");
      }
    }
  }
  if (o.seed) q.seed = *o.seed;
  if (o.damping) q.damping = *o.damping;
  if (o.max_iter) q.max_iter = *o.max_iter;
  if (o.convergence_window) q.convergence_window = *o.convergence_window;
  if (o.refine) q.refine_exemplars = *o.refine;
  if (o.top_k) q.top_k = *o.top_k;
  if (o.central_k) q.central_k = *o.central_k;
  if (o.selection_size) q.selection_size = *o.selection_size;
  if (o.min_cluster_size) q.min_cluster_size = *o.min_cluster_size;
  if (o.min_papers) q.min_papers = *o.min_papers;
  if (o.min_authors) q.min_authors = *o.min_authors;
  if (o.mock) q.mock_encoder = *o.mock;
  if (o.mock_dim) q.mock_dim = *o.mock_dim;
  if (o.max_tokens) q.max_tokens = *o.max_tokens;

  if (q.damping < 0.5 || q.damping >= 1.0) throw ms::UsageError("damping must lie in [0.5, 1)");
  if (q.max_iter < 1 || q.convergence_window < 1) throw ms::UsageError("max-iter and convergence-window must be positive");
  if (p.output_dir.empty()) throw ms::UsageError("no output directory: pass --out or set paths.output_dir");
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mindscan: find, cluster, score and profile mind-attributing language about AI systems"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Overrides o;
  app.add_option("-c,--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("-o,--out", o.out, "output directory");
  app.add_option("--corpus", o.corpus, "paper records (JSONL)");
  app.add_option("--conllu", o.conllu, "annotated sentences (CoNLL-U)");
  app.add_option("--embeddings", o.embeddings, "external embeddings file");
  app.add_option("--mpd", o.mpd, "mental-process dictionary");
  app.add_option("--mpvn", o.mpvn, "verb mental-process norms (TSV)");
  app.add_option("--labels", o.labels, "manual cluster labels (TSV)");
  app.add_option("--targets", o.targets, "target word list (TSV)");
  app.add_option("--xai-terms", o.xai_terms, "XAI term list");
  app.add_option("--xai-word-boundary", o.word_boundary, "require word boundaries around XAI terms");
  app.add_option("--clause-mode", o.clause_mode, "subtree | sentence");
  app.add_option("--keyword-basis", o.keyword_basis, "surface | lemma");
  app.add_option("--preference", o.preference, "affinity propagation preference: median or a number");
  app.add_option("--seed", o.seed, "seed recorded in every output and used by the mock encoder");
  app.add_option("--damping", o.damping);
  app.add_option("--max-iter", o.max_iter);
  app.add_option("--convergence-window", o.convergence_window);
  app.add_flag_callback("--no-refine", [&] { o.refine = false; }, "keep the raw message-passing exemplars");
  app.add_option("--top-k", o.top_k, "keywords per cluster");
  app.add_option("--central-k", o.central_k, "central sentences per cluster");
  app.add_option("--selection-size", o.selection_size, "length of each ranked list");
  app.add_option("--min-cluster-size", o.min_cluster_size);
  app.add_option("--min-papers", o.min_papers);
  app.add_option("--min-authors", o.min_authors);
  app.add_option("--mock-dim", o.mock_dim);
  app.add_option("--max-tokens", o.max_tokens, "clauses longer than this are not encoded");
  app.add_flag_callback("--mock", [&] { o.mock = true; }, "use the deterministic mock encoder");
  app.add_flag_callback("--no-mock", [&] { o.mock = false; }, "import external embeddings");
  app.add_flag("--strict", o.strict, "fail when a recorded digest no longer matches its file");
  app.add_flag("--force", o.force, "recompute even when cached");
  app.add_flag("-q,--quiet", o.quiet, "no progress log");

  std::optional<mp::Stage> stage;
  bool all = false;
  for (auto s : mp::kStageOrder) {
    auto* sub = app.add_subcommand(std::string(mp::stage_name(s)), "run the " + std::string(mp::stage_name(s)) + " stage");
    sub->callback([&stage, s] { stage = s; });
  }
  app.add_subcommand("all", "run every stage in order")->callback([&all] { all = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const auto cfg = build_config(o);
    mp::Pipeline pipeline(cfg, {o.strict, o.force, o.quiet ? nullptr : &std::cerr});
    if (all)
      pipeline.run_all();
    else
      pipeline.run(*stage);
  } catch (const ms::UsageError& e) {
    std::cerr << "mindscan: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "mindscan: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
