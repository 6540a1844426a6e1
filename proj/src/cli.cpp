#include "ragbench/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>

#include "ragbench/config.hpp"
#include "ragbench/error.hpp"
#include "ragbench/grid.hpp"

namespace ragbench::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::size_t> parallelism;
  std::optional<std::uint64_t> seed;
};

config::RunConfig load(const GlobalFlags& flags) {
  auto cfg = config::load_config(flags.config);
  if (flags.parallelism) {
    if (*flags.parallelism < 1) throw ConfigError("--parallelism must be >= 1");
    cfg.parallelism = *flags.parallelism;
  }
  if (flags.seed) cfg.apply_seed(*flags.seed);
  cfg.artifacts.parallelism = cfg.parallelism;
  return cfg;
}

std::vector<grid::Preset> catalog(const config::RunConfig& cfg) {
  auto base = cfg.pipeline;
  base.embedder = cfg.embedder;
  return grid::preset_catalog(base, cfg.embedder_names);
}

void require_path(const std::string& value, const std::string& field) {
  if (value.empty()) throw ConfigError(field + " is required");
  if (!fs::exists(value)) throw ConfigError(field + ": not found: " + value);
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

// ---------------------------------------------------------------------------

struct IndexFlags {
  std::string strategy;
  std::string index_kind;
  std::string preset;
};

int cmd_index(const GlobalFlags& g, const IndexFlags& f, std::ostream& out) {
  const auto cfg = load(g);
  require_path(cfg.paths.corpus, "paths.corpus");
  if (cfg.paths.index_dir.empty()) throw ConfigError("paths.index_dir is required");

  struct Plan {
    bool sparse = false;
    bool dense = false;
    std::vector<backend::BackendConfig> embedders;
  };
  std::map<corpus::ChunkStrategy, Plan> plans;
  auto add = [&](const generate::PipelineConfig& p) {
    auto& plan = plans[p.chunking.strategy];
    const auto kind = p.retrieval.index_kind;
    plan.sparse |= kind != retrieve::IndexKind::dense;
    if (kind != retrieve::IndexKind::sparse) {
      plan.dense = true;
      const bool known = std::any_of(plan.embedders.begin(), plan.embedders.end(),
                                     [&](const auto& e) { return e.model_name == p.embedder.model_name; });
      if (!known) plan.embedders.push_back(p.embedder);
    }
  };
  if (!f.preset.empty()) {
    for (const auto& p : grid::select_presets(catalog(cfg), f.preset)) {
      if (p.config.rag_enabled) add(p.config);
    }
  } else {
    auto p = cfg.pipeline;
    if (!f.strategy.empty()) p.chunking.strategy = corpus::chunk_strategy_from_string(f.strategy);
    if (!f.index_kind.empty()) p.retrieval.index_kind = retrieve::index_kind_from_string(f.index_kind);
    add(p);
  }

  const auto docs = corpus::ingest(cfg.paths.corpus);
  out << "ingested " << docs.size() << " documents from " << cfg.paths.corpus << "\n";
  for (const auto& [strategy, plan] : plans) {
    auto chunking = cfg.pipeline.chunking;
    chunking.strategy = strategy;
    const auto kind = plan.sparse && plan.dense ? retrieve::IndexKind::hybrid
                      : plan.sparse             ? retrieve::IndexKind::sparse
                                                : retrieve::IndexKind::dense;
    const auto s = grid::write_index(cfg.paths.index_dir, docs, chunking, kind, plan.embedders, cfg.artifacts);
    out << corpus::to_string(strategy) << ": " << s.chunks << " chunks";
    if (s.large_chunks) out << ", " << s.large_chunks << " large chunks";
    if (plan.sparse) out << ", sparse index " << s.sparse_terms << " terms";
    for (const auto& [model, n] : s.dense) out << ", dense " << model << " " << n << " vectors";
    out << " -> " << s.dir << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_label(const GlobalFlags& g, std::ostream& out, std::ostream& err) {
  const auto cfg = load(g);
  require_path(cfg.paths.query_set, "paths.query_set");
  if (cfg.paths.labeled.empty()) throw ConfigError("paths.labeled (or paths.model_dir) is required");
  if (cfg.paths.index_dir.empty()) throw ConfigError("paths.index_dir is required");

  auto lcfg = cfg.pipeline;
  lcfg.rag_enabled = true;
  lcfg.retrieval.index_kind = retrieve::IndexKind::hybrid;
  auto artifacts = grid::ArtifactCache::from_directory(cfg.paths.index_dir, cfg.artifacts);
  const auto indexes = artifacts->indexes(lcfg);
  const auto embedder = artifacts->embedder(lcfg.embedder);
  const auto llm = backend::make_backend(cfg.llm);

  const auto pairs = qclass::read_query_pairs(cfg.paths.query_set);
  const auto retriever = qclass::hybrid_retriever(
      *indexes, *embedder, lcfg.chunking.strategy == corpus::ChunkStrategy::small2big);
  const auto result = qclass::label_dataset(pairs, retriever, *llm, cfg.label_k, cfg.parallelism);
  for (const auto& e : result.errors) err << "skipped " << e << "\n";
  if (result.labeled.empty() && !pairs.empty()) {
    err << "error: every sample failed to label\n";
    return kExitRuntime;
  }
  if (fs::path(cfg.paths.labeled).has_parent_path()) fs::create_directories(fs::path(cfg.paths.labeled).parent_path());
  qclass::write_labeled(cfg.paths.labeled, result.labeled);

  char rate[32];
  std::snprintf(rate, sizeof rate, "%.1f", 100.0 * result.positive_rate());
  out << "labeled " << result.labeled.size() << " queries (" << result.skipped << " skipped) -> "
      << cfg.paths.labeled << "\n";
  out << "positive rate: " << rate << "%\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_train(const GlobalFlags& g, std::ostream& out) {
  const auto cfg = load(g);
  if (cfg.paths.model_dir.empty()) throw ConfigError("paths.model_dir is required");
  if (!fs::exists(cfg.paths.labeled)) {
    throw ConfigError("missing labeled dataset: " + cfg.paths.labeled + " (run label)");
  }
  const auto rows = qclass::read_labeled(cfg.paths.labeled);
  const auto split = qclass::split_dataset(rows, cfg.split);
  const auto embedder = backend::make_backend(cfg.pipeline.embedder);
  const auto result = qclass::train_classifier(split.train, split.dev, *embedder, cfg.train);
  fs::create_directories(cfg.paths.model_dir);
  result.model.save(cfg.classifier_path());

  json metrics = {{"n_train", split.train.size()},
                  {"n_dev", split.dev.size()},
                  {"n_test", split.test.size()},
                  {"best_dev_accuracy", result.best_dev_accuracy},
                  {"best_epoch", result.best_epoch},
                  {"embedder", cfg.pipeline.embedder.model_name}};
  out << "split: " << split.train.size() << " train / " << split.dev.size() << " dev / " << split.test.size()
      << " test\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "best dev accuracy %.3f at epoch %zu\n", result.best_dev_accuracy,
                result.best_epoch);
  out << buf;
  if (!split.test.empty()) {
    const auto m = qclass::evaluate_classifier(result.model, split.test, *embedder);
    metrics["test"] = {{"n", split.test.size()}, {"acc", m.accuracy}, {"f1", m.f1}};
    std::snprintf(buf, sizeof buf, "test acc %.3f  F1 %.3f\n", m.accuracy, m.f1);
    out << buf;
  }
  write_file(fs::path(cfg.paths.model_dir) / "metrics.json", metrics.dump(2) + "\n");
  out << "model -> " << cfg.classifier_path() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct Runtime {
  std::shared_ptr<backend::Backend> llm;
  std::unique_ptr<grid::ArtifactCache> artifacts;
  std::unique_ptr<qclass::QueryClassifier> classifier;
};

Runtime make_runtime(const config::RunConfig& cfg, const std::vector<generate::PipelineConfig>& pipelines) {
  Runtime rt;
  bool any_rag = false, any_qc = false;
  for (const auto& p : pipelines) {
    any_rag |= p.rag_enabled;
    any_qc |= p.rag_enabled && p.use_query_classification;
  }
  if (any_rag) {
    if (cfg.paths.index_dir.empty()) throw ConfigError("paths.index_dir is required");
    rt.artifacts = grid::ArtifactCache::from_directory(cfg.paths.index_dir, cfg.artifacts);
  }
  if (any_qc) {
    const auto path = cfg.classifier_path();
    if (cfg.paths.model_dir.empty() || !fs::exists(path)) {
      throw ConfigError("missing classifier model: " + path + " (run train)");
    }
    rt.classifier = std::make_unique<qclass::LinearQueryClassifier>(qclass::ClassifierModel::load(path),
                                                                     rt.artifacts->embedder(cfg.pipeline.embedder));
  }
  rt.llm = backend::make_backend(cfg.llm);
  return rt;
}

int cmd_eval(const GlobalFlags& g, const std::string& preset_flag, std::ostream& out, std::ostream& err) {
  const auto cfg = load(g);
  if (cfg.paths.datasets.empty()) throw ConfigError("paths.datasets: no dataset configured");
  const auto presets = grid::select_presets(catalog(cfg), preset_flag.empty() ? "all" : preset_flag);

  eval::Datasets datasets;
  for (const auto& [task, path] : cfg.paths.datasets) {
    const std::string field = std::string("paths.datasets.") + (task == eval::Task::yes_no_maybe ? "ynm" : eval::to_string(task));
    require_path(path, field);
    switch (task) {
      case eval::Task::mcq: datasets[task] = eval::read_mcq(path); break;
      case eval::Task::yes_no_maybe: datasets[task] = eval::read_ynm(path); break;
      case eval::Task::ner: datasets[task] = eval::read_ner(path); break;
    }
  }

  std::vector<generate::PipelineConfig> pipelines;
  for (const auto& p : presets) pipelines.push_back(p.config);
  auto rt = make_runtime(cfg, pipelines);
  grid::GridContext ctx;
  ctx.llm = rt.llm.get();
  ctx.artifacts = rt.artifacts.get();
  ctx.classifier = rt.classifier.get();
  ctx.prompts = cfg.prompts;
  ctx.augmentation_templates = cfg.augmentation_templates;
  ctx.parallelism = cfg.parallelism;

  const fs::path out_dir = cfg.paths.output_dir;
  std::vector<eval::EvalReport> reports;
  std::vector<grid::Preset> done;
  for (const auto& p : presets) {
    try {
      reports.push_back(grid::run_preset(p, datasets, ctx));
      done.push_back(p);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      const auto partial = out_dir / "report.partial.json";
      write_file(partial, grid::reports_to_json(reports) + "\n");
      err << "error: preset " << p.name << " failed: " << e.what() << "\n"
          << "partial results: " << partial.string() << "\n";
      return kExitRuntime;
    }
  }

  const auto table = grid::format_table(done, reports);
  write_file(out_dir / "report.json", grid::reports_to_json(reports) + "\n");
  write_file(out_dir / "table.txt", table);
  out << table;
  std::size_t errors = 0;
  for (const auto& r : reports) errors += r.errors;
  if (errors) err << "warning: " << errors << " sample(s) failed and were scored incorrect (see report.json)\n";
  out << "report -> " << (out_dir / "report.json").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct QueryFlags {
  std::string question;
  std::string preset;
  bool trace = false;
};

int cmd_query(const GlobalFlags& g, const QueryFlags& f, std::ostream& out, std::ostream& err) {
  const auto cfg = load(g);
  auto pipeline = cfg.pipeline;
  if (!f.preset.empty()) {
    const auto selected = grid::select_presets(catalog(cfg), f.preset);
    if (selected.size() != 1) throw ConfigError("--preset must name exactly one preset for query");
    pipeline = selected.front().config;
  }
  pipeline.validate();
  auto rt = make_runtime(cfg, {pipeline});

  generate::PipelineComponents comps;
  comps.llm = rt.llm.get();
  comps.prompts = cfg.prompts;
  comps.augmentation_templates = cfg.augmentation_templates;
  std::shared_ptr<const backend::Backend> embedder;
  std::shared_ptr<const retrieve::IndexSet> indexes;
  if (pipeline.rag_enabled) {
    if (pipeline.retrieval.index_kind != retrieve::IndexKind::sparse) {
      embedder = rt.artifacts->embedder(pipeline.embedder);
      comps.embedder = embedder.get();
    }
    indexes = rt.artifacts->indexes(pipeline);
    comps.indexes = indexes.get();
    comps.classifier = rt.classifier.get();
  }

  try {
    const auto trace = generate::answer_query(f.question, pipeline, comps);
    out << trace.final_response << "\n";
    if (f.trace) out << generate::trace_to_json(trace) << "\n";
  } catch (const generate::PipelineError& e) {
    const auto partial = fs::path(cfg.paths.output_dir) / "query.partial.json";
    write_file(partial, generate::trace_to_json(e.trace()) + "\n");
    err << "error: " << e.what() << "\npartial results: " << partial.string() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"RAG pipeline engine and configuration-grid benchmark", "ragbench"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config, "YAML run configuration");
  app.add_option("--parallelism", g.parallelism, "Worker threads (overrides the config)");
  app.add_option("--seed", g.seed, "Base seed for every component (overrides the config)");

  IndexFlags index_flags;
  auto* index_cmd = app.add_subcommand("index", "Chunk the corpus and build indexes");
  index_cmd->add_option("--strategy", index_flags.strategy, "vanilla | small2big | sliding_window");
  index_cmd->add_option("--index-kind", index_flags.index_kind, "sparse | dense | hybrid");
  index_cmd->add_option("--preset", index_flags.preset, "Build everything these presets need (name list or 'all')");

  auto* label_cmd = app.add_subcommand("label", "Label query/response pairs by log-likelihood gain");
  auto* train_cmd = app.add_subcommand("train", "Train the query classifier on the labeled set");

  std::string eval_preset;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate presets and write report.json and table.txt");
  eval_cmd->add_option("--preset", eval_preset, "BP-RAG | 'No RAG' | RAG_1..RAG_11 | comma list | all (default)");

  QueryFlags query_flags;
  auto* query_cmd = app.add_subcommand("query", "Answer one question");
  query_cmd->add_option("--question", query_flags.question, "Question text")->required();
  query_cmd->add_option("--preset", query_flags.preset, "Preset to use instead of the config pipeline");
  query_cmd->add_flag("--trace", query_flags.trace, "Print the full generation trace as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*index_cmd) return cmd_index(g, index_flags, out);
    if (*label_cmd) return cmd_label(g, out, err);
    if (*train_cmd) return cmd_train(g, out);
    if (*eval_cmd) return cmd_eval(g, eval_preset, out, err);
    if (*query_cmd) return cmd_query(g, query_flags, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace ragbench::cli
