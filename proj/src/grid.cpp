#include "ragbench/grid.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "ragbench/text.hpp"

namespace ragbench::grid {

namespace fs = std::filesystem;
using json = nlohmann::json;
using corpus::ChunkStrategy;
using generate::Prompting;
using retrieve::Augmentation;
using retrieve::IndexKind;

backend::BackendConfig embedder_config(const backend::BackendConfig& base, const std::string& model) {
  auto cfg = base;
  cfg.model_name = model;
  if (cfg.kind == backend::BackendKind::mock) {
    cfg.seed = static_cast<std::int64_t>(static_cast<std::uint64_t>(base.seed) ^ text::fnv1a(model));
  }
  return cfg;
}

std::vector<Preset> preset_catalog(const generate::PipelineConfig& base, const EmbedderNames& names) {
  auto bp = base;
  bp.preset_name = "BP-RAG";
  bp.rag_enabled = true;
  bp.chunking.strategy = ChunkStrategy::small2big;
  bp.retrieval.index_kind = IndexKind::hybrid;
  bp.embedder = embedder_config(base.embedder, names.primary);
  bp.use_query_classification = true;
  bp.retrieval.augmentation = Augmentation::pseudo_response;
  bp.prompting = Prompting::cot_refine;

  std::vector<Preset> out;
  out.push_back({"BP-RAG", "BP-RAG", bp});
  auto add = [&](const std::string& name, const std::string& setting, auto&& mutate) {
    auto cfg = bp;
    cfg.preset_name = name;
    mutate(cfg);
    out.push_back({name, setting, std::move(cfg)});
  };
  using PC = generate::PipelineConfig;
  add("No RAG", "-", [](PC& c) {
    c.rag_enabled = false;
    c.use_query_classification = false;
  });
  add("RAG_1", "+ vanilla chunking", [](PC& c) { c.chunking.strategy = ChunkStrategy::vanilla; });
  add("RAG_2", "+ sliding-window chunking", [](PC& c) { c.chunking.strategy = ChunkStrategy::sliding_window; });
  add("RAG_3", "+ sparse indexing", [](PC& c) { c.retrieval.index_kind = IndexKind::sparse; });
  add("RAG_4", "+ dense indexing", [](PC& c) { c.retrieval.index_kind = IndexKind::dense; });
  add("RAG_5", "+ " + names.in_domain, [&](PC& c) { c.embedder = embedder_config(base.embedder, names.in_domain); });
  add("RAG_6", "+ " + names.alternate, [&](PC& c) { c.embedder = embedder_config(base.embedder, names.alternate); });
  add("RAG_7", "- query classification", [](PC& c) { c.use_query_classification = false; });
  add("RAG_8", "+ query rewriting", [](PC& c) { c.retrieval.augmentation = Augmentation::rewrite; });
  add("RAG_9", "+ vanilla query", [](PC& c) { c.retrieval.augmentation = Augmentation::vanilla; });
  add("RAG_10", "+ COT", [](PC& c) { c.prompting = Prompting::cot; });
  add("RAG_11", "+ direct answering", [](PC& c) { c.prompting = Prompting::direct_answer; });
  return out;
}

std::vector<Preset> select_presets(const std::vector<Preset>& catalog, const std::string& selector) {
  if (selector == "all") return catalog;
  std::vector<Preset> out;
  std::stringstream ss(selector);
  std::string name;
  while (std::getline(ss, name, ',')) {
    const auto first = name.find_first_not_of(' ');
    if (first == std::string::npos) continue;
    name = name.substr(first, name.find_last_not_of(' ') - first + 1);
    auto it = std::find_if(catalog.begin(), catalog.end(), [&](const Preset& p) { return p.name == name; });
    if (it == catalog.end()) throw ConfigError("unknown preset '" + name + "'");
    out.push_back(*it);
  }
  if (out.empty()) throw ConfigError("no preset selected");
  return out;
}

std::string strategy_dir(const std::string& index_dir, ChunkStrategy strategy) {
  return (fs::path(index_dir) / corpus::to_string(strategy)).string();
}

std::string dense_file(const std::string& index_dir, ChunkStrategy strategy, const std::string& model) {
  return (fs::path(strategy_dir(index_dir, strategy)) / ("dense-" + model + ".bin")).string();
}

namespace {

std::string chunk_key(const corpus::ChunkingConfig& c) {
  return corpus::to_string(c.strategy) + ":" + std::to_string(c.chunk_size);
}

std::string embedder_key(const backend::BackendConfig& c) {
  return backend::to_string(c.kind) + "|" + c.model_name + "|" + std::to_string(c.seed) + "|" +
         std::to_string(c.embedding_dim) + "|" + c.endpoint;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ConfigError("missing " + what + ": " + p.string() + " (run the index command)");
}

}  // namespace

std::unique_ptr<ArtifactCache> ArtifactCache::from_documents(std::vector<corpus::Document> docs,
                                                             ArtifactOptions options) {
  std::unique_ptr<ArtifactCache> cache(new ArtifactCache());
  cache->docs_ = std::move(docs);
  cache->options_ = options;
  return cache;
}

std::unique_ptr<ArtifactCache> ArtifactCache::from_directory(std::string index_dir, ArtifactOptions options) {
  if (!fs::is_directory(index_dir)) throw ConfigError("missing index directory: " + index_dir);
  std::unique_ptr<ArtifactCache> cache(new ArtifactCache());
  cache->dir_ = std::move(index_dir);
  cache->options_ = options;
  return cache;
}

ArtifactCache::Counters ArtifactCache::produced() const {
  std::lock_guard lock(mu_);
  return counters_;
}

std::shared_ptr<const backend::Backend> ArtifactCache::embedder(const backend::BackendConfig& cfg) {
  std::lock_guard lock(mu_);
  auto& slot = embedders_[embedder_key(cfg)];
  if (!slot) slot = backend::make_backend(cfg);
  return slot;
}

std::shared_ptr<const corpus::ChunkSet> ArtifactCache::chunks(const corpus::ChunkingConfig& cfg) {
  std::lock_guard lock(mu_);
  auto& slot = chunks_[chunk_key(cfg)];
  if (slot) return slot;
  if (dir_.empty()) {
    slot = std::make_shared<const corpus::ChunkSet>(corpus::chunk_corpus(docs_, cfg, options_.parallelism));
  } else {
    const fs::path dir = strategy_dir(dir_, cfg.strategy);
    require_file(dir / "meta.json", "chunk store for " + corpus::to_string(cfg.strategy));
    std::ifstream in(dir / "meta.json");
    const auto meta = json::parse(in, nullptr, false);
    if (meta.is_discarded() || meta.value("chunk_size", std::size_t{0}) != cfg.chunk_size) {
      throw ConfigError("chunk store " + dir.string() + " was built with a different chunk size; re-run index");
    }
    corpus::ChunkSet set;
    require_file(dir / "chunks.jsonl", "chunk store");
    set.retrieval = corpus::read_chunks((dir / "chunks.jsonl").string());
    if (cfg.strategy == ChunkStrategy::small2big) {
      require_file(dir / "large_chunks.jsonl", "small2big parent store");
      set.context = corpus::read_chunks((dir / "large_chunks.jsonl").string());
    }
    slot = std::make_shared<const corpus::ChunkSet>(std::move(set));
  }
  ++counters_.chunk_sets;
  return slot;
}

std::shared_ptr<const index::SparseIndex> ArtifactCache::sparse(const corpus::ChunkingConfig& cfg) {
  std::lock_guard lock(mu_);
  auto& slot = sparse_[chunk_key(cfg)];
  if (slot) return slot;
  if (dir_.empty()) {
    slot = std::make_shared<const index::SparseIndex>(index::SparseIndex::build(chunks(cfg)->retrieval));
  } else {
    const auto dir = fs::path(strategy_dir(dir_, cfg.strategy)) / "sparse";
    require_file(dir / "stats.json", "sparse index");
    slot = std::make_shared<const index::SparseIndex>(index::SparseIndex::load(dir.string()));
  }
  ++counters_.sparse;
  return slot;
}

std::shared_ptr<const index::DenseIndex> ArtifactCache::dense(const corpus::ChunkingConfig& cfg,
                                                              const backend::BackendConfig& embedder_cfg) {
  std::lock_guard lock(mu_);
  auto& slot = dense_[chunk_key(cfg) + "|" + embedder_key(embedder_cfg)];
  if (slot) return slot;
  if (dir_.empty()) {
    slot = std::make_shared<const index::DenseIndex>(index::DenseIndex::build(
        chunks(cfg)->retrieval, *embedder(embedder_cfg), options_.dense_mode, options_.hnsw));
  } else {
    const auto path = dense_file(dir_, cfg.strategy, embedder_cfg.model_name);
    require_file(path, "dense index for " + embedder_cfg.model_name);
    slot = std::make_shared<const index::DenseIndex>(index::DenseIndex::load(path));
  }
  ++counters_.dense;
  return slot;
}

std::shared_ptr<const retrieve::IndexSet> ArtifactCache::indexes(const generate::PipelineConfig& cfg) {
  if (!cfg.rag_enabled) return nullptr;
  std::lock_guard lock(mu_);
  const auto kind = cfg.retrieval.index_kind;
  std::string key = chunk_key(cfg.chunking) + "|" + retrieve::to_string(kind);
  if (kind != IndexKind::sparse) key += "|" + embedder_key(cfg.embedder);
  auto& slot = sets_[key];
  if (slot) return slot;

  auto set = std::make_shared<retrieve::IndexSet>();
  const auto cs = chunks(cfg.chunking);
  for (const auto& c : cs->retrieval) set->units.emplace(c.id, c);
  for (const auto& c : cs->context) set->parents.emplace(c.id, c);
  if (kind != IndexKind::dense) set->sparse = sparse(cfg.chunking);
  if (kind != IndexKind::sparse) set->dense = dense(cfg.chunking, cfg.embedder);
  slot = std::move(set);
  return slot;
}

IndexSummary write_index(const std::string& index_dir, const std::vector<corpus::Document>& docs,
                         const corpus::ChunkingConfig& chunking, IndexKind kind,
                         const std::vector<backend::BackendConfig>& embedders,
                         const ArtifactOptions& options) {
  chunking.validate();
  const auto set = corpus::chunk_corpus(docs, chunking, options.parallelism);
  const fs::path dir = strategy_dir(index_dir, chunking.strategy);
  fs::create_directories(dir);

  IndexSummary summary;
  summary.dir = dir.string();
  summary.chunks = set.retrieval.size();
  summary.large_chunks = set.context.size();
  {
    std::ofstream out(dir / "meta.json", std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + (dir / "meta.json").string());
    out << json{{"strategy", corpus::to_string(chunking.strategy)}, {"chunk_size", chunking.chunk_size}}.dump(1)
        << '\n';
  }
  corpus::write_chunks((dir / "chunks.jsonl").string(), set.retrieval);
  if (chunking.strategy == ChunkStrategy::small2big) {
    corpus::write_chunks((dir / "large_chunks.jsonl").string(), set.context);
  }
  if (kind != IndexKind::dense) {
    const auto sparse = index::SparseIndex::build(set.retrieval);
    sparse.save((dir / "sparse").string());
    summary.sparse_terms = sparse.term_count();
  }
  if (kind != IndexKind::sparse) {
    if (embedders.empty()) throw ConfigError("index kind " + retrieve::to_string(kind) + " needs an embedder");
    for (const auto& ecfg : embedders) {
      const auto emb = backend::make_backend(ecfg);
      const auto dense = index::DenseIndex::build(set.retrieval, *emb, options.dense_mode, options.hnsw);
      dense.save(dense_file(index_dir, chunking.strategy, ecfg.model_name));
      summary.dense.emplace_back(ecfg.model_name, dense.size());
    }
  }
  return summary;
}

eval::EvalReport run_preset(const Preset& preset, const eval::Datasets& datasets, GridContext& ctx) {
  const auto& cfg = preset.config;
  cfg.validate();
  generate::PipelineComponents comps;
  comps.llm = ctx.llm;
  comps.prompts = ctx.prompts;
  comps.augmentation_templates = ctx.augmentation_templates;
  std::shared_ptr<const backend::Backend> emb;
  std::shared_ptr<const retrieve::IndexSet> idx;
  if (cfg.rag_enabled) {
    if (ctx.artifacts == nullptr) throw ConfigError("preset " + preset.name + " needs retrieval artifacts");
    if (cfg.retrieval.index_kind != IndexKind::sparse) {
      emb = ctx.artifacts->embedder(cfg.embedder);
      comps.embedder = emb.get();
    }
    idx = ctx.artifacts->indexes(cfg);
    comps.indexes = idx.get();
    if (cfg.use_query_classification) comps.classifier = ctx.classifier;
  }
  auto report = eval::run_eval(cfg, datasets, comps, ctx.parallelism);
  report.config = preset.name;
  return report;
}

std::vector<eval::EvalReport> grid_run(const std::vector<Preset>& presets, const eval::Datasets& datasets,
                                       GridContext& ctx) {
  std::vector<eval::EvalReport> out;
  out.reserve(presets.size());
  for (const auto& p : presets) out.push_back(run_preset(p, datasets, ctx));
  return out;
}

namespace {

std::string fixed1(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", eval::round1(x));
  return buf;
}

std::string column_name(eval::Task t) {
  switch (t) {
    case eval::Task::mcq: return "MCQ";
    case eval::Task::yes_no_maybe: return "YNM";
    case eval::Task::ner: return "NER";
  }
  return "?";
}

}  // namespace

std::string format_table(const std::vector<Preset>& presets, const std::vector<eval::EvalReport>& reports) {
  if (presets.size() != reports.size()) {
    throw InvalidInputError("format_table: " + std::to_string(presets.size()) + " presets for " +
                            std::to_string(reports.size()) + " reports");
  }
  std::vector<eval::Task> tasks;
  for (auto t : {eval::Task::mcq, eval::Task::yes_no_maybe, eval::Task::ner}) {
    for (const auto& r : reports) {
      if (r.per_task.contains(eval::to_string(t))) {
        tasks.push_back(t);
        break;
      }
    }
  }

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"Method", "Setting"};
  for (auto t : tasks) header.push_back(column_name(t));
  header.push_back("Avg score");
  header.push_back("Avg latency");
  rows.push_back(header);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::vector<std::string> row = {presets[i].name, presets[i].setting};
    for (auto t : tasks) {
      auto it = r.per_task.find(eval::to_string(t));
      row.push_back(it == r.per_task.end() ? "-" : fixed1(it->second));
    }
    row.push_back(fixed1(r.avg_score));
    row.push_back(fixed1(r.avg_latency_s));
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto pad = std::string(width[c] - row[c].size(), ' ');
      if (c > 0) line += " | ";
      line += c < 2 ? row[c] + pad : pad + row[c];
    }
    out += line + "\n";
  };
  emit(rows[0]);
  std::string rule;
  for (std::size_t c = 0; c < width.size(); ++c) rule += (c ? "-+-" : "") + std::string(width[c], '-');
  out += rule + "\n";
  for (std::size_t i = 1; i < rows.size(); ++i) emit(rows[i]);
  return out;
}

std::string reports_to_json(const std::vector<eval::EvalReport>& reports, int indent) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(json::parse(eval::report_to_json(r)));
  return arr.dump(indent);
}

}  // namespace ragbench::grid
