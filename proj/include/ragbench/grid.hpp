#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ragbench/eval.hpp"
#include "ragbench/generate.hpp"
#include "ragbench/index.hpp"

namespace ragbench::grid {

struct EmbedderNames {
  std::string primary = "bge-base";
  std::string in_domain = "medcpt";
  std::string alternate = "gte-base";
};

struct Preset {
  std::string name;
  std::string setting;  // short description of what differs from BP-RAG
  generate::PipelineConfig config;
};

/// The 13 rows: BP-RAG, No RAG and the single-substitution ablations
/// RAG_1..RAG_11. `base` supplies everything the presets do not pin down
/// (chunk size, k, candidate factor, embedder backend settings).
std::vector<Preset> preset_catalog(const generate::PipelineConfig& base = {},
                                   const EmbedderNames& names = {});

/// "all", or a comma-separated list of preset names. Unknown names throw ConfigError.
std::vector<Preset> select_presets(const std::vector<Preset>& catalog, const std::string& selector);

/// Copy of `base` for `model`. Mock embedders get a per-model seed
/// (base seed xor hash of the model name) so each model is its own space.
backend::BackendConfig embedder_config(const backend::BackendConfig& base, const std::string& model);

struct ArtifactOptions {
  index::DenseMode dense_mode = index::DenseMode::hnsw;
  index::HnswParams hnsw;
  std::size_t parallelism = 1;
};

/// On-disk layout under an index directory:
///   <dir>/<strategy>/meta.json          strategy and chunk size
///   <dir>/<strategy>/chunks.jsonl       indexed units
///   <dir>/<strategy>/large_chunks.jsonl small2big parents
///   <dir>/<strategy>/sparse/            BM25 shards
///   <dir>/<strategy>/dense-<model>.bin  vectors and HNSW graph
std::string strategy_dir(const std::string& index_dir, corpus::ChunkStrategy strategy);
std::string dense_file(const std::string& index_dir, corpus::ChunkStrategy strategy,
                       const std::string& model);

/// Shares chunk sets, indexes and embedders across presets. Artifacts are
/// either built in memory from documents or loaded from an index directory;
/// each distinct (chunking, index kind, embedder) combination is produced once.
class ArtifactCache {
 public:
  static std::unique_ptr<ArtifactCache> from_documents(std::vector<corpus::Document> docs,
                                                       ArtifactOptions options = {});
  /// Missing files raise ConfigError naming the artifact.
  static std::unique_ptr<ArtifactCache> from_directory(std::string index_dir,
                                                       ArtifactOptions options = {});

  std::shared_ptr<const backend::Backend> embedder(const backend::BackendConfig& cfg);
  std::shared_ptr<const corpus::ChunkSet> chunks(const corpus::ChunkingConfig& cfg);
  std::shared_ptr<const index::SparseIndex> sparse(const corpus::ChunkingConfig& cfg);
  std::shared_ptr<const index::DenseIndex> dense(const corpus::ChunkingConfig& cfg,
                                                 const backend::BackendConfig& embedder_cfg);
  std::shared_ptr<const retrieve::IndexSet> indexes(const generate::PipelineConfig& cfg);

  struct Counters {
    std::size_t chunk_sets = 0;
    std::size_t sparse = 0;
    std::size_t dense = 0;
  };
  Counters produced() const;

 private:
  ArtifactCache() = default;

  std::vector<corpus::Document> docs_;
  std::string dir_;
  ArtifactOptions options_;

  mutable std::recursive_mutex mu_;
  Counters counters_;
  std::map<std::string, std::shared_ptr<const backend::Backend>> embedders_;
  std::map<std::string, std::shared_ptr<const corpus::ChunkSet>> chunks_;
  std::map<std::string, std::shared_ptr<const index::SparseIndex>> sparse_;
  std::map<std::string, std::shared_ptr<const index::DenseIndex>> dense_;
  std::map<std::string, std::shared_ptr<const retrieve::IndexSet>> sets_;
};

struct IndexSummary {
  std::string dir;
  std::size_t chunks = 0;
  std::size_t large_chunks = 0;
  std::size_t sparse_terms = 0;
  std::vector<std::pair<std::string, std::size_t>> dense;  // model, vectors
};

/// Chunks `docs` and writes the store plus the indexes `kind` needs for every
/// embedder config given. Re-running over the same inputs rewrites identical bytes.
IndexSummary write_index(const std::string& index_dir, const std::vector<corpus::Document>& docs,
                         const corpus::ChunkingConfig& chunking, retrieve::IndexKind kind,
                         const std::vector<backend::BackendConfig>& embedders,
                         const ArtifactOptions& options = {});

struct GridContext {
  const backend::Backend* llm = nullptr;
  ArtifactCache* artifacts = nullptr;
  const qclass::QueryClassifier* classifier = nullptr;
  generate::PromptTemplates prompts;
  retrieve::AugmentationTemplates augmentation_templates;
  std::size_t parallelism = 1;
};

eval::EvalReport run_preset(const Preset& preset, const eval::Datasets& datasets, GridContext& ctx);

std::vector<eval::EvalReport> grid_run(const std::vector<Preset>& presets, const eval::Datasets& datasets,
                                       GridContext& ctx);

/// Aligned text table: Method, Setting, one column per task, Avg score,
/// Avg latency. Numbers are rounded to one decimal.
std::string format_table(const std::vector<Preset>& presets, const std::vector<eval::EvalReport>& reports);

/// JSON array of per-preset reports.
std::string reports_to_json(const std::vector<eval::EvalReport>& reports, int indent = 2);

}  // namespace ragbench::grid
