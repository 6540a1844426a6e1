#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ragbench/backend.hpp"
#include "ragbench/corpus.hpp"
#include "ragbench/index.hpp"

namespace ragbench::retrieve {

enum class Augmentation { vanilla, rewrite, pseudo_response };
enum class IndexKind { sparse, dense, hybrid };

std::string to_string(Augmentation a);
std::string to_string(IndexKind k);
Augmentation augmentation_from_string(const std::string& s);
IndexKind index_kind_from_string(const std::string& s);

struct RetrievalConfig {
  std::size_t k = 8;
  Augmentation augmentation = Augmentation::vanilla;
  IndexKind index_kind = IndexKind::hybrid;
  bool expand_small2big = false;
  std::size_t candidate_factor = 4;

  void validate() const;
};

struct RetrievedDoc {
  std::string chunk_id;
  std::string text;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
};

struct AugmentationTemplates {
  std::string rewrite =
      "Rewrite the question into 1-3 focused sub-questions for a search engine, one per line.\n"
      "Question: {query}\nSub-questions:";
  std::string pseudo_response =
      "Answer the question briefly using your own knowledge.\nQuestion: {query}\nAnswer:";
};

struct AugmentedQuery {
  std::string search_text;
  std::vector<std::string> warnings;
  std::size_t generate_calls = 0;
  double backend_latency_s = 0.0;
};

/// Builds the search text. Backend failures never propagate: the original
/// query is returned and a warning is recorded instead.
AugmentedQuery augment_query(const std::string& query, Augmentation strategy,
                             const backend::Backend* llm,
                             const AugmentationTemplates& templates = {});

/// Immutable bundle of the searchable units of one chunking/indexing setup.
struct IndexSet {
  std::unordered_map<std::string, corpus::Chunk> units;    // indexed chunks by id
  std::unordered_map<std::string, corpus::Chunk> parents;  // small2big large chunks by id
  std::shared_ptr<const index::SparseIndex> sparse;
  std::shared_ptr<const index::DenseIndex> dense;
};

/// Builds the indexes `kind` needs over `chunks.retrieval`. Dense and hybrid
/// kinds require an embedder.
IndexSet build_index_set(const corpus::ChunkSet& chunks, IndexKind kind,
                         const backend::Backend* embedder,
                         index::DenseMode mode = index::DenseMode::hnsw,
                         index::HnswParams hnsw = {});

/// Runs the configured search and returns up to k documents ranked 1..k.
/// With expand_small2big, hits are replaced by their parents (deduplicated,
/// keeping the best child score). Throws ConfigError when a needed index or
/// embedder is missing and DataIntegrityError for dangling parent links.
std::vector<RetrievedDoc> retrieve(const std::string& search_text, const RetrievalConfig& cfg,
                                   const IndexSet& indexes, const backend::Backend* embedder);

}  // namespace ragbench::retrieve
