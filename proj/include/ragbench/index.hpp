#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ragbench/backend.hpp"
#include "ragbench/corpus.hpp"
#include "ragbench/hnsw.hpp"

namespace ragbench::index {

enum class HitOrigin { sparse, dense, fused };

struct ScoredHit {
  std::string chunk_id;
  double score = 0.0;
  HitOrigin origin = HitOrigin::sparse;
};

/// Score descending, then chunk id ascending.
void sort_hits(std::vector<ScoredHit>& hits);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Lucene-style IDF: ln((N - df + 0.5) / (df + 0.5) + 1).
double bm25_idf(std::size_t N, std::size_t df);

/// Inverted index over lowercased corpus tokens with Okapi BM25 scoring.
class SparseIndex {
 public:
  struct Posting {
    std::uint32_t doc;  // position in chunk order
    std::uint32_t tf;
  };

  SparseIndex() = default;

  /// Throws ConflictError on duplicate chunk ids.
  static SparseIndex build(const std::vector<corpus::Chunk>& chunks, Bm25Params params = {});

  std::size_t size() const noexcept { return ids_.size(); }
  double avgdl() const noexcept { return avgdl_; }
  const Bm25Params& params() const noexcept { return params_; }
  std::size_t df(const std::string& term) const;
  /// (chunk id, term frequency) pairs for `term`, in chunk order.
  std::vector<std::pair<std::string, std::uint32_t>> postings(const std::string& term) const;
  /// Token length of a chunk; throws InvalidInputError for unknown ids.
  std::size_t doclen(const std::string& chunk_id) const;
  const std::vector<std::string>& chunk_ids() const noexcept { return ids_; }
  std::size_t term_count() const noexcept { return postings_.size(); }
  /// Order-independent digest of the chunk id set.
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

  /// Top-n chunks by BM25. Every query token occurrence adds a summand;
  /// zero-score chunks are omitted. Throws InvalidInputError when n == 0.
  std::vector<ScoredHit> search(const std::string& query, std::size_t n) const;

  /// Directory layout: stats.json plus postings-NN.jsonl shards, terms sorted.
  void save(const std::string& dir) const;
  static SparseIndex load(const std::string& dir);

  bool operator==(const SparseIndex& other) const;

 private:
  void finalize();

  Bm25Params params_;
  std::vector<std::string> ids_;
  std::vector<std::uint32_t> lens_;
  std::unordered_map<std::string, std::uint32_t> id_pos_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  double avgdl_ = 0.0;
  std::uint64_t fingerprint_ = 0;
};

enum class DenseMode { exact, hnsw };

std::string to_string(DenseMode m);
DenseMode dense_mode_from_string(const std::string& s);

/// Flat store of unit vectors with either brute-force or HNSW search.
class DenseIndex {
 public:
  DenseIndex() = default;

  static DenseIndex from_vectors(std::vector<std::string> ids,
                                 const std::vector<backend::EmbeddingVector>& vectors,
                                 DenseMode mode, HnswParams params = {});

  /// Embeds chunk texts in batches; backend errors propagate unchanged.
  static DenseIndex build(const std::vector<corpus::Chunk>& chunks, const backend::Backend& embedder,
                          DenseMode mode, HnswParams params = {}, std::size_t batch_size = 64);

  /// Cosine top-n. Exact mode is a full scan; HNSW uses ef = max(ef_search, n)
  /// and falls back to a scan when n covers the whole index.
  std::vector<ScoredHit> search(const backend::EmbeddingVector& query, std::size_t n) const;

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  DenseMode mode() const noexcept { return mode_; }
  const HnswParams& hnsw_params() const noexcept { return params_; }
  const std::vector<std::string>& chunk_ids() const noexcept { return ids_; }
  backend::EmbeddingVector vector(std::size_t i) const;
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  const HnswGraph& graph() const noexcept { return graph_; }

  /// Little-endian binary: {dim u32, count u64, mode u8}, then per entry a
  /// u32-length-prefixed UTF-8 id and dim float32 values; HNSW graphs follow.
  void save(const std::string& path) const;
  static DenseIndex load(const std::string& path);

 private:
  std::vector<ScoredHit> exact_search(const backend::EmbeddingVector& query, std::size_t n) const;

  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::size_t dim_ = 0;
  DenseMode mode_ = DenseMode::exact;
  HnswParams params_;
  HnswGraph graph_;
  std::uint64_t fingerprint_ = 0;
};

// Free-function forms of the index operations.
SparseIndex build_sparse(const std::vector<corpus::Chunk>& chunks);
std::vector<ScoredHit> bm25_search(const std::string& query, const SparseIndex& idx, std::size_t n);
DenseIndex build_dense(const std::vector<corpus::Chunk>& chunks, const backend::Backend& embedder,
                       DenseMode mode);
std::vector<ScoredHit> dense_search(const backend::EmbeddingVector& query, const DenseIndex& idx,
                                    std::size_t n);

struct FusionWeights {
  double dense = 0.75;
  double sparse = 0.25;
};

/// Min-max normalizes each score list to [0, 1] (constant lists map to 1.0).
std::vector<ScoredHit> min_max_normalize(std::vector<ScoredHit> hits);

/// Pulls candidate_factor * k candidates from each index, normalizes both
/// lists, fuses with the dense:sparse weights (missing side counts 0) and
/// returns the top k of the union. Throws InvalidInputError when the two
/// indexes were built over different chunk sets.
std::vector<ScoredHit> hybrid_search(const std::string& query,
                                     const backend::EmbeddingVector& query_vec,
                                     const SparseIndex& sparse, const DenseIndex& dense,
                                     std::size_t k, std::size_t candidate_factor = 4,
                                     FusionWeights weights = {});

}  // namespace ragbench::index
