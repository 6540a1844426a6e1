#include "ragbench/index.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <unordered_set>

#include "binary_io.hpp"
#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

namespace ragbench::index {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kFingerprintSeed = 0x9e3779b97f4a7c15ULL;
constexpr std::size_t kPostingShards = 8;

std::uint64_t id_set_fingerprint(const std::vector<std::string>& ids) {
  std::uint64_t acc = ids.size();
  for (const auto& id : ids) acc += text::fnv1a(id, kFingerprintSeed);
  return acc;
}

bool hit_before(const ScoredHit& a, const ScoredHit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.chunk_id < b.chunk_id;
}

void keep_top(std::vector<ScoredHit>& hits, std::size_t n) {
  if (hits.size() > n) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), hit_before);
    hits.resize(n);
  } else {
    std::sort(hits.begin(), hits.end(), hit_before);
  }
}

std::string shard_name(std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "postings-%02zu.jsonl", i);
  return buf;
}

}  // namespace

void sort_hits(std::vector<ScoredHit>& hits) { std::sort(hits.begin(), hits.end(), hit_before); }

double bm25_idf(std::size_t N, std::size_t df) {
  const double n = static_cast<double>(N);
  const double d = static_cast<double>(df);
  return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

// ---------------------------------------------------------------------------
// SparseIndex
// ---------------------------------------------------------------------------

SparseIndex SparseIndex::build(const std::vector<corpus::Chunk>& chunks, Bm25Params params) {
  SparseIndex idx;
  idx.params_ = params;
  idx.ids_.reserve(chunks.size());
  idx.lens_.reserve(chunks.size());
  for (const auto& c : chunks) {
    const auto doc = static_cast<std::uint32_t>(idx.ids_.size());
    if (!idx.id_pos_.emplace(c.id, doc).second) {
      throw ConflictError("sparse index: duplicate chunk id '" + c.id + "'");
    }
    idx.ids_.push_back(c.id);
    const auto tokens = text::tokenize_lower(c.text);
    idx.lens_.push_back(static_cast<std::uint32_t>(tokens.size()));
    std::map<std::string, std::uint32_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (auto& [term, count] : tf) idx.postings_[term].push_back({doc, count});
  }
  idx.finalize();
  return idx;
}

void SparseIndex::finalize() {
  double total = 0.0;
  for (auto len : lens_) total += len;
  avgdl_ = ids_.empty() ? 0.0 : total / static_cast<double>(ids_.size());
  fingerprint_ = id_set_fingerprint(ids_);
}

std::size_t SparseIndex::df(const std::string& term) const {
  auto it = postings_.find(text::to_lower(term));
  return it == postings_.end() ? 0 : it->second.size();
}

std::vector<std::pair<std::string, std::uint32_t>> SparseIndex::postings(const std::string& term) const {
  std::vector<std::pair<std::string, std::uint32_t>> out;
  if (auto it = postings_.find(text::to_lower(term)); it != postings_.end()) {
    for (const auto& p : it->second) out.emplace_back(ids_[p.doc], p.tf);
  }
  return out;
}

std::size_t SparseIndex::doclen(const std::string& chunk_id) const {
  auto it = id_pos_.find(chunk_id);
  if (it == id_pos_.end()) throw InvalidInputError("sparse index: unknown chunk id '" + chunk_id + "'");
  return lens_[it->second];
}

std::vector<ScoredHit> SparseIndex::search(const std::string& query, std::size_t n) const {
  if (n == 0) throw InvalidInputError("bm25_search: n must be positive");
  std::vector<ScoredHit> hits;
  if (ids_.empty()) return hits;
  std::vector<double> scores(ids_.size(), 0.0);
  std::vector<std::uint32_t> touched;
  const double k1 = params_.k1;
  const double b = params_.b;
  for (const auto& term : text::tokenize_lower(query)) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double idf = bm25_idf(ids_.size(), it->second.size());
    for (const auto& p : it->second) {
      const double tf = p.tf;
      const double norm = k1 * (1.0 - b + b * lens_[p.doc] / avgdl_);
      if (scores[p.doc] == 0.0) touched.push_back(p.doc);
      scores[p.doc] += idf * tf * (k1 + 1.0) / (tf + norm);
    }
  }
  hits.reserve(touched.size());
  for (auto doc : touched) {
    if (scores[doc] > 0.0) hits.push_back({ids_[doc], scores[doc], HitOrigin::sparse});
  }
  keep_top(hits, n);
  return hits;
}

void SparseIndex::save(const std::string& dir) const {
  fs::create_directories(dir);
  json chunks = json::array();
  for (std::size_t i = 0; i < ids_.size(); ++i) chunks.push_back({ids_[i], lens_[i]});
  json stats = {{"N", ids_.size()},       {"avgdl", avgdl_},          {"k1", params_.k1},
                {"b", params_.b},         {"shards", kPostingShards}, {"terms", postings_.size()},
                {"chunks", std::move(chunks)}};
  {
    std::ofstream out(fs::path(dir) / "stats.json", std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write sparse index to '" + dir + "'");
    out << stats.dump(1) << '\n';
  }
  std::vector<std::vector<const std::string*>> shards(kPostingShards);
  for (const auto& [term, _] : postings_) shards[text::fnv1a(term) % kPostingShards].push_back(&term);
  for (std::size_t s = 0; s < kPostingShards; ++s) {
    auto& terms = shards[s];
    std::sort(terms.begin(), terms.end(), [](const auto* a, const auto* b) { return *a < *b; });
    std::ofstream out(fs::path(dir) / shard_name(s), std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write sparse index to '" + dir + "'");
    for (const auto* term : terms) {
      json plist = json::array();
      for (const auto& p : postings_.at(*term)) plist.push_back({p.doc, p.tf});
      out << json{{"t", *term}, {"p", std::move(plist)}}.dump() << '\n';
    }
  }
}

SparseIndex SparseIndex::load(const std::string& dir) {
  SparseIndex idx;
  std::ifstream in(fs::path(dir) / "stats.json");
  if (!in) throw ConfigError("missing sparse index stats in '" + dir + "'");
  std::size_t shards = 0;
  try {
    const auto stats = json::parse(in);
    idx.params_.k1 = stats.at("k1").get<double>();
    idx.params_.b = stats.at("b").get<double>();
    shards = stats.at("shards").get<std::size_t>();
    for (const auto& c : stats.at("chunks")) {
      const auto id = c.at(0).get<std::string>();
      idx.id_pos_.emplace(id, static_cast<std::uint32_t>(idx.ids_.size()));
      idx.ids_.push_back(id);
      idx.lens_.push_back(c.at(1).get<std::uint32_t>());
    }
  } catch (const json::exception& e) {
    throw DataIntegrityError("sparse index stats in '" + dir + "': " + e.what());
  }
  for (std::size_t s = 0; s < shards; ++s) {
    std::ifstream shard(fs::path(dir) / shard_name(s));
    if (!shard) throw DataIntegrityError("missing posting shard " + shard_name(s) + " in '" + dir + "'");
    std::string line;
    while (std::getline(shard, line)) {
      if (line.empty()) continue;
      try {
        const auto obj = json::parse(line);
        auto& plist = idx.postings_[obj.at("t").get<std::string>()];
        for (const auto& p : obj.at("p")) {
          const auto doc = p.at(0).get<std::uint32_t>();
          if (doc >= idx.ids_.size()) throw DataIntegrityError("posting refers to unknown chunk");
          plist.push_back({doc, p.at(1).get<std::uint32_t>()});
        }
      } catch (const json::exception& e) {
        throw DataIntegrityError("posting shard " + shard_name(s) + ": " + e.what());
      }
    }
  }
  idx.finalize();
  return idx;
}

bool SparseIndex::operator==(const SparseIndex& other) const {
  if (ids_ != other.ids_ || lens_ != other.lens_ || postings_.size() != other.postings_.size()) return false;
  for (const auto& [term, plist] : postings_) {
    auto it = other.postings_.find(term);
    if (it == other.postings_.end() || it->second.size() != plist.size()) return false;
    for (std::size_t i = 0; i < plist.size(); ++i) {
      if (plist[i].doc != it->second[i].doc || plist[i].tf != it->second[i].tf) return false;
    }
  }
  return params_.k1 == other.params_.k1 && params_.b == other.params_.b;
}

// ---------------------------------------------------------------------------
// DenseIndex
// ---------------------------------------------------------------------------

std::string to_string(DenseMode m) { return m == DenseMode::hnsw ? "hnsw" : "exact"; }

DenseMode dense_mode_from_string(const std::string& s) {
  if (s == "hnsw") return DenseMode::hnsw;
  if (s == "exact") return DenseMode::exact;
  throw ConfigError("unknown dense index mode '" + s + "'");
}

DenseIndex DenseIndex::from_vectors(std::vector<std::string> ids,
                                    const std::vector<backend::EmbeddingVector>& vectors,
                                    DenseMode mode, HnswParams params) {
  if (ids.size() != vectors.size()) throw InvalidInputError("dense index: ids/vectors length mismatch");
  DenseIndex idx;
  idx.mode_ = mode;
  idx.params_ = params;
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw ConflictError("dense index: duplicate chunk id '" + id + "'");
  }
  if (!vectors.empty()) idx.dim_ = vectors.front().dim();
  idx.data_.reserve(vectors.size() * idx.dim_);
  for (const auto& v : vectors) {
    if (v.dim() != idx.dim_) throw InvalidInputError("dense index: vectors differ in dimension");
    idx.data_.insert(idx.data_.end(), v.values.begin(), v.values.end());
  }
  idx.ids_ = std::move(ids);
  idx.fingerprint_ = id_set_fingerprint(idx.ids_);
  if (mode == DenseMode::hnsw && !idx.ids_.empty()) {
    idx.graph_ = HnswGraph::build(idx.data_, idx.dim_, params);
  }
  return idx;
}

DenseIndex DenseIndex::build(const std::vector<corpus::Chunk>& chunks, const backend::Backend& embedder,
                             DenseMode mode, HnswParams params, std::size_t batch_size) {
  std::vector<std::string> ids;
  std::vector<backend::EmbeddingVector> vectors;
  ids.reserve(chunks.size());
  vectors.reserve(chunks.size());
  batch_size = std::max<std::size_t>(1, batch_size);
  for (std::size_t start = 0; start < chunks.size(); start += batch_size) {
    const std::size_t end = std::min(chunks.size(), start + batch_size);
    std::vector<std::string> texts;
    for (std::size_t i = start; i < end; ++i) {
      ids.push_back(chunks[i].id);
      texts.push_back(chunks[i].text);
    }
    auto batch = embedder.embed_batch(texts);
    std::move(batch.begin(), batch.end(), std::back_inserter(vectors));
  }
  return from_vectors(std::move(ids), vectors, mode, params);
}

backend::EmbeddingVector DenseIndex::vector(std::size_t i) const {
  const auto* row = data_.data() + i * dim_;
  return backend::EmbeddingVector{std::vector<float>(row, row + dim_)};
}

std::vector<ScoredHit> DenseIndex::exact_search(const backend::EmbeddingVector& query, std::size_t n) const {
  std::vector<ScoredHit> hits;
  hits.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const float* row = data_.data() + i * dim_;
    double dot = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) dot += static_cast<double>(query.values[d]) * row[d];
    hits.push_back({ids_[i], dot, HitOrigin::dense});
  }
  keep_top(hits, n);
  return hits;
}

std::vector<ScoredHit> DenseIndex::search(const backend::EmbeddingVector& query, std::size_t n) const {
  if (n == 0) throw InvalidInputError("dense_search: n must be positive");
  if (ids_.empty()) return {};
  if (query.dim() != dim_) {
    throw InvalidInputError("dense_search: query dimension " + std::to_string(query.dim()) +
                            " does not match index dimension " + std::to_string(dim_));
  }
  if (mode_ == DenseMode::exact || n >= ids_.size()) return exact_search(query, n);
  std::vector<ScoredHit> hits;
  for (const auto& [sim, node] : graph_.search(data_, dim_, query.values, n, params_.ef_search)) {
    hits.push_back({ids_[node], sim, HitOrigin::dense});
  }
  keep_top(hits, n);
  return hits;
}

void DenseIndex::save(const std::string& path) const {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write dense index '" + path + "'");
  io::put_u32(out, static_cast<std::uint32_t>(dim_));
  io::put_u64(out, ids_.size());
  io::put_u8(out, mode_ == DenseMode::hnsw ? 1 : 0);
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    io::put_string(out, ids_[i]);
    for (std::size_t d = 0; d < dim_; ++d) io::put_f32(out, data_[i * dim_ + d]);
  }
  if (mode_ == DenseMode::hnsw) graph_.write(out);
}

DenseIndex DenseIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("missing dense index '" + path + "'");
  DenseIndex idx;
  idx.dim_ = io::get_u32(in);
  const auto count = io::get_u64(in);
  const auto mode = io::get_u8(in);
  if (mode > 1) throw DataIntegrityError("dense index '" + path + "': unknown mode byte");
  idx.mode_ = mode == 1 ? DenseMode::hnsw : DenseMode::exact;
  idx.ids_.reserve(count);
  idx.data_.reserve(count * idx.dim_);
  for (std::uint64_t i = 0; i < count; ++i) {
    idx.ids_.push_back(io::get_string(in));
    for (std::size_t d = 0; d < idx.dim_; ++d) idx.data_.push_back(io::get_f32(in));
  }
  if (idx.mode_ == DenseMode::hnsw && count > 0) {
    idx.graph_ = HnswGraph::read(in, count);
    idx.params_ = idx.graph_.params();
  }
  idx.fingerprint_ = id_set_fingerprint(idx.ids_);
  return idx;
}

// ---------------------------------------------------------------------------
// Free functions and fusion
// ---------------------------------------------------------------------------

SparseIndex build_sparse(const std::vector<corpus::Chunk>& chunks) { return SparseIndex::build(chunks); }

std::vector<ScoredHit> bm25_search(const std::string& query, const SparseIndex& idx, std::size_t n) {
  return idx.search(query, n);
}

DenseIndex build_dense(const std::vector<corpus::Chunk>& chunks, const backend::Backend& embedder,
                       DenseMode mode) {
  return DenseIndex::build(chunks, embedder, mode);
}

std::vector<ScoredHit> dense_search(const backend::EmbeddingVector& query, const DenseIndex& idx,
                                    std::size_t n) {
  return idx.search(query, n);
}

std::vector<ScoredHit> min_max_normalize(std::vector<ScoredHit> hits) {
  if (hits.empty()) return hits;
  double lo = hits.front().score;
  double hi = hits.front().score;
  for (const auto& h : hits) {
    lo = std::min(lo, h.score);
    hi = std::max(hi, h.score);
  }
  for (auto& h : hits) h.score = hi > lo ? (h.score - lo) / (hi - lo) : 1.0;
  return hits;
}

std::vector<ScoredHit> hybrid_search(const std::string& query, const backend::EmbeddingVector& query_vec,
                                     const SparseIndex& sparse, const DenseIndex& dense, std::size_t k,
                                     std::size_t candidate_factor, FusionWeights weights) {
  if (k == 0) throw InvalidInputError("hybrid_search: k must be positive");
  if (candidate_factor == 0) throw InvalidInputError("hybrid_search: candidate_factor must be positive");
  if (sparse.size() != dense.size() || sparse.fingerprint() != dense.fingerprint()) {
    throw InvalidInputError("hybrid_search: sparse and dense indexes cover different chunk sets");
  }
  const std::size_t pool = candidate_factor * k;
  const auto sparse_hits = min_max_normalize(sparse.search(query, pool));
  const auto dense_hits = min_max_normalize(dense.search(query_vec, pool));

  std::unordered_map<std::string, double> fused;
  for (const auto& h : dense_hits) fused[h.chunk_id] += weights.dense * h.score;
  for (const auto& h : sparse_hits) fused[h.chunk_id] += weights.sparse * h.score;

  std::vector<ScoredHit> out;
  out.reserve(fused.size());
  for (auto& [id, score] : fused) out.push_back({id, score, HitOrigin::fused});
  keep_top(out, k);
  return out;
}

}  // namespace ragbench::index
