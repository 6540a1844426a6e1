#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "ragbench/error.hpp"
#include "ragbench/index.hpp"

namespace ragbench::index {
namespace {

namespace fs = std::filesystem;
using backend::EmbeddingVector;

using synthetic::chunk;
using synthetic::gaussian;
using synthetic::id_text;
using synthetic::random_chunks;
using synthetic::random_query;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Bm25, HandComputedScores) {
  const auto idx = SparseIndex::build({chunk("a", "x y"), chunk("b", "x x y"), chunk("c", "z")});
  EXPECT_DOUBLE_EQ(idx.avgdl(), 2.0);
  EXPECT_EQ(idx.df("X"), 2u);
  const auto hits = idx.search("x", 10);
  ASSERT_EQ(hits.size(), 2u);
  const double idf = std::log(1.5 / 2.5 + 1.0);
  EXPECT_EQ(hits[0].chunk_id, "b");
  EXPECT_NEAR(hits[0].score, idf * 2 * 2.2 / (2 + 1.2 * (0.25 + 0.75 * 1.5)), 1e-12);
  EXPECT_NEAR(hits[1].score, idf, 1e-12);
}

TEST(Bm25, IdfStaysPositive) {
  EXPECT_GT(bm25_idf(10, 10), 0.0);
  EXPECT_NEAR(bm25_idf(3, 2), std::log(1.6), 1e-12);
}

TEST(Bm25, RepeatedQueryTermsAddUp) {
  const auto idx = SparseIndex::build({chunk("a", "x y"), chunk("b", "y")});
  EXPECT_NEAR(idx.search("x x", 1)[0].score, 2 * idx.search("x", 1)[0].score, 1e-12);
}

TEST(Bm25, InvalidInputs) {
  EXPECT_THROW(SparseIndex::build({chunk("a", "x"), chunk("a", "y")}), ConflictError);
  const auto idx = SparseIndex::build({chunk("a", "x")});
  EXPECT_THROW(idx.search("x", 0), InvalidInputError);
  EXPECT_TRUE(idx.search("nothing", 5).empty());
  EXPECT_THROW(idx.doclen("zzz"), InvalidInputError);
}

TEST(Bm25, MatchesBruteForceOracle) {
  std::vector<std::string> vocab;
  const auto chunks = random_chunks(200, 5, &vocab);
  const auto idx = build_sparse(chunks);
  fixtures::Rng rng(9);
  for (int q = 0; q < 50; ++q) {
    const auto query = random_query(rng, vocab);
    const auto expected = oracle::bm25_rank(id_text(chunks), query);
    const auto got = bm25_search(query, idx, chunks.size());
    ASSERT_EQ(got.size(), expected.size()) << query;
    std::map<std::string, double> want;
    for (const auto& r : expected) want[r.id] = r.score;
    for (const auto& h : got) EXPECT_NEAR(h.score, want.at(h.chunk_id), 1e-6);
    EXPECT_EQ(oracle::ranking_mismatch(bm25_search(query, idx, 8), expected), "");
  }
}

TEST(Bm25, UnrelatedChunkKeepsRankOrder) {
  std::vector<std::string> vocab;
  auto chunks = random_chunks(100, 21, &vocab);
  const auto before = build_sparse(chunks);
  // Same length as the average chunk, built from words outside the vocabulary.
  std::string filler;
  for (int i = 0; i < static_cast<int>(std::lround(before.avgdl())); ++i) filler += "qqzz" + std::to_string(i) + " ";
  chunks.push_back(chunk("zzz-unrelated", filler));
  const auto after = build_sparse(chunks);
  fixtures::Rng rng(4);
  for (int q = 0; q < 30; ++q) {
    const auto query = vocab[fixtures::uniform(rng, 0, vocab.size() - 1)];
    const auto a = before.search(query, 100);
    const auto b = after.search(query, 100);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].chunk_id, b[i].chunk_id);
  }
}

TEST(Bm25, SaveLoadRoundTripIsByteStable) {
  const auto chunks = random_chunks(60, 2);
  const auto idx = build_sparse(chunks);
  const auto dir = fs::temp_directory_path() / "rb_sparse";
  const auto dir2 = fs::temp_directory_path() / "rb_sparse2";
  fs::remove_all(dir);
  fs::remove_all(dir2);
  idx.save(dir.string());
  const auto back = SparseIndex::load(dir.string());
  EXPECT_TRUE(back == idx);
  EXPECT_EQ(back.fingerprint(), idx.fingerprint());
  back.save(dir2.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    EXPECT_EQ(slurp(entry.path()), slurp(dir2 / entry.path().filename())) << entry.path();
  }
  fs::remove_all(dir);
  fs::remove_all(dir2);
  EXPECT_THROW(SparseIndex::load(dir.string()), ConfigError);
}

TEST(Dense, ExactMatchesCosineOracle) {
  fixtures::Rng rng(3);
  std::vector<std::string> ids;
  std::vector<EmbeddingVector> vecs;
  std::vector<std::pair<std::string, std::vector<float>>> raw;
  for (int i = 0; i < 1000; ++i) {
    ids.push_back("v" + std::to_string(i));
    auto g = gaussian(rng, 24);
    raw.emplace_back(ids.back(), g);
    vecs.push_back(EmbeddingVector::normalized(g));
  }
  const auto idx = DenseIndex::from_vectors(ids, vecs, DenseMode::exact);
  for (int q = 0; q < 20; ++q) {
    const auto qv = gaussian(rng, 24);
    const auto expected = oracle::cosine_rank(raw, qv);
    const auto got = dense_search(EmbeddingVector::normalized(qv), idx, 8);
    ASSERT_EQ(got.size(), 8u);
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].chunk_id, expected[i].id);
      EXPECT_NEAR(got[i].score, expected[i].score, 1e-6);
    }
  }
}

TEST(Dense, HnswRecall) {
  fixtures::Rng rng(17);
  std::vector<std::string> ids;
  std::vector<EmbeddingVector> vecs;
  for (int i = 0; i < 3000; ++i) {
    ids.push_back("v" + std::to_string(i));
    vecs.push_back(EmbeddingVector::normalized(gaussian(rng, 32)));
  }
  const auto exact = DenseIndex::from_vectors(ids, vecs, DenseMode::exact);
  const auto ann = DenseIndex::from_vectors(ids, vecs, DenseMode::hnsw);
  std::size_t found = 0, total = 0;
  for (int q = 0; q < 100; ++q) {
    const auto qv = EmbeddingVector::normalized(gaussian(rng, 32));
    std::set<std::string> truth;
    for (const auto& h : exact.search(qv, 8)) truth.insert(h.chunk_id);
    for (const auto& h : ann.search(qv, 8)) found += truth.count(h.chunk_id);
    total += 8;
  }
  EXPECT_GE(static_cast<double>(found) / static_cast<double>(total), 0.95);
}

TEST(Dense, HnswGraphRespectsDegreeBound) {
  fixtures::Rng rng(8);
  std::vector<float> data;
  for (int i = 0; i < 500; ++i) {
    auto v = EmbeddingVector::normalized(gaussian(rng, 8)).values;
    data.insert(data.end(), v.begin(), v.end());
  }
  const auto g = HnswGraph::build(data, 8, {});
  for (std::uint32_t n = 0; n < g.size(); ++n) {
    EXPECT_LE(g.neighbors(n, 0).size(), 32u);
  }
}

TEST(Dense, SaveLoadRoundTrip) {
  fixtures::Rng rng(5);
  std::vector<std::string> ids;
  std::vector<EmbeddingVector> vecs;
  for (int i = 0; i < 300; ++i) {
    ids.push_back("v" + std::to_string(i));
    vecs.push_back(EmbeddingVector::normalized(gaussian(rng, 16)));
  }
  const auto idx = DenseIndex::from_vectors(ids, vecs, DenseMode::hnsw);
  const auto path = (fs::temp_directory_path() / "rb_dense.bin").string();
  idx.save(path);
  const auto back = DenseIndex::load(path);
  EXPECT_EQ(back.size(), idx.size());
  EXPECT_EQ(back.dim(), 16u);
  EXPECT_EQ(back.mode(), DenseMode::hnsw);
  EXPECT_EQ(back.fingerprint(), idx.fingerprint());
  const auto qv = EmbeddingVector::normalized(gaussian(rng, 16));
  const auto a = idx.search(qv, 8), b = back.search(qv, 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].chunk_id, b[i].chunk_id);
    EXPECT_EQ(a[i].score, b[i].score);
  }
  const auto bytes = slurp(path);
  back.save(path);
  EXPECT_EQ(slurp(path), bytes);
  fs::remove(path);
}

TEST(Dense, InvalidInputs) {
  const auto idx = DenseIndex::from_vectors({"a"}, {EmbeddingVector::normalized({1, 0})}, DenseMode::exact);
  EXPECT_THROW(idx.search(EmbeddingVector::normalized({1, 0, 0}), 1), InvalidInputError);
  EXPECT_THROW(idx.search(EmbeddingVector::normalized({1, 0}), 0), InvalidInputError);
  EXPECT_THROW(DenseIndex::from_vectors({"a", "a"}, {EmbeddingVector::normalized({1, 0}), EmbeddingVector::normalized({0, 1})},
                                        DenseMode::exact),
               ConflictError);
}

TEST(Fusion, MinMaxNormalize) {
  auto n = min_max_normalize({{"a", 4.0}, {"b", 2.0}, {"c", 3.0}});
  EXPECT_DOUBLE_EQ(n[0].score, 1.0);
  EXPECT_DOUBLE_EQ(n[1].score, 0.0);
  EXPECT_DOUBLE_EQ(n[2].score, 0.5);
  EXPECT_DOUBLE_EQ(min_max_normalize({{"a", 7.0}})[0].score, 1.0);
  EXPECT_DOUBLE_EQ(min_max_normalize({{"a", 2.0}, {"b", 2.0}})[1].score, 1.0);
  // Scale invariance.
  auto scaled = min_max_normalize({{"a", 40.0}, {"b", 20.0}, {"c", 30.0}});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(scaled[i].score, n[i].score);
}

TEST(Fusion, WeightsFavorDense) {
  // (dense 0.5, sparse 1.0) vs (dense 0.8, sparse 0.0).
  const FusionWeights w;
  const double both = w.dense * 0.5 + w.sparse * 1.0;
  const double dense_only = w.dense * 0.8 + w.sparse * 0.0;
  EXPECT_DOUBLE_EQ(both, 0.625);
  EXPECT_NEAR(dense_only, 0.6, 1e-12);
  EXPECT_GT(both, dense_only);
}

struct HybridFixture {
  std::vector<corpus::Chunk> chunks;
  std::vector<std::string> vocab;
  backend::MockBackend embedder{[] {
    backend::BackendConfig c;
    c.seed = 3;
    c.embedding_dim = 32;
    return c;
  }()};
  SparseIndex sparse;
  DenseIndex dense;

  HybridFixture() {
    chunks = random_chunks(50, 13, &vocab);
    sparse = build_sparse(chunks);
    dense = build_dense(chunks, embedder, DenseMode::exact);
  }

  std::vector<std::pair<std::string, std::vector<float>>> raw_vectors() const {
    std::vector<std::pair<std::string, std::vector<float>>> out;
    for (std::size_t i = 0; i < dense.size(); ++i) out.emplace_back(dense.chunk_ids()[i], dense.vector(i).values);
    return out;
  }
};

TEST(Hybrid, MatchesFusionOracle) {
  HybridFixture f;
  fixtures::Rng rng(77);
  for (int q = 0; q < 20; ++q) {
    const auto query = random_query(rng, f.vocab);
    const auto qv = f.embedder.embed_batch({query})[0];
    const auto expected = oracle::fuse(oracle::bm25_rank(id_text(f.chunks), query),
                                       oracle::cosine_rank(f.raw_vectors(), qv.values), 32);
    const auto got = hybrid_search(query, qv, f.sparse, f.dense, 8);
    ASSERT_EQ(got.size(), 8u);
    EXPECT_EQ(oracle::ranking_mismatch(got, expected), "") << query;
  }
}

TEST(Hybrid, EmptySparseListFallsBackToDenseOrder) {
  HybridFixture f;
  const std::string query = "qqq www";  // no corpus tokens
  const auto qv = f.embedder.embed_batch({query})[0];
  ASSERT_TRUE(f.sparse.search(query, 8).empty());
  const auto fused = hybrid_search(query, qv, f.sparse, f.dense, 8);
  const auto dense = f.dense.search(qv, 8);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(fused[i].chunk_id, dense[i].chunk_id);
}

TEST(Hybrid, RejectsMismatchedIndexes) {
  HybridFixture f;
  auto fewer = f.chunks;
  fewer.pop_back();
  const auto other = build_sparse(fewer);
  const auto qv = f.embedder.embed_batch({"x"})[0];
  EXPECT_THROW(hybrid_search("x", qv, other, f.dense, 8), InvalidInputError);
  EXPECT_THROW(hybrid_search("x", qv, f.sparse, f.dense, 0), InvalidInputError);
}

TEST(SortHits, TieBreakByChunkId) {
  std::vector<ScoredHit> hits{{"b", 1.0}, {"a", 1.0}, {"c", 2.0}};
  sort_hits(hits);
  EXPECT_EQ(hits[0].chunk_id, "c");
  EXPECT_EQ(hits[1].chunk_id, "a");
  EXPECT_EQ(hits[2].chunk_id, "b");
}

}  // namespace
}  // namespace ragbench::index
