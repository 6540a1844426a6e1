#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "ragbench/error.hpp"
#include "ragbench/retrieve.hpp"
#include "ragbench/text.hpp"

namespace ragbench::retrieve {
namespace {

backend::BackendConfig mock_cfg() {
  backend::BackendConfig cfg;
  cfg.seed = 5;
  return cfg;
}

corpus::Chunk unit(const std::string& id, const std::string& text, std::optional<std::string> parent = {}) {
  corpus::Chunk c;
  c.id = id;
  c.doc_id = "d";
  c.text = text;
  c.parent_id = std::move(parent);
  return c;
}

TEST(Augment, VanillaIsIdentity) {
  backend::MockBackend llm(mock_cfg());
  const auto out = augment_query("What causes gout?", Augmentation::vanilla, &llm);
  EXPECT_EQ(out.search_text, "What causes gout?");
  EXPECT_EQ(out.generate_calls, 0u);
  EXPECT_EQ(llm.stats().generate_calls, 0u);
}

TEST(Augment, PseudoResponseAppendsDraft) {
  auto cfg = mock_cfg();
  const AugmentationTemplates t;
  cfg.response_table[text::substitute(t.pseudo_response, {{"query", "What causes gout?"}})] = "Uric acid buildup";
  backend::MockBackend llm(cfg);
  const auto out = augment_query("What causes gout?", Augmentation::pseudo_response, &llm, t);
  EXPECT_EQ(out.search_text, "What causes gout?\nUric acid buildup");
  EXPECT_EQ(out.generate_calls, 1u);
  EXPECT_TRUE(out.warnings.empty());
}

TEST(Augment, RewriteJoinsSubQuestions) {
  auto cfg = mock_cfg();
  cfg.response_table["Rewrite"] = "  What is gout?\n\nWhat is uric acid?  \n";
  backend::MockBackend llm(cfg);
  const auto out = augment_query("What causes gout?", Augmentation::rewrite, &llm);
  EXPECT_EQ(out.search_text, "What causes gout?\nWhat is gout?\nWhat is uric acid?");
  EXPECT_EQ(out.generate_calls, 1u);
}

TEST(Augment, BackendDownFallsBackWithWarning) {
  auto cfg = mock_cfg();
  cfg.simulate_outage = true;
  backend::MockBackend llm(cfg);
  const auto out = augment_query("What causes gout?", Augmentation::rewrite, &llm);
  EXPECT_EQ(out.search_text, "What causes gout?");
  ASSERT_EQ(out.warnings.size(), 1u);
  EXPECT_NE(out.warnings[0].find("fell back"), std::string::npos);
  EXPECT_THROW(augment_query("", Augmentation::vanilla, &llm), InvalidInputError);
}

TEST(Retrieve, PassThroughWithoutExpansion) {
  corpus::ChunkSet chunks;
  chunks.retrieval = {unit("a", "gout is painful"), unit("b", "uric acid causes gout"), unit("c", "weather today")};
  const auto set = build_index_set(chunks, IndexKind::sparse, nullptr);
  RetrievalConfig cfg;
  cfg.index_kind = IndexKind::sparse;
  const auto docs = retrieve("gout", cfg, set, nullptr);
  const auto raw = set.sparse->search("gout", 8);
  ASSERT_EQ(docs.size(), raw.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    EXPECT_EQ(docs[i].chunk_id, raw[i].chunk_id);
    EXPECT_EQ(docs[i].rank, i + 1);
  }
  EXPECT_EQ(docs[0].text, chunks.retrieval[docs[0].chunk_id == "a" ? 0 : 1].text);
}

TEST(Retrieve, SmallToBigKeepsBestChildScore) {
  corpus::ChunkSet chunks;
  chunks.retrieval = {unit("s1", "gout gout uric", "P1"), unit("s2", "gout and more words here", "P1"),
                      unit("s3", "gout elsewhere in text body", "P2"), unit("s4", "nothing relevant", "P2")};
  chunks.context = {unit("P1", "gout gout uric. gout and more words here."),
                    unit("P2", "gout elsewhere in text body. nothing relevant.")};
  const auto set = build_index_set(chunks, IndexKind::sparse, nullptr);
  RetrievalConfig cfg;
  cfg.index_kind = IndexKind::sparse;
  cfg.expand_small2big = true;
  const auto docs = retrieve("gout", cfg, set, nullptr);
  ASSERT_EQ(docs.size(), 2u);
  double best_p1 = 0;
  for (const auto& h : set.sparse->search("gout", 8)) {
    if (h.chunk_id == "s1" || h.chunk_id == "s2") best_p1 = std::max(best_p1, h.score);
  }
  EXPECT_EQ(docs[0].chunk_id, "P1");
  EXPECT_DOUBLE_EQ(docs[0].score, best_p1);
  EXPECT_EQ(docs[0].text, chunks.context[0].text);
}

TEST(Retrieve, DanglingParentIsIntegrityError) {
  corpus::ChunkSet chunks;
  chunks.retrieval = {unit("s1", "gout", "missing")};
  const auto set = build_index_set(chunks, IndexKind::sparse, nullptr);
  RetrievalConfig cfg;
  cfg.index_kind = IndexKind::sparse;
  cfg.expand_small2big = true;
  EXPECT_THROW(retrieve("gout", cfg, set, nullptr), DataIntegrityError);
}

TEST(Retrieve, MissingIndexOrEmbedderIsConfigError) {
  corpus::ChunkSet chunks;
  chunks.retrieval = {unit("a", "gout")};
  const auto sparse_only = build_index_set(chunks, IndexKind::sparse, nullptr);
  RetrievalConfig cfg;
  cfg.index_kind = IndexKind::hybrid;
  backend::MockBackend emb(mock_cfg());
  EXPECT_THROW(retrieve("gout", cfg, sparse_only, &emb), ConfigError);
  EXPECT_THROW(build_index_set(chunks, IndexKind::dense, nullptr), ConfigError);
  const auto dense = build_index_set(chunks, IndexKind::dense, &emb, index::DenseMode::exact);
  cfg.index_kind = IndexKind::dense;
  EXPECT_THROW(retrieve("gout", cfg, dense, nullptr), ConfigError);
}

TEST(Retrieve, CapAtAvailableUnits) {
  corpus::ChunkSet chunks;
  for (int i = 0; i < 5; ++i) chunks.retrieval.push_back(unit("c" + std::to_string(i), "text number " + std::to_string(i)));
  backend::MockBackend emb(mock_cfg());
  const auto set = build_index_set(chunks, IndexKind::dense, &emb, index::DenseMode::exact);
  RetrievalConfig cfg;
  cfg.index_kind = IndexKind::dense;
  const auto docs = retrieve("text", cfg, set, &emb);
  ASSERT_EQ(docs.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(docs[i].rank, i + 1);
}

TEST(Retrieve, HybridDeterministicAndExpandedTextsBounded) {
  const auto docs = fixtures::random_corpus(40, 8);
  const corpus::ChunkingConfig chunking{corpus::ChunkStrategy::small2big, 128};
  const auto chunks = corpus::chunk_corpus(docs, chunking);
  backend::MockBackend emb(mock_cfg());
  const auto set = build_index_set(chunks, IndexKind::hybrid, &emb);
  RetrievalConfig cfg;
  cfg.expand_small2big = true;
  fixtures::Rng rng(1);
  for (int q = 0; q < 10; ++q) {
    const auto query = fixtures::word(rng) + " " + fixtures::word(rng);
    const auto a = retrieve(query, cfg, set, &emb);
    const auto b = retrieve(query, cfg, set, &emb);
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(a.size(), cfg.k);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].chunk_id, b[i].chunk_id);
      EXPECT_EQ(a[i].score, b[i].score);
      const auto& parent = set.parents.at(a[i].chunk_id);
      EXPECT_TRUE(parent.token_count <= chunking.large_size() || corpus::split_sentences(parent.text).size() == 1);
      bool has_child = false;
      for (const auto& [id, u] : set.units) has_child = has_child || (u.parent_id == parent.id && parent.text.find(u.text) != std::string::npos);
      EXPECT_TRUE(has_child);
    }
  }
}

TEST(Strings, RoundTrip) {
  for (auto a : {Augmentation::vanilla, Augmentation::rewrite, Augmentation::pseudo_response}) {
    EXPECT_EQ(augmentation_from_string(to_string(a)), a);
  }
  for (auto k : {IndexKind::sparse, IndexKind::dense, IndexKind::hybrid}) EXPECT_EQ(index_kind_from_string(to_string(k)), k);
  EXPECT_THROW(index_kind_from_string("ivf"), ConfigError);
}

}  // namespace
}  // namespace ragbench::retrieve
