#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "ragbench/error.hpp"
#include "ragbench/grid.hpp"

namespace ragbench::grid {
namespace {

namespace fs = std::filesystem;
using corpus::ChunkStrategy;
using generate::Prompting;
using retrieve::Augmentation;
using retrieve::IndexKind;

generate::PipelineConfig small_base() {
  generate::PipelineConfig base;
  base.chunking.chunk_size = 128;
  base.retrieval.k = 4;
  return base;
}

TEST(Catalog, ThirteenPresetsInOrder) {
  const auto cat = preset_catalog();
  const std::vector<std::string> names = {"BP-RAG", "No RAG", "RAG_1", "RAG_2", "RAG_3", "RAG_4", "RAG_5",
                                          "RAG_6",  "RAG_7",  "RAG_8", "RAG_9", "RAG_10", "RAG_11"};
  ASSERT_EQ(cat.size(), names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    EXPECT_EQ(cat[i].name, names[i]);
    EXPECT_EQ(cat[i].config.preset_name, names[i]);
  }
}

TEST(Catalog, BestPracticeSettings) {
  const auto& bp = preset_catalog()[0].config;
  EXPECT_TRUE(bp.rag_enabled);
  EXPECT_EQ(bp.chunking.strategy, ChunkStrategy::small2big);
  EXPECT_EQ(bp.retrieval.index_kind, IndexKind::hybrid);
  EXPECT_TRUE(bp.use_query_classification);
  EXPECT_EQ(bp.retrieval.augmentation, Augmentation::pseudo_response);
  EXPECT_EQ(bp.prompting, Prompting::cot_refine);
  EXPECT_EQ(bp.embedder.model_name, "bge-base");
}

// Each ablation differs from BP-RAG in exactly the field it names.
TEST(Catalog, SingleSubstitutions) {
  const auto cat = preset_catalog();
  const auto& bp = cat[0].config;
  auto differs = [&](const generate::PipelineConfig& c) {
    std::vector<std::string> d;
    if (c.rag_enabled != bp.rag_enabled) d.push_back("rag");
    if (c.chunking.strategy != bp.chunking.strategy) d.push_back("chunking");
    if (c.retrieval.index_kind != bp.retrieval.index_kind) d.push_back("index");
    if (c.embedder.model_name != bp.embedder.model_name) d.push_back("embedder");
    if (c.use_query_classification != bp.use_query_classification) d.push_back("qc");
    if (c.retrieval.augmentation != bp.retrieval.augmentation) d.push_back("augmentation");
    if (c.prompting != bp.prompting) d.push_back("prompting");
    return d;
  };
  using V = std::vector<std::string>;
  EXPECT_EQ(differs(cat[1].config), (V{"rag", "qc"}));
  EXPECT_EQ(differs(cat[2].config), V{"chunking"});
  EXPECT_EQ(cat[2].config.chunking.strategy, ChunkStrategy::vanilla);
  EXPECT_EQ(cat[3].config.chunking.strategy, ChunkStrategy::sliding_window);
  EXPECT_EQ(cat[4].config.retrieval.index_kind, IndexKind::sparse);
  EXPECT_EQ(cat[5].config.retrieval.index_kind, IndexKind::dense);
  EXPECT_EQ(differs(cat[6].config), V{"embedder"});
  EXPECT_EQ(cat[6].config.embedder.model_name, "medcpt");
  EXPECT_EQ(cat[7].config.embedder.model_name, "gte-base");
  EXPECT_EQ(differs(cat[8].config), V{"qc"});
  EXPECT_EQ(cat[9].config.retrieval.augmentation, Augmentation::rewrite);
  EXPECT_EQ(cat[10].config.retrieval.augmentation, Augmentation::vanilla);
  EXPECT_EQ(cat[11].config.prompting, Prompting::cot);
  EXPECT_EQ(cat[12].config.prompting, Prompting::direct_answer);
  for (std::size_t i = 2; i < cat.size(); ++i) EXPECT_EQ(differs(cat[i].config).size(), 1u) << cat[i].name;
}

TEST(Catalog, BaseSettingsCarryThrough) {
  for (const auto& p : preset_catalog(small_base())) {
    EXPECT_EQ(p.config.chunking.chunk_size, 128u) << p.name;
    EXPECT_EQ(p.config.retrieval.k, 4u) << p.name;
  }
}

TEST(Catalog, EmbeddersAreDistinctSpaces) {
  backend::BackendConfig base;
  base.seed = 9;
  const auto a = embedder_config(base, "bge-base");
  const auto b = embedder_config(base, "medcpt");
  EXPECT_NE(a.seed, b.seed);
  EXPECT_EQ(a.seed, embedder_config(base, "bge-base").seed);
}

TEST(Select, ByNameAndAll) {
  const auto cat = preset_catalog();
  EXPECT_EQ(select_presets(cat, "all").size(), 13u);
  const auto two = select_presets(cat, "RAG_11, No RAG");
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].name, "RAG_11");
  EXPECT_EQ(two[1].name, "No RAG");
  EXPECT_THROW(select_presets(cat, "RAG_12"), ConfigError);
  EXPECT_THROW(select_presets(cat, ""), ConfigError);
}

struct GridWorld {
  fixtures::Suite suite = fixtures::make_suite({.background_docs = 20, .per_task = 4, .queries = 0, .seed = 3});
  backend::MockBackend llm{backend::BackendConfig{}};
  qclass::ConstantClassifier cls{true};
  std::unique_ptr<ArtifactCache> cache = ArtifactCache::from_documents(suite.corpus);

  GridContext context() {
    GridContext ctx;
    ctx.llm = &llm;
    ctx.artifacts = cache.get();
    ctx.classifier = &cls;
    return ctx;
  }
};

TEST(Grid, EachArtifactBuiltOnce) {
  GridWorld w;
  auto ctx = w.context();
  const auto presets = preset_catalog(small_base());
  const auto reports = grid_run(presets, w.suite.datasets, ctx);
  ASSERT_EQ(reports.size(), 13u);
  // Three chunkings; a sparse index per chunking; dense for small2big under
  // three embedders plus vanilla and sliding under the primary one.
  const auto c = w.cache->produced();
  EXPECT_EQ(c.chunk_sets, 3u);
  EXPECT_EQ(c.sparse, 3u);
  EXPECT_EQ(c.dense, 5u);
  // A second pass reuses everything.
  grid_run(presets, w.suite.datasets, ctx);
  const auto again = w.cache->produced();
  EXPECT_EQ(again.chunk_sets, 3u);
  EXPECT_EQ(again.sparse, 3u);
  EXPECT_EQ(again.dense, 5u);
}

TEST(Grid, CallContractPerPreset) {
  GridWorld w;
  auto ctx = w.context();
  const auto presets = preset_catalog(small_base());
  const auto reports = grid_run(presets, w.suite.datasets, ctx);
  for (std::size_t i = 0; i < presets.size(); ++i) {
    const auto& r = reports[i];
    EXPECT_EQ(r.errors, 0u) << presets[i].name;
    EXPECT_EQ(r.rag_generate_calls, r.rag_queries * generate::expected_generate_calls(presets[i].config, true))
        << presets[i].name;
    EXPECT_EQ(r.bypass_generate_calls, r.bypass_queries) << presets[i].name;
  }
  EXPECT_EQ(reports[0].rag_queries, 12u);
  EXPECT_EQ(reports[1].rag_queries, 0u);
}

TEST(Grid, TableShape) {
  GridWorld w;
  auto ctx = w.context();
  const auto presets = preset_catalog(small_base());
  const auto table = format_table(presets, grid_run(presets, w.suite.datasets, ctx));
  std::istringstream in(table);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 15u);  // header, rule, 13 rows
  EXPECT_EQ(lines[0].rfind("Method", 0), 0u);
  EXPECT_NE(lines[0].find("Avg score"), std::string::npos);
  EXPECT_NE(lines[0].find("Avg latency"), std::string::npos);
  EXPECT_EQ(lines[2].rfind("BP-RAG", 0), 0u);
  EXPECT_EQ(lines[14].rfind("RAG_11", 0), 0u);
  for (std::size_t i = 2; i < lines.size(); ++i) EXPECT_EQ(lines[i].size(), lines[0].size());
  EXPECT_THROW(format_table(presets, {}), InvalidInputError);
}

TEST(Grid, RerunsGiveIdenticalTables) {
  auto run = [] {
    GridWorld w;
    auto ctx = w.context();
    ctx.parallelism = 3;
    const auto presets = preset_catalog(small_base());
    auto reports = grid_run(presets, w.suite.datasets, ctx);
    for (auto& r : reports) r.avg_latency_s = 0;  // wall clock
    return format_table(presets, reports);
  };
  EXPECT_EQ(run(), run());
}

class IndexDir : public ::testing::Test {
 protected:
  fs::path dir = fs::temp_directory_path() / ("ragbench_grid_" + std::to_string(::getpid()));
  void TearDown() override { fs::remove_all(dir); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    }
    return out;
  }
};

TEST_F(IndexDir, RewritesIdenticalBytes) {
  const auto docs = fixtures::random_corpus(15, 2);
  const corpus::ChunkingConfig chunking{ChunkStrategy::small2big, 128};
  const std::vector<backend::BackendConfig> embedders = {embedder_config({}, "bge-base"), embedder_config({}, "medcpt")};
  const auto a = write_index((dir / "a").string(), docs, chunking, IndexKind::hybrid, embedders);
  ArtifactOptions four;
  four.parallelism = 4;
  write_index((dir / "b").string(), docs, chunking, IndexKind::hybrid, embedders, four);
  EXPECT_GT(a.chunks, 0u);
  EXPECT_GT(a.large_chunks, 0u);
  ASSERT_EQ(a.dense.size(), 2u);
  const auto sa = snapshot(dir / "a");
  EXPECT_TRUE(sa.count("small2big/meta.json"));
  EXPECT_TRUE(sa.count("small2big/dense-medcpt.bin"));
  EXPECT_EQ(sa, snapshot(dir / "b"));
  write_index((dir / "a").string(), docs, chunking, IndexKind::hybrid, embedders);
  EXPECT_EQ(sa, snapshot(dir / "a"));
}

TEST_F(IndexDir, LoadedArtifactsMatchInMemory) {
  const auto suite = fixtures::make_suite({.background_docs = 20, .per_task = 3, .queries = 0, .seed = 4});
  auto base = small_base();
  const auto presets = select_presets(preset_catalog(base), "BP-RAG,RAG_3");
  write_index(dir.string(), suite.corpus, presets[0].config.chunking, IndexKind::hybrid, {presets[0].config.embedder});
  backend::MockBackend llm{backend::BackendConfig{}};
  qclass::ConstantClassifier cls{true};
  auto disk = ArtifactCache::from_directory(dir.string());
  auto mem = ArtifactCache::from_documents(suite.corpus);
  GridContext a, b;
  a.llm = b.llm = &llm;
  a.classifier = b.classifier = &cls;
  a.artifacts = disk.get();
  b.artifacts = mem.get();
  const auto ra = grid_run(presets, suite.datasets, a);
  const auto rb = grid_run(presets, suite.datasets, b);
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ASSERT_EQ(ra[i].outcomes.size(), rb[i].outcomes.size());
    for (std::size_t j = 0; j < ra[i].outcomes.size(); ++j) {
      EXPECT_EQ(ra[i].outcomes[j].response, rb[i].outcomes[j].response);
    }
  }
}

TEST_F(IndexDir, MissingArtifactsAreConfigErrors) {
  EXPECT_THROW(ArtifactCache::from_directory((dir / "absent").string()), ConfigError);
  fs::create_directories(dir);
  auto cache = ArtifactCache::from_directory(dir.string());
  try {
    cache->chunks({ChunkStrategy::vanilla, 128});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("vanilla"), std::string::npos);
  }
  // Chunks present, dense vectors for another model absent.
  const auto docs = fixtures::random_corpus(5, 1);
  write_index(dir.string(), docs, {ChunkStrategy::vanilla, 128}, IndexKind::sparse, {});
  auto loaded = ArtifactCache::from_directory(dir.string());
  EXPECT_NO_THROW(loaded->sparse({ChunkStrategy::vanilla, 128}));
  EXPECT_THROW(loaded->dense({ChunkStrategy::vanilla, 128}, embedder_config({}, "gte-base")), ConfigError);
}

TEST(Reports, JsonArray) {
  eval::EvalReport r;
  r.config = "X";
  r.per_task["mcq"] = 50.0;
  const auto text = reports_to_json({r, r});
  EXPECT_EQ(text.front(), '[');
  EXPECT_NE(text.find("\"config\": \"X\""), std::string::npos);
}

}  // namespace
}  // namespace ragbench::grid
