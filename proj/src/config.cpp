#include "ragbench/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <yaml-cpp/yaml.h>

#include "ragbench/text.hpp"

namespace ragbench::config {

namespace fs = std::filesystem;

namespace {

std::uint64_t fan_out(std::uint64_t seed, const char* component) { return seed ^ text::fnv1a(component); }

class Section {
 public:
  Section(const YAML::Node& node, std::string path, std::set<std::string> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_ || node_.IsNull()) return;
    if (!node_.IsMap()) throw ConfigError(path_ + ": expected a mapping");
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.contains(key)) throw ConfigError("unknown config key '" + qualified(key) + "'");
    }
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node child(const std::string& key) const {
    if (!node_ || !node_.IsMap()) return YAML::Node(YAML::NodeType::Undefined);
    const YAML::Node& n = node_;
    return n[key];
  }

  template <typename T>
  void read(const std::string& key, T& out) const {
    const auto n = child(key);
    if (!n.IsDefined() || n.IsNull()) return;
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("config key '" + qualified(key) + "' has the wrong type");
    }
  }

  template <typename T, typename Convert>
  void read_as(const std::string& key, T& out, Convert&& convert) const {
    std::string raw;
    read(key, raw);
    if (raw.empty()) return;
    try {
      out = convert(raw);
    } catch (const ConfigError& e) {
      throw ConfigError(qualified(key) + ": " + e.what());
    }
  }

  void read_path(const std::string& key, std::string& out, const fs::path& base) const {
    read(key, out);
    if (!out.empty() && fs::path(out).is_relative()) out = (base / out).lexically_normal().string();
  }

 private:
  YAML::Node node_;
  std::string path_;
};

void read_backend(const Section& parent, const std::string& key, backend::BackendConfig& cfg,
                  const fs::path& base) {
  const Section s(parent.child(key), parent.qualified(key),
                  {"kind", "endpoint", "model", "timeout_ms", "max_retries", "beam_width", "max_new_tokens",
                   "embedding_dim", "delay_ms", "response_table", "simulate_outage"});
  s.read_as("kind", cfg.kind, backend::backend_kind_from_string);
  s.read("endpoint", cfg.endpoint);
  s.read("model", cfg.model_name);
  s.read("timeout_ms", cfg.timeout_ms);
  s.read("max_retries", cfg.max_retries);
  s.read("beam_width", cfg.beam_width);
  s.read("max_new_tokens", cfg.max_new_tokens);
  s.read("embedding_dim", cfg.embedding_dim);
  s.read("delay_ms", cfg.delay_ms);
  s.read("simulate_outage", cfg.simulate_outage);
  std::string table;
  s.read_path("response_table", table, base);
  if (!table.empty()) {
    if (!fs::exists(table)) throw ConfigError(s.qualified("response_table") + ": file not found: " + table);
    cfg.response_table = backend::load_response_table(table);
  }
}

}  // namespace

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  llm.seed = static_cast<std::int64_t>(fan_out(s, "llm"));
  embedder.seed = static_cast<std::int64_t>(fan_out(s, "embedder"));
  split.seed = fan_out(s, "split");
  artifacts.hnsw.seed = fan_out(s, "hnsw");
  pipeline.embedder = embedder_for(pipeline_embedder);
}

backend::BackendConfig RunConfig::embedder_for(const std::string& model) const {
  return grid::embedder_config(embedder, model);
}

std::string RunConfig::classifier_path() const { return (fs::path(paths.model_dir) / "classifier.json").string(); }

RunConfig parse_config(const std::string& yaml_text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  const fs::path base = base_dir.empty() ? fs::current_path() : fs::path(base_dir);
  const Section top(root, "",
                    {"seed", "parallelism", "paths", "backends", "pipeline", "index", "templates", "classifier"});

  RunConfig cfg;
  top.read("parallelism", cfg.parallelism);
  if (cfg.parallelism < 1) throw ConfigError("parallelism must be >= 1");

  {
    const Section s(top.child("paths"), "paths",
                    {"corpus", "datasets", "index_dir", "model_dir", "query_set", "labeled", "output_dir"});
    s.read_path("corpus", cfg.paths.corpus, base);
    s.read_path("index_dir", cfg.paths.index_dir, base);
    s.read_path("model_dir", cfg.paths.model_dir, base);
    s.read_path("query_set", cfg.paths.query_set, base);
    s.read_path("labeled", cfg.paths.labeled, base);
    s.read_path("output_dir", cfg.paths.output_dir, base);
    const Section ds(s.child("datasets"), "paths.datasets", {"mcq", "ynm", "ner"});
    for (const auto& [key, task] : {std::pair{"mcq", eval::Task::mcq}, std::pair{"ynm", eval::Task::yes_no_maybe},
                                    std::pair{"ner", eval::Task::ner}}) {
      std::string p;
      ds.read_path(key, p, base);
      if (!p.empty()) cfg.paths.datasets[task] = p;
    }
    if (cfg.paths.labeled.empty() && !cfg.paths.model_dir.empty()) {
      cfg.paths.labeled = (fs::path(cfg.paths.model_dir) / "labeled.jsonl").string();
    }
    if (cfg.paths.output_dir.empty()) {
      cfg.paths.output_dir = (base / "eval-out").lexically_normal().string();
    }
  }

  {
    const Section s(top.child("backends"), "backends", {"llm", "embedder"});
    read_backend(s, "llm", cfg.llm, base);
    read_backend(s, "embedder", cfg.embedder, base);
  }

  {
    const Section s(top.child("pipeline"), "pipeline",
                    {"rag_enabled", "chunk_strategy", "chunk_size", "index_kind", "embedder_model",
                     "embedder_models", "use_query_classification", "augmentation", "prompting", "k",
                     "candidate_factor"});
    // The custom pipeline starts from the BP-RAG settings.
    auto& p = cfg.pipeline;
    p.preset_name = "custom";
    p.chunking.strategy = corpus::ChunkStrategy::small2big;
    p.retrieval.index_kind = retrieve::IndexKind::hybrid;
    p.retrieval.augmentation = retrieve::Augmentation::pseudo_response;
    p.prompting = generate::Prompting::cot_refine;
    s.read("rag_enabled", p.rag_enabled);
    s.read_as("chunk_strategy", p.chunking.strategy, corpus::chunk_strategy_from_string);
    s.read("chunk_size", p.chunking.chunk_size);
    s.read_as("index_kind", p.retrieval.index_kind, retrieve::index_kind_from_string);
    s.read("use_query_classification", p.use_query_classification);
    s.read_as("augmentation", p.retrieval.augmentation, retrieve::augmentation_from_string);
    s.read_as("prompting", p.prompting, generate::prompting_from_string);
    s.read("k", p.retrieval.k);
    s.read("candidate_factor", p.retrieval.candidate_factor);
    const Section names(s.child("embedder_models"), "pipeline.embedder_models",
                        {"primary", "in_domain", "alternate"});
    names.read("primary", cfg.embedder_names.primary);
    names.read("in_domain", cfg.embedder_names.in_domain);
    names.read("alternate", cfg.embedder_names.alternate);
    cfg.pipeline_embedder = cfg.embedder_names.primary;
    s.read("embedder_model", cfg.pipeline_embedder);
    try {
      p.chunking.validate();
      p.retrieval.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("pipeline: ") + e.what());
    }
  }

  {
    const Section s(top.child("index"), "index", {"dense_mode", "hnsw"});
    s.read_as("dense_mode", cfg.artifacts.dense_mode, index::dense_mode_from_string);
    const Section h(s.child("hnsw"), "index.hnsw", {"M", "ef_construction", "ef_search"});
    h.read("M", cfg.artifacts.hnsw.M);
    h.read("ef_construction", cfg.artifacts.hnsw.ef_construction);
    h.read("ef_search", cfg.artifacts.hnsw.ef_search);
    if (cfg.artifacts.hnsw.M < 2) throw ConfigError("index.hnsw.M must be >= 2");
  }

  {
    const Section s(top.child("templates"), "templates",
                    {"doc_header", "direct_answer", "cot", "cot_refine", "char_budget", "rewrite",
                     "pseudo_response"});
    s.read("doc_header", cfg.prompts.doc_header);
    s.read("direct_answer", cfg.prompts.direct_answer);
    s.read("cot", cfg.prompts.cot);
    s.read("cot_refine", cfg.prompts.cot_refine);
    s.read("char_budget", cfg.prompts.char_budget);
    s.read("rewrite", cfg.augmentation_templates.rewrite);
    s.read("pseudo_response", cfg.augmentation_templates.pseudo_response);
  }

  {
    const Section s(top.child("classifier"), "classifier",
                    {"learning_rate", "l2", "max_epochs", "eval_every", "threshold", "label_k", "split"});
    s.read("learning_rate", cfg.train.learning_rate);
    s.read("l2", cfg.train.l2);
    s.read("max_epochs", cfg.train.max_epochs);
    s.read("eval_every", cfg.train.eval_every);
    s.read("threshold", cfg.train.threshold);
    s.read("label_k", cfg.label_k);
    const Section sp(s.child("split"), "classifier.split", {"train", "dev", "test"});
    sp.read("train", cfg.split.train_frac);
    sp.read("dev", cfg.split.dev_frac);
    sp.read("test", cfg.split.test_frac);
    try {
      cfg.split.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("classifier.split: ") + e.what());
    }
  }

  std::uint64_t seed = 0;
  top.read("seed", seed);
  cfg.apply_seed(seed);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) throw ConfigError("no config file given (--config)");
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text, fs::absolute(path).parent_path().string());
}

}  // namespace ragbench::config
