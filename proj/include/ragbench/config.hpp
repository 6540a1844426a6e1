#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "ragbench/eval.hpp"
#include "ragbench/generate.hpp"
#include "ragbench/grid.hpp"
#include "ragbench/qclass.hpp"

namespace ragbench::config {

struct Paths {
  std::string corpus;
  std::map<eval::Task, std::string> datasets;
  std::string index_dir;
  std::string model_dir;
  std::string query_set;   // query/response pairs to label
  std::string labeled;     // labeled dataset; defaults to <model_dir>/labeled.jsonl
  std::string output_dir;  // eval reports and partial results; defaults to <config dir>/eval-out
};

/// Everything a command needs, resolved from one YAML file. Relative paths
/// are resolved against the directory of the config file.
struct RunConfig {
  Paths paths;
  backend::BackendConfig llm;
  backend::BackendConfig embedder;  // shared settings; model names come from embedder_names
  grid::EmbedderNames embedder_names;
  std::string pipeline_embedder;    // model used by the custom pipeline and the classifier
  generate::PipelineConfig pipeline;
  grid::ArtifactOptions artifacts;
  generate::PromptTemplates prompts;
  retrieve::AugmentationTemplates augmentation_templates;
  qclass::TrainConfig train;
  qclass::SplitSpec split;
  std::size_t label_k = 8;
  std::size_t parallelism = 1;
  std::uint64_t seed = 0;

  /// Re-derives every component seed from `seed` and refreshes pipeline.embedder.
  void apply_seed(std::uint64_t seed);
  /// Embedder config for `model` with its per-model seed.
  backend::BackendConfig embedder_for(const std::string& model) const;
  std::string classifier_path() const;
};

/// Throws ConfigError naming the offending key on unknown keys, wrong types
/// or invalid values.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& yaml_text, const std::string& base_dir);

}  // namespace ragbench::config
