#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ragbench/generate.hpp"

namespace ragbench::eval {

enum class Task { mcq, yes_no_maybe, ner };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct EntityInstance {
  std::string mention;
  std::string type;

  auto operator<=>(const EntityInstance&) const = default;
};

using EntitySet = std::set<EntityInstance>;

struct McqOption {
  std::string letter;
  std::string text;
};

struct EvalSample {
  std::string id;
  Task task = Task::mcq;
  std::string query;
  std::vector<McqOption> options;       // mcq only
  std::string gold_label;               // mcq letter or yes/no/maybe
  std::vector<EntityInstance> gold_entities;  // ner only

  /// Throws InvalidInputError when a task-specific invariant is broken.
  void validate() const;
};

/// JSON Lines readers; malformed lines raise ParseError with the line number.
std::vector<EvalSample> read_mcq(const std::string& path);
std::vector<EvalSample> read_ynm(const std::string& path);
std::vector<EvalSample> read_ner(const std::string& path);

/// Samples grouped by task. Tasks without samples are left out of reports.
using Datasets = std::map<Task, std::vector<EvalSample>>;

/// Question text handed to the pipeline. mcq lists the options, ner states
/// the expected JSON output shape.
std::string format_query(const EvalSample& sample);

std::optional<std::string> parse_mcq_answer(const std::string& text,
                                            const std::vector<McqOption>& options);
std::optional<std::string> parse_ynm(const std::string& text);
/// Any structural problem yields an empty list.
std::vector<EntityInstance> parse_ner_json(const std::string& text);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EntityPrediction {
  std::string id;
  EntitySet entities;
};

/// Strict instance-level micro-F1. Predictions and golds must carry the same
/// ids in the same order.
Prf micro_f1(const std::vector<EntityPrediction>& preds, const std::vector<EntityPrediction>& golds);

double accuracy(const std::vector<std::optional<std::string>>& preds,
                const std::vector<std::string>& golds);

/// One decimal, half away from zero.
double round1(double x);
/// 100 * (new - old) / old, rounded to one decimal.
double relative_change(double new_value, double old_value);
double mean(const std::vector<double>& xs);

struct SampleOutcome {
  std::string id;
  Task task = Task::mcq;
  std::string response;
  bool rag_path = false;
  std::size_t generate_calls = 0;
  double latency_s = 0.0;
  bool correct = false;  // mcq/ynm only
  std::optional<std::string> error;
};

struct EvalReport {
  std::string config;
  std::map<std::string, double> per_task;  // percent
  std::map<std::string, std::size_t> n_samples;
  double avg_score = 0.0;
  double avg_latency_s = 0.0;
  std::size_t rag_queries = 0;
  std::size_t bypass_queries = 0;
  std::size_t rag_generate_calls = 0;
  std::size_t bypass_generate_calls = 0;
  std::size_t errors = 0;
  std::vector<SampleOutcome> outcomes;  // task order, then file order
};

/// Answers every sample with answer_query on up to `parallelism` workers.
/// Pipeline failures are recorded on the sample and scored incorrect.
EvalReport run_eval(const generate::PipelineConfig& cfg, const Datasets& datasets,
                    const generate::PipelineComponents& components, std::size_t parallelism = 1);

/// {config, per_task, avg_score, avg_latency_s, n_samples, generate_calls, errors}
std::string report_to_json(const EvalReport& report, int indent = 2);

}  // namespace ragbench::eval
