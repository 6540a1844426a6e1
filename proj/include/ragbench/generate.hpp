#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ragbench/backend.hpp"
#include "ragbench/corpus.hpp"
#include "ragbench/error.hpp"
#include "ragbench/qclass.hpp"
#include "ragbench/retrieve.hpp"

namespace ragbench::generate {

enum class Prompting { direct_answer, cot, cot_refine };

std::string to_string(Prompting p);
Prompting prompting_from_string(const std::string& s);

struct PromptTemplates {
  std::string doc_header = "[{rank}] {text}\n";
  std::string direct_answer =
      "{docs}Answer the question directly with only the final answer.\nQuestion: {query}\nAnswer:";
  std::string cot =
      "{docs}Think step by step, show intermediate reasoning, then give the final answer.\n"
      "Question: {query}\nReasoning:";
  std::string cot_refine =
      "{docs}Your previous answer was:\n{prior}\nReflect on this answer, use the documents above to "
      "correct any errors, and write an improved final answer.\nQuestion: {query}\nImproved answer:";
  std::size_t char_budget = 24000;
};

struct BuiltPrompt {
  std::string text;
  std::size_t docs_used = 0;  // leading docs kept within the character budget
};

/// Documents go first as "[rank] text" blocks, then the strategy instruction
/// and the query. Lowest-ranked documents are dropped while the prompt
/// exceeds the character budget. cot_refine requires `prior`.
BuiltPrompt assemble_prompt(const std::string& query, const std::vector<retrieve::RetrievedDoc>& docs,
                            Prompting strategy, const std::optional<std::string>& prior,
                            const PromptTemplates& templates = {});

std::string build_prompt(const std::string& query, const std::vector<retrieve::RetrievedDoc>& docs,
                         Prompting strategy, const std::optional<std::string>& prior = std::nullopt,
                         const PromptTemplates& templates = {});

/// One full RAG configuration.
struct PipelineConfig {
  std::string preset_name;
  bool rag_enabled = true;  // false: never retrieve ("No RAG")
  corpus::ChunkingConfig chunking;
  backend::BackendConfig embedder;
  bool use_query_classification = true;
  retrieve::RetrievalConfig retrieval;  // carries index kind, augmentation and k
  Prompting prompting = Prompting::cot_refine;

  void validate() const;
};

struct GenerationTrace {
  std::optional<bool> classified_need_rag;
  std::optional<double> classifier_prob;
  bool rag_path = false;
  std::string search_text;
  std::vector<retrieve::RetrievedDoc> retrieved;
  std::optional<std::string> no_rag_response;  // cot_refine first pass
  std::string final_response;
  double latency_s = 0.0;
  double backend_latency_s = 0.0;  // sum of generate-call latencies
  std::size_t generate_calls = 0;
  std::vector<std::string> warnings;
};

/// Generation failed; `trace()` holds whatever was completed.
class PipelineError : public Error {
 public:
  PipelineError(const std::string& what, GenerationTrace partial)
      : Error(what), trace_(std::move(partial)) {}
  const GenerationTrace& trace() const noexcept { return trace_; }

 private:
  GenerationTrace trace_;
};

/// Everything answer_query needs; nothing here is owned.
struct PipelineComponents {
  const backend::Backend* llm = nullptr;
  const backend::Backend* embedder = nullptr;
  const retrieve::IndexSet* indexes = nullptr;
  const qclass::QueryClassifier* classifier = nullptr;
  PromptTemplates prompts;
  retrieve::AugmentationTemplates augmentation_templates;
};

/// classify -> augment -> retrieve -> prompt -> generate.
GenerationTrace answer_query(const std::string& query, const PipelineConfig& cfg,
                             const PipelineComponents& components);

/// Generate calls on the RAG path: one for query augmentation (rewrite or
/// pseudo-response), then one, or two for cot_refine. The bypass path makes one.
std::size_t expected_generate_calls(const PipelineConfig& cfg, bool rag_path);

std::string trace_to_json(const GenerationTrace& trace, int indent = 2);

}  // namespace ragbench::generate
