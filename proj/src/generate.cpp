#include "ragbench/generate.hpp"

#include <chrono>
#include <json.hpp>

#include "ragbench/text.hpp"

namespace ragbench::generate {

using json = nlohmann::json;

std::string to_string(Prompting p) {
  switch (p) {
    case Prompting::direct_answer: return "direct_answer";
    case Prompting::cot: return "cot";
    case Prompting::cot_refine: return "cot_refine";
  }
  return "cot";
}

Prompting prompting_from_string(const std::string& s) {
  if (s == "direct_answer" || s == "da") return Prompting::direct_answer;
  if (s == "cot") return Prompting::cot;
  if (s == "cot_refine") return Prompting::cot_refine;
  throw ConfigError("unknown prompting strategy '" + s + "'");
}

BuiltPrompt assemble_prompt(const std::string& query, const std::vector<retrieve::RetrievedDoc>& docs,
                            Prompting strategy, const std::optional<std::string>& prior,
                            const PromptTemplates& templates) {
  if (strategy == Prompting::cot_refine && !prior) {
    throw InvalidInputError("build_prompt: cot_refine requires a prior response");
  }
  const std::string& tmpl = strategy == Prompting::direct_answer ? templates.direct_answer
                            : strategy == Prompting::cot         ? templates.cot
                                                                 : templates.cot_refine;
  std::vector<std::string> blocks;
  blocks.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    blocks.push_back(text::substitute(templates.doc_header,
                                      {{"rank", std::to_string(i + 1)}, {"text", docs[i].text}}));
  }
  for (std::size_t used = docs.size() + 1; used-- > 0;) {
    std::string doc_block;
    for (std::size_t i = 0; i < used; ++i) doc_block += blocks[i];
    auto prompt = text::substitute(tmpl, {{"docs", doc_block}, {"query", query}, {"prior", prior.value_or("")}});
    if (prompt.size() <= templates.char_budget || used == 0) return {std::move(prompt), used};
  }
  return {};
}

std::string build_prompt(const std::string& query, const std::vector<retrieve::RetrievedDoc>& docs,
                         Prompting strategy, const std::optional<std::string>& prior,
                         const PromptTemplates& templates) {
  return assemble_prompt(query, docs, strategy, prior, templates).text;
}

void PipelineConfig::validate() const {
  chunking.validate();
  retrieval.validate();
  if (rag_enabled && retrieval.index_kind != retrieve::IndexKind::sparse) embedder.validate();
}

std::size_t expected_generate_calls(const PipelineConfig& cfg, bool rag_path) {
  if (!rag_path) return 1;
  const std::size_t augment = cfg.retrieval.augmentation == retrieve::Augmentation::vanilla ? 0 : 1;
  return augment + (cfg.prompting == Prompting::cot_refine ? 2 : 1);
}

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

GenerationTrace answer_query(const std::string& query, const PipelineConfig& cfg,
                             const PipelineComponents& components) {
  if (query.empty()) throw InvalidInputError("answer_query: query must be non-empty");
  if (components.llm == nullptr) throw ConfigError("answer_query: no generation backend");
  if (cfg.rag_enabled && cfg.use_query_classification && components.classifier == nullptr) {
    throw ConfigError("answer_query: query classification enabled but no classifier loaded");
  }
  if (cfg.rag_enabled && components.indexes == nullptr) {
    throw ConfigError("answer_query: retrieval enabled but no indexes loaded");
  }

  const Stopwatch clock;
  GenerationTrace trace;
  const auto& llm = *components.llm;
  auto call_llm = [&](const std::string& prompt) {
    ++trace.generate_calls;
    const auto res = llm.generate(prompt);
    trace.backend_latency_s += res.latency_s;
    return res.text;
  };

  std::string stage = "classification";
  try {
    bool rag = cfg.rag_enabled;
    if (rag && cfg.use_query_classification) {
      const auto decision = components.classifier->decide(query);
      trace.classified_need_rag = decision.need_rag;
      trace.classifier_prob = decision.prob;
      rag = decision.need_rag;
    }
    trace.rag_path = rag;

    if (!rag) {
      stage = "generation";
      trace.search_text = query;
      // Nothing to refine without retrieval, so cot_refine answers with cot.
      const auto strategy = cfg.prompting == Prompting::cot_refine ? Prompting::cot : cfg.prompting;
      trace.final_response = call_llm(build_prompt(query, {}, strategy, std::nullopt, components.prompts));
    } else {
      stage = "augmentation";
      auto aug = retrieve::augment_query(query, cfg.retrieval.augmentation, &llm,
                                         components.augmentation_templates);
      trace.generate_calls += aug.generate_calls;
      trace.backend_latency_s += aug.backend_latency_s;
      trace.search_text = std::move(aug.search_text);
      for (auto& w : aug.warnings) trace.warnings.push_back(std::move(w));

      stage = "retrieval";
      auto rcfg = cfg.retrieval;
      rcfg.expand_small2big = cfg.chunking.strategy == corpus::ChunkStrategy::small2big;
      trace.retrieved = retrieve::retrieve(trace.search_text, rcfg, *components.indexes, components.embedder);

      stage = "generation";
      std::optional<std::string> prior;
      if (cfg.prompting == Prompting::cot_refine) {
        prior = call_llm(build_prompt(query, {}, Prompting::cot, std::nullopt, components.prompts));
        trace.no_rag_response = prior;
      }
      const auto built = assemble_prompt(query, trace.retrieved, cfg.prompting, prior, components.prompts);
      if (built.docs_used < trace.retrieved.size()) {
        trace.warnings.push_back("prompt budget: dropped " +
                                 std::to_string(trace.retrieved.size() - built.docs_used) +
                                 " lowest-ranked document(s)");
      }
      trace.final_response = call_llm(built.text);
    }
  } catch (const Error& e) {
    trace.latency_s = clock.seconds();
    throw PipelineError(stage + " failed: " + e.what(), std::move(trace));
  }
  trace.latency_s = clock.seconds();
  return trace;
}

std::string trace_to_json(const GenerationTrace& trace, int indent) {
  json docs = json::array();
  for (const auto& d : trace.retrieved) {
    docs.push_back({{"rank", d.rank}, {"chunk_id", d.chunk_id}, {"score", d.score}, {"text", d.text}});
  }
  json obj = {
      {"classified_need_rag", trace.classified_need_rag ? json(*trace.classified_need_rag) : json(nullptr)},
      {"classifier_prob", trace.classifier_prob ? json(*trace.classifier_prob) : json(nullptr)},
      {"rag_path", trace.rag_path},
      {"search_text", trace.search_text},
      {"retrieved", std::move(docs)},
      {"no_rag_response", trace.no_rag_response ? json(*trace.no_rag_response) : json(nullptr)},
      {"final_response", trace.final_response},
      {"latency_s", trace.latency_s},
      {"backend_latency_s", trace.backend_latency_s},
      {"generate_calls", trace.generate_calls},
      {"warnings", trace.warnings},
  };
  return obj.dump(indent);
}

}  // namespace ragbench::generate
