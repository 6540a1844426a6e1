#pragma once

// Deterministic synthetic data for tests, the acceptance run and demos.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ragbench/corpus.hpp"
#include "ragbench/eval.hpp"
#include "ragbench/qclass.hpp"

namespace ragbench::fixtures {

using Rng = std::mt19937_64;

/// Uniform integer in [lo, hi].
std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi);
double unit(Rng& rng);

/// Pronounceable lowercase word built from syllables.
std::string word(Rng& rng);

struct DocSpec {
  std::size_t min_sentences = 3;
  std::size_t max_sentences = 40;
  std::size_t min_words = 3;
  std::size_t max_words = 40;
  double oversized_rate = 0.01;  // sentences longer than any chunk size used in tests
  double abbreviation_rate = 0.1;
};

/// Sentences end in . ! or ?, sometimes contain abbreviations ("Dr.", "e.g.")
/// and occasionally run past 300 tokens.
std::string document_text(Rng& rng, const DocSpec& spec = {});

std::vector<corpus::Document> random_corpus(std::size_t n, std::uint64_t seed, const DocSpec& spec = {});

struct SuiteSpec {
  std::size_t background_docs = 100;
  std::size_t per_task = 20;
  std::size_t queries = 1000;
  double positive_rate = 0.18;
  std::uint64_t seed = 7;
};

/// Corpus, three evaluation datasets and a query/response set for labeling.
/// Positive queries name a key that appears next to the response's fact token
/// in one corpus document, so retrieval raises the response likelihood.
/// Negative responses use tokens that occur nowhere in the corpus.
struct Suite {
  std::vector<corpus::Document> corpus;
  eval::Datasets datasets;
  std::vector<qclass::QueryResponse> queries;
  std::vector<int> engineered_labels;

  double engineered_rate() const;
};

Suite make_suite(const SuiteSpec& spec);

void write_corpus(const std::string& path, const std::vector<corpus::Document>& docs);
void write_dataset(const std::string& path, const std::vector<eval::EvalSample>& rows);
void write_query_pairs(const std::string& path, const std::vector<qclass::QueryResponse>& rows);

/// Writes corpus.jsonl, mcq.jsonl, ynm.jsonl, ner.jsonl, queries.jsonl and a
/// mock-backend config.yaml into `dir`. Returns the config path.
std::string write_suite(const Suite& suite, const std::string& dir, std::uint64_t seed = 7,
                        double llm_delay_ms = 0.0);

}  // namespace ragbench::fixtures
