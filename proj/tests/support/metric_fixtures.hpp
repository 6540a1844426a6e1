#pragma once

// Hand-computed metric fixtures and the published per-method results the
// report arithmetic is checked against.

#include <optional>
#include <string>
#include <vector>

#include "ragbench/eval.hpp"

namespace ragbench::fixtures {

struct F1Case {
  std::string name;
  std::vector<std::vector<eval::EntityInstance>> preds;
  std::vector<std::vector<eval::EntityInstance>> golds;
  double precision, recall, f1;
};

inline std::vector<F1Case> f1_cases() {
  using E = eval::EntityInstance;
  return {
      {"perfect", {{E{"aspirin", "CHEM"}, E{"Paris", "LOC"}}}, {{E{"aspirin", "CHEM"}, E{"Paris", "LOC"}}}, 1.0, 1.0, 1.0},
      {"half", {{E{"a", "X"}, E{"c", "Y"}}}, {{E{"a", "X"}, E{"b", "Y"}}}, 0.5, 0.5, 0.5},
      {"all empty predictions", {{}, {}}, {{E{"a", "X"}}, {E{"b", "Y"}}}, 0.0, 0.0, 0.0},
      // tp 2, 4 predicted, 3 gold: P 1/2, R 2/3, F1 4/7.
      {"two samples", {{E{"a", "X"}}, {E{"c", "Z"}, E{"d", "Z"}, E{"e", "W"}}}, {{E{"a", "X"}, E{"b", "Y"}}, {E{"c", "Z"}}}, 0.5, 2.0 / 3.0, 4.0 / 7.0},
      {"type must match", {{E{"aspirin", "DRUG"}}}, {{E{"aspirin", "CHEM"}}}, 0.0, 0.0, 0.0},
      {"case sensitive mention", {{E{"Aspirin", "CHEM"}}}, {{E{"aspirin", "CHEM"}}}, 0.0, 0.0, 0.0},
      // Duplicates collapse: one prediction, one gold.
      {"duplicate prediction", {{E{"a", "X"}, E{"a", "X"}}}, {{E{"a", "X"}}}, 1.0, 1.0, 1.0},
  };
}

struct AccuracyCase {
  std::string name;
  std::vector<std::optional<std::string>> preds;
  std::vector<std::string> golds;
  double accuracy;
};

inline std::vector<AccuracyCase> accuracy_cases() {
  return {
      {"three of four", {"A", "B", "C", "A"}, {"A", "B", "C", "D"}, 0.75},
      {"all unparsed", {std::nullopt, std::nullopt}, {"yes", "no"}, 0.0},
      {"unparsed counts wrong", {"yes", std::nullopt, "maybe", "no", "no"}, {"yes", "no", "maybe", "no", "yes"}, 0.6},
  };
}

/// Model outputs that must all parse to an empty entity list.
inline std::vector<std::string> malformed_ner_outputs() {
  return {
      "[{'mention': 'aspirin', 'type': 'CHEM'}]",
      "",
      "No entities were found in the text.",
      "[{\"mention\": \"aspirin\", \"type\": \"CHEM\"}",
      "[{\"mention\": \"aspirin\"}]",
      "[{\"mention\": \"aspirin\", \"type\": 3}]",
      "[\"aspirin\", \"CHEM\"]",
      "[{\"mention\": \"\", \"type\": \"CHEM\"}]",
      "[{\"mention\": \"aspirin\", \"type\": \"CHEM\"},]",
      "[{mention: aspirin, type: CHEM}]",
  };
}

struct ReferenceRow {
  std::string method;
  double mcq, ynm, ner, avg_score, avg_latency_s;
};

/// Published results for the 13 configurations (scores in percent, latency in seconds per query).
inline std::vector<ReferenceRow> reference_results() {
  return {
      {"BP-RAG", 59.7, 56.9, 25.8, 47.5, 14.3}, {"No RAG", 49.3, 43.4, 20.6, 37.8, 10.8},
      {"RAG_1", 59.3, 55.9, 25.2, 46.7, 14.1},  {"RAG_2", 59.7, 56.1, 25.4, 47.1, 14.2},
      {"RAG_3", 53.1, 47.3, 22.5, 40.9, 14.2},  {"RAG_4", 58.9, 55.7, 25.3, 46.6, 14.3},
      {"RAG_5", 55.6, 57.1, 24.1, 45.6, 14.3},  {"RAG_6", 59.3, 56.2, 25.7, 47.1, 14.2},
      {"RAG_7", 58.5, 55.8, 25.1, 46.5, 20.7},  {"RAG_8", 57.4, 54.5, 23.8, 45.2, 11.4},
      {"RAG_9", 56.2, 51.6, 22.6, 43.5, 11.0},  {"RAG_10", 58.2, 55.8, 24.4, 46.1, 14.2},
      {"RAG_11", 54.9, 51.7, 21.9, 42.8, 3.7},
  };
}

}  // namespace ragbench::fixtures
