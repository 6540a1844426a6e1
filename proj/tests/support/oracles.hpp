#pragma once

// Reference implementations written from the definitions, independent of the
// library code paths they check.

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ragbench/corpus.hpp"
#include "ragbench/eval.hpp"
#include "ragbench/index.hpp"

namespace ragbench::oracle {

/// Lowercased tokens: maximal alphanumeric runs (bytes >= 0x80 included),
/// any other non-space byte alone.
std::vector<std::string> tokens(const std::string& text);

struct Ranked {
  std::string id;
  double score = 0.0;
};

/// Every chunk with a positive BM25 score, best first (ties by id).
std::vector<Ranked> bm25_rank(const std::vector<std::pair<std::string, std::string>>& id_text,
                              const std::string& query, double k1 = 1.2, double b = 0.75);

/// Every vector ranked by cosine with `query`, best first (ties by id).
std::vector<Ranked> cosine_rank(const std::vector<std::pair<std::string, std::vector<float>>>& vectors,
                                const std::vector<float>& query);

/// Take the top `pool` of each list, min-max normalize, weight 3:1 toward dense,
/// union and rank the full union.
std::vector<Ranked> fuse(std::vector<Ranked> sparse, std::vector<Ranked> dense, std::size_t pool);

/// Empty when `actual` is a valid top-|actual| prefix of `expected`. Entries of
/// `expected` whose scores lie within `tol` count as interchangeable.
std::string ranking_mismatch(const std::vector<index::ScoredHit>& actual, const std::vector<Ranked>& expected,
                             double tol = 1e-9);

/// Violations of the chunking properties for one document.
std::vector<std::string> chunk_violations(const corpus::Document& doc, const corpus::ChunkingConfig& cfg);

/// Micro-F1 counted by pairwise comparison of deduplicated entity lists.
eval::Prf micro_f1(const std::vector<std::vector<eval::EntityInstance>>& preds,
                   const std::vector<std::vector<eval::EntityInstance>>& golds);

/// Central differences of `f` at `x` with step h.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h = 1e-5);

}  // namespace ragbench::oracle
