#include "ragbench/retrieve.hpp"

#include <algorithm>
#include <sstream>

#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

namespace ragbench::retrieve {

std::string to_string(Augmentation a) {
  switch (a) {
    case Augmentation::vanilla: return "vanilla";
    case Augmentation::rewrite: return "rewrite";
    case Augmentation::pseudo_response: return "pseudo_response";
  }
  return "vanilla";
}

std::string to_string(IndexKind k) {
  switch (k) {
    case IndexKind::sparse: return "sparse";
    case IndexKind::dense: return "dense";
    case IndexKind::hybrid: return "hybrid";
  }
  return "hybrid";
}

Augmentation augmentation_from_string(const std::string& s) {
  if (s == "vanilla") return Augmentation::vanilla;
  if (s == "rewrite") return Augmentation::rewrite;
  if (s == "pseudo_response") return Augmentation::pseudo_response;
  throw ConfigError("unknown query augmentation '" + s + "'");
}

IndexKind index_kind_from_string(const std::string& s) {
  if (s == "sparse") return IndexKind::sparse;
  if (s == "dense") return IndexKind::dense;
  if (s == "hybrid") return IndexKind::hybrid;
  throw ConfigError("unknown index kind '" + s + "'");
}

void RetrievalConfig::validate() const {
  if (k < 1) throw ConfigError("retrieval: k must be >= 1");
  if (candidate_factor < 1) throw ConfigError("retrieval: candidate_factor must be >= 1");
}

AugmentedQuery augment_query(const std::string& query, Augmentation strategy,
                             const backend::Backend* llm, const AugmentationTemplates& templates) {
  if (query.empty()) throw InvalidInputError("augment_query: query must be non-empty");
  AugmentedQuery out{query, {}, 0, 0.0};
  if (strategy == Augmentation::vanilla) return out;
  if (llm == nullptr) {
    out.warnings.push_back("augmentation " + to_string(strategy) +
                           " skipped: no generation backend; using vanilla query");
    return out;
  }
  const auto& tmpl = strategy == Augmentation::rewrite ? templates.rewrite : templates.pseudo_response;
  const auto prompt = text::substitute(tmpl, {{"query", query}});
  try {
    ++out.generate_calls;
    const auto res = llm->generate(prompt);
    out.backend_latency_s += res.latency_s;
    if (strategy == Augmentation::pseudo_response) {
      out.search_text = query + "\n" + res.text;
    } else {
      std::istringstream lines(res.text);
      std::string line;
      while (std::getline(lines, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        out.search_text += "\n" + line.substr(first, last - first + 1);
      }
    }
  } catch (const Error& e) {
    out.search_text = query;
    out.warnings.push_back("augmentation " + to_string(strategy) +
                           " failed, fell back to vanilla query: " + e.what());
  }
  return out;
}

IndexSet build_index_set(const corpus::ChunkSet& chunks, IndexKind kind,
                         const backend::Backend* embedder, index::DenseMode mode,
                         index::HnswParams hnsw) {
  IndexSet set;
  for (const auto& c : chunks.retrieval) set.units.emplace(c.id, c);
  for (const auto& c : chunks.context) set.parents.emplace(c.id, c);
  if (kind != IndexKind::dense) {
    set.sparse = std::make_shared<const index::SparseIndex>(index::SparseIndex::build(chunks.retrieval));
  }
  if (kind != IndexKind::sparse) {
    if (embedder == nullptr) throw ConfigError("index kind " + to_string(kind) + " requires an embedder");
    set.dense = std::make_shared<const index::DenseIndex>(
        index::DenseIndex::build(chunks.retrieval, *embedder, mode, hnsw));
  }
  return set;
}

namespace {

class Searcher {
 public:
  Searcher(const std::string& text, const RetrievalConfig& cfg, const IndexSet& idx,
           const backend::Backend* embedder)
      : text_(text), cfg_(cfg), idx_(idx) {
    const bool needs_sparse = cfg.index_kind != IndexKind::dense;
    const bool needs_dense = cfg.index_kind != IndexKind::sparse;
    if (needs_sparse && !idx.sparse) throw ConfigError("retrieve: sparse index not built");
    if (needs_dense && !idx.dense) throw ConfigError("retrieve: dense index not built");
    if (needs_dense) {
      if (embedder == nullptr) throw ConfigError("retrieve: dense retrieval requires an embedder");
      query_vec_ = embedder->embed_batch({text}).front();
    }
  }

  std::vector<index::ScoredHit> operator()(std::size_t n) const {
    switch (cfg_.index_kind) {
      case IndexKind::sparse: return idx_.sparse->search(text_, n);
      case IndexKind::dense: return idx_.dense->search(query_vec_, n);
      case IndexKind::hybrid:
        return index::hybrid_search(text_, query_vec_, *idx_.sparse, *idx_.dense, n,
                                    cfg_.candidate_factor);
    }
    return {};
  }

  std::size_t unit_count() const { return idx_.units.size(); }

 private:
  const std::string& text_;
  const RetrievalConfig& cfg_;
  const IndexSet& idx_;
  backend::EmbeddingVector query_vec_;
};

}  // namespace

std::vector<RetrievedDoc> retrieve(const std::string& search_text, const RetrievalConfig& cfg,
                                   const IndexSet& indexes, const backend::Backend* embedder) {
  cfg.validate();
  if (search_text.empty()) throw InvalidInputError("retrieve: search text must be non-empty");
  const Searcher search(search_text, cfg, indexes, embedder);
  std::vector<RetrievedDoc> docs;

  if (!cfg.expand_small2big) {
    for (const auto& hit : search(cfg.k)) {
      auto it = indexes.units.find(hit.chunk_id);
      if (it == indexes.units.end()) {
        throw DataIntegrityError("retrieve: index returned unknown chunk '" + hit.chunk_id + "'");
      }
      docs.push_back({hit.chunk_id, it->second.text, hit.score, 0});
    }
  } else {
    // Widen the small-chunk pool until k distinct parents are found or the
    // index has nothing more to give.
    std::size_t pool = cfg.k * cfg.candidate_factor;
    std::vector<std::pair<std::string, double>> parents;
    for (;;) {
      const auto hits = search(pool);
      parents.clear();
      std::unordered_map<std::string, std::size_t> seen;
      for (const auto& hit : hits) {
        auto it = indexes.units.find(hit.chunk_id);
        if (it == indexes.units.end() || !it->second.parent_id) {
          throw DataIntegrityError("retrieve: chunk '" + hit.chunk_id + "' has no parent link");
        }
        const auto& pid = *it->second.parent_id;
        if (!indexes.parents.contains(pid)) {
          throw DataIntegrityError("retrieve: parent '" + pid + "' of chunk '" + hit.chunk_id + "' missing");
        }
        auto [pos, inserted] = seen.emplace(pid, parents.size());
        if (inserted) {
          parents.emplace_back(pid, hit.score);
        } else {
          parents[pos->second].second = std::max(parents[pos->second].second, hit.score);
        }
      }
      if (parents.size() >= cfg.k || hits.size() < pool || pool >= search.unit_count()) break;
      pool *= 2;
    }
    for (const auto& [pid, score] : parents) docs.push_back({pid, indexes.parents.at(pid).text, score, 0});
  }

  std::sort(docs.begin(), docs.end(), [](const RetrievedDoc& a, const RetrievedDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
  });
  if (docs.size() > cfg.k) docs.resize(cfg.k);
  for (std::size_t i = 0; i < docs.size(); ++i) docs[i].rank = i + 1;
  return docs;
}

}  // namespace ragbench::retrieve
