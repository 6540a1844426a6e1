#include "ragbench/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <queue>
#include <random>

#include "binary_io.hpp"
#include "ragbench/error.hpp"

namespace ragbench::index {

namespace {

using Candidate = std::pair<double, std::uint32_t>;  // (distance, node)

struct Closer {
  bool operator()(const Candidate& a, const Candidate& b) const { return a.first > b.first; }
};
struct Farther {
  bool operator()(const Candidate& a, const Candidate& b) const { return a.first < b.first; }
};

class VisitedSet {
 public:
  void reset(std::size_t n) {
    if (tags_.size() < n) tags_.assign(n, 0);
    if (++epoch_ == 0) {
      std::fill(tags_.begin(), tags_.end(), 0);
      epoch_ = 1;
    }
  }
  bool insert(std::uint32_t i) {
    if (tags_[i] == epoch_) return false;
    tags_[i] = epoch_;
    return true;
  }

 private:
  std::vector<std::uint32_t> tags_;
  std::uint32_t epoch_ = 0;
};

struct Space {
  std::span<const float> data;
  std::size_t dim;

  const float* row(std::uint32_t i) const { return data.data() + static_cast<std::size_t>(i) * dim; }

  double distance(const float* a, const float* b) const {
    double dot = 0.0;
    for (std::size_t d = 0; d < dim; ++d) dot += static_cast<double>(a[d]) * b[d];
    return 1.0 - dot;
  }
};

using Links = std::vector<std::vector<std::vector<std::uint32_t>>>;

// Beam search restricted to one layer; returns up to `ef` nodes sorted by distance.
std::vector<Candidate> search_layer(const Space& space, const Links& links, const float* query,
                                    std::uint32_t entry, std::size_t ef, int level,
                                    VisitedSet& visited) {
  visited.reset(links.size());
  std::priority_queue<Candidate, std::vector<Candidate>, Closer> frontier;
  std::priority_queue<Candidate, std::vector<Candidate>, Farther> best;
  const double d0 = space.distance(query, space.row(entry));
  frontier.emplace(d0, entry);
  best.emplace(d0, entry);
  visited.insert(entry);
  while (!frontier.empty()) {
    const auto [dist, node] = frontier.top();
    if (dist > best.top().first && best.size() >= ef) break;
    frontier.pop();
    for (std::uint32_t nb : links[node][static_cast<std::size_t>(level)]) {
      if (!visited.insert(nb)) continue;
      const double d = space.distance(query, space.row(nb));
      if (best.size() < ef || d < best.top().first) {
        frontier.emplace(d, nb);
        best.emplace(d, nb);
        if (best.size() > ef) best.pop();
      }
    }
  }
  std::vector<Candidate> out;
  out.reserve(best.size());
  while (!best.empty()) {
    out.push_back(best.top());
    best.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::uint32_t greedy_descend(const Space& space, const Links& links, const float* query,
                             std::uint32_t entry, int from_level, int to_level) {
  std::uint32_t cur = entry;
  double cur_d = space.distance(query, space.row(cur));
  for (int level = from_level; level > to_level; --level) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::uint32_t nb : links[cur][static_cast<std::size_t>(level)]) {
        const double d = space.distance(query, space.row(nb));
        if (d < cur_d) {
          cur_d = d;
          cur = nb;
          changed = true;
        }
      }
    }
  }
  return cur;
}

// Diversity heuristic: keep a candidate only if it is closer to the base
// than to every neighbor already kept. Input must be sorted by distance.
std::vector<std::uint32_t> select_neighbors(const Space& space,
                                            const std::vector<Candidate>& sorted,
                                            std::size_t max_count) {
  std::vector<std::uint32_t> kept;
  kept.reserve(max_count);
  for (const auto& [dist, node] : sorted) {
    if (kept.size() >= max_count) break;
    bool good = true;
    for (std::uint32_t k : kept) {
      if (space.distance(space.row(node), space.row(k)) < dist) {
        good = false;
        break;
      }
    }
    if (good) kept.push_back(node);
  }
  return kept;
}

}  // namespace

HnswGraph HnswGraph::build(std::span<const float> data, std::size_t dim, const HnswParams& params) {
  if (params.M < 2) throw InvalidInputError("hnsw: M must be >= 2");
  if (dim == 0 || data.size() % dim != 0) throw InvalidInputError("hnsw: data size not a multiple of dim");
  HnswGraph g;
  g.params_ = params;
  const std::size_t n = data.size() / dim;
  g.links_.resize(n);
  const Space space{data, dim};
  const double level_mult = 1.0 / std::log(static_cast<double>(params.M));
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  VisitedSet visited;
  const std::size_t ef_c = std::max<std::size_t>(params.ef_construction, params.M);

  for (std::uint32_t q = 0; q < n; ++q) {
    const double u = std::max(unit(rng), 1e-300);
    const int level = static_cast<int>(std::floor(-std::log(u) * level_mult));
    g.links_[q].resize(static_cast<std::size_t>(level) + 1);
    if (g.max_level_ < 0) {
      g.entry_ = q;
      g.max_level_ = level;
      continue;
    }
    const float* qv = space.row(q);
    std::uint32_t cur = greedy_descend(space, g.links_, qv, g.entry_, g.max_level_, level);
    for (int l = std::min(level, g.max_level_); l >= 0; --l) {
      const auto found = search_layer(space, g.links_, qv, cur, ef_c, l, visited);
      const std::size_t max_links = l == 0 ? 2 * params.M : params.M;
      auto chosen = select_neighbors(space, found, params.M);
      for (std::uint32_t nb : chosen) {
        auto& back = g.links_[nb][static_cast<std::size_t>(l)];
        back.push_back(q);
        if (back.size() > max_links) {
          std::vector<Candidate> cands;
          cands.reserve(back.size());
          for (std::uint32_t x : back) cands.emplace_back(space.distance(space.row(nb), space.row(x)), x);
          std::sort(cands.begin(), cands.end());
          back = select_neighbors(space, cands, max_links);
        }
      }
      g.links_[q][static_cast<std::size_t>(l)] = std::move(chosen);
      cur = found.front().second;
    }
    if (level > g.max_level_) {
      g.max_level_ = level;
      g.entry_ = q;
    }
  }
  return g;
}

std::vector<std::pair<double, std::uint32_t>> HnswGraph::search(std::span<const float> data,
                                                                std::size_t dim,
                                                                std::span<const float> query,
                                                                std::size_t k,
                                                                std::size_t ef) const {
  std::vector<std::pair<double, std::uint32_t>> out;
  if (links_.empty() || k == 0) return out;
  if (query.size() != dim) throw InvalidInputError("hnsw: query dimension mismatch");
  const Space space{data, dim};
  thread_local VisitedSet visited;
  const auto entry = greedy_descend(space, links_, query.data(), entry_, max_level_, 0);
  const auto found = search_layer(space, links_, query.data(), entry, std::max(ef, k), 0, visited);
  const std::size_t take = std::min(k, found.size());
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.emplace_back(1.0 - found[i].first, found[i].second);
  return out;
}

void HnswGraph::write(std::ostream& out) const {
  io::put_u32(out, params_.M);
  io::put_u32(out, params_.ef_construction);
  io::put_u32(out, params_.ef_search);
  io::put_u64(out, params_.seed);
  io::put_u32(out, entry_);
  io::put_u32(out, static_cast<std::uint32_t>(max_level_ + 1));
  for (const auto& node : links_) {
    io::put_u32(out, static_cast<std::uint32_t>(node.size()));
    for (const auto& level : node) {
      io::put_u32(out, static_cast<std::uint32_t>(level.size()));
      for (auto nb : level) io::put_u32(out, nb);
    }
  }
}

HnswGraph HnswGraph::read(std::istream& in, std::size_t node_count) {
  HnswGraph g;
  g.params_.M = io::get_u32(in);
  g.params_.ef_construction = io::get_u32(in);
  g.params_.ef_search = io::get_u32(in);
  g.params_.seed = io::get_u64(in);
  g.entry_ = io::get_u32(in);
  g.max_level_ = static_cast<int>(io::get_u32(in)) - 1;
  g.links_.resize(node_count);
  for (auto& node : g.links_) {
    node.resize(io::get_u32(in));
    for (auto& level : node) {
      level.resize(io::get_u32(in));
      for (auto& nb : level) {
        nb = io::get_u32(in);
        if (nb >= node_count) throw DataIntegrityError("hnsw: neighbor id out of range");
      }
    }
  }
  if (node_count > 0 && g.entry_ >= node_count) throw DataIntegrityError("hnsw: bad entry point");
  return g;
}

}  // namespace ragbench::index
