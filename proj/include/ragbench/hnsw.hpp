#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace ragbench::index {

struct HnswParams {
  std::uint32_t M = 16;
  std::uint32_t ef_construction = 200;
  std::uint32_t ef_search = 128;
  std::uint64_t seed = 42;
};

/// Hierarchical navigable small-world graph over unit vectors, scored by
/// inner product. The graph holds topology only; the caller owns the
/// row-major vector storage and passes it to every call.
class HnswGraph {
 public:
  HnswGraph() = default;

  static HnswGraph build(std::span<const float> data, std::size_t dim, const HnswParams& params);

  /// Approximate top-k by similarity (best first) using a beam of max(ef, k).
  std::vector<std::pair<double, std::uint32_t>> search(std::span<const float> data,
                                                       std::size_t dim,
                                                       std::span<const float> query,
                                                       std::size_t k, std::size_t ef) const;

  const HnswParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return links_.size(); }
  int max_level() const noexcept { return max_level_; }
  const std::vector<std::uint32_t>& neighbors(std::uint32_t node, int level) const {
    return links_[node][static_cast<std::size_t>(level)];
  }

  void write(std::ostream& out) const;
  static HnswGraph read(std::istream& in, std::size_t node_count);

 private:
  HnswParams params_;
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;  // node -> level -> neighbors
  std::uint32_t entry_ = 0;
  int max_level_ = -1;
};

}  // namespace ragbench::index
