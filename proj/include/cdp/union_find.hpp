#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "cdp/lattice.hpp"

namespace cdp {

// Union-find with path halving. The representative of a set is always its
// smallest element, so labels are deterministic.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (a < b) parent_[b] = a;
    else parent_[a] = b;
    return true;
  }

  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::uint32_t> parent_;
};

// Union-find that also tracks each vertex's lattice displacement relative to
// its representative. Closing a cycle with non-zero net displacement means
// the cluster winds around the torus.
class DisplacementUnionFind {
 public:
  using Offset = std::array<std::int32_t, kMaxDim>;

  DisplacementUnionFind(std::size_t n, int d) : d_(d), parent_(n), offset_(n, Offset{}) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  /// Representative of x; off receives position(x) - position(root).
  std::uint32_t find(std::uint32_t x, Offset& off) {
    path_.clear();
    std::uint32_t r = x;
    while (parent_[r] != r) {
      path_.push_back(r);
      r = parent_[r];
    }
    // Compress from the top so each node's offset becomes relative to r.
    for (auto it = path_.rbegin(); it != path_.rend(); ++it) {
      std::uint32_t p = parent_[*it];
      if (p != r) {
        for (int i = 0; i < d_; ++i) offset_[*it][i] += offset_[p][i];
      }
      parent_[*it] = r;
    }
    off = (x == r) ? Offset{} : offset_[x];
    return r;
  }

  /// Joins a and b where position(b) = position(a) + step. Returns the net
  /// winding if a and b were already joined (zero vector otherwise).
  Offset unite(std::uint32_t a, std::uint32_t b, const Offset& step) {
    Offset oa, ob;
    std::uint32_t ra = find(a, oa), rb = find(b, ob);
    // position(rb) relative to position(ra)
    Offset rel{};
    for (int i = 0; i < d_; ++i) rel[i] = oa[i] + step[i] - ob[i];
    if (ra == rb) return rel;
    if (ra < rb) {
      parent_[rb] = ra;
      offset_[rb] = rel;
    } else {
      for (int i = 0; i < d_; ++i) rel[i] = -rel[i];
      parent_[ra] = rb;
      offset_[ra] = rel;
    }
    return Offset{};
  }

 private:
  int d_;
  std::vector<std::uint32_t> parent_;
  std::vector<Offset> offset_;
  std::vector<std::uint32_t> path_;
};

}  // namespace cdp
