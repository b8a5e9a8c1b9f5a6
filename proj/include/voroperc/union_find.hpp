#pragma once

#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

namespace voroperc {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n = 0) { reset(n); }

  void reset(std::size_t n) {
    parent_.resize(n);
    std::iota(parent_.begin(), parent_.end(), 0u);
    rank_.assign(n, 0);
  }

  std::uint32_t find(std::uint32_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }

  bool unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

  /// Dense component labels 0..k-1 in order of first appearance.
  std::vector<std::int32_t> labels(std::int32_t* count = nullptr) {
    std::vector<std::int32_t> root_label(parent_.size(), -1), out(parent_.size());
    std::int32_t next = 0;
    for (std::uint32_t i = 0; i < parent_.size(); ++i) {
      const auto r = find(i);
      if (root_label[r] < 0) root_label[r] = next++;
      out[i] = root_label[r];
    }
    if (count != nullptr) *count = next;
    return out;
  }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint8_t> rank_;
};

}  // namespace voroperc
