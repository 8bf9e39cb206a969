#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace atrium {

/// Disjoint-set forest with union by size and path compression.
class UnionFind {
 public:
  explicit UnionFind(size_t n = 0) { reset(n); }

  void reset(size_t n) {
    parent_.resize(n);
    std::iota(parent_.begin(), parent_.end(), 0);
    size_.assign(n, 1);
    components_ = n;
  }

  int add() {
    parent_.push_back(static_cast<int>(parent_.size()));
    size_.push_back(1);
    ++components_;
    return static_cast<int>(parent_.size()) - 1;
  }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  /// Returns false when already joined.
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --components_;
    return true;
  }

  bool same(int a, int b) { return find(a) == find(b); }
  int component_size(int x) { return size_[find(x)]; }
  size_t num_components() const { return components_; }
  size_t size() const { return parent_.size(); }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
  size_t components_ = 0;
};

}  // namespace atrium
