#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <queue>
#include <utility>
#include <vector>

namespace scopekit {

/// Exact k-nearest-neighbour search over `count` points of dimension `dim`
/// stored row-major. The data must outlive the tree.
template <typename T>
class KdTree {
 public:
  struct Neighbor {
    std::size_t index;
    double distance;  // Euclidean
  };

  KdTree(const T* data, std::size_t count, int dim, std::size_t leaf_size = 8)
      : data_(data), count_(count), dim_(dim), leaf_size_(leaf_size), order_(count) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (count_ > 0) build(0, count_);
  }

  [[nodiscard]] std::size_t size() const { return count_; }

  /// Up to k neighbours sorted by (distance, index).
  [[nodiscard]] std::vector<Neighbor> knn(const T* query, std::size_t k) const {
    std::vector<Neighbor> out;
    if (k == 0 || count_ == 0) return out;
    Heap heap;
    search(0, query, k, heap);
    out.reserve(heap.size());
    while (!heap.empty()) {
      out.push_back({heap.top().second, std::sqrt(heap.top().first)});
      heap.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  struct Node {
    std::size_t begin, end;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };
  // Max-heap on (squared distance, index): the top is the current worst.
  using Heap = std::priority_queue<std::pair<double, std::size_t>>;

  [[nodiscard]] const T* point(std::size_t i) const { return data_ + i * static_cast<std::size_t>(dim_); }

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    if (end - begin <= leaf_size_) return id;
    int axis = 0;
    double best_spread = -1.0;
    for (int a = 0; a < dim_; ++a) {
      double lo = point(order_[begin])[a], hi = lo;
      for (std::size_t i = begin + 1; i < end; ++i) {
        lo = std::min<double>(lo, point(order_[i])[a]);
        hi = std::max<double>(hi, point(order_[i])[a]);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        axis = a;
      }
    }
    if (best_spread <= 0.0) return id;
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return point(a)[axis] < point(b)[axis]; });
    const double split = point(order_[mid])[axis];
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    Node& n = nodes_[id];
    n.axis = axis;
    n.split = split;
    n.left = left;
    n.right = right;
    return id;
  }

  void offer(std::size_t index, double d2, std::size_t k, Heap& heap) const {
    if (heap.size() < k) {
      heap.emplace(d2, index);
    } else if (std::make_pair(d2, index) < heap.top()) {
      heap.pop();
      heap.emplace(d2, index);
    }
  }

  void search(std::size_t id, const T* q, std::size_t k, Heap& heap) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const T* p = point(order_[i]);
        double d2 = 0.0;
        for (int a = 0; a < dim_; ++a) {
          const double d = static_cast<double>(p[a]) - static_cast<double>(q[a]);
          d2 += d * d;
        }
        offer(order_[i], d2, k, heap);
      }
      return;
    }
    const double diff = static_cast<double>(q[n.axis]) - n.split;
    const std::size_t near = diff < 0.0 ? n.left : n.right;
    const std::size_t far = diff < 0.0 ? n.right : n.left;
    search(near, q, k, heap);
    // Equal distances must still be visited so that index tie-breaks stay exact.
    if (heap.size() < k || diff * diff <= heap.top().first) search(far, q, k, heap);
  }

  const T* data_;
  std::size_t count_;
  int dim_;
  std::size_t leaf_size_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace scopekit
