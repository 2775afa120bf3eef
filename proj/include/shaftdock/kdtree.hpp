#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <numeric>
#include <queue>
#include <utility>
#include <vector>

namespace shaftdock {

/// Exact k-d tree over column points. Query results are ordered by
/// (distance, index), which makes neighbour sets deterministic under ties.
template <typename Scalar, int Dim>
class KdTree {
 public:
  using Matrix = Eigen::Matrix<Scalar, Dim, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Dim, 1>;
  using Neighbor = std::pair<Scalar, Eigen::Index>;  // (squared distance, index)

  explicit KdTree(Matrix points, Eigen::Index leaf_size = 12) : points_(std::move(points)), leaf_size_(leaf_size) {
    order_.resize(static_cast<std::size_t>(points_.cols()));
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    if (order_.empty()) return;
    nodes_.reserve(2 * order_.size() / static_cast<std::size_t>(leaf_size_) + 1);
    build(0, points_.cols());
  }

  Eigen::Index size() const { return points_.cols(); }
  const Matrix& points() const { return points_; }

  /// The k nearest points to q, nearest first. The query point itself is
  /// included when it belongs to the tree.
  std::vector<Neighbor> knn(const Vector& q, Eigen::Index k) const {
    std::priority_queue<Neighbor> heap;
    if (k <= 0 || nodes_.empty()) return {};
    knn_recurse(0, q, k, heap);
    std::vector<Neighbor> out(heap.size());
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
      *it = heap.top();
      heap.pop();
    }
    return out;
  }

  /// Indices of all points with distance <= radius, ascending by index.
  std::vector<Eigen::Index> radius(const Vector& q, Scalar r) const {
    std::vector<Eigen::Index> out;
    if (!nodes_.empty()) radius_recurse(0, q, r * r, out);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct Node {
    Eigen::Index begin = 0, end = 0;
    int axis = -1;  // -1 for leaves
    Scalar split = 0;
    int left = -1, right = -1;
    Vector lo, hi;
  };

  int build(Eigen::Index begin, Eigen::Index end) {
    const int id = static_cast<int>(nodes_.size());
    Node node;
    node.begin = begin;
    node.end = end;
    nodes_.push_back(node);
    Vector lo = points_.col(order_[begin]), hi = lo;
    for (Eigen::Index i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_.col(order_[i]));
      hi = hi.cwiseMax(points_.col(order_[i]));
    }
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    if (end - begin <= leaf_size_) return id;

    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const Eigen::Index mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](Eigen::Index a, Eigen::Index b) {
                       const Scalar va = points_(axis, a), vb = points_(axis, b);
                       return va < vb || (va == vb && a < b);
                     });
    nodes_[id].axis = axis;
    nodes_[id].split = points_(axis, order_[mid]);
    const int l = build(begin, mid);
    const int r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  Scalar box_dist2(const Node& n, const Vector& q) const {
    const Vector d = (n.lo - q).cwiseMax(q - n.hi).cwiseMax(Vector::Zero());
    return d.squaredNorm();
  }

  void knn_recurse(int id, const Vector& q, Eigen::Index k, std::priority_queue<Neighbor>& heap) const {
    const Node& n = nodes_[id];
    if (static_cast<Eigen::Index>(heap.size()) == k && box_dist2(n, q) > heap.top().first) return;
    if (n.axis < 0) {
      for (Eigen::Index i = n.begin; i < n.end; ++i) {
        const Eigen::Index idx = order_[i];
        const Neighbor cand{(points_.col(idx) - q).squaredNorm(), idx};
        if (static_cast<Eigen::Index>(heap.size()) < k) {
          heap.push(cand);
        } else if (cand < heap.top()) {
          heap.pop();
          heap.push(cand);
        }
      }
      return;
    }
    const bool go_left = q(n.axis) <= n.split;
    knn_recurse(go_left ? n.left : n.right, q, k, heap);
    knn_recurse(go_left ? n.right : n.left, q, k, heap);
  }

  void radius_recurse(int id, const Vector& q, Scalar r2, std::vector<Eigen::Index>& out) const {
    const Node& n = nodes_[id];
    if (box_dist2(n, q) > r2) return;
    if (n.axis < 0) {
      for (Eigen::Index i = n.begin; i < n.end; ++i)
        if ((points_.col(order_[i]) - q).squaredNorm() <= r2) out.push_back(order_[i]);
      return;
    }
    radius_recurse(n.left, q, r2, out);
    radius_recurse(n.right, q, r2, out);
  }

  Matrix points_;
  Eigen::Index leaf_size_;
  std::vector<Eigen::Index> order_;
  std::vector<Node> nodes_;
};

}  // namespace shaftdock
