#pragma once

#include <algorithm>
#include <limits>
#include <queue>
#include <vector>

#include <Eigen/Dense>

namespace blepi::detail {

/// Static k-d tree over the columns of a d x N point matrix.
class KdTree {
 public:
  explicit KdTree(const Eigen::MatrixXd& points) : points_(points), index_(points.cols()) {
    for (Eigen::Index i = 0; i < points.cols(); ++i) index_[i] = i;
    if (points.cols() > 0) root_ = build(0, points.cols());
  }

  /// Squared distance from point `self` to its k-th nearest other point.
  double kth_neighbour_sq(Eigen::Index self, int k) const {
    std::priority_queue<double> heap;  // k smallest squared distances seen so far
    search(root_, self, k, heap);
    return heap.size() == static_cast<std::size_t>(k) ? heap.top()
                                                      : std::numeric_limits<double>::infinity();
  }

 private:
  struct Node {
    Eigen::Index begin, end;
    int axis = -1;
    double split = 0.0;
    int left = -1, right = -1;
  };
  static constexpr Eigen::Index kLeafSize = 12;

  int build(Eigen::Index begin, Eigen::Index end) {
    Node node{begin, end};
    if (end - begin > kLeafSize) {
      // widest coordinate of the bounding box
      const Eigen::Index d = points_.rows();
      int axis = 0;
      double widest = -1.0;
      for (Eigen::Index a = 0; a < d; ++a) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (Eigen::Index i = begin; i < end; ++i) {
          const double v = points_(a, index_[i]);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        if (hi - lo > widest) {
          widest = hi - lo;
          axis = static_cast<int>(a);
        }
      }
      const Eigen::Index mid = begin + (end - begin) / 2;
      std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                       [&](Eigen::Index x, Eigen::Index y) { return points_(axis, x) < points_(axis, y); });
      node.axis = axis;
      node.split = points_(axis, index_[mid]);
      const int self = static_cast<int>(nodes_.size());
      nodes_.push_back(node);
      const int l = build(begin, mid);
      const int r = build(mid, end);
      nodes_[self].left = l;
      nodes_[self].right = r;
      return self;
    }
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  void search(int id, Eigen::Index self, int k, std::priority_queue<double>& heap) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (Eigen::Index i = node.begin; i < node.end; ++i) {
        const Eigen::Index p = index_[i];
        if (p == self) continue;
        const double d2 = (points_.col(p) - points_.col(self)).squaredNorm();
        if (heap.size() < static_cast<std::size_t>(k)) heap.push(d2);
        else if (d2 < heap.top()) {
          heap.pop();
          heap.push(d2);
        }
      }
      return;
    }
    const double diff = points_(node.axis, self) - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    search(near, self, k, heap);
    if (heap.size() < static_cast<std::size_t>(k) || diff * diff <= heap.top()) search(far, self, k, heap);
  }

  const Eigen::MatrixXd& points_;
  std::vector<Eigen::Index> index_;
  std::vector<Node> nodes_;
  int root_ = 0;
};

}  // namespace blepi::detail
