#pragma once

#include "pumice/common.hpp"

#include <limits>
#include <numeric>
#include <queue>

namespace pumice {

// Static k-d tree over a point set. Ties in the median split are broken by
// point index, so the tree layout (and every query result) is deterministic.
template <int D>
class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(std::vector<Vec<D>> points) : pts_(std::move(points)) {
    idx_.resize(pts_.size());
    std::iota(idx_.begin(), idx_.end(), 0);
    if (!idx_.empty()) build(0, static_cast<int>(idx_.size()), 0);
  }

  std::size_t size() const { return pts_.size(); }
  const Vec<D>& point(int i) const { return pts_[i]; }

  // Index of the nearest point to q, skipping index `skip` (pass -1 to keep all).
  int nearest(const Vec<D>& q, int skip = -1) const {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    nearest_rec(0, static_cast<int>(idx_.size()), 0, q, skip, best, best_d2);
    return best;
  }

  double nearest_distance(const Vec<D>& q, int skip = -1) const {
    int i = nearest(q, skip);
    return i < 0 ? std::numeric_limits<double>::infinity() : (pts_[i] - q).norm();
  }

  // k nearest neighbors, closest first; ties broken by index.
  std::vector<int> knn(const Vec<D>& q, int k, int skip = -1) const {
    Heap heap;
    knn_rec(0, static_cast<int>(idx_.size()), 0, q, k, skip, heap);
    std::vector<std::pair<double, int>> items;
    items.reserve(heap.size());
    while (!heap.empty()) {
      items.push_back(heap.top());
      heap.pop();
    }
    std::sort(items.begin(), items.end());
    std::vector<int> out;
    out.reserve(items.size());
    for (auto& it : items) out.push_back(it.second);
    return out;
  }

  // All indices within radius r of q, sorted by index.
  std::vector<int> radius(const Vec<D>& q, double r) const {
    std::vector<int> out;
    radius_rec(0, static_cast<int>(idx_.size()), 0, q, r * r, out);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  using Heap = std::priority_queue<std::pair<double, int>>;  // max-heap on (dist2, index)

  std::vector<Vec<D>> pts_;
  std::vector<int> idx_;  // in-place kd ordering, median at the midpoint of each range

  void build(int lo, int hi, int depth) {
    if (hi - lo <= 1) return;
    int axis = depth % D;
    int mid = (lo + hi) / 2;
    std::nth_element(idx_.begin() + lo, idx_.begin() + mid, idx_.begin() + hi, [&](int a, int b) {
      double xa = pts_[a][axis], xb = pts_[b][axis];
      return xa < xb || (xa == xb && a < b);
    });
    build(lo, mid, depth + 1);
    build(mid + 1, hi, depth + 1);
  }

  void nearest_rec(int lo, int hi, int depth, const Vec<D>& q, int skip, int& best, double& best_d2) const {
    if (lo >= hi) return;
    int axis = depth % D;
    int mid = (lo + hi) / 2;
    int p = idx_[mid];
    double d2 = (pts_[p] - q).squaredNorm();
    if (p != skip && (d2 < best_d2 || (d2 == best_d2 && (best < 0 || p < best)))) {
      best = p;
      best_d2 = d2;
    }
    double diff = q[axis] - pts_[p][axis];
    int first_lo = diff < 0 ? lo : mid + 1, first_hi = diff < 0 ? mid : hi;
    int second_lo = diff < 0 ? mid + 1 : lo, second_hi = diff < 0 ? hi : mid;
    nearest_rec(first_lo, first_hi, depth + 1, q, skip, best, best_d2);
    if (diff * diff <= best_d2) nearest_rec(second_lo, second_hi, depth + 1, q, skip, best, best_d2);
  }

  void knn_rec(int lo, int hi, int depth, const Vec<D>& q, int k, int skip, Heap& heap) const {
    if (lo >= hi) return;
    int axis = depth % D;
    int mid = (lo + hi) / 2;
    int p = idx_[mid];
    if (p != skip) {
      double d2 = (pts_[p] - q).squaredNorm();
      if (static_cast<int>(heap.size()) < k) {
        heap.emplace(d2, p);
      } else if (d2 < heap.top().first || (d2 == heap.top().first && p < heap.top().second)) {
        heap.pop();
        heap.emplace(d2, p);
      }
    }
    double diff = q[axis] - pts_[p][axis];
    int first_lo = diff < 0 ? lo : mid + 1, first_hi = diff < 0 ? mid : hi;
    int second_lo = diff < 0 ? mid + 1 : lo, second_hi = diff < 0 ? hi : mid;
    knn_rec(first_lo, first_hi, depth + 1, q, k, skip, heap);
    if (static_cast<int>(heap.size()) < k || diff * diff <= heap.top().first)
      knn_rec(second_lo, second_hi, depth + 1, q, k, skip, heap);
  }

  void radius_rec(int lo, int hi, int depth, const Vec<D>& q, double r2, std::vector<int>& out) const {
    if (lo >= hi) return;
    int axis = depth % D;
    int mid = (lo + hi) / 2;
    int p = idx_[mid];
    if ((pts_[p] - q).squaredNorm() <= r2) out.push_back(p);
    double diff = q[axis] - pts_[p][axis];
    if (diff < 0 || diff * diff <= r2) radius_rec(lo, mid, depth + 1, q, r2, out);
    if (diff >= 0 || diff * diff <= r2) radius_rec(mid + 1, hi, depth + 1, q, r2, out);
  }
};

// Mean nearest-neighbor spacing of a point set.
template <int D>
double mean_spacing(const std::vector<Vec<D>>& pts) {
  if (pts.size() < 2) return 0.0;
  KdTree<D> tree(pts);
  double acc = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) acc += tree.nearest_distance(pts[i], static_cast<int>(i));
  return acc / static_cast<double>(pts.size());
}

}  // namespace pumice
