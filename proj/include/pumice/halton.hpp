#pragma once

#include "pumice/common.hpp"

#include <limits>

namespace pumice {

// Radical-inverse of i in the given base; i >= 1 (index 0 maps to 0 and is skipped).
inline double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base, f = inv, x = 0.0;
  while (i > 0) {
    x += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return x;
}

// Quasi-uniform nodes in the reference patch
//   {||(x_1..x_{d-1})|| <= R0} x [-H0/2, H0/2],
// drawn from the Halton sequence (bases 2,3 in 2d; 2,3,5 in 3d) over the
// bounding box, rejecting points outside the radial disc (no-op in 2d).
// Deterministic: same (n, R0, H0) gives the same nodes bit for bit.
template <int D>
std::vector<Vec<D>> halton_cylinder_nodes(int n, double R0, double H0) {
  static_assert(D == 2 || D == 3);
  require(n >= 1, ErrorCode::InvalidArgument, "need at least one node");
  require(R0 > 0.0 && H0 > 0.0, ErrorCode::InvalidArgument, "reference dims must be positive");
  constexpr unsigned bases[3] = {2, 3, 5};
  std::vector<Vec<D>> nodes;
  nodes.reserve(n);
  for (std::uint64_t i = 1; static_cast<int>(nodes.size()) < n; ++i) {
    Vec<D> p;
    for (int k = 0; k + 1 < D; ++k) p[k] = (2.0 * radical_inverse(i, bases[k]) - 1.0) * R0;
    p[D - 1] = (radical_inverse(i, bases[D - 1]) - 0.5) * H0;
    if (D == 3 && p.template head<D - 1>().norm() > R0) continue;
    nodes.push_back(p);
  }
  return nodes;
}

// Shared local node layout: every patch uses the same nodes in reference
// coordinates, so every patch shares one interpolation matrix.
template <int D>
struct ReferenceNodeSet {
  double R0 = 1.0;
  double H0 = 1.0;
  std::vector<Vec<D>> nodes;
  double h_prime = 0.0;  // mean nearest-neighbor distance of the nodes

  int size() const { return static_cast<int>(nodes.size()); }
};

template <int D>
ReferenceNodeSet<D> reference_nodes_from(std::vector<Vec<D>> nodes, double R0, double H0) {
  ReferenceNodeSet<D> s;
  s.R0 = R0;
  s.H0 = H0;
  s.nodes = std::move(nodes);
  const int n = s.size();
  if (n <= 1) {
    s.h_prime = 0.0;
    return s;
  }
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      best = std::min(best, (s.nodes[i] - s.nodes[j]).norm());
    }
    acc += best;
  }
  s.h_prime = acc / n;
  return s;
}

template <int D>
ReferenceNodeSet<D> make_reference_nodes(int n, double R0, double H0) {
  return reference_nodes_from<D>(halton_cylinder_nodes<D>(n, R0, H0), R0, H0);
}

}  // namespace pumice
