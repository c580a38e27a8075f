#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include "pumice/common.hpp"
#include "pumice/geometry.hpp"
#include "pumice/halton.hpp"
#include "pumice/kdtree.hpp"

namespace pumice {

// Anisotropic cylindrical subdomain. The rotation columns are the principal
// axes of the member points, last column normal to the local tangent plane.
// z1/z2 bound the members along that axis; height() applies a floor so the
// reference map stays well-conditioned on locally flat data.
template <int D>
struct Patch {
  Vec<D> center = Vec<D>::Zero();
  Mat<D> rotation = Mat<D>::Identity();
  double radius = 1.0;
  double z1 = 0.0, z2 = 0.0;
  Vec<D> scale = Vec<D>::Ones();
  std::vector<int> members;

  double height() const { return std::max(z2 - z1, 0.05 * radius); }
  double zmid() const { return 0.5 * (z1 + z2); }
  double volume() const { return cylinder_measure(D, radius, height()); }

  // patch frame: origin at the center, axes along the rotation columns
  Vec<D> to_local(const Vec<D>& x) const { return rotation.transpose() * (x - center); }

  Vec<D> to_reference(const Vec<D>& x) const {
    Vec<D> hat = to_local(x);
    hat[D - 1] -= zmid();
    return scale.cwiseProduct(hat);
  }

  Vec<D> from_reference(const Vec<D>& xp) const {
    Vec<D> hat = xp.cwiseQuotient(scale);
    hat[D - 1] += zmid();
    return center + rotation * hat;
  }

  bool contains(const Vec<D>& x, bool strict = false) const {
    Vec<D> hat = to_local(x);
    double r = hat.template head<D - 1>().norm();
    double dz = std::abs(hat[D - 1] - zmid());
    double hh = 0.5 * height();
    return strict ? (r < radius && dz < hh) : (r <= radius && dz <= hh);
  }

  // physical center of the cylinder and a radius bounding it
  Vec<D> bounding_center() const { return center + rotation.col(D - 1) * zmid(); }
  double bounding_radius() const { return std::hypot(radius, 0.5 * height()); }
};

template <int D>
void refresh_scaling(Patch<D>& p, double R0, double H0) {
  for (int i = 0; i + 1 < D; ++i) p.scale[i] = R0 / p.radius;
  p.scale[D - 1] = H0 / p.height();
}

template <int D>
struct Pushforward {
  Vec<D> grad;
  Mat<D> hess;
  double laplacian;
};

// Chain rule through the affine reference map. The Laplacian needs only the
// diagonal of the reference Hessian: the rotation drops out by invariance.
template <int D>
Pushforward<D> pushforward_derivatives(const Patch<D>& p, const Vec<D>& ref_grad,
                                       const Mat<D>& ref_hess) {
  Pushforward<D> out;
  out.grad = p.rotation * ref_grad.cwiseProduct(p.scale);
  Mat<D> sh = p.scale.asDiagonal() * ref_hess * p.scale.asDiagonal();
  out.hess = p.rotation * sh * p.rotation.transpose();
  out.laplacian = 0.0;
  for (int i = 0; i < D; ++i) out.laplacian += sq(p.scale[i]) * ref_hess(i, i);
  return out;
}

namespace detail {

inline double rand_u01(std::uint64_t& state) {
  // splitmix64 step; top 53 bits give a double in [0,1)
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

inline int rand_index(std::uint64_t& state, int n) {
  return std::min(n - 1, static_cast<int>(rand_u01(state) * n));
}

}  // namespace detail

template <int D>
struct KMeansResult {
  std::vector<std::vector<int>> clusters;
  std::vector<Vec<D>> centroids;
  double sse = 0.0;
};

// Seeded k-means++ initialization followed by Lloyd iterations; the best of a
// few restarts is returned. Empty clusters are repaired by stealing the point
// farthest from the centroid of the largest cluster.
template <int D>
KMeansResult<D> kmeans_cluster(const std::vector<Vec<D>>& pts, int k, std::uint64_t seed,
                               int restarts = 4) {
  const int m = static_cast<int>(pts.size());
  require(k >= 1 && k <= m, ErrorCode::InvalidArgument, "cluster count out of range");
  {
    std::vector<Vec<D>> sorted = pts;
    auto less = [](const Vec<D>& a, const Vec<D>& b) {
      for (int c = 0; c < D; ++c) {
        if (a[c] < b[c]) return true;
        if (a[c] > b[c]) return false;
      }
      return false;
    };
    std::sort(sorted.begin(), sorted.end(), less);
    int distinct = m == 0 ? 0 : 1;
    for (int i = 1; i < m; ++i)
      if (sorted[i] != sorted[i - 1]) ++distinct;
    require(distinct >= k, ErrorCode::DegenerateInput, "fewer distinct points than clusters");
  }

  KMeansResult<D> best;
  best.sse = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < restarts; ++restart) {
    std::uint64_t state = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(restart);

    // k-means++: each new center sampled with probability ∝ squared distance
    // to the nearest existing center; d2 carries that minimum incrementally
    std::vector<Vec<D>> centers;
    centers.push_back(pts[detail::rand_index(state, m)]);
    std::vector<double> d2(m);
    for (int i = 0; i < m; ++i) d2[i] = (pts[i] - centers[0]).squaredNorm();
    while (static_cast<int>(centers.size()) < k) {
      double total = 0.0;
      for (int i = 0; i < m; ++i) total += d2[i];
      if (total <= 0.0) {
        centers.push_back(pts[detail::rand_index(state, m)]);
      } else {
        double target = detail::rand_u01(state) * total;
        int pick = m - 1;
        double acc = 0.0;
        for (int i = 0; i < m; ++i) {
          acc += d2[i];
          if (acc >= target) {
            pick = i;
            break;
          }
        }
        centers.push_back(pts[pick]);
      }
      for (int i = 0; i < m; ++i)
        d2[i] = std::min(d2[i], (pts[i] - centers.back()).squaredNorm());
    }

    std::vector<int> assign(m, -1);
    for (int iter = 0; iter < 100; ++iter) {
      bool changed = false;
      std::vector<int> count(k, 0);
      KdTree<D> ctree(centers);
      for (int i = 0; i < m; ++i) {
        int bestc = ctree.nearest(pts[i]);
        if (assign[i] != bestc) {
          assign[i] = bestc;
          changed = true;
        }
        count[bestc] += 1;
      }

      for (int c = 0; c < k; ++c) {
        if (count[c] > 0) continue;
        int big = static_cast<int>(std::max_element(count.begin(), count.end()) - count.begin());
        // the farthest member of the largest cluster becomes the empty one
        int steal = -1;
        double far2 = -1.0;
        for (int i = 0; i < m; ++i) {
          if (assign[i] != big) continue;
          double di = (pts[i] - centers[big]).squaredNorm();
          if (di > far2) {
            far2 = di;
            steal = i;
          }
        }
        assign[steal] = c;
        count[big] -= 1;
        count[c] += 1;
        changed = true;
      }

      for (int c = 0; c < k; ++c) centers[c].setZero();
      for (int i = 0; i < m; ++i) centers[assign[i]] += pts[i];
      for (int c = 0; c < k; ++c) centers[c] /= static_cast<double>(count[c]);
      if (!changed) break;
    }

    double sse = 0.0;
    for (int i = 0; i < m; ++i) sse += (pts[i] - centers[assign[i]]).squaredNorm();
    if (sse < best.sse) {
      best.sse = sse;
      best.centroids = centers;
      best.clusters.assign(k, {});
      for (int i = 0; i < m; ++i) best.clusters[assign[i]].push_back(i);
    }
  }
  return best;
}

// PCA of the subset: eigenvectors of the scatter matrix ordered by descending
// eigenvalue give the rotation; radius and axial range bound the members.
template <int D>
Patch<D> patch_from_points(const std::vector<Vec<D>>& pts, const std::vector<int>& subset) {
  require(static_cast<int>(subset.size()) >= D + 1, ErrorCode::InvalidArgument,
          "patch needs at least d+1 points");
  Patch<D> p;
  p.center.setZero();
  for (int i : subset) p.center += pts[i];
  p.center /= static_cast<double>(subset.size());

  Mat<D> scatter = Mat<D>::Zero();
  for (int i : subset) {
    Vec<D> d = pts[i] - p.center;
    scatter += d * d.transpose();
  }
  require(scatter.norm() > 0.0, ErrorCode::RankDeficient, "all patch points coincide");

  Eigen::SelfAdjointEigenSolver<Mat<D>> eig(scatter);
  for (int c = 0; c < D; ++c) {
    Vec<D> q = eig.eigenvectors().col(D - 1 - c);  // descending order
    int imax = 0;
    for (int r = 1; r < D; ++r)
      if (std::abs(q[r]) > std::abs(q[imax])) imax = r;
    if (q[imax] < 0.0) q = -q;
    p.rotation.col(c) = q;
  }

  p.radius = 0.0;
  p.z1 = std::numeric_limits<double>::infinity();
  p.z2 = -std::numeric_limits<double>::infinity();
  for (int i : subset) {
    Vec<D> hat = p.rotation.transpose() * (pts[i] - p.center);
    p.radius = std::max(p.radius, hat.template head<D - 1>().norm());
    p.z1 = std::min(p.z1, hat[D - 1]);
    p.z2 = std::max(p.z2, hat[D - 1]);
  }
  require(p.radius > 0.0, ErrorCode::RankDeficient, "patch points collapse to the axis");
  p.members = subset;
  return p;
}

// Sampled intersection test. Bounding spheres reject distant pairs; otherwise
// a deterministic point cage of each cylinder is tested against the other.
namespace detail {

template <int D>
std::vector<Vec<D>> patch_probe_points(const Patch<D>& p) {
  std::vector<Vec<D>> out;
  double H = p.height(), zm = p.zmid();
  auto push = [&](const Vec<D>& hat) { out.push_back(p.center + p.rotation * hat); };
  if constexpr (D == 2) {
    for (double r : {-p.radius, 0.0, p.radius})
      for (double z : {zm - 0.5 * H, zm, zm + 0.5 * H}) push(Vec<2>{r, z});
  } else {
    for (double z : {zm - 0.5 * H, zm, zm + 0.5 * H}) {
      push(Vec<3>{0.0, 0.0, z});
      for (int a = 0; a < 8; ++a) {
        double th = 2.0 * pi * a / 8;
        push(Vec<3>{p.radius * std::cos(th), p.radius * std::sin(th), z});
      }
    }
  }
  for (const Vec<D>& q : halton_cylinder_nodes<D>(32, p.radius, H)) {
    Vec<D> hat = q;
    hat[D - 1] += zm;
    push(hat);
  }
  return out;
}

}  // namespace detail

template <int D>
bool patches_intersect(const Patch<D>& a, const Patch<D>& b) {
  double gap = (a.bounding_center() - b.bounding_center()).norm();
  if (gap > a.bounding_radius() + b.bounding_radius()) return false;
  for (const Vec<D>& x : detail::patch_probe_points(a))
    if (b.contains(x)) return true;
  for (const Vec<D>& x : detail::patch_probe_points(b))
    if (a.contains(x)) return true;
  return false;
}

template <int D>
struct Cover {
  std::vector<Patch<D>> patches;
  double R0 = 1.0;
  double H0 = 1.0;
  double delta0 = 0.0;
  double R_s = 1.0;  // resolved scale factor (input may request calibration)
  double H_s = 1.0;
  int K = 0;  // max number of patches containing one data point
  bool refinement_stalled = false;
  bool sheet_fallback = false;
  std::vector<std::string> warnings;
  std::vector<std::vector<int>> neighbors;

  int patch_count() const { return static_cast<int>(patches.size()); }

  double max_volume() const {
    double v = 0.0;
    for (const auto& p : patches) v = std::max(v, p.volume());
    return v;
  }
};

// reference-coordinate boundary margin of x in patch p, normalized so that a
// requirement margin >= delta0 is scale-free across anisotropic patches
template <int D>
double patch_margin(const Cover<D>& cov, const Patch<D>& p, const Vec<D>& x) {
  Vec<D> xp = p.to_reference(x);
  double mr = cov.R0 - xp.template head<D - 1>().norm();
  double mz = 0.5 * cov.H0 - std::abs(xp[D - 1]);
  return std::min(mr, mz) / std::min(cov.R0, 0.5 * cov.H0);
}

inline double volume_target(const std::vector<double>& volumes) {
  double mean = std::accumulate(volumes.begin(), volumes.end(), 0.0) /
                static_cast<double>(volumes.size());
  double s = 0.0;
  if (volumes.size() > 1) {
    for (double v : volumes) s += sq(v - mean);
    s = std::sqrt(s / static_cast<double>(volumes.size() - 1));
  }
  return mean + std::max(mean / 10.0, s);
}

namespace detail {

template <int D>
std::vector<std::vector<int>> intersection_graph(const std::vector<Patch<D>>& patches) {
  int P = static_cast<int>(patches.size());
  std::vector<std::vector<Vec<D>>> probes(P);
  for (int a = 0; a < P; ++a) probes[a] = patch_probe_points(patches[a]);
  std::vector<std::vector<int>> adj(P);
  for (int a = 0; a < P; ++a)
    for (int b = a + 1; b < P; ++b) {
      double gap = (patches[a].bounding_center() - patches[b].bounding_center()).norm();
      if (gap > patches[a].bounding_radius() + patches[b].bounding_radius()) continue;
      bool hit = false;
      for (const Vec<D>& x : probes[a])
        if (patches[b].contains(x)) {
          hit = true;
          break;
        }
      for (std::size_t i = 0; !hit && i < probes[b].size(); ++i)
        hit = patches[a].contains(probes[b][i]);
      if (hit) {
        adj[a].push_back(b);
        adj[b].push_back(a);
      }
    }
  return adj;
}

// cluster a pooled index set; under the sheet fallback the centroids come
// from Inner-labeled points only and everything else joins the nearest one
template <int D>
std::vector<std::vector<int>> cluster_subset(const OrientedPointCloud<D>& cloud,
                                             const std::vector<int>& pool, int k,
                                             std::uint64_t seed, bool fallback) {
  std::vector<int> basis = pool;
  if (fallback) {
    std::vector<int> inner;
    for (int i : pool)
      if (cloud.labels[i] == Label::Inner) inner.push_back(i);
    if (static_cast<int>(inner.size()) >= k * (D + 1)) basis = std::move(inner);
  }
  std::vector<Vec<D>> bpts;
  bpts.reserve(basis.size());
  for (int i : basis) bpts.push_back(cloud.points[i]);
  auto km = kmeans_cluster(bpts, k, seed);

  std::vector<std::vector<int>> out(k);
  if (basis.size() == pool.size() && !fallback) {
    for (int c = 0; c < k; ++c)
      for (int local : km.clusters[c]) out[c].push_back(pool[local]);
    return out;
  }
  for (int i : pool) {
    int bestc = 0;
    double bestd = (cloud.points[i] - km.centroids[0]).squaredNorm();
    for (int c = 1; c < k; ++c) {
      double d = (cloud.points[i] - km.centroids[c]).squaredNorm();
      if (d < bestd) {
        bestd = d;
        bestc = c;
      }
    }
    out[bestc].push_back(i);
  }
  return out;
}

}  // namespace detail

// Volume-driven refinement. The target is frozen from the volumes of the
// incoming cover; each round pools every connected flagged set (including
// geometric neighbors) and re-clusters it into one more patch than it had.
template <int D>
void adaptive_refine(Cover<D>& cov, const OrientedPointCloud<D>& cloud, std::uint64_t seed,
                     int max_rounds = 20) {
  std::vector<double> vols;
  for (const auto& p : cov.patches) vols.push_back(p.volume());
  const double vstar = volume_target(vols);

  for (int round = 0; round < max_rounds; ++round) {
    std::vector<char> flagged(cov.patches.size(), 0);
    bool any = false;
    for (std::size_t j = 0; j < cov.patches.size(); ++j)
      if (cov.patches[j].volume() > vstar) {
        flagged[j] = 1;
        any = true;
      }
    if (!any) return;

    auto adj = detail::intersection_graph(cov.patches);
    std::vector<char> dilated = flagged;
    for (std::size_t j = 0; j < cov.patches.size(); ++j)
      if (flagged[j])
        for (int nb : adj[j]) dilated[nb] = 1;

    // connected components of the dilated set
    int P = static_cast<int>(cov.patches.size());
    std::vector<int> comp(P, -1);
    int ncomp = 0;
    for (int j = 0; j < P; ++j) {
      if (!dilated[j] || comp[j] >= 0) continue;
      std::vector<int> stack{j};
      comp[j] = ncomp;
      while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        for (int nb : adj[cur])
          if (dilated[nb] && comp[nb] < 0) {
            comp[nb] = ncomp;
            stack.push_back(nb);
          }
      }
      ++ncomp;
    }

    double prev_max = cov.max_volume();
    std::vector<Patch<D>> next;
    for (int j = 0; j < P; ++j)
      if (!dilated[j]) next.push_back(cov.patches[j]);

    bool split_any = false;
    for (int c = 0; c < ncomp; ++c) {
      std::vector<int> pool;
      int p = 0;
      for (int j = 0; j < P; ++j)
        if (comp[j] == c) {
          pool.insert(pool.end(), cov.patches[j].members.begin(), cov.patches[j].members.end());
          ++p;
        }
      std::sort(pool.begin(), pool.end());
      int k = p + 1;
      if (static_cast<int>(pool.size()) < k * (D + 1)) {
        // cannot split further; keep the old patches of this component
        for (int j = 0; j < P; ++j)
          if (comp[j] == c) next.push_back(cov.patches[j]);
        continue;
      }
      std::uint64_t sub = seed ^ (0x9E3779B97F4A7C15ull *
                                  static_cast<std::uint64_t>(round * 4096 + c + 1));
      auto groups = detail::cluster_subset(cloud, pool, k, sub, cov.sheet_fallback);
      for (auto& g : groups) next.push_back(patch_from_points(cloud.points, g));
      split_any = true;
    }

    if (!split_any) {
      cov.refinement_stalled = true;
      cov.warnings.push_back("refinement stalled: flagged patches can no longer be split");
      return;
    }

    double next_max = 0.0;
    for (const auto& p : next) next_max = std::max(next_max, p.volume());
    if (next_max >= prev_max) {
      cov.refinement_stalled = true;
      cov.warnings.push_back("refinement stalled: round produced no volume decrease");
      return;  // keep the smaller-volume cover
    }
    cov.patches = std::move(next);
  }

  if (cov.max_volume() > vstar) {
    cov.refinement_stalled = true;
    cov.warnings.push_back("refinement stalled: round limit reached above the volume target");
  }
}

namespace detail {

// minimal-volume growth of p so that x gains the given reference margin;
// margin <= 0 requests plain physical containment with a relative slack.
// Height growth is symmetric about the frozen midpoint, which keeps margins
// of already-processed points monotone.
template <int D>
bool extend_to_cover(const Cover<D>& cov, Patch<D>& p, const Vec<D>& x, double margin) {
  Vec<D> hat = p.to_local(x);
  double rho = hat.template head<D - 1>().norm();
  double zeta = std::abs(hat[D - 1] - p.zmid());

  double cr, cz;  // admissible fractions of radius and half-height
  if (margin > 0.0) {
    double mu = margin * std::min(cov.R0, 0.5 * cov.H0);
    cr = 1.0 - mu / cov.R0;
    cz = 1.0 - 2.0 * mu / cov.H0;
  } else {
    cr = cz = 1.0;
  }
  const double slack = 1.0 + 1e-12;
  double need_r = rho > 0.0 ? slack * rho / cr : 0.0;
  double need_h = zeta > 0.0 ? slack * 2.0 * zeta / cz : 0.0;

  bool ok_r = p.radius >= need_r;
  bool ok_h = p.height() >= need_h;
  if (ok_r && ok_h) return false;

  auto grown = [&](double R, double H) {
    Patch<D> q = p;
    q.radius = R;
    // widen by the pad instead of recentering: rounding in zmid +- H/2 can
    // move an endpoint inward by one ulp and drop a boundary member
    double pad = 0.5 * (H - (p.z2 - p.z1));
    if (pad > 0.0) {
      q.z1 = p.z1 - pad;
      q.z2 = p.z2 + pad;
    }
    return q;
  };

  Patch<D> best = p;
  double best_dv = std::numeric_limits<double>::infinity();
  auto consider = [&](const Patch<D>& q) {
    double dv = q.volume() - p.volume();
    if (dv < best_dv) {
      best_dv = dv;
      best = q;
    }
  };
  if (ok_h) consider(grown(std::max(p.radius, need_r), p.height()));
  if (ok_r) consider(grown(p.radius, std::max(p.height(), need_h)));
  consider(grown(std::max(p.radius, need_r), std::max(p.height(), need_h)));

  std::vector<int> members = std::move(p.members);
  p = best;
  p.members = std::move(members);
  refresh_scaling(p, cov.R0, cov.H0);
  return true;
}

}  // namespace detail

// Extend patches until every mesh element is fully covered. Elements are
// planar and patches convex, so covering each corner's Voronoi region of the
// element at sample resolution covers the element; every sample of a region
// goes to the patch nearest to that corner among those containing it.
template <int D>
void cover_elements(Cover<D>& cov, const SurfaceMesh<D>& mesh) {
  auto samples_of = [](const std::vector<Vec<D>>& corners) {
    std::vector<Vec<D>> s;
    if constexpr (D == 2) {
      for (int i = 0; i < 10; ++i) {
        double t = static_cast<double>(i) / 9.0;
        s.push_back((1.0 - t) * corners[0] + t * corners[1]);
      }
    } else {
      for (int a = 0; a <= 8; ++a)
        for (int b = 0; a + b <= 8; ++b) {
          int c = 8 - a - b;
          s.push_back((a * corners[0] + b * corners[1] + c * corners[2]) / 8.0);
        }
    }
    return s;
  };

  for (const auto& el : mesh.elements) {
    std::vector<Vec<D>> corners;
    for (int v : el) corners.push_back(mesh.vertices[v]);

    // patch responsible for each corner: nearest center among those covering
    // it; a noisy cloud can leave a clean vertex just outside every patch, in
    // which case the nearest patch is grown over it first
    std::vector<int> owner(corners.size(), -1);
    for (std::size_t c = 0; c < corners.size(); ++c) {
      double bestd = std::numeric_limits<double>::infinity();
      for (int j = 0; j < cov.patch_count(); ++j) {
        if (!cov.patches[j].contains(corners[c])) continue;
        double d = (cov.patches[j].center - corners[c]).norm();
        if (d < bestd) {
          bestd = d;
          owner[c] = j;
        }
      }
      if (owner[c] < 0) {
        for (int j = 0; j < cov.patch_count(); ++j) {
          double d = (cov.patches[j].center - corners[c]).norm();
          if (d < bestd) {
            bestd = d;
            owner[c] = j;
          }
        }
        detail::extend_to_cover(cov, cov.patches[owner[c]], corners[c], 0.0);
      }
    }

    for (const Vec<D>& x : samples_of(corners)) {
      bool covered = false;
      for (int j = 0; j < cov.patch_count() && !covered; ++j)
        covered = cov.patches[j].contains(x);
      if (covered) continue;
      std::size_t nearest = 0;
      double bestd = (x - corners[0]).squaredNorm();
      for (std::size_t c = 1; c < corners.size(); ++c) {
        double d = (x - corners[c]).squaredNorm();
        if (d < bestd) {
          bestd = d;
          nearest = c;
        }
      }
      detail::extend_to_cover(cov, cov.patches[owner[nearest]], x, 0.0);
    }
  }
}

// Grow patches until every data point has reference margin >= delta0 in at
// least one patch, choosing the cheapest growth by volume. Growth never
// shrinks any margin, so one sweep suffices.
template <int D>
void ensure_overlap(Cover<D>& cov, const OrientedPointCloud<D>& cloud, double delta0) {
  require(delta0 > 0.0 && delta0 < 1.0, ErrorCode::InvalidArgument,
          "relative overlap must lie in (0,1)");
  cov.delta0 = delta0;
  for (int i = 0; i < cloud.size(); ++i) {
    const Vec<D>& y = cloud.points[i];
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : cov.patches) best = std::max(best, patch_margin(cov, p, y));
    if (best >= delta0) continue;

    int pick = -1;
    double pick_dv = std::numeric_limits<double>::infinity();
    Patch<D> pick_patch;
    for (int j = 0; j < cov.patch_count(); ++j) {
      Patch<D> trial = cov.patches[j];
      detail::extend_to_cover(cov, trial, y, delta0);
      double dv = trial.volume() - cov.patches[j].volume();
      if (dv < pick_dv) {
        pick_dv = dv;
        pick = j;
        pick_patch = std::move(trial);
      }
    }
    cov.patches[pick] = std::move(pick_patch);
  }
}

// Recompute member lists (points strictly inside), the overlap diagnostic K,
// and the geometric neighbor graph for a finished or deserialized cover.
template <int D>
void rebind_cover(Cover<D>& cov, const OrientedPointCloud<D>& cloud) {
  for (auto& p : cov.patches) p.members.clear();
  cov.K = 0;
  for (int i = 0; i < cloud.size(); ++i) {
    int hits = 0;
    for (int j = 0; j < cov.patch_count(); ++j)
      if (cov.patches[j].contains(cloud.points[i], true)) {
        cov.patches[j].members.push_back(i);
        ++hits;
      }
    require(hits >= 1, ErrorCode::OutsideCover,
            "data point " + std::to_string(i) + " not strictly inside any patch");
    cov.K = std::max(cov.K, hits);
  }
  cov.neighbors = detail::intersection_graph(cov.patches);
}

struct CoverParams {
  int P0 = 8;
  double delta0 = 0.25;
  double R_s = 0.0;  // 0 requests calibration: R0 = 1 for this run
  double H_s = 1.0;
  std::uint64_t seed = 0;
  int max_rounds = 20;
};

// Full cover construction: cluster, refine by volume, cover mesh elements,
// fix the reference dimensions from the pre-overlap means, then ensure the
// requested overlap.
template <int D>
Cover<D> build_cover(const OrientedPointCloud<D>& cloud, const SurfaceMesh<D>& mesh,
                     const CoverParams& prm) {
  require(prm.P0 >= 1, ErrorCode::InvalidArgument, "initial patch count must be positive");
  require(cloud.size() >= prm.P0 * (D + 1), ErrorCode::DegenerateInput,
          "too few points for the requested patch count");
  require(prm.H_s > 0.0 && prm.R_s >= 0.0, ErrorCode::InvalidArgument,
          "scale factors must be positive");

  Cover<D> cov;
  cov.H_s = prm.H_s;

  // a cluster diameter below the sheet separation would stack patches across
  // the thickness; clustering on the inner sheet keeps a single layer
  auto initial = kmeans_cluster(cloud.points, prm.P0, prm.seed);
  {
    KdTree<D> tree(cloud.points);
    std::vector<double> opp;
    int kq = std::min(cloud.size() - 1, 64);
    for (int i = 0; i < cloud.size(); ++i)
      for (int j : tree.knn(cloud.points[i], kq, i))
        if (cloud.normals[i].dot(cloud.normals[j]) < -0.3) {
          opp.push_back((cloud.points[i] - cloud.points[j]).norm());
          break;
        }
    std::vector<double> diam;
    for (int c = 0; c < prm.P0; ++c) {
      double far = 0.0;
      for (int i : initial.clusters[c])
        far = std::max(far, (cloud.points[i] - initial.centroids[c]).norm());
      diam.push_back(2.0 * far);
    }
    auto median = [](std::vector<double> v) {
      std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
      return v[v.size() / 2];
    };
    if (opp.size() * 5 >= static_cast<std::size_t>(cloud.size()) &&
        median(opp) > median(diam) && cloud.has_labels()) {
      int inner = 0;
      for (auto l : cloud.labels)
        if (l == Label::Inner) ++inner;
      if (inner >= prm.P0 * (D + 1)) {
        cov.sheet_fallback = true;
        std::vector<int> all(cloud.size());
        std::iota(all.begin(), all.end(), 0);
        auto groups = detail::cluster_subset(cloud, all, prm.P0, prm.seed, true);
        initial.clusters = std::move(groups);
      }
    }
  }
  for (const auto& cl : initial.clusters) cov.patches.push_back(patch_from_points(cloud.points, cl));

  adaptive_refine(cov, cloud, prm.seed, prm.max_rounds);
  cover_elements(cov, mesh);

  double rbar = 0.0, hbar = 0.0;
  for (const auto& p : cov.patches) {
    rbar += p.radius;
    hbar += p.height();
  }
  rbar /= cov.patch_count();
  hbar /= cov.patch_count();
  cov.R_s = prm.R_s > 0.0 ? prm.R_s : 1.0 / rbar;
  cov.R0 = cov.R_s * rbar;
  cov.H0 = prm.H_s * cov.R_s * hbar;
  for (auto& p : cov.patches) refresh_scaling(p, cov.R0, cov.H0);

  ensure_overlap(cov, cloud, prm.delta0);
  rebind_cover(cov, cloud);
  return cov;
}

// largest per-patch fill distance when n nodes are placed in each patch
template <int D>
double fill_distance(const Cover<D>& cov, int n) {
  require(n >= 1 && cov.patch_count() >= 1, ErrorCode::InvalidArgument, "empty cover or nodes");
  double h = 0.0;
  for (const auto& p : cov.patches)
    h = std::max(h, std::pow(p.volume() / n, 1.0 / D));
  return h;
}

template <int D>
nlohmann::json cover_to_json(const Cover<D>& cov) {
  nlohmann::json j;
  j["dim"] = D;
  j["R0"] = cov.R0;
  j["H0"] = cov.H0;
  j["delta0"] = cov.delta0;
  j["R_s"] = cov.R_s;
  j["H_s"] = cov.H_s;
  j["patches"] = nlohmann::json::array();
  for (const auto& p : cov.patches) {
    nlohmann::json pj;
    pj["center"] = std::vector<double>(p.center.data(), p.center.data() + D);
    std::vector<double> rot;
    for (int r = 0; r < D; ++r)
      for (int c = 0; c < D; ++c) rot.push_back(p.rotation(r, c));
    pj["rotation"] = rot;
    pj["radius"] = p.radius;
    pj["z_range"] = std::vector<double>{p.z1, p.z2};
    j["patches"].push_back(std::move(pj));
  }
  return j;
}

template <int D>
Cover<D> cover_from_json(const nlohmann::json& j) {
  require(j.contains("dim") && j["dim"].get<int>() == D, ErrorCode::DimensionMismatch,
          "cover dimension does not match");
  Cover<D> cov;
  try {
    cov.R0 = j.at("R0").get<double>();
    cov.H0 = j.at("H0").get<double>();
    cov.delta0 = j.at("delta0").get<double>();
    cov.R_s = j.value("R_s", 1.0);
    cov.H_s = j.value("H_s", 1.0);
    for (const auto& pj : j.at("patches")) {
      Patch<D> p;
      auto c = pj.at("center").get<std::vector<double>>();
      auto rot = pj.at("rotation").get<std::vector<double>>();
      auto zr = pj.at("z_range").get<std::vector<double>>();
      require(c.size() == D && rot.size() == D * D && zr.size() == 2, ErrorCode::ParseError,
              "malformed patch record");
      for (int i = 0; i < D; ++i) p.center[i] = c[i];
      for (int r = 0; r < D; ++r)
        for (int col = 0; col < D; ++col) p.rotation(r, col) = rot[r * D + col];
      p.radius = pj.at("radius").get<double>();
      p.z1 = zr[0];
      p.z2 = zr[1];
      require((p.rotation.transpose() * p.rotation - Mat<D>::Identity()).norm() < 1e-10,
              ErrorCode::ParseError, "patch rotation is not orthogonal");
      require(p.radius > 0.0, ErrorCode::ParseError, "patch radius must be positive");
      refresh_scaling(p, cov.R0, cov.H0);
      cov.patches.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("cover JSON: ") + e.what());
  }
  return cov;
}

}  // namespace pumice
