#pragma once

#include "pumice/geometry.hpp"

#include <functional>
#include <random>

namespace pumice {

enum class FixtureKind { Annulus2D, BentStrip2D, DoubleLoop2D, SphericalShell3D, BentSlab3D };

inline const char* fixture_name(FixtureKind k) {
  switch (k) {
    case FixtureKind::Annulus2D: return "annulus2d";
    case FixtureKind::BentStrip2D: return "bentstrip2d";
    case FixtureKind::DoubleLoop2D: return "doubleloop2d";
    case FixtureKind::SphericalShell3D: return "sphericalshell3d";
    case FixtureKind::BentSlab3D: return "bentslab3d";
  }
  return "unknown";
}

inline FixtureKind fixture_from_name(const std::string& s) {
  for (auto k : {FixtureKind::Annulus2D, FixtureKind::BentStrip2D, FixtureKind::DoubleLoop2D,
                 FixtureKind::SphericalShell3D, FixtureKind::BentSlab3D})
    if (s == fixture_name(k)) return k;
  fail(ErrorCode::InvalidArgument, "unknown fixture '" + s + "'");
}

inline int fixture_dimension(FixtureKind k) {
  return (k == FixtureKind::SphericalShell3D || k == FixtureKind::BentSlab3D) ? 3 : 2;
}

template <int D>
struct SdfEval {
  double value = 0.0;
  Vec<D> grad = Vec<D>::Zero();
  Mat<D> hess = Mat<D>::Zero();
};

// Synthetic thin structure with everything verification needs: noisy oriented
// samples, the noise-free auxiliary mesh, the exact signed distance of the
// solid, and a predicate masking the sdf's kink set (medial axis and branch
// folds), where gradients are not defined.
template <int D>
struct Fixture {
  FixtureKind kind = FixtureKind::Annulus2D;
  OrientedPointCloud<D> cloud;
  SurfaceMesh<D> mesh;
  double noise_amplitude = 0.0;
  double thickness = 0.0;  // sheet separation of the solid
  Vec<D> bbox_min = Vec<D>::Zero();
  Vec<D> bbox_max = Vec<D>::Zero();
  std::function<SdfEval<D>(const Vec<D>&)> sdf;
  std::function<bool(const Vec<D>&, double)> near_medial;  // (point, band)
};

namespace detail {

// sdf of the solid between two concentric spheres/circles around `center`:
// max(R1 - r, r - R2), negative inside the shell material.
template <int D>
SdfEval<D> shell_sdf(const Vec<D>& x, const Vec<D>& center, double R1, double R2) {
  SdfEval<D> e;
  Vec<D> d = x - center;
  double r = d.norm();
  if (r == 0.0) {
    e.value = R1;  // deep outside (inside the hole); gradient undefined, medial
    return e;
  }
  Vec<D> rh = d / r;
  Mat<D> curv = (Mat<D>::Identity() - rh * rh.transpose()) / r;
  if (R1 - r >= r - R2) {
    e.value = R1 - r;
    e.grad = -rh;
    e.hess = -curv;
  } else {
    e.value = r - R2;
    e.grad = rh;
    e.hess = curv;
  }
  return e;
}

inline void append_circle(OrientedPointCloud<2>& cloud, SurfaceMesh<2>& mesh, const Vec<2>& center,
                          double R, int n, double normal_sign, Label lab) {
  int base = mesh.vertex_count();
  for (int i = 0; i < n; ++i) {
    double th = 2.0 * pi * i / n;
    Vec<2> rh{std::cos(th), std::sin(th)};
    cloud.points.push_back(center + R * rh);
    cloud.normals.push_back(normal_sign * rh);
    cloud.labels.push_back(lab);
    mesh.vertices.push_back(center + R * rh);
  }
  for (int i = 0; i < n; ++i) mesh.elements.push_back({base + i, base + (i + 1) % n});
}

// Zigzag stitch between two parallel rings of mesh vertices, each ordered by
// its angle array (strictly increasing within one turn). A one-point ring
// becomes a fan apex.
inline void stitch_rings(SurfaceMesh<3>& mesh, const std::vector<int>& ia, const std::vector<double>& aa,
                         const std::vector<int>& ib, const std::vector<double>& ab) {
  int ma = static_cast<int>(ia.size()), mb = static_cast<int>(ib.size());
  if (ma == 0 || mb == 0) return;
  if (ma == 1) {
    for (int j = 0; j < mb; ++j)
      if (mb > 2 || j + 1 < mb) mesh.elements.push_back({ia[0], ib[j], ib[(j + 1) % mb]});
    return;
  }
  if (mb == 1) {
    for (int i = 0; i < ma; ++i)
      if (ma > 2 || i + 1 < ma) mesh.elements.push_back({ib[0], ia[(i + 1) % ma], ia[i]});
    return;
  }
  // rotate ring b so both walks start at nearly the same angle, then
  // merge-walk by relative angle; exactly ma + mb triangles close the band
  int j0 = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < mb; ++k) {
    double d = std::abs(std::remainder(ab[k] - aa[0], 2.0 * pi));
    if (d < best) {
      best = d;
      j0 = k;
    }
  }
  std::vector<double> ra(ma + 1), rb(mb + 1);
  for (int i = 0; i <= ma; ++i) ra[i] = i == ma ? 2.0 * pi : aa[i] - aa[0];
  for (int k = 0; k <= mb; ++k) {
    if (k == mb) {
      rb[k] = 2.0 * pi;
    } else {
      double a = ab[(j0 + k) % mb] - ab[j0];
      if (j0 + k >= mb) a += 2.0 * pi;
      rb[k] = a;
    }
  }
  int i = 0, k = 0;
  while (i < ma || k < mb) {
    double next_a = i < ma ? ra[i + 1] : std::numeric_limits<double>::infinity();
    double next_b = k < mb ? rb[k + 1] : std::numeric_limits<double>::infinity();
    if (next_a <= next_b) {
      mesh.elements.push_back({ia[i % ma], ia[(i + 1) % ma], ib[(j0 + k) % mb]});
      ++i;
    } else {
      mesh.elements.push_back({ia[i % ma], ib[(j0 + k + 1) % mb], ib[(j0 + k) % mb]});
      ++k;
    }
  }
}

inline void apply_noise(OrientedPointCloud<2>& c, double amp, std::uint64_t seed) {
  if (amp <= 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, amp);
  for (int i = 0; i < c.size(); ++i) c.points[i] += g(rng) * c.normals[i];
}

inline void apply_noise(OrientedPointCloud<3>& c, double amp, std::uint64_t seed) {
  if (amp <= 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, amp);
  for (int i = 0; i < c.size(); ++i) c.points[i] += g(rng) * c.normals[i];
}

}  // namespace detail

// Concentric circles; material between them.
inline Fixture<2> make_annulus(int n, double noise, std::uint64_t seed, double R1 = 1.0,
                               double R2 = 1.05) {
  require(n >= 50, ErrorCode::InvalidArgument, "resolution too small");
  require(noise >= 0.0 && R2 > R1 && R1 > 0.0, ErrorCode::InvalidArgument, "bad annulus parameters");
  Fixture<2> fx;
  fx.kind = FixtureKind::Annulus2D;
  fx.thickness = R2 - R1;
  int n1 = std::max(8, static_cast<int>(std::lround(n * R1 / (R1 + R2))));
  int n2 = std::max(8, n - n1);
  detail::append_circle(fx.cloud, fx.mesh, Vec<2>::Zero(), R1, n1, -1.0, Label::Inner);
  detail::append_circle(fx.cloud, fx.mesh, Vec<2>::Zero(), R2, n2, +1.0, Label::Outer);
  detail::apply_noise(fx.cloud, noise, seed);
  fx.noise_amplitude = noise;
  fx.bbox_min = Vec<2>{-R2, -R2};
  fx.bbox_max = Vec<2>{R2, R2};
  fx.sdf = [R1, R2](const Vec<2>& x) { return detail::shell_sdf<2>(x, Vec<2>::Zero(), R1, R2); };
  double Rm = 0.5 * (R1 + R2);
  fx.near_medial = [Rm](const Vec<2>& x, double band) {
    double r = x.norm();
    return r < band || std::abs(r - Rm) < band;
  };
  fx.mesh.validate();
  return fx;
}

// Circular-arc strip with rounded end caps: the offset of the mid-arc
// {Rm, theta in [t0, t1]} by T/2. The signed distance is exact everywhere.
inline Fixture<2> make_bent_strip(int n, double noise, std::uint64_t seed, double Rm = 1.0,
                                  double T = 0.05, double t0 = pi / 6.0, double t1 = 5.0 * pi / 6.0) {
  require(n >= 50, ErrorCode::InvalidArgument, "resolution too small");
  require(noise >= 0.0 && T > 0.0 && Rm > T && t1 > t0, ErrorCode::InvalidArgument,
          "bad strip parameters");
  Fixture<2> fx;
  fx.kind = FixtureKind::BentStrip2D;
  fx.thickness = T;
  double R1 = Rm - 0.5 * T, R2 = Rm + 0.5 * T, dth = t1 - t0;
  double L1 = R1 * dth, L2 = R2 * dth, Lc = pi * 0.5 * T;
  double L = L1 + L2 + 2.0 * Lc;
  int n_in = std::max(8, static_cast<int>(n * L1 / L));
  int n_cap = std::max(4, static_cast<int>(n * Lc / L));
  int n_out = std::max(8, n - n_in - 2 * n_cap);

  auto radial = [](double th) { return Vec<2>{std::cos(th), std::sin(th)}; };
  Vec<2> e0 = Rm * radial(t0), e1 = Rm * radial(t1);

  auto& c = fx.cloud;
  // inner arc, ascending angle
  for (int i = 0; i < n_in; ++i) {
    double th = t0 + (i + 0.5) * dth / n_in;
    c.points.push_back(R1 * radial(th));
    c.normals.push_back(-radial(th));
    c.labels.push_back(Label::Inner);
  }
  // cap at t1: normals swing from the inner side (-r) through the tangent to (+r)
  Vec<2> tan1{-std::sin(t1), std::cos(t1)};
  for (int i = 0; i < n_cap; ++i) {
    double psi = pi - (i + 0.5) * pi / n_cap;  // pi -> 0: inner side first
    Vec<2> u = std::cos(psi) * radial(t1) + std::sin(psi) * tan1;
    c.points.push_back(e1 + 0.5 * T * u);
    c.normals.push_back(u);
    c.labels.push_back(Label::Edge);
  }
  // outer arc, descending angle
  for (int i = 0; i < n_out; ++i) {
    double th = t1 - (i + 0.5) * dth / n_out;
    c.points.push_back(R2 * radial(th));
    c.normals.push_back(radial(th));
    c.labels.push_back(Label::Outer);
  }
  // cap at t0, outer side first
  Vec<2> tan0{std::sin(t0), -std::cos(t0)};
  for (int i = 0; i < n_cap; ++i) {
    double psi = (i + 0.5) * pi / n_cap;
    Vec<2> u = std::cos(psi) * radial(t0) + std::sin(psi) * tan0;
    c.points.push_back(e0 + 0.5 * T * u);
    c.normals.push_back(u);
    c.labels.push_back(Label::Edge);
  }
  // the traversal above is one closed boundary loop
  int m = c.size();
  fx.mesh.vertices = c.points;
  for (int i = 0; i < m; ++i) fx.mesh.elements.push_back({i, (i + 1) % m});
  detail::apply_noise(c, noise, seed);
  fx.noise_amplitude = noise;
  {
    // tight axis-aligned box of the sampled boundary, padded by the cap radius
    Vec<2> lo = fx.mesh.vertices[0], hi = fx.mesh.vertices[0];
    for (const auto& v : fx.mesh.vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    fx.bbox_min = lo - Vec<2>::Constant(0.5 * T);
    fx.bbox_max = hi + Vec<2>::Constant(0.5 * T);
  }
  fx.sdf = [Rm, T, t0, t1, e0, e1](const Vec<2>& x) {
    SdfEval<2> e;
    double th = std::atan2(x[1], x[0]);
    // fold the angle into [t0 - pi, t0 + pi) so the sector test wraps correctly
    while (th < 0.5 * (t0 + t1) - pi) th += 2.0 * pi;
    while (th >= 0.5 * (t0 + t1) + pi) th -= 2.0 * pi;
    if (th >= t0 && th <= t1) {
      double r = x.norm();
      if (r == 0.0) {
        e.value = Rm - 0.5 * T;
        return e;
      }
      Vec<2> rh = x / r;
      double s = r >= Rm ? 1.0 : -1.0;
      e.value = s * (r - Rm) - 0.5 * T;
      e.grad = s * rh;
      e.hess = s * (Mat<2>::Identity() - rh * rh.transpose()) / r;
      return e;
    }
    const Vec<2>& ec = (th < t0) ? e0 : e1;
    Vec<2> d = x - ec;
    double q = d.norm();
    if (q == 0.0) {
      e.value = -0.5 * T;
      return e;
    }
    e.value = q - 0.5 * T;
    e.grad = d / q;
    e.hess = (Mat<2>::Identity() - (d / q) * (d / q).transpose()) / q;
    return e;
  };
  fx.near_medial = [Rm, t0, t1, e0, e1](const Vec<2>& x, double band) {
    double r = x.norm();
    if (r < band) return true;
    double th = std::atan2(x[1], x[0]);
    while (th < 0.5 * (t0 + t1) - pi) th += 2.0 * pi;
    while (th >= 0.5 * (t0 + t1) + pi) th -= 2.0 * pi;
    if (th >= t0 - 0.05 && th <= t1 + 0.05) {
      if (std::abs(r - Rm) < band) return true;  // mid-arc kink
    }
    double q0 = (x - e0).norm(), q1 = (x - e1).norm();
    if (q0 < band || q1 < band) return true;           // cap centers
    if (!(th >= t0 && th <= t1) && std::abs(q0 - q1) < band) return true;  // between-cap fold
    return false;
  };
  fx.mesh.validate();
  return fx;
}

// Two disjoint annuli side by side; sdf is the exact minimum of the two.
inline Fixture<2> make_double_loop(int n, double noise, std::uint64_t seed, double r1 = 0.6,
                                   double r2 = 0.65, double c = 0.8) {
  require(n >= 50, ErrorCode::InvalidArgument, "resolution too small");
  require(noise >= 0.0 && r2 > r1 && r1 > 0.0 && c > r2, ErrorCode::InvalidArgument,
          "loops must be disjoint");
  Fixture<2> fx;
  fx.kind = FixtureKind::DoubleLoop2D;
  fx.thickness = r2 - r1;
  Vec<2> cl{-c, 0.0}, cr{c, 0.0};
  int per = n / 2;
  int n1 = std::max(8, static_cast<int>(std::lround(per * r1 / (r1 + r2))));
  int n2 = std::max(8, per - n1);
  for (const Vec<2>& ctr : {cl, cr}) {
    detail::append_circle(fx.cloud, fx.mesh, ctr, r1, n1, -1.0, Label::Inner);
    detail::append_circle(fx.cloud, fx.mesh, ctr, r2, n2, +1.0, Label::Outer);
  }
  detail::apply_noise(fx.cloud, noise, seed);
  fx.noise_amplitude = noise;
  fx.bbox_min = Vec<2>{-c - r2, -r2};
  fx.bbox_max = Vec<2>{c + r2, r2};
  fx.sdf = [cl, cr, r1, r2](const Vec<2>& x) {
    SdfEval<2> a = detail::shell_sdf<2>(x, cl, r1, r2);
    SdfEval<2> b = detail::shell_sdf<2>(x, cr, r1, r2);
    return a.value <= b.value ? a : b;
  };
  double rm = 0.5 * (r1 + r2);
  fx.near_medial = [cl, cr, r1, r2, rm](const Vec<2>& x, double band) {
    double ra = (x - cl).norm(), rb = (x - cr).norm();
    if (ra < band || rb < band) return true;
    if (std::abs(ra - rm) < band || std::abs(rb - rm) < band) return true;
    double va = std::max(r1 - ra, ra - r2), vb = std::max(r1 - rb, rb - r2);
    return std::abs(va - vb) < band;  // fold between the loops
  };
  fx.mesh.validate();
  return fx;
}

namespace detail {

// Latitude-ring sampling of one sphere. Appends ring points to the cloud and
// a pole-capped triangulation to the mesh.
inline void append_sphere(OrientedPointCloud<3>& cloud, SurfaceMesh<3>& mesh, double R, int target,
                          double normal_sign, Label lab) {
  int L = std::max(3, static_cast<int>(std::lround(std::sqrt(pi * target) / 2.0)));
  std::vector<std::vector<int>> ring_ids;
  std::vector<std::vector<double>> ring_angles;
  for (int j = 0; j < L; ++j) {
    double phi = pi * (j + 0.5) / L;
    int mj = std::max(4, static_cast<int>(std::lround(2.0 * L * std::sin(phi))));
    double off = 0.5 * (j % 2) * 2.0 * pi / mj;
    std::vector<int> ids;
    std::vector<double> angs;
    for (int i = 0; i < mj; ++i) {
      double th = 2.0 * pi * i / mj + off;
      Vec<3> u{std::sin(phi) * std::cos(th), std::sin(phi) * std::sin(th), std::cos(phi)};
      ids.push_back(mesh.vertex_count());
      angs.push_back(th);
      mesh.vertices.push_back(R * u);
      cloud.points.push_back(R * u);
      cloud.normals.push_back(normal_sign * u);
      cloud.labels.push_back(lab);
    }
    ring_ids.push_back(std::move(ids));
    ring_angles.push_back(std::move(angs));
  }
  // mesh-only pole vertices close the caps
  int north = mesh.vertex_count();
  mesh.vertices.push_back(Vec<3>{0.0, 0.0, R});
  int south = mesh.vertex_count();
  mesh.vertices.push_back(Vec<3>{0.0, 0.0, -R});
  stitch_rings(mesh, {north}, {0.0}, ring_ids.front(), ring_angles.front());
  for (int j = 0; j + 1 < L; ++j)
    stitch_rings(mesh, ring_ids[j], ring_angles[j], ring_ids[j + 1], ring_angles[j + 1]);
  stitch_rings(mesh, ring_ids.back(), ring_angles.back(), {south}, {0.0});
}

}  // namespace detail

// Concentric spheres; material between them. Default separation mirrors a
// 1:100 thickness-to-extent ratio.
inline Fixture<3> make_spherical_shell(int n, double noise, std::uint64_t seed, double R1 = 1.0,
                                       double R2 = 1.02) {
  require(n >= 50, ErrorCode::InvalidArgument, "resolution too small");
  require(noise >= 0.0 && R2 > R1 && R1 > 0.0, ErrorCode::InvalidArgument, "bad shell parameters");
  Fixture<3> fx;
  fx.kind = FixtureKind::SphericalShell3D;
  fx.thickness = R2 - R1;
  double a1 = R1 * R1, a2 = R2 * R2;
  int n1 = std::max(16, static_cast<int>(std::lround(n * a1 / (a1 + a2))));
  int n2 = std::max(16, n - n1);
  detail::append_sphere(fx.cloud, fx.mesh, R1, n1, -1.0, Label::Inner);
  detail::append_sphere(fx.cloud, fx.mesh, R2, n2, +1.0, Label::Outer);
  detail::apply_noise(fx.cloud, noise, seed);
  fx.noise_amplitude = noise;
  fx.bbox_min = Vec<3>::Constant(-R2);
  fx.bbox_max = Vec<3>::Constant(R2);
  fx.sdf = [R1, R2](const Vec<3>& x) { return detail::shell_sdf<3>(x, Vec<3>::Zero(), R1, R2); };
  double Rm = 0.5 * (R1 + R2);
  fx.near_medial = [Rm](const Vec<3>& x, double band) {
    double r = x.norm();
    return r < band || std::abs(r - Rm) < band;
  };
  fx.mesh.validate();
  return fx;
}

// Spherical-cap shell with a rounded rim: the offset by T/2 of the mid-cap
// {|x| = Rm, polar angle <= phimax}. Exact sdf comes from the 2d arc-strip
// formula in the meridian (rho, z) plane.
inline Fixture<3> make_bent_slab(int n, double noise, std::uint64_t seed, double Rm = 1.0,
                                 double T = 0.05, double phimax = pi / 3.0) {
  require(n >= 50, ErrorCode::InvalidArgument, "resolution too small");
  require(noise >= 0.0 && T > 0.0 && Rm > T && phimax > 0.0 && phimax < pi,
          ErrorCode::InvalidArgument, "bad slab parameters");
  Fixture<3> fx;
  fx.kind = FixtureKind::BentSlab3D;
  fx.thickness = T;
  double R1 = Rm - 0.5 * T, R2 = Rm + 0.5 * T;
  double cosm = std::cos(phimax);
  double area_out = 2.0 * pi * R2 * R2 * (1.0 - cosm);
  double area_in = 2.0 * pi * R1 * R1 * (1.0 - cosm);
  double rim_rad = Rm * std::sin(phimax);
  double area_rim = pi * T * pi * rim_rad;  // half-torus mantle
  double area = area_out + area_in + area_rim;

  auto& c = fx.cloud;
  auto cap_rings = [&](double R, double sign, Label lab, int target) {
    double spacing = std::sqrt(2.0 * pi * R * R * (1.0 - cosm) / std::max(1, target));
    int L = std::max(2, static_cast<int>(std::lround(R * phimax / spacing)));
    std::vector<std::vector<int>> ring_ids;
    std::vector<std::vector<double>> ring_angles;
    for (int j = 0; j < L; ++j) {
      double phi = phimax * (j + 0.5) / L;
      int mj = std::max(4, static_cast<int>(std::lround(2.0 * pi * R * std::sin(phi) / spacing)));
      double off = 0.5 * (j % 2) * 2.0 * pi / mj;
      std::vector<int> ids;
      std::vector<double> angs;
      for (int i = 0; i < mj; ++i) {
        double th = 2.0 * pi * i / mj + off;
        Vec<3> u{std::sin(phi) * std::cos(th), std::sin(phi) * std::sin(th), std::cos(phi)};
        ids.push_back(fx.mesh.vertex_count());
        angs.push_back(th);
        fx.mesh.vertices.push_back(R * u);
        c.points.push_back(R * u);
        c.normals.push_back(sign * u);
        c.labels.push_back(lab);
      }
      ring_ids.push_back(std::move(ids));
      ring_angles.push_back(std::move(angs));
    }
    int pole = fx.mesh.vertex_count();
    fx.mesh.vertices.push_back(Vec<3>{0.0, 0.0, R});
    detail::stitch_rings(fx.mesh, {pole}, {0.0}, ring_ids.front(), ring_angles.front());
    for (int j = 0; j + 1 < L; ++j)
      detail::stitch_rings(fx.mesh, ring_ids[j], ring_angles[j], ring_ids[j + 1], ring_angles[j + 1]);
    return std::make_pair(ring_ids.back(), ring_angles.back());
  };

  int t_out = std::max(32, static_cast<int>(n * area_out / area));
  int t_in = std::max(32, static_cast<int>(n * area_in / area));
  int t_rim = std::max(16, n - t_out - t_in);
  auto outer_last = cap_rings(R2, +1.0, Label::Outer, t_out);
  auto inner_last = cap_rings(R1, -1.0, Label::Inner, t_in);

  // rim torus: meridian direction swings from the outer sheet (+r) to the
  // inner sheet (-r) through the tangent of increasing polar angle
  double spacing_rim = std::sqrt(area_rim / std::max(1, t_rim));
  int Lr = std::max(3, static_cast<int>(std::lround(pi * 0.5 * T / spacing_rim)));
  Vec<2> rhat{std::sin(phimax), std::cos(phimax)}, that{std::cos(phimax), -std::sin(phimax)};
  std::vector<std::vector<int>> rim_ids(Lr);
  std::vector<std::vector<double>> rim_angles(Lr);
  for (int j = 0; j < Lr; ++j) {
    double psi = (j + 0.5) * pi / Lr;  // 0: outer side, pi: inner side
    Vec<2> u2 = std::cos(psi) * rhat + std::sin(psi) * that;
    Vec<2> q = Rm * rhat + 0.5 * T * u2;  // (rho, z) of this rim ring
    int mj = std::max(4, static_cast<int>(std::lround(2.0 * pi * q[0] / spacing_rim)));
    double off = 0.5 * (j % 2) * 2.0 * pi / mj;
    for (int i = 0; i < mj; ++i) {
      double th = 2.0 * pi * i / mj + off;
      Vec<3> p{q[0] * std::cos(th), q[0] * std::sin(th), q[1]};
      Vec<3> nu{u2[0] * std::cos(th), u2[0] * std::sin(th), u2[1]};
      rim_ids[j].push_back(fx.mesh.vertex_count());
      rim_angles[j].push_back(th);
      fx.mesh.vertices.push_back(p);
      c.points.push_back(p);
      c.normals.push_back(nu);
      c.labels.push_back(Label::Edge);
    }
  }
  detail::stitch_rings(fx.mesh, outer_last.first, outer_last.second, rim_ids.front(), rim_angles.front());
  for (int j = 0; j + 1 < Lr; ++j)
    detail::stitch_rings(fx.mesh, rim_ids[j], rim_angles[j], rim_ids[j + 1], rim_angles[j + 1]);
  detail::stitch_rings(fx.mesh, rim_ids.back(), rim_angles.back(), inner_last.first, inner_last.second);

  detail::apply_noise(c, noise, seed);
  fx.noise_amplitude = noise;
  double rmax = R2 + T;
  fx.bbox_min = Vec<3>{-rmax, -rmax, std::min(0.0, Rm * cosm) - T};
  fx.bbox_max = Vec<3>{rmax, rmax, R2 + T};

  fx.sdf = [Rm, T, phimax](const Vec<3>& x) {
    SdfEval<3> e;
    double rho = std::hypot(x[0], x[1]);
    double phi = std::atan2(rho, x[2]);  // in [0, pi]
    if (phi <= phimax) {
      double r = x.norm();
      if (r == 0.0) {
        e.value = Rm - 0.5 * T;
        return e;
      }
      Vec<3> rh = x / r;
      double s = r >= Rm ? 1.0 : -1.0;
      e.value = s * (r - Rm) - 0.5 * T;
      e.grad = s * rh;
      e.hess = s * (Mat<3>::Identity() - rh * rh.transpose()) / r;
      return e;
    }
    // distance to the rim circle {rho = Rm sin, z = Rm cos} minus T/2
    Vec<2> ec{Rm * std::sin(phimax), Rm * std::cos(phimax)};
    Vec<2> v{rho - ec[0], x[2] - ec[1]};
    double q = v.norm();
    if (q == 0.0 || rho == 0.0) {
      e.value = q - 0.5 * T;  // on the rim circle or the axis: gradient undefined
      return e;
    }
    e.value = q - 0.5 * T;
    Vec<2> w = v / q;
    Vec<3> drho{x[0] / rho, x[1] / rho, 0.0};
    e.grad = w[0] * drho + Vec<3>{0.0, 0.0, w[1]};
    // H = J^T H2 J + (df/drho) * hess(rho)
    Mat<2> H2 = (Mat<2>::Identity() - w * w.transpose()) / q;
    Eigen::Matrix<double, 2, 3> J;
    J << drho[0], drho[1], drho[2], 0.0, 0.0, 1.0;
    Mat<3> Hrho = Mat<3>::Zero();
    Hrho(0, 0) = 1.0 - drho[0] * drho[0];
    Hrho(0, 1) = -drho[0] * drho[1];
    Hrho(1, 0) = Hrho(0, 1);
    Hrho(1, 1) = 1.0 - drho[1] * drho[1];
    e.hess = J.transpose() * H2 * J + (w[0] / rho) * Hrho;
    return e;
  };
  fx.near_medial = [Rm, phimax](const Vec<3>& x, double band) {
    double r = x.norm();
    if (r < band) return true;
    double rho = std::hypot(x[0], x[1]);
    double phi = std::atan2(rho, x[2]);
    if (phi <= phimax + 0.05 && std::abs(r - Rm) < band) return true;  // mid-cap kink
    if (phi > phimax && rho < band) return true;  // south axis: rim ring equidistant
    Vec<2> ec{Rm * std::sin(phimax), Rm * std::cos(phimax)};
    return (Vec<2>{rho, x[2]} - ec).norm() < band;  // rim circle itself
  };
  fx.mesh.validate();
  return fx;
}

inline Fixture<2> make_fixture2(FixtureKind kind, int n, double noise, std::uint64_t seed) {
  switch (kind) {
    case FixtureKind::Annulus2D: return make_annulus(n, noise, seed);
    case FixtureKind::BentStrip2D: return make_bent_strip(n, noise, seed);
    case FixtureKind::DoubleLoop2D: return make_double_loop(n, noise, seed);
    default: fail(ErrorCode::InvalidArgument, "fixture is not 2d");
  }
}

inline Fixture<3> make_fixture3(FixtureKind kind, int n, double noise, std::uint64_t seed) {
  switch (kind) {
    case FixtureKind::SphericalShell3D: return make_spherical_shell(n, noise, seed);
    case FixtureKind::BentSlab3D: return make_bent_slab(n, noise, seed);
    default: fail(ErrorCode::InvalidArgument, "fixture is not 3d");
  }
}

enum class ProbeClass { Inside, Outside, NearSurface };

template <int D>
struct ProbeSet {
  std::vector<Vec<D>> points;
  std::vector<double> sdf;
  std::vector<ProbeClass> cls;

  int size() const { return static_cast<int>(points.size()); }
};

// Regular grid over the fixture box, classified by the exact sdf. The
// near-surface band is twice the noise amplitude, so Inside/Outside verdicts
// stay trustworthy for noisy clouds.
template <int D>
ProbeSet<D> probe_grid(const Fixture<D>& fx, double spacing) {
  require(spacing > 0.0, ErrorCode::InvalidArgument, "spacing must be positive");
  ProbeSet<D> out;
  std::array<int, D> steps;
  for (int k = 0; k < D; ++k)
    steps[k] = static_cast<int>(std::floor((fx.bbox_max[k] - fx.bbox_min[k]) / spacing)) + 1;
  double band = 2.0 * fx.noise_amplitude;
  std::array<int, D> idx{};
  while (true) {
    Vec<D> p;
    for (int k = 0; k < D; ++k) p[k] = fx.bbox_min[k] + idx[k] * spacing;
    double v = fx.sdf(p).value;
    out.points.push_back(p);
    out.sdf.push_back(v);
    out.cls.push_back(std::abs(v) <= band ? ProbeClass::NearSurface
                                          : (v < 0.0 ? ProbeClass::Inside : ProbeClass::Outside));
    int k = 0;
    while (k < D && ++idx[k] >= steps[k]) idx[k++] = 0;
    if (k == D) break;
  }
  return out;
}

}  // namespace pumice
