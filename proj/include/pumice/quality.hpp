#pragma once

#include "pumice/common.hpp"
#include "pumice/geometry.hpp"
#include "pumice/kdtree.hpp"
#include "pumice/levelset.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace pumice {

struct QualityParams {
  double tol = 1e-10;  // projection stop, relative to the cloud bounding-box diagonal
  int max_iter = 50;
  double flip_ratio = 0.2;  // gap ratio below which a projected point counts as sheet-flipped
  int flip_window = 10;     // inner neighbors inspected around a flagged point
  int flip_quorum = 3;      // flagged points in the window that make a flip region real
  int threads = 0;          // 0 = hardware concurrency

  void validate() const {
    require(tol > 0.0 && max_iter >= 1, ErrorCode::InvalidArgument, "bad projection parameters");
    require(flip_ratio > 0.0 && flip_ratio < 1.0, ErrorCode::InvalidArgument,
            "flip ratio must be in (0,1)");
    require(flip_window >= 1 && flip_quorum >= 1, ErrorCode::InvalidArgument,
            "bad flip neighborhood");
  }
};

// Per-point lists align with cloud indexing; entries that do not participate
// hold NaN. Losses are clamped at zero per point, the headline T_L is not.
struct QualityReport {
  double F_H = 0.0;
  double T_L = 0.0;
  std::vector<double> per_point_F;
  std::vector<double> per_point_loss;
  std::vector<int> excluded;  // inner points dropped from T_L as isolated sheet flips
  std::vector<int> failed;    // points whose projection did not converge
};

// Newton steps along the gradient direction; tol is absolute here, callers
// scale it by the geometry size.
template <int D, class LS>
Vec<D> project_to_surface(const LS& ls, Vec<D> y, double tol, int max_iter = 50) {
  for (int it = 0;; ++it) {
    LevelSetJet<D> jet;
    try {
      jet = ls.eval(y, 1);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OutsideCover)
        fail(ErrorCode::ProjectionDiverged, "projection left the cover");
      throw;
    }
    if (std::abs(jet.value) < tol) return y;
    require(it < max_iter, ErrorCode::ProjectionDiverged,
            "projection did not converge in " + std::to_string(max_iter) + " steps");
    double g2 = jet.grad.squaredNorm();
    require(g2 > 0.0, ErrorCode::ProjectionDiverged, "projection hit a stationary point");
    y -= (jet.value / g2) * jet.grad;
  }
}

template <int D>
double bounding_diagonal(const OrientedPointCloud<D>& cloud) {
  require(!cloud.points.empty(), ErrorCode::DegenerateInput, "empty cloud");
  Vec<D> lo = cloud.points[0], hi = cloud.points[0];
  for (const auto& x : cloud.points) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  return (hi - lo).norm();
}

namespace detail {

template <int D>
struct ProjectedCloud {
  std::vector<Vec<D>> pos;
  std::vector<char> ok;
};

template <int D, class LS>
ProjectedCloud<D> project_cloud(const LS& ls, const OrientedPointCloud<D>& cloud,
                                const QualityParams& prm, QualityReport& rep) {
  const std::size_t M = cloud.points.size();
  ProjectedCloud<D> out;
  out.pos.resize(M);
  out.ok.assign(M, 0);
  double tol = prm.tol * bounding_diagonal(cloud);
  int threads =
      prm.threads <= 0 ? static_cast<int>(std::thread::hardware_concurrency()) : prm.threads;
  parallel_for(M, threads, [&](std::size_t i) {
    try {
      out.pos[i] = project_to_surface(ls, cloud.points[i], tol, prm.max_iter);
      out.ok[i] = 1;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ProjectionDiverged) throw;
    }
  });
  for (std::size_t i = 0; i < M; ++i)
    if (!out.ok[i]) rep.failed.push_back(static_cast<int>(i));
  return out;
}

// Frobenius norm of the tangential Hessian block: reflect grad onto the last
// axis, cut the last row and column. The reflection sign does not matter.
template <int D>
double tangential_hessian_norm(const Vec<D>& grad, const Mat<D>& hess) {
  double gn = grad.norm();
  require(gn > 0.0, ErrorCode::DivisionByZeroNorm, "zero gradient at a projected point");
  Vec<D> v = grad / gn;
  v[D - 1] -= 1.0;
  double v2 = v.squaredNorm();
  Mat<D> m;
  if (v2 < 1e-30) {
    m = hess;
  } else {
    Mat<D> q = Mat<D>::Identity() - (2.0 / v2) * (v * v.transpose());
    m = q * hess * q.transpose();
  }
  return m.template topLeftCorner<D - 1, D - 1>().norm();
}

template <int D, class LS>
void fill_hessian_norms(const LS& ls, const OrientedPointCloud<D>& cloud,
                        const ProjectedCloud<D>& proj, QualityReport& rep) {
  const std::size_t M = cloud.points.size();
  rep.per_point_F.assign(M, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < M; ++i) {
    if (!proj.ok[i]) continue;
    auto jet = ls.eval(proj.pos[i], 2);
    rep.per_point_F[i] = tangential_hessian_norm<D>(jet.grad, jet.hess);
    sum += rep.per_point_F[i];
    ++used;
  }
  require(used > 0, ErrorCode::InsufficientSamples, "no point projected successfully");
  rep.F_H = sum / static_cast<double>(used);
}

template <int D>
void fill_thickness_loss(const OrientedPointCloud<D>& cloud, const ProjectedCloud<D>& proj,
                         const QualityParams& prm, QualityReport& rep) {
  const int M = cloud.size();
  require(cloud.has_labels(), ErrorCode::MissingLabels, "thickness loss needs sheet labels");

  std::vector<Vec<D>> outer_orig, outer_proj, inner_orig;
  std::vector<int> inner_ids;
  for (int i = 0; i < M; ++i) {
    if (cloud.labels[i] == Label::Outer) {
      outer_orig.push_back(cloud.points[i]);
      if (proj.ok[i]) outer_proj.push_back(proj.pos[i]);
    } else if (cloud.labels[i] == Label::Inner && proj.ok[i]) {
      inner_orig.push_back(cloud.points[i]);
      inner_ids.push_back(i);
    }
  }
  require(!outer_orig.empty() && !inner_ids.empty(), ErrorCode::MissingLabels,
          "thickness loss needs points on both sheets");
  require(!outer_proj.empty(), ErrorCode::InsufficientSamples, "no outer point projected");

  KdTree<D> orig_tree(outer_orig);
  KdTree<D> proj_tree(outer_proj);
  KdTree<D> inner_tree(inner_orig);

  const int K = static_cast<int>(inner_ids.size());
  std::vector<double> ratio(K);
  std::vector<char> flagged(K, 0);
  for (int k = 0; k < K; ++k) {
    int i = inner_ids[k];
    double tau_orig = (cloud.points[i] - outer_orig[orig_tree.nearest(cloud.points[i])]).norm();
    require(tau_orig > 0.0, ErrorCode::DegenerateInput, "inner point touches the outer sheet");
    double tau_proj = (proj.pos[i] - outer_proj[proj_tree.nearest(proj.pos[i])]).norm();
    ratio[k] = tau_proj / tau_orig;
    flagged[k] = ratio[k] < prm.flip_ratio;
  }

  rep.per_point_loss.assign(M, std::numeric_limits<double>::quiet_NaN());
  double min_ratio = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int k = 0; k < K; ++k) {
    rep.per_point_loss[inner_ids[k]] = std::max(0.0, 1.0 - ratio[k]);
    if (flagged[k]) {
      // a lone flipped point is a projection artifact; a flipped region is a
      // real loss of the sheet and stays in the measure
      auto window = inner_tree.knearest(inner_orig[k], prm.flip_window + 1);
      int support = 0;
      for (int j : window)
        if (flagged[j]) ++support;
      if (support < prm.flip_quorum) {
        rep.excluded.push_back(inner_ids[k]);
        continue;
      }
    }
    min_ratio = std::min(min_ratio, ratio[k]);
    any = true;
  }
  require(any, ErrorCode::InsufficientSamples, "every inner point was excluded");
  rep.T_L = 1.0 - min_ratio;
}

}  // namespace detail

template <int D, class LS>
QualityReport surface_hessian_norm(const LS& ls, const OrientedPointCloud<D>& cloud,
                                   const QualityParams& prm = {}) {
  prm.validate();
  QualityReport rep;
  auto proj = detail::project_cloud(ls, cloud, prm, rep);
  detail::fill_hessian_norms(ls, cloud, proj, rep);
  return rep;
}

template <int D, class LS>
QualityReport thickness_loss(const LS& ls, const OrientedPointCloud<D>& cloud,
                             const QualityParams& prm = {}) {
  prm.validate();
  QualityReport rep;
  auto proj = detail::project_cloud(ls, cloud, prm, rep);
  detail::fill_thickness_loss(cloud, proj, prm, rep);
  return rep;
}

// Both measures from a single projection pass.
template <int D, class LS>
QualityReport measure_quality(const LS& ls, const OrientedPointCloud<D>& cloud,
                              const QualityParams& prm = {}) {
  prm.validate();
  QualityReport rep;
  auto proj = detail::project_cloud(ls, cloud, prm, rep);
  detail::fill_hessian_norms(ls, cloud, proj, rep);
  detail::fill_thickness_loss(cloud, proj, prm, rep);
  return rep;
}

inline nlohmann::json quality_to_json(const QualityReport& rep) {
  auto list = [](const std::vector<double>& v) {
    nlohmann::json out = nlohmann::json::array();
    for (double x : v) {
      if (std::isnan(x))
        out.push_back(nullptr);
      else
        out.push_back(x);
    }
    return out;
  };
  nlohmann::json j;
  j["F_H"] = rep.F_H;
  j["T_L"] = rep.T_L;
  j["per_point_F"] = list(rep.per_point_F);
  j["per_point_loss"] = list(rep.per_point_loss);
  j["excluded"] = rep.excluded;
  j["failed_projections"] = rep.failed;
  return j;
}

inline void quality_to_csv(const QualityReport& rep, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoError, "cannot write " + path);
  out << "index,hessian_norm,thickness_loss\n";
  std::size_t rows = std::max(rep.per_point_F.size(), rep.per_point_loss.size());
  auto cell = [](const std::vector<double>& v, std::size_t i) {
    if (i >= v.size() || std::isnan(v[i])) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < rows; ++i)
    out << i << ',' << cell(rep.per_point_F, i) << ',' << cell(rep.per_point_loss, i) << '\n';
  require(out.good(), ErrorCode::IoError, "write failed on " + path);
}

}  // namespace pumice
