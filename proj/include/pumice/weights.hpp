#pragma once

#include <pumice/cover.hpp>

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace pumice {

enum class GeneratorKind { BumpCInf, WendlandC2 };

inline GeneratorKind generator_from_string(const std::string& s) {
  if (s == "bump") return GeneratorKind::BumpCInf;
  if (s == "wendland") return GeneratorKind::WendlandC2;
  fail(ErrorCode::InvalidArgument, "unknown generator: " + s);
}

inline std::string to_string(GeneratorKind k) {
  return k == GeneratorKind::BumpCInf ? "bump" : "wendland";
}

// psi0 and its plain radial derivatives; identically zero for r >= 1
inline double generator_eval(GeneratorKind kind, double r, int order) {
  require(r >= 0.0 && order >= 0 && order <= 2, ErrorCode::InvalidArgument,
          "generator argument out of range");
  if (r >= 1.0) return 0.0;
  if (kind == GeneratorKind::BumpCInf) {
    double s = 1.0 / (1.0 - r * r);
    if (s > 700.0) return 0.0;  // value underflows; use the log form instead
    double v = std::exp(-s);
    if (order == 0) return v;
    if (order == 1) return -2.0 * r * s * s * v;
    return (-2.0 * s * s - 8.0 * r * r * s * s * s + 4.0 * r * r * s * s * s * s) * v;
  }
  double q = 1.0 - r;
  if (order == 0) return (4.0 * r + 1.0) * q * q * q * q;
  if (order == 1) return -20.0 * r * q * q * q;
  return q * q * (80.0 * r - 20.0);
}

namespace detail {

// smooth radial quotients: g1 = psi0'(r)/r and the deviatoric factor
// psi0'' - g1, both finite at r = 0 for the supported generators
inline double generator_g1(GeneratorKind kind, double r) {
  if (r >= 1.0) return 0.0;
  if (kind == GeneratorKind::BumpCInf) {
    double s = 1.0 / (1.0 - r * r);
    if (s > 700.0) return 0.0;
    return -2.0 * s * s * std::exp(-s);
  }
  double q = 1.0 - r;
  return -20.0 * q * q * q;
}

inline double generator_dev(GeneratorKind kind, double r) {
  if (r >= 1.0) return 0.0;
  if (kind == GeneratorKind::BumpCInf) {
    double s = 1.0 / (1.0 - r * r);
    if (s > 700.0) return 0.0;
    return (4.0 * r * r * s * s * s * s - 8.0 * r * r * s * s * s) * std::exp(-s);
  }
  double q = 1.0 - r;
  return 60.0 * r * q * q;
}

}  // namespace detail

template <int D>
struct GeneratorJet {
  double value = 0.0;
  Vec<D> grad = Vec<D>::Zero();
  Mat<D> hess = Mat<D>::Zero();
  double laplacian = 0.0;
};

// Tensor-product generator of one patch evaluated in physical coordinates.
// The reference radius and height cancel against the patch scaling, so the
// generator depends only on the patch's own dimensions.
template <int D>
GeneratorJet<D> patch_generator(const Patch<D>& p, GeneratorKind kind, const Vec<D>& x,
                                int order = 2) {
  GeneratorJet<D> out;
  Vec<D> hat = p.to_local(x);
  double rho = hat.template head<D - 1>().norm() / p.radius;
  double v = 2.0 * (hat[D - 1] - p.zmid()) / p.height();
  double av = std::abs(v);
  if (rho >= 1.0 || av >= 1.0) return out;

  double f = generator_eval(kind, rho, 0);
  double a = generator_eval(kind, av, 0);
  out.value = f * a;
  if (order == 0) return out;

  // reference jet in unit cylinder coordinates (radius 1, axial in [-1,1])
  Vec<D> u = Vec<D>::Zero();
  u.template head<D - 1>() = hat.template head<D - 1>() / p.radius;
  double g1 = detail::generator_g1(kind, rho);
  double ap = generator_eval(kind, av, 1) * (v >= 0.0 ? 1.0 : -1.0);

  Vec<D> rg = Vec<D>::Zero();
  rg.template head<D - 1>() = a * g1 * u.template head<D - 1>();
  rg[D - 1] = f * ap;

  Mat<D> rh = Mat<D>::Zero();
  if (order >= 2) {
    double dev = detail::generator_dev(kind, rho);
    rh.template topLeftCorner<D - 1, D - 1>() =
        a * g1 * Mat<D - 1>::Identity()
        + (rho > 1e-14 ? (a * dev / (rho * rho)) : 0.0) *
              (u.template head<D - 1>() * u.template head<D - 1>().transpose());
    rh.template topRightCorner<D - 1, 1>() = ap * g1 * u.template head<D - 1>();
    rh.template bottomLeftCorner<1, D - 1>() =
        rh.template topRightCorner<D - 1, 1>().transpose();
    rh(D - 1, D - 1) = f * generator_eval(kind, av, 2);
  }

  Patch<D> frame = p;
  for (int i = 0; i + 1 < D; ++i) frame.scale[i] = 1.0 / p.radius;
  frame.scale[D - 1] = 2.0 / p.height();
  auto push = pushforward_derivatives(frame, rg, rh);
  out.grad = push.grad;
  if (order >= 2) {
    out.hess = push.hess;
    out.laplacian = push.laplacian;
  }
  return out;
}

namespace detail {

// log of the bump generator with derivatives; valid strictly inside the patch.
// All quantities stay O(1/(1-r)^3) where the value itself underflows.
template <int D>
struct LogJet {
  bool inside = false;
  double log_value = 0.0;
  Vec<D> grad = Vec<D>::Zero();
  Mat<D> hess = Mat<D>::Zero();
};

template <int D>
LogJet<D> bump_log_jet(const Patch<D>& p, const Vec<D>& x, int order) {
  LogJet<D> out;
  Vec<D> hat = p.to_local(x);
  double rho = hat.template head<D - 1>().norm() / p.radius;
  double v = 2.0 * (hat[D - 1] - p.zmid()) / p.height();
  if (rho >= 1.0 || std::abs(v) >= 1.0) return out;
  out.inside = true;

  double sr = 1.0 / (1.0 - rho * rho);
  double sz = 1.0 / (1.0 - v * v);
  out.log_value = -sr - sz;
  if (order == 0) return out;

  Vec<D> u = Vec<D>::Zero();
  u.template head<D - 1>() = hat.template head<D - 1>() / p.radius;

  Vec<D> rg = Vec<D>::Zero();
  rg.template head<D - 1>() = -2.0 * sr * sr * u.template head<D - 1>();
  rg[D - 1] = -2.0 * v * sz * sz;

  Mat<D> rh = Mat<D>::Zero();
  if (order >= 2) {
    rh.template topLeftCorner<D - 1, D - 1>() =
        -2.0 * sr * sr * Mat<D - 1>::Identity()
        - 8.0 * sr * sr * sr *
              (u.template head<D - 1>() * u.template head<D - 1>().transpose());
    rh(D - 1, D - 1) = -2.0 * sz * sz - 8.0 * v * v * sz * sz * sz;
  }

  Patch<D> frame = p;
  for (int i = 0; i + 1 < D; ++i) frame.scale[i] = 1.0 / p.radius;
  frame.scale[D - 1] = 2.0 / p.height();
  auto push = pushforward_derivatives(frame, rg, rh);
  out.grad = push.grad;
  if (order >= 2) out.hess = push.hess;
  return out;
}

}  // namespace detail

// world-axis half extents of the patch cylinder around its bounding center
template <int D>
void patch_aabb(const Patch<D>& p, Vec<D>& lo, Vec<D>& hi) {
  Vec<D> c = p.bounding_center();
  Vec<D> axis = p.rotation.col(D - 1);
  double hh = 0.5 * p.height();
  for (int i = 0; i < D; ++i) {
    double a = std::min(1.0, std::abs(axis[i]));
    double e = hh * a + p.radius * std::sqrt(1.0 - a * a);
    lo[i] = c[i] - e;
    hi[i] = c[i] + e;
  }
}

// Uniform grid hash over patch bounding boxes. A query inspects only the cell
// containing the point, so every patch is registered in all cells its box
// touches. Correct for any cell size; sized by the mean box extent.
template <int D>
class PatchLookup {
 public:
  explicit PatchLookup(const std::vector<Patch<D>>& patches) {
    require(!patches.empty(), ErrorCode::InvalidArgument, "empty cover");
    std::vector<Vec<D>> lo(patches.size()), hi(patches.size());
    double mean = 0.0;
    for (std::size_t j = 0; j < patches.size(); ++j) {
      patch_aabb(patches[j], lo[j], hi[j]);
      mean += (hi[j] - lo[j]).maxCoeff();
    }
    cell_ = std::max(mean / patches.size(), 1e-300);
    origin_ = lo[0];
    for (const auto& l : lo) origin_ = origin_.cwiseMin(l);
    for (std::size_t j = 0; j < patches.size(); ++j) {
      std::array<std::int64_t, D> a, b;
      for (int i = 0; i < D; ++i) {
        a[i] = coord(lo[j][i], i);
        b[i] = coord(hi[j][i], i);
      }
      std::array<std::int64_t, D> it = a;
      while (true) {
        cells_[key(it)].push_back(static_cast<int>(j));
        int i = 0;
        for (; i < D; ++i) {
          if (++it[i] <= b[i]) break;
          it[i] = a[i];
        }
        if (i == D) break;
      }
    }
  }

  const std::vector<int>& candidates(const Vec<D>& x) const {
    static const std::vector<int> none;
    std::array<std::int64_t, D> it;
    for (int i = 0; i < D; ++i) it[i] = coord(x[i], i);
    auto f = cells_.find(key(it));
    return f == cells_.end() ? none : f->second;
  }

 private:
  std::int64_t coord(double v, int i) const {
    return static_cast<std::int64_t>(std::floor((v - origin_[i]) / cell_));
  }

  std::uint64_t key(const std::array<std::int64_t, D>& c) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (int i = 0; i < D; ++i) {
      h ^= static_cast<std::uint64_t>(c[i]) + 0x9e3779b97f4a7c15ull;
      h *= 0x100000001b3ull;
    }
    return h;
  }

  double cell_ = 1.0;
  Vec<D> origin_ = Vec<D>::Zero();
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

// Shepard partition-of-unity weights over a cover. The bump generator is
// evaluated through its logarithm with a max shift: the rational recursion is
// invariant under joint rescaling of the generators, so the shifted values
// give the exact weights where the plain values underflow.
template <int D>
class WeightField {
 public:
  struct Term {
    int patch = -1;
    double w = 0.0;
    Vec<D> grad = Vec<D>::Zero();
    Mat<D> hess = Mat<D>::Zero();
    double laplacian = 0.0;
  };

  WeightField(const Cover<D>& cover, GeneratorKind kind)
      : cov_(&cover), kind_(kind), lookup_(cover.patches) {}

  const Cover<D>& cover() const { return *cov_; }
  GeneratorKind kind() const { return kind_; }

  std::vector<Term> eval(const Vec<D>& x, int order = 2) const {
    std::vector<Term> terms;
    if (kind_ == GeneratorKind::BumpCInf)
      eval_log(x, order, terms);
    else
      eval_direct(x, order, terms);
    require(!terms.empty(), ErrorCode::OutsideCover, "point outside the open patch union");
    finish(order, terms);
    return terms;
  }

 private:
  void eval_direct(const Vec<D>& x, int order, std::vector<Term>& terms) const {
    for (int j : lookup_.candidates(x)) {
      auto jet = patch_generator(cov_->patches[j], kind_, x, order);
      if (jet.value <= 0.0) continue;
      Term t;
      t.patch = j;
      t.w = jet.value;
      t.grad = jet.grad;
      t.hess = jet.hess;
      terms.push_back(std::move(t));
    }
  }

  void eval_log(const Vec<D>& x, int order, std::vector<Term>& terms) const {
    std::vector<detail::LogJet<D>> jets;
    std::vector<int> ids;
    double top = -std::numeric_limits<double>::infinity();
    for (int j : lookup_.candidates(x)) {
      auto jet = detail::bump_log_jet(cov_->patches[j], x, order);
      if (!jet.inside) continue;
      top = std::max(top, jet.log_value);
      ids.push_back(j);
      jets.push_back(std::move(jet));
    }
    for (std::size_t k = 0; k < ids.size(); ++k) {
      double val = std::exp(jets[k].log_value - top);
      if (val <= 0.0) continue;
      Term t;
      t.patch = ids[k];
      t.w = val;
      if (order >= 1) t.grad = val * jets[k].grad;
      if (order >= 2)
        t.hess = val * (jets[k].grad * jets[k].grad.transpose() + jets[k].hess);
      terms.push_back(std::move(t));
    }
  }

  // The rational recursion, applied to the (possibly rescaled) generators.
  // The terms psi_j - w_j s and H_j - w_j H_s are expanded into pairwise
  // differences: algebraically identical, but each product stays at the
  // physical size of the overlap, so a dominated patch contributes exact
  // zeros instead of a catastrophic cancellation of its huge generator jets.
  void finish(int order, std::vector<Term>& terms) const {
    int k = static_cast<int>(terms.size());
    double s = 0.0;
    for (const auto& t : terms) s += t.w;
    std::vector<double> w(k);
    for (int j = 0; j < k; ++j) w[j] = terms[j].w / s;

    if (order >= 1) {
      Vec<D> gs = Vec<D>::Zero();
      for (const auto& t : terms) gs += t.grad;
      std::vector<Vec<D>> gw(k);
      for (int j = 0; j < k; ++j) {
        Vec<D> num = Vec<D>::Zero();
        for (int i = 0; i < k; ++i)
          if (i != j) num += w[i] * terms[j].grad - w[j] * terms[i].grad;
        gw[j] = num / s;
      }
      if (order >= 2) {
        std::vector<Mat<D>> hw(k);
        for (int j = 0; j < k; ++j) {
          Mat<D> num = Mat<D>::Zero();
          for (int i = 0; i < k; ++i)
            if (i != j) num += w[i] * terms[j].hess - w[j] * terms[i].hess;
          num -= gw[j] * gs.transpose() + gs * gw[j].transpose();
          hw[j] = num / s;
        }
        for (int j = 0; j < k; ++j) {
          terms[j].hess = hw[j];
          terms[j].laplacian = hw[j].trace();
        }
      }
      for (int j = 0; j < k; ++j) terms[j].grad = gw[j];
    }
    for (int j = 0; j < k; ++j) terms[j].w = w[j];
  }

  const Cover<D>* cov_;
  GeneratorKind kind_;
  PatchLookup<D> lookup_;
};

}  // namespace pumice
