#pragma once

#include "pumice/common.hpp"

namespace pumice {

enum class KernelFamily { Multiquadric, Gaussian, InverseMultiquadric };

inline const char* kernel_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::Multiquadric: return "multiquadric";
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::InverseMultiquadric: return "inverse_multiquadric";
  }
  return "unknown";
}

inline KernelFamily kernel_from_name(const std::string& s) {
  if (s == "multiquadric" || s == "mq") return KernelFamily::Multiquadric;
  if (s == "gaussian" || s == "ga") return KernelFamily::Gaussian;
  if (s == "inverse_multiquadric" || s == "imq") return KernelFamily::InverseMultiquadric;
  fail(ErrorCode::InvalidArgument, "unknown kernel family '" + s + "'");
}

// Radial basis phi(eps*r) with phi one of
//   multiquadric          sqrt(1 + r^2)
//   gaussian              exp(-r^2)
//   inverse multiquadric  1 / sqrt(1 + r^2)
struct Kernel {
  KernelFamily family = KernelFamily::Multiquadric;
  double eps = 1.0;
};

enum class KernelOrder { Value, D1overR, D2 };

namespace detail {

// Radial profiles. t = eps*r.
//   k0(t) = phi(t)
//   k1(t) = phi'(t)/t          (smooth through t=0 for all three families)
//   k2(t) = (phi''(t)-k1(t))/t^2  (likewise smooth; exact cancellation)
// With these, for g(x) = phi(eps*||x-c||) and delta = x-c:
//   grad g = eps^2 k1 * delta
//   hess g = eps^2 k1 * I + eps^4 k2 * delta*delta^T
inline void radial_profile(KernelFamily f, double t, double& k0, double& k1, double& k2) {
  double t2 = t * t;
  switch (f) {
    case KernelFamily::Multiquadric: {
      double q = std::sqrt(1.0 + t2);
      k0 = q;
      k1 = 1.0 / q;
      k2 = -1.0 / (q * q * q);
      return;
    }
    case KernelFamily::Gaussian: {
      double e = std::exp(-t2);
      k0 = e;
      k1 = -2.0 * e;
      k2 = 4.0 * e;
      return;
    }
    case KernelFamily::InverseMultiquadric: {
      double q = 1.0 / std::sqrt(1.0 + t2);
      double q3 = q * q * q;
      k0 = q;
      k1 = -q3;
      k2 = 3.0 * q3 * q * q;
      return;
    }
  }
  k0 = k1 = k2 = 0.0;
}

inline double radial_d2(KernelFamily f, double t) {
  // phi''(t), used for the D2 query order.
  double t2 = t * t;
  switch (f) {
    case KernelFamily::Multiquadric: {
      double q = std::sqrt(1.0 + t2);
      return 1.0 / (q * q * q);
    }
    case KernelFamily::Gaussian:
      return (4.0 * t2 - 2.0) * std::exp(-t2);
    case KernelFamily::InverseMultiquadric:
      return (2.0 * t2 - 1.0) * std::pow(1.0 + t2, -2.5);
  }
  return 0.0;
}

}  // namespace detail

// Scalar evaluation at radius r >= 0.
//   Value:   phi(eps*r)
//   D1overR: phi'(eps*r)*eps/r, continuously extended at r=0
//   D2:      eps^2 * phi''(eps*r)
inline double kernel_eval(const Kernel& k, double r, KernelOrder order) {
  require(r >= 0.0, ErrorCode::InvalidArgument, "kernel_eval needs r >= 0");
  require(k.eps > 0.0, ErrorCode::InvalidArgument, "kernel_eval needs eps > 0");
  double t = k.eps * r;
  double k0, k1, k2;
  detail::radial_profile(k.family, t, k0, k1, k2);
  switch (order) {
    case KernelOrder::Value: return k0;
    case KernelOrder::D1overR: return k.eps * k.eps * k1;
    case KernelOrder::D2: return k.eps * k.eps * detail::radial_d2(k.family, t);
  }
  return 0.0;
}

// Point evaluation of g(x) = phi(eps*||x - c||) with derivatives in x.
template <int D>
struct KernelPointEval {
  double value = 0.0;
  Vec<D> grad = Vec<D>::Zero();
  Mat<D> hess = Mat<D>::Zero();
};

template <int D>
KernelPointEval<D> kernel_point(const Kernel& k, const Vec<D>& x, const Vec<D>& c, int order) {
  KernelPointEval<D> out;
  Vec<D> delta = x - c;
  double r = delta.norm();
  double t = k.eps * r;
  double k0, k1, k2;
  detail::radial_profile(k.family, t, k0, k1, k2);
  double e2 = k.eps * k.eps;
  out.value = k0;
  if (order >= 1) out.grad = e2 * k1 * delta;
  if (order >= 2) out.hess = e2 * k1 * Mat<D>::Identity() + e2 * e2 * k2 * (delta * delta.transpose());
  return out;
}

}  // namespace pumice
