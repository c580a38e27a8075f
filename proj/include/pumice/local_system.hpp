#pragma once

#include "pumice/halton.hpp"
#include "pumice/kernels.hpp"

#include <Eigen/LU>

namespace pumice {

// Graded-lex monomial basis in scaled reference coordinates
// xi = (x'_1/R0, .., x'_{d-1}/R0, x'_d/(H0/2)). Scaling keeps the polynomial
// block O(1) on the reference patch.
template <int D>
struct Monomials {
  std::vector<std::array<int, D>> expo;
  Vec<D> inv_scale = Vec<D>::Ones();

  static int dimension(int degree) {
    // dim of polynomials of total degree <= degree in D variables
    if (degree < 0) return 0;
    long long num = 1, den = 1;
    for (int i = 1; i <= D; ++i) {
      num *= degree + i;
      den *= i;
    }
    return static_cast<int>(num / den);
  }

  Monomials() = default;

  Monomials(int degree, double R0, double H0) {
    for (int k = 0; k + 1 < D; ++k) inv_scale[k] = 1.0 / R0;
    inv_scale[D - 1] = 2.0 / H0;
    std::array<int, D> a{};
    for (int total = 0; total <= degree; ++total) enumerate(a, 0, total);
  }

  int size() const { return static_cast<int>(expo.size()); }

  double value(int k, const Vec<D>& x) const {
    double v = 1.0;
    for (int i = 0; i < D; ++i) v *= ipow(x[i] * inv_scale[i], expo[k][i]);
    return v;
  }

  Vec<D> gradient(int k, const Vec<D>& x) const {
    Vec<D> g;
    for (int c = 0; c < D; ++c) {
      double v = 1.0;
      for (int i = 0; i < D; ++i) {
        int e = expo[k][i];
        if (i == c) {
          if (e == 0) { v = 0.0; break; }
          v *= e * ipow(x[i] * inv_scale[i], e - 1) * inv_scale[i];
        } else {
          v *= ipow(x[i] * inv_scale[i], e);
        }
      }
      g[c] = v;
    }
    return g;
  }

  Mat<D> hessian(int k, const Vec<D>& x) const {
    Mat<D> h;
    for (int a = 0; a < D; ++a)
      for (int b = a; b < D; ++b) {
        double v = 1.0;
        for (int i = 0; i < D; ++i) {
          int e = expo[k][i];
          int order = (i == a) + (i == b);
          if (e < order) { v = 0.0; break; }
          double f = (order == 2) ? e * (e - 1) : (order == 1 ? e : 1);
          v *= f * ipow(x[i] * inv_scale[i], e - order) * ipow(inv_scale[i], order);
        }
        h(a, b) = v;
        h(b, a) = v;
      }
    return h;
  }

 private:
  static double ipow(double x, int e) {
    double v = 1.0;
    for (int i = 0; i < e; ++i) v *= x;
    return v;
  }

  void enumerate(std::array<int, D>& a, int pos, int remaining) {
    if (pos == D - 1) {
      a[pos] = remaining;
      expo.push_back(a);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      a[pos] = e;
      enumerate(a, pos + 1, remaining - e);
    }
  }
};

// Symmetric collocation matrix A, a_ki = phi(eps*||x'_k - x'_i||), over the
// shared reference nodes. One instance serves every patch of a cover because
// all patches map to the same reference cylinder.
//
// The nodal form evaluates as row(x') * A^{-1} * u; rows are produced here and
// the A^{-1} application goes through the stored LU factorization (partial
// pivoting handles the conditionally definite multiquadric case as well).
//
// With poly_degree >= 0 the basis is augmented by monomials up to that degree
// in the standard saddle-point form [A P; P^T 0]; the unknowns seen by callers
// are still the n nodal values, and interpolants then reproduce polynomials of
// the augmentation degree exactly.
template <int D>
class LocalSystem {
 public:
  LocalSystem() = default;

  LocalSystem(const Kernel& kernel, ReferenceNodeSet<D> nodes, int poly_degree = -1,
              double cond_limit = 1e14)
      : kernel_(kernel), nodes_(std::move(nodes)), poly_degree_(poly_degree) {
    const int n = nodes_.size();
    require(n >= 1, ErrorCode::DegenerateInput, "local system needs at least one node");
    A_.resize(n, n);
    for (int i = 0; i < n; ++i) {
      A_(i, i) = kernel_eval(kernel_, 0.0, KernelOrder::Value);
      for (int j = i + 1; j < n; ++j) {
        double v = kernel_eval(kernel_, (nodes_.nodes[i] - nodes_.nodes[j]).norm(), KernelOrder::Value);
        A_(i, j) = v;
        A_(j, i) = v;
      }
    }
    int s = 0;
    if (poly_degree_ >= 0) {
      mono_ = Monomials<D>(poly_degree_, nodes_.R0, nodes_.H0);
      s = mono_.size();
      require(s <= n, ErrorCode::Underdetermined,
              "polynomial augmentation needs at least dim(P) nodes");
    }
    Eigen::MatrixXd M(n + s, n + s);
    M.topLeftCorner(n, n) = A_;
    if (s > 0) {
      Eigen::MatrixXd P(n, s);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < s; ++k) P(i, k) = mono_.value(k, nodes_.nodes[i]);
      M.topRightCorner(n, s) = P;
      M.bottomLeftCorner(s, n) = P.transpose();
      M.bottomRightCorner(s, s).setZero();
    }
    lu_.compute(M);
    double rc = lu_.rcond();
    cond_ = (rc > 0.0 && std::isfinite(rc)) ? 1.0 / rc : std::numeric_limits<double>::infinity();
    if (!(cond_ < cond_limit))
      fail(ErrorCode::IllConditioned,
           "local interpolation matrix condition estimate " + std::to_string(cond_) + " exceeds limit");
  }

  const Kernel& kernel() const { return kernel_; }
  const ReferenceNodeSet<D>& nodes() const { return nodes_; }
  int size() const { return nodes_.size(); }
  int poly_degree() const { return poly_degree_; }
  int poly_size() const { return poly_degree_ >= 0 ? mono_.size() : 0; }
  const Eigen::MatrixXd& A() const { return A_; }
  double condition_estimate() const { return cond_; }

  // Expansion coefficients (lambda, then beta for the polynomial tail) from
  // nodal values; columns are independent right-hand sides.
  Eigen::MatrixXd coefficients_from_nodal(const Eigen::MatrixXd& u) const {
    const int n = size(), s = poly_size();
    Eigen::MatrixXd rhs(n + s, u.cols());
    rhs.topRows(n) = u;
    rhs.bottomRows(s).setZero();
    return lu_.solve(rhs);
  }

  Eigen::MatrixXd nodal_from_coefficients(const Eigen::MatrixXd& lam) const {
    const int n = size();
    Eigen::MatrixXd u = A_ * lam.topRows(n);
    if (poly_size() > 0) {
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < poly_size(); ++k)
          u.row(i) += mono_.value(k, nodes_.nodes[i]) * lam.row(n + k);
    }
    return u;
  }

  // Rows of the nodal evaluation operator: given full basis rows
  // [B_kernel | B_poly], returns the row block R with (R u) the interpolant
  // (or its derivative) values. For the plain basis this is B * A^{-1}.
  Eigen::MatrixXd nodal_rows(const Eigen::MatrixXd& full_rows) const {
    // rows * M^{-1}, keeping the first n columns: M and A are symmetric, so
    // rows * M^{-1} = (M^{-1} rows^T)^T.
    return lu_.solve(full_rows.transpose()).transpose().leftCols(size());
  }

  // Basis rows at a reference point: b_i = phi(eps*||x' - x'_i||), then the
  // monomials when augmented.
  Eigen::RowVectorXd value_row(const Vec<D>& x) const {
    const int n = size(), s = poly_size();
    Eigen::RowVectorXd row(n + s);
    for (int i = 0; i < n; ++i) row[i] = kernel_eval(kernel_, (x - nodes_.nodes[i]).norm(), KernelOrder::Value);
    for (int k = 0; k < s; ++k) row[n + k] = mono_.value(k, x);
    return row;
  }

  // Rows of the reference-space gradient: out(k,i) = d b_i / d x'_k.
  Eigen::Matrix<double, D, Eigen::Dynamic> gradient_rows(const Vec<D>& x) const {
    const int n = size(), s = poly_size();
    Eigen::Matrix<double, D, Eigen::Dynamic> out(D, n + s);
    for (int i = 0; i < n; ++i) {
      auto e = kernel_point<D>(kernel_, x, nodes_.nodes[i], 1);
      out.col(i) = e.grad;
    }
    for (int k = 0; k < s; ++k) out.col(n + k) = mono_.gradient(k, x);
    return out;
  }

  // Rows of the pure second reference derivatives: out(k,i) = d^2 b_i / d x'_k^2.
  Eigen::Matrix<double, D, Eigen::Dynamic> second_rows(const Vec<D>& x) const {
    const int n = size(), s = poly_size();
    Eigen::Matrix<double, D, Eigen::Dynamic> out(D, n + s);
    for (int i = 0; i < n; ++i) {
      auto e = kernel_point<D>(kernel_, x, nodes_.nodes[i], 2);
      for (int k = 0; k < D; ++k) out(k, i) = e.hess(k, k);
    }
    for (int k = 0; k < s; ++k) {
      Mat<D> h = mono_.hessian(k, x);
      for (int c = 0; c < D; ++c) out(c, n + k) = h(c, c);
    }
    return out;
  }

  // Value / gradient / hessian of the coefficient expansion at x'.
  KernelPointEval<D> eval_expansion(const Eigen::VectorXd& lam, const Vec<D>& x, int order) const {
    KernelPointEval<D> acc;
    const int n = size();
    for (int i = 0; i < n; ++i) {
      auto e = kernel_point<D>(kernel_, x, nodes_.nodes[i], order);
      acc.value += lam[i] * e.value;
      if (order >= 1) acc.grad += lam[i] * e.grad;
      if (order >= 2) acc.hess += lam[i] * e.hess;
    }
    for (int k = 0; k < poly_size(); ++k) {
      acc.value += lam[n + k] * mono_.value(k, x);
      if (order >= 1) acc.grad += lam[n + k] * mono_.gradient(k, x);
      if (order >= 2) acc.hess += lam[n + k] * mono_.hessian(k, x);
    }
    return acc;
  }

  enum class EvalOp { Value, Gradient, Second };

  // Nodal evaluation operator at target points: (result * u) gives interpolant
  // values (or the chosen derivative) there. component selects the direction
  // for Gradient / Second and is ignored for Value.
  Eigen::MatrixXd eval_matrix(const std::vector<Vec<D>>& targets, EvalOp op, int component = 0) const {
    const int n = size(), s = poly_size();
    const int m = static_cast<int>(targets.size());
    Eigen::MatrixXd B(m, n + s);
    for (int t = 0; t < m; ++t) {
      switch (op) {
        case EvalOp::Value:
          B.row(t) = value_row(targets[t]);
          break;
        case EvalOp::Gradient:
          B.row(t) = gradient_rows(targets[t]).row(component);
          break;
        case EvalOp::Second:
          B.row(t) = second_rows(targets[t]).row(component);
          break;
      }
    }
    return nodal_rows(B);
  }

 private:
  Kernel kernel_;
  ReferenceNodeSet<D> nodes_;
  int poly_degree_ = -1;
  Monomials<D> mono_;
  Eigen::MatrixXd A_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  double cond_ = 0.0;
};

// Largest augmentation degree m with dim(P_m) <= n - (D+1), i.e. leaving at
// least D+1 kernel degrees of freedom. Equals p-1 for n = dim(P_p).
template <int D>
int default_poly_degree(int n) {
  int m = -1;
  while (Monomials<D>::dimension(m + 1) <= n - (D + 1)) ++m;
  return m;
}

}  // namespace pumice
