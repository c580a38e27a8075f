#include "pumice/halton.hpp"
#include "pumice/kdtree.hpp"
#include "pumice/local_system.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace pumice;
using Catch::Approx;

TEST_CASE("radical inverse at pinned indices") {
  CHECK(radical_inverse(1, 2) == 0.5);
  CHECK(radical_inverse(2, 2) == 0.25);
  CHECK(radical_inverse(3, 2) == 0.75);
  CHECK(radical_inverse(4, 2) == 0.125);
  CHECK(radical_inverse(1, 3) == Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(radical_inverse(4, 3) == Approx(4.0 / 9.0).epsilon(1e-15));
  CHECK(radical_inverse(7, 5) == Approx(0.44).epsilon(1e-15));
}

TEST_CASE("reference nodes stay inside the cylinder and are deterministic") {
  auto a2 = halton_cylinder_nodes<2>(64, 1.5, 0.4);
  auto b2 = halton_cylinder_nodes<2>(64, 1.5, 0.4);
  REQUIRE(a2.size() == 64);
  for (std::size_t i = 0; i < a2.size(); ++i) {
    CHECK(a2[i] == b2[i]);  // bitwise
    CHECK(std::abs(a2[i][0]) <= 1.5);
    CHECK(std::abs(a2[i][1]) <= 0.2);
  }

  auto a3 = halton_cylinder_nodes<3>(100, 0.8, 0.3);
  REQUIRE(a3.size() == 100);
  for (auto& p : a3) {
    CHECK(p.head<2>().norm() <= 0.8);
    CHECK(std::abs(p[2]) <= 0.15);
  }

  // First 2d node comes from index 1: x = (2*1/2 - 1)*R0, z = (1/3 - 1/2)*H0.
  CHECK(a2[0][0] == 0.0);
  CHECK(a2[0][1] == Approx(-0.4 / 6.0).margin(1e-15));
}

TEST_CASE("node spacing agrees between brute force and kd-tree") {
  auto set = make_reference_nodes<2>(45, 1.0, 0.2);
  CHECK(set.h_prime > 0.0);
  CHECK(mean_spacing<2>(set.nodes) == Approx(set.h_prime).epsilon(1e-13));

  auto set3 = make_reference_nodes<3>(35, 1.0, 0.2);
  CHECK(mean_spacing<3>(set3.nodes) == Approx(set3.h_prime).epsilon(1e-13));
}

namespace {

template <int D>
std::vector<Vec<D>> random_points(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec<D>> pts(n);
  for (auto& p : pts)
    for (int k = 0; k < D; ++k) p[k] = u(rng);
  return pts;
}

template <int D>
int brute_nearest(const std::vector<Vec<D>>& pts, const Vec<D>& q, int skip) {
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    if (i == skip) continue;
    double d2 = (pts[i] - q).squaredNorm();
    if (d2 < best_d2) {
      best = i;
      best_d2 = d2;
    }
  }
  return best;
}

template <int D>
std::vector<int> brute_knn(const std::vector<Vec<D>>& pts, const Vec<D>& q, int k, int skip) {
  std::vector<std::pair<double, int>> items;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i)
    if (i != skip) items.emplace_back((pts[i] - q).squaredNorm(), i);
  std::sort(items.begin(), items.end());
  std::vector<int> out;
  for (int i = 0; i < k && i < static_cast<int>(items.size()); ++i) out.push_back(items[i].second);
  return out;
}

}  // namespace

TEMPLATE_TEST_CASE_SIG("kd-tree queries match brute force", "", ((int D), D), 2, 3) {
  auto pts = random_points<D>(200, 1234);
  // duplicate a few points so index tie-breaking is exercised
  pts[50] = pts[10];
  pts[51] = pts[10];
  KdTree<D> tree(pts);
  auto queries = random_points<D>(60, 99);
  for (auto& q : queries) {
    CHECK(tree.nearest(q) == brute_nearest<D>(pts, q, -1));
    CHECK(tree.knn(q, 7) == brute_knn<D>(pts, q, 7, -1));
    auto got = tree.radius(q, 0.35);
    std::vector<int> want;
    for (int i = 0; i < static_cast<int>(pts.size()); ++i)
      if ((pts[i] - q).norm() <= 0.35) want.push_back(i);
    CHECK(got == want);
  }
  // self-queries with skip
  for (int i = 0; i < 40; ++i) {
    CHECK(tree.nearest(pts[i], i) == brute_nearest<D>(pts, pts[i], i));
    CHECK(tree.nearest_distance(pts[i], i) ==
          Approx((pts[brute_nearest<D>(pts, pts[i], i)] - pts[i]).norm()).margin(1e-300));
  }
  // duplicates: nearest to the duplicate location (keeping all) is the lowest index
  CHECK(tree.nearest(pts[10]) == 10);
}

TEST_CASE("single-node local system is the identity") {
  auto set = make_reference_nodes<2>(1, 1.0, 0.2);
  LocalSystem<2> sys({KernelFamily::Multiquadric, 1.0}, set);
  CHECK(sys.A()(0, 0) == 1.0);
  Eigen::MatrixXd u(1, 1);
  u(0, 0) = 3.5;
  CHECK(sys.coefficients_from_nodal(u)(0, 0) == Approx(3.5).epsilon(1e-15));
  CHECK(sys.eval_matrix({set.nodes[0]}, LocalSystem<2>::EvalOp::Value)(0, 0) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("local system interpolates nodal data") {
  auto set = make_reference_nodes<2>(21, 1.0, 0.4);
  LocalSystem<2> sys({KernelFamily::Multiquadric, 3.0}, set);
  CHECK(sys.A().isApprox(sys.A().transpose(), 0.0));  // exact symmetry by construction

  Eigen::VectorXd u(set.size());
  for (int i = 0; i < set.size(); ++i) u[i] = std::sin(2.0 * set.nodes[i][0]) * std::cos(set.nodes[i][1]);
  Eigen::MatrixXd at_nodes = sys.eval_matrix(set.nodes, LocalSystem<2>::EvalOp::Value);
  CHECK((at_nodes * u - u).lpNorm<Eigen::Infinity>() < 1e-8);

  // round trip through expansion coefficients
  Eigen::MatrixXd lam = sys.coefficients_from_nodal(u);
  CHECK((sys.nodal_from_coefficients(lam) - u).lpNorm<Eigen::Infinity>() < 1e-8);

  // pointwise expansion agrees with the matrix path off the nodes
  std::vector<Vec<2>> targets;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ur(-0.9, 0.9), uz(-0.19, 0.19);
  for (int i = 0; i < 20; ++i) targets.push_back(Vec<2>{ur(rng), uz(rng)});
  Eigen::MatrixXd vals = sys.eval_matrix(targets, LocalSystem<2>::EvalOp::Value);
  for (int t = 0; t < 20; ++t) {
    auto e = sys.eval_expansion(lam.col(0), targets[t], 0);
    CHECK(vals.row(t) * u == Approx(e.value).epsilon(1e-12));
  }
}

TEST_CASE("local system derivative rows match finite differences") {
  auto set = make_reference_nodes<2>(28, 1.0, 0.4);
  LocalSystem<2> sys({KernelFamily::Multiquadric, 3.0}, set);
  Eigen::VectorXd u(set.size());
  for (int i = 0; i < set.size(); ++i) u[i] = std::exp(0.3 * set.nodes[i][0] - 0.2 * set.nodes[i][1]);

  auto value_at = [&](const Vec<2>& x) {
    return (sys.eval_matrix({x}, LocalSystem<2>::EvalOp::Value) * u)(0, 0);
  };
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> ur(-0.8, 0.8), uz(-0.15, 0.15);
  double h = 1e-5;
  for (int t = 0; t < 15; ++t) {
    Vec<2> x{ur(rng), uz(rng)};
    for (int a = 0; a < 2; ++a) {
      Vec<2> dx = Vec<2>::Zero();
      dx[a] = h;
      double fd1 = (value_at(x + dx) - value_at(x - dx)) / (2.0 * h);
      double fd2 = (value_at(x + dx) - 2.0 * value_at(x) + value_at(x - dx)) / (h * h);
      CHECK((sys.eval_matrix({x}, LocalSystem<2>::EvalOp::Gradient, a) * u)(0, 0) ==
            Approx(fd1).margin(1e-6));
      CHECK((sys.eval_matrix({x}, LocalSystem<2>::EvalOp::Second, a) * u)(0, 0) ==
            Approx(fd2).margin(2e-3));
    }
  }
}

TEST_CASE("monomial bookkeeping") {
  CHECK(Monomials<2>::dimension(0) == 1);
  CHECK(Monomials<2>::dimension(4) == 15);
  CHECK(Monomials<2>::dimension(5) == 21);
  CHECK(Monomials<3>::dimension(3) == 20);
  CHECK(Monomials<3>::dimension(4) == 35);
  CHECK(default_poly_degree<2>(21) == 4);
  CHECK(default_poly_degree<2>(28) == 5);
  CHECK(default_poly_degree<3>(35) == 3);
  CHECK(default_poly_degree<2>(6) == 1);
  CHECK(default_poly_degree<2>(3) == -1);  // too few nodes to augment at all

  Monomials<2> m(2, 2.0, 0.5);
  REQUIRE(m.size() == 6);
  Vec<2> x{1.0, 0.1};  // scaled coords (0.5, 0.4)
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < m.size(); ++k) {
    // gradient and hessian against finite differences
    double h = 1e-6;
    for (int a = 0; a < 2; ++a) {
      Vec<2> dx = Vec<2>::Zero();
      dx[a] = h;
      double fd = (m.value(k, x + dx) - m.value(k, x - dx)) / (2.0 * h);
      CHECK(m.gradient(k, x)[a] == Approx(fd).margin(1e-8));
    }
    (void)u;
  }
  // the basis contains the constant 1
  CHECK(m.value(0, Vec<2>{0.77, -0.33}) == 1.0);
}

TEST_CASE("augmented local system reproduces low-degree polynomials") {
  auto set = make_reference_nodes<2>(21, 1.0, 0.4);
  LocalSystem<2> sys({KernelFamily::Multiquadric, 1.0}, set, 1);
  CHECK(sys.poly_size() == 3);

  std::mt19937 rng(8);
  std::uniform_real_distribution<double> ur(-0.9, 0.9), uz(-0.18, 0.18);
  std::vector<Vec<2>> targets;
  for (int i = 0; i < 30; ++i) targets.push_back(Vec<2>{ur(rng), uz(rng)});
  Eigen::MatrixXd E = sys.eval_matrix(targets, LocalSystem<2>::EvalOp::Value);

  auto linear = [](const Vec<2>& x) { return 2.0 + 0.5 * x[0] - 0.25 * x[1]; };
  Eigen::VectorXd u(set.size());
  for (int i = 0; i < set.size(); ++i) u[i] = linear(set.nodes[i]);
  Eigen::VectorXd got = E * u;
  for (int t = 0; t < 30; ++t) CHECK(got[t] == Approx(linear(targets[t])).margin(1e-10));

  // constants annihilate all derivative rows
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(set.size());
  for (int a = 0; a < 2; ++a) {
    CHECK((sys.eval_matrix(targets, LocalSystem<2>::EvalOp::Gradient, a) * ones).lpNorm<Eigen::Infinity>() <
          1e-11);
    CHECK((sys.eval_matrix(targets, LocalSystem<2>::EvalOp::Second, a) * ones).lpNorm<Eigen::Infinity>() <
          1e-10);
  }

  // still interpolates arbitrary nodal data
  Eigen::VectorXd w(set.size());
  for (int i = 0; i < set.size(); ++i) w[i] = std::sin(3.0 * set.nodes[i][0]) + set.nodes[i][1];
  Eigen::MatrixXd at_nodes = sys.eval_matrix(set.nodes, LocalSystem<2>::EvalOp::Value);
  CHECK((at_nodes * w - w).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("augmentation needs enough nodes") {
  auto set = make_reference_nodes<2>(5, 1.0, 0.4);
  try {
    LocalSystem<2> sys({KernelFamily::Multiquadric, 1.0}, set, 3);  // dim P_3 = 10 > 5
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Underdetermined);
  }
}

TEST_CASE("conditioning guard fires on degenerate setups") {
  auto set = make_reference_nodes<2>(36, 1.0, 0.4);
  try {
    LocalSystem<2> sys({KernelFamily::Gaussian, 0.02}, set);  // nearly constant columns
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IllConditioned);
    CHECK(error_kind(e.code()) == ErrorKind::Numerical);
  }
}
