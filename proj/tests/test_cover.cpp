#include <catch2/catch_amalgamated.hpp>

#include <pumice/cover.hpp>
#include <pumice/fixtures.hpp>

#include <random>

using namespace pumice;

namespace {

// plain Lloyd from random centers, used as an independent clustering baseline
template <int D>
double lloyd_baseline_sse(const std::vector<Vec<D>>& pts, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  int m = static_cast<int>(pts.size());
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Vec<D>> centers;
  for (int c = 0; c < k; ++c) centers.push_back(pts[order[c]]);
  std::vector<int> assign(m, -1);
  for (int iter = 0; iter < 200; ++iter) {
    bool changed = false;
    std::vector<int> count(k, 0);
    std::vector<Vec<D>> sums(k, Vec<D>::Zero());
    for (int i = 0; i < m; ++i) {
      int bc = 0;
      double bd = (pts[i] - centers[0]).squaredNorm();
      for (int c = 1; c < k; ++c) {
        double d = (pts[i] - centers[c]).squaredNorm();
        if (d < bd) {
          bd = d;
          bc = c;
        }
      }
      if (assign[i] != bc) {
        assign[i] = bc;
        changed = true;
      }
      count[bc]++;
      sums[bc] += pts[i];
    }
    for (int c = 0; c < k; ++c)
      if (count[c] > 0) centers[c] = sums[c] / count[c];
    if (!changed) break;
  }
  double sse = 0.0;
  for (int i = 0; i < m; ++i) sse += (pts[i] - centers[assign[i]]).squaredNorm();
  return sse;
}

template <int D>
double margin_oracle(double R0, double H0, const Patch<D>& p, const Vec<D>& x) {
  Vec<D> hat = p.rotation.transpose() * (x - p.center);
  double rho = hat.template head<D - 1>().norm();
  double zeta = std::abs(hat[D - 1] - p.zmid());
  double mr = R0 - R0 * rho / p.radius;
  double mz = 0.5 * H0 - H0 * zeta / p.height();
  return std::min(mr, mz) / std::min(R0, 0.5 * H0);
}

template <int D>
bool covered_by_any(const Cover<D>& cov, const Vec<D>& x) {
  for (const auto& p : cov.patches)
    if (p.contains(x)) return true;
  return false;
}

template <int D>
std::vector<Vec<D>> element_samples(const SurfaceMesh<D>& mesh, int element) {
  const auto& el = mesh.elements[element];
  std::vector<Vec<D>> s;
  if constexpr (D == 2) {
    for (int i = 0; i < 10; ++i) {
      double t = i / 9.0;
      s.push_back((1.0 - t) * mesh.vertices[el[0]] + t * mesh.vertices[el[1]]);
    }
  } else {
    for (int a = 0; a <= 8; ++a)
      for (int b = 0; a + b <= 8; ++b) {
        int c = 8 - a - b;
        s.push_back((a * mesh.vertices[el[0]] + b * mesh.vertices[el[1]] +
                     c * mesh.vertices[el[2]]) / 8.0);
      }
  }
  return s;
}

template <int D>
void check_cover_invariants(const Cover<D>& cov, const Fixture<D>& fx) {
  for (int i = 0; i < fx.cloud.size(); ++i) {
    bool strict = false;
    for (const auto& p : cov.patches) strict = strict || p.contains(fx.cloud.points[i], true);
    REQUIRE(strict);
  }
  for (int e = 0; e < static_cast<int>(fx.mesh.elements.size()); ++e)
    for (const auto& x : element_samples(fx.mesh, e)) REQUIRE(covered_by_any(cov, x));
  for (int a = 0; a < cov.patch_count(); ++a)
    for (int b : cov.neighbors[a]) {
      const auto& back = cov.neighbors[b];
      REQUIRE(std::find(back.begin(), back.end(), a) != back.end());
    }
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& p : cov.patches) {
    REQUIRE((p.rotation.transpose() * p.rotation - Mat<D>::Identity()).norm() < 1e-10);
    REQUIRE(p.radius > 0.0);
    REQUIRE(p.height() > 0.0);
    for (int t = 0; t < 20; ++t) {
      Vec<D> x;
      for (int c = 0; c < D; ++c) x[c] = u(rng);
      REQUIRE((p.from_reference(p.to_reference(x)) - x).norm() < 1e-12);
    }
    for (int i : p.members) {
      Vec<D> xp = p.to_reference(fx.cloud.points[i]);
      REQUIRE(xp.template head<D - 1>().norm() <= cov.R0 + 1e-12);
      REQUIRE(std::abs(xp[D - 1]) <= 0.5 * cov.H0 + 1e-12);
    }
  }
}

}  // namespace

TEST_CASE("k-means separates well-separated groups") {
  std::vector<Vec<2>> pts{Vec<2>{0.0, 0.0}, Vec<2>{0.1, 0.0}, Vec<2>{10.0, 0.0},
                          Vec<2>{10.1, 0.0}};
  auto km = kmeans_cluster(pts, 2, 3);
  std::vector<std::vector<int>> got = km.clusters;
  for (auto& c : got) std::sort(c.begin(), c.end());
  std::sort(got.begin(), got.end());
  REQUIRE(got == std::vector<std::vector<int>>{{0, 1}, {2, 3}});
  std::vector<Vec<2>> cents = km.centroids;
  std::sort(cents.begin(), cents.end(), [](const Vec<2>& a, const Vec<2>& b) { return a[0] < b[0]; });
  CHECK(cents[0].isApprox(Vec<2>{0.05, 0.0}, 1e-14));
  CHECK(cents[1].isApprox(Vec<2>{10.05, 0.0}, 1e-14));
}

TEST_CASE("k-means with k equal to the point count gives singletons") {
  std::vector<Vec<2>> pts{Vec<2>{0.0, 0.0}, Vec<2>{1.0, 0.0}, Vec<2>{0.0, 1.0}};
  auto km = kmeans_cluster(pts, 3, 7);
  CHECK(km.sse == 0.0);
  for (const auto& c : km.clusters) CHECK(c.size() == 1);
}

TEST_CASE("k-means result is competitive with random-restart Lloyd") {
  auto fx = make_annulus(200, 0.0, 11);
  auto km = kmeans_cluster(fx.cloud.points, 8, 1);
  double oracle = std::numeric_limits<double>::infinity();
  for (int r = 0; r < 50; ++r)
    oracle = std::min(oracle, lloyd_baseline_sse(fx.cloud.points, 8, 1000 + r));
  CHECK(km.sse <= oracle * 1.05);
}

TEST_CASE("k-means rejects degenerate inputs") {
  std::vector<Vec<2>> pts(5, Vec<2>{1.0, 2.0});
  pts.push_back(Vec<2>{3.0, 4.0});
  CHECK_THROWS_AS(kmeans_cluster(pts, 3, 0), Error);
  try {
    kmeans_cluster(pts, 3, 0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateInput);
  }
}

TEST_CASE("patch from a segment aligns with the segment") {
  std::vector<Vec<2>> pts;
  std::vector<int> idx;
  for (int i = 0; i < 21; ++i) {
    pts.push_back(Vec<2>{-1.0 + 0.1 * i, 0.0});
    idx.push_back(i);
  }
  auto p = patch_from_points(pts, idx);
  CHECK(std::abs(std::abs(p.rotation(0, 0)) - 1.0) < 1e-12);
  CHECK(std::abs(p.rotation(1, 0)) < 1e-12);
  CHECK(p.radius == Catch::Approx(1.0).margin(1e-12));
  CHECK(p.z1 == Catch::Approx(0.0).margin(1e-12));
  CHECK(p.z2 == Catch::Approx(0.0).margin(1e-12));
  CHECK(p.height() == Catch::Approx(0.05).margin(1e-12));  // floored

  for (auto& q : pts) q = Vec<2>{q[1], q[0]};  // rotate the segment onto the y axis
  auto pr = patch_from_points(pts, idx);
  CHECK(std::abs(std::abs(pr.rotation(1, 0)) - 1.0) < 1e-12);
  CHECK(pr.radius == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("patch from a noisy strip has the expected extents") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(-1.0, 1.0), uy(-0.05, 0.05);
  std::vector<Vec<2>> pts;
  std::vector<int> idx;
  for (int i = 0; i < 300; ++i) {
    pts.push_back(Vec<2>{ux(rng), uy(rng)});
    idx.push_back(i);
  }
  auto p = patch_from_points(pts, idx);
  CHECK(p.radius >= 0.9);
  CHECK(p.radius <= 1.1);
  CHECK(p.height() >= 0.05);
  CHECK(p.height() <= 0.2);
  for (int i : idx) {
    Vec<2> hat = p.rotation.transpose() * (pts[i] - p.center);
    CHECK(std::abs(hat[0]) <= p.radius + 1e-12);
    CHECK(hat[1] >= p.z1 - 1e-12);
    CHECK(hat[1] <= p.z2 + 1e-12);
  }
}

TEST_CASE("patch construction rejects coincident points") {
  std::vector<Vec<2>> pts(4, Vec<2>{2.0, 3.0});
  std::vector<int> idx{0, 1, 2, 3};
  try {
    patch_from_points(pts, idx);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
}

TEST_CASE("volume target follows the frozen-statistics rule") {
  CHECK(volume_target({1.0, 1.0, 1.0, 1.0}) == Catch::Approx(1.1).epsilon(1e-14));
  // mean 1.5, sample std 1.0
  CHECK(volume_target({1.0, 1.0, 1.0, 3.0}) == Catch::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("refinement reaches the volume target computed from the initial cover") {
  auto fx = make_annulus(400, 0.0, 3);
  CoverParams prm;
  prm.P0 = 10;
  prm.seed = 3;
  auto cov = build_cover(fx.cloud, fx.mesh, prm);
  CHECK(cov.patch_count() >= prm.P0);

  auto initial = kmeans_cluster(fx.cloud.points, prm.P0, prm.seed);
  std::vector<double> vols;
  for (const auto& cl : initial.clusters)
    vols.push_back(patch_from_points(fx.cloud.points, cl).volume());
  double vstar = volume_target(vols);
  if (!cov.refinement_stalled) {
    // the final radii/heights were grown by coverage and overlap, so compare
    // against the refined clustering itself: rebuild the refine stage alone
    Cover<2> raw;
    for (const auto& cl : initial.clusters)
      raw.patches.push_back(patch_from_points(fx.cloud.points, cl));
    adaptive_refine(raw, fx.cloud, prm.seed, prm.max_rounds);
    CHECK(raw.max_volume() <= vstar);
    CHECK(raw.patch_count() >= prm.P0);
  }
}

TEST_CASE("element coverage fills the gap between two patches") {
  Cover<2> cov;
  Patch<2> a, b;
  a.center = Vec<2>{0.0, 0.0};
  a.radius = 0.2;
  a.z1 = -0.1;
  a.z2 = 0.1;
  b.center = Vec<2>{1.0, 0.0};
  b.radius = 0.2;
  b.z1 = -0.1;
  b.z2 = 0.1;
  cov.patches = {a, b};
  SurfaceMesh<2> mesh;
  mesh.vertices = {Vec<2>{0.0, 0.0}, Vec<2>{1.0, 0.0}};
  mesh.elements = {{0, 1}};
  cover_elements(cov, mesh);
  for (const auto& x : element_samples(mesh, 0)) CHECK(covered_by_any(cov, x));
}

TEST_CASE("element coverage handles a triangle spanning three patches") {
  Cover<3> cov;
  std::vector<Vec<3>> corners{Vec<3>{0.0, 0.0, 0.0}, Vec<3>{1.0, 0.0, 0.0}, Vec<3>{0.0, 1.0, 0.0}};
  for (const auto& c : corners) {
    Patch<3> p;
    p.center = c;
    p.radius = 0.2;
    p.z1 = -0.1;
    p.z2 = 0.1;
    cov.patches.push_back(p);
  }
  SurfaceMesh<3> mesh;
  mesh.vertices = corners;
  mesh.elements = {{0, 1, 2}};
  cover_elements(cov, mesh);
  for (const auto& x : element_samples(mesh, 0)) CHECK(covered_by_any(cov, x));
}

TEST_CASE("element fully inside one patch leaves the cover unchanged") {
  Cover<2> cov;
  Patch<2> a;
  a.center = Vec<2>{0.5, 0.0};
  a.radius = 1.0;
  a.z1 = -0.5;
  a.z2 = 0.5;
  cov.patches = {a};
  SurfaceMesh<2> mesh;
  mesh.vertices = {Vec<2>{0.2, 0.0}, Vec<2>{0.8, 0.0}};
  mesh.elements = {{0, 1}};
  cover_elements(cov, mesh);
  CHECK(cov.patches[0].radius == 1.0);
  CHECK(cov.patches[0].z1 == -0.5);
  CHECK(cov.patches[0].z2 == 0.5);
}

TEST_CASE("overlap growth gives shared boundary points the requested margin") {
  Cover<2> cov;
  Patch<2> a, b;
  a.center = Vec<2>{-0.5, 0.0};
  a.radius = 0.5;
  a.z1 = -0.5;
  a.z2 = 0.5;
  b.center = Vec<2>{0.5, 0.0};
  b.radius = 0.5;
  b.z1 = -0.5;
  b.z2 = 0.5;
  cov.R0 = 0.5;
  cov.H0 = 1.0;
  cov.patches = {a, b};
  for (auto& p : cov.patches) refresh_scaling(p, cov.R0, cov.H0);

  OrientedPointCloud<2> cloud;
  for (double y : {-0.3, 0.0, 0.3}) {
    cloud.points.push_back(Vec<2>{0.0, y});
    cloud.normals.push_back(Vec<2>{1.0, 0.0});
    cloud.labels.push_back(Label::Unlabeled);
  }
  ensure_overlap(cov, cloud, 0.15);
  for (const auto& y : cloud.points) {
    double best = -1.0;
    for (const auto& p : cov.patches) best = std::max(best, margin_oracle(cov.R0, cov.H0, p, y));
    CHECK(best >= 0.15 - 1e-9);
  }
}

TEST_CASE("overlap pass leaves an already-satisfied patch untouched") {
  Cover<2> cov;
  Patch<2> a;
  a.center = Vec<2>{0.0, 0.0};
  a.radius = 1.0;
  a.z1 = -1.0;
  a.z2 = 1.0;
  cov.R0 = 1.0;
  cov.H0 = 2.0;
  cov.patches = {a};
  refresh_scaling(cov.patches[0], cov.R0, cov.H0);
  OrientedPointCloud<2> cloud;
  cloud.points = {Vec<2>{0.1, 0.0}, Vec<2>{0.0, 0.2}};
  cloud.normals = {Vec<2>{1.0, 0.0}, Vec<2>{1.0, 0.0}};
  cloud.labels = {Label::Unlabeled, Label::Unlabeled};
  ensure_overlap(cov, cloud, 0.25);
  CHECK(cov.patches[0].radius == 1.0);
  CHECK(cov.patches[0].z1 == -1.0);
  CHECK(cov.patches[0].z2 == 1.0);
}

TEST_CASE("large overlap forces patches to share points") {
  auto fx = make_annulus(400, 0.0, 9);
  CoverParams prm;
  prm.P0 = 8;
  prm.delta0 = 0.9;
  prm.seed = 9;
  auto cov = build_cover(fx.cloud, fx.mesh, prm);
  CHECK(cov.K >= 2);
}

TEST_CASE("reference transforms match their hand-written forms") {
  Patch<2> ident;
  CHECK(ident.to_reference(Vec<2>{0.3, 0.4}).isApprox(Vec<2>{0.3, 0.4}, 1e-15));

  Patch<2> p;
  p.center = Vec<2>{1.0, 0.0};
  p.scale = Vec<2>{2.0, 2.0};
  CHECK(p.to_reference(Vec<2>{1.0, 0.0}).norm() == 0.0);
  CHECK(p.to_reference(Vec<2>{1.5, 0.25}).isApprox(Vec<2>{1.0, 0.5}, 1e-15));
}

TEST_CASE("pushforward matches the chain rule and finite differences") {
  Pushforward<2> trivial = pushforward_derivatives(
      Patch<2>{}, Vec<2>{1.0, 2.0}, (Mat<2>() << 3.0, 1.0, 1.0, 4.0).finished());
  CHECK(trivial.grad.isApprox(Vec<2>{1.0, 2.0}, 1e-15));
  CHECK(trivial.laplacian == Catch::Approx(7.0).epsilon(1e-14));

  Patch<2> axis;
  axis.scale = Vec<2>{2.0, 3.0};
  auto g1 = pushforward_derivatives(axis, Vec<2>{1.0, 0.0}, Mat<2>(Mat<2>::Zero()));
  CHECK(g1.grad.isApprox(Vec<2>{2.0, 0.0}, 1e-15));

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    Mat<3> A;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) A(r, c) = u(rng);
    Mat<3> sym = 0.5 * (A + A.transpose());
    Vec<3> bvec{u(rng), u(rng), u(rng)};

    Mat<3> m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = u(rng);
    Eigen::HouseholderQR<Mat<3>> qr(m);
    Mat<3> Q = qr.householderQ();

    Patch<3> p;
    p.center = Vec<3>{u(rng), u(rng), u(rng)};
    p.rotation = Q;
    p.z1 = p.z2 = 0.3 * u(rng);
    p.scale = Vec<3>{0.5 + std::abs(u(rng)), 0.5 + std::abs(u(rng)), 0.5 + std::abs(u(rng))};

    auto g = [&](const Vec<3>& xp) { return 0.5 * xp.dot(sym * xp) + bvec.dot(xp); };
    auto f = [&](const Vec<3>& x) { return g(p.to_reference(x)); };

    Vec<3> x{u(rng), u(rng), u(rng)};
    Vec<3> xp = p.to_reference(x);
    auto push = pushforward_derivatives(p, Vec<3>(sym * xp + bvec), sym);

    CHECK(std::abs(push.laplacian - push.hess.trace()) < 1e-12 * std::abs(push.laplacian));

    double h = 1e-5;
    for (int c = 0; c < 3; ++c) {
      Vec<3> e = Vec<3>::Zero();
      e[c] = h;
      double fd = (f(x + e) - f(x - e)) / (2.0 * h);
      CHECK(std::abs(fd - push.grad[c]) < 1e-6 * std::max(1.0, std::abs(push.grad[c])));
      for (int r = 0; r < 3; ++r) {
        Vec<3> er = Vec<3>::Zero();
        er[r] = h;
        double fdh = (f(x + e + er) - f(x + e - er) - f(x - e + er) + f(x - e - er)) /
                     (4.0 * h * h);
        CHECK(std::abs(fdh - push.hess(r, c)) < 1e-5 * std::max(1.0, std::abs(push.hess(r, c))));
      }
    }
  }
}

TEST_CASE("constructed covers satisfy the structural invariants") {
  {
    auto fx = make_annulus(400, 0.0, 3);
    CoverParams prm;
    prm.P0 = 8;
    prm.seed = 3;
    auto cov = build_cover(fx.cloud, fx.mesh, prm);
    check_cover_invariants(cov, fx);
    CHECK(cov.R0 == Catch::Approx(1.0));  // calibrated run
    CHECK_FALSE(cov.sheet_fallback);
  }
  {
    auto fx = make_bent_strip(500, 0.0, 5);
    CoverParams prm;
    prm.P0 = 10;
    prm.seed = 5;
    auto cov = build_cover(fx.cloud, fx.mesh, prm);
    check_cover_invariants(cov, fx);
  }
  {
    auto fx = make_spherical_shell(1500, 0.0, 7);
    CoverParams prm;
    prm.P0 = 20;
    prm.seed = 7;
    auto cov = build_cover(fx.cloud, fx.mesh, prm);
    check_cover_invariants(cov, fx);
  }
}

TEST_CASE("fill distance shrinks with more nodes per patch") {
  auto fx = make_annulus(400, 0.0, 3);
  CoverParams prm;
  prm.P0 = 8;
  prm.seed = 3;
  auto cov = build_cover(fx.cloud, fx.mesh, prm);
  double h21 = fill_distance(cov, 21);
  double h84 = fill_distance(cov, 84);
  CHECK(h21 > 0.0);
  CHECK(h84 == Catch::Approx(0.5 * h21).epsilon(1e-12));
}

TEST_CASE("cover serialization round-trips") {
  auto fx = make_bent_strip(500, 0.0, 5);
  CoverParams prm;
  prm.P0 = 10;
  prm.seed = 5;
  auto cov = build_cover(fx.cloud, fx.mesh, prm);
  auto j = cover_to_json(cov);
  auto back = cover_from_json<2>(j);
  REQUIRE(back.patch_count() == cov.patch_count());
  CHECK(back.R0 == cov.R0);
  CHECK(back.H0 == cov.H0);
  CHECK(back.delta0 == cov.delta0);
  for (int i = 0; i < cov.patch_count(); ++i) {
    CHECK(back.patches[i].center == cov.patches[i].center);
    CHECK(back.patches[i].rotation == cov.patches[i].rotation);
    CHECK(back.patches[i].radius == cov.patches[i].radius);
    CHECK(back.patches[i].z1 == cov.patches[i].z1);
    CHECK(back.patches[i].z2 == cov.patches[i].z2);
    CHECK(back.patches[i].scale == cov.patches[i].scale);
  }
  rebind_cover(back, fx.cloud);
  CHECK(back.K == cov.K);
  CHECK(cover_from_json<2>(j).patches.size() == cov.patches.size());
  CHECK_THROWS_AS(cover_from_json<3>(j), Error);
}

TEST_CASE("cover construction is deterministic") {
  auto fx = make_annulus(400, 0.0, 3);
  CoverParams prm;
  prm.P0 = 8;
  prm.seed = 42;
  auto a = build_cover(fx.cloud, fx.mesh, prm);
  auto b = build_cover(fx.cloud, fx.mesh, prm);
  CHECK(cover_to_json(a).dump() == cover_to_json(b).dump());
}

TEST_CASE("sparse-in-thickness data falls back to inner-sheet clustering") {
  auto fat = make_annulus(400, 0.0, 5, 1.0, 3.0);
  CoverParams prm;
  prm.P0 = 30;
  prm.seed = 5;
  auto cov = build_cover(fat.cloud, fat.mesh, prm);
  CHECK(cov.sheet_fallback);
  for (int i = 0; i < fat.cloud.size(); ++i) {
    bool strict = false;
    for (const auto& p : cov.patches) strict = strict || p.contains(fat.cloud.points[i], true);
    REQUIRE(strict);
  }
}

TEST_CASE("noisy clouds keep the clean mesh vertices covered") {
  // noise pushes data off the sheets; vertices stay on them, and a vertex can
  // land outside every data-grown patch
  for (std::uint64_t fixture_seed : {2ull, 3ull, 4ull}) {
    auto fx = make_annulus(800, 5e-4, fixture_seed);
    CoverParams prm;
    prm.P0 = 16;
    prm.seed = 1;
    auto cov = build_cover(fx.cloud, fx.mesh, prm);
    for (const auto& v : fx.mesh.vertices) {
      bool covered = false;
      for (const auto& p : cov.patches) covered = covered || p.contains(v);
      REQUIRE(covered);
    }
  }
}
