#pragma once

#include "pumice/common.hpp"
#include "pumice/cover.hpp"
#include "pumice/geometry.hpp"
#include "pumice/halton.hpp"
#include "pumice/kdtree.hpp"
#include "pumice/kernels.hpp"
#include "pumice/local_system.hpp"
#include "pumice/weights.hpp"

#include <json.hpp>

#include <fstream>
#include <memory>

namespace pumice {

struct ReconstructionParams {
  int n = 21;          // local centers per patch
  int P0 = 12;         // initial patch count before volume refinement
  double delta0 = 0.25;
  double H_s = 1.0;
  double R_s = 0.0;    // 0 requests calibration: R0 = 1 for this run
  double epsilon = 1.0;
  double rho = 0.25;   // outside-data reach, in units of the data spacing h
  double alpha = 0.5;  // interior-condition clearance, in units of the node spacing h'
  KernelFamily family = KernelFamily::Multiquadric;
  int poly_degree = -1;  // -1 = plain kernel basis
  std::uint64_t seed = 0;
  int max_rounds = 20;
  double cond_limit = 1e14;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const {
    require(n >= 1, ErrorCode::InvalidArgument, "need at least one local center");
    require(P0 >= 1, ErrorCode::InvalidArgument, "need at least one patch");
    require(delta0 > 0.0 && delta0 < 1.0, ErrorCode::InvalidArgument, "delta0 must be in (0,1)");
    require(H_s > 0.0 && R_s >= 0.0, ErrorCode::InvalidArgument, "scale factors must be positive");
    require(epsilon > 0.0, ErrorCode::InvalidArgument, "shape parameter must be positive");
    require(rho >= 0.0 && alpha >= 0.0, ErrorCode::InvalidArgument,
            "reach and clearance factors must be nonnegative");
    require(poly_degree >= -1, ErrorCode::InvalidArgument, "polynomial degree below -1");
  }
};

// Distance from x to the closed patch cylinder; zero on the boundary and inside.
template <int D>
double patch_outside_distance(const Patch<D>& p, const Vec<D>& x) {
  Vec<D> hat = p.to_local(x);
  double dr = std::max(hat.template head<D - 1>().norm() - p.radius, 0.0);
  double da = std::max(std::abs(hat[D - 1] - p.zmid()) - 0.5 * p.height(), 0.0);
  return std::hypot(dr, da);
}

// Local condition set: the patch members plus every outside data point within
// distance rho*h of the patch cylinder. Members first, then the extension,
// both in cloud order.
template <int D>
std::vector<int> collect_local_data(const Patch<D>& p, const OrientedPointCloud<D>& cloud,
                                    const KdTree<D>& tree, double rho, double h) {
  require(!p.members.empty(), ErrorCode::EmptyPatch, "patch holds no data points");
  std::vector<int> out = p.members;
  double reach = rho * h;
  std::vector<int> candidates = tree.radius(p.bounding_center(), p.bounding_radius() + reach);
  for (int i : candidates) {
    if (std::binary_search(p.members.begin(), p.members.end(), i)) continue;
    if (patch_outside_distance(p, cloud.points[i]) <= reach) out.push_back(i);
  }
  return out;
}

// Nodes on the reference cylinder surface with spacing close to the mean
// nearest-neighbor distance h' of the interior nodes. 2d: the rectangle
// perimeter. 3d: a golden-angle spiral on the mantle and concentric rings on
// the two caps.
template <int D>
std::vector<Vec<D>> reference_boundary_shell(const ReferenceNodeSet<D>& nodes) {
  static_assert(D == 2 || D == 3);
  const double R0 = nodes.R0, H0 = nodes.H0;
  double hp = nodes.h_prime;
  if (!(hp > 0.0)) hp = std::min(R0, H0);
  std::vector<Vec<D>> shell;
  if constexpr (D == 2) {
    int kx = std::max(1, static_cast<int>(std::lround(2.0 * R0 / hp)));
    int kz = std::max(1, static_cast<int>(std::lround(H0 / hp)));
    for (int i = 0; i <= kx; ++i) {
      double x = -R0 + 2.0 * R0 * i / kx;
      shell.push_back(Vec<2>{x, -0.5 * H0});
      shell.push_back(Vec<2>{x, 0.5 * H0});
    }
    for (int i = 1; i < kz; ++i) {
      double z = -0.5 * H0 + H0 * i / kz;
      shell.push_back(Vec<2>{-R0, z});
      shell.push_back(Vec<2>{R0, z});
    }
  } else {
    int nm = std::max(1, static_cast<int>(std::lround(2.0 * pi * R0 * H0 / (hp * hp))));
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < nm; ++i) {
      double z = -0.5 * H0 + H0 * (i + 0.5) / nm;
      double th = golden * i;
      shell.push_back(Vec<3>{R0 * std::cos(th), R0 * std::sin(th), z});
    }
    int kr = std::max(1, static_cast<int>(std::lround(R0 / hp)));
    for (double z : {-0.5 * H0, 0.5 * H0}) {
      shell.push_back(Vec<3>{0.0, 0.0, z});
      for (int k = 1; k <= kr; ++k) {
        double r = R0 * k / kr;
        int np = std::max(4, static_cast<int>(std::lround(2.0 * pi * r / hp)));
        for (int t = 0; t < np; ++t) {
          double th = 2.0 * pi * t / np;
          shell.push_back(Vec<3>{r * std::cos(th), r * std::sin(th), z});
        }
      }
    }
  }
  return shell;
}

template <int D>
struct StabilizerSet {
  std::vector<Vec<D>> ref;       // reference-patch coordinates
  std::vector<Vec<D>> physical;  // the same points mapped back to physical space
  Eigen::VectorXd target;        // signed normal offset to the nearest data point
  int boundary_count = 0;        // leading entries lie on the reference boundary shell

  int size() const { return static_cast<int>(ref.size()); }
};

// Off-surface conditions for one patch: the boundary shell plus every interior
// center farther than alpha*h' from the mapped local data. Each point gets the
// target (y - y_pi) . n_pi with pi the nearest data point in the whole cloud.
template <int D>
StabilizerSet<D> stabilizer_points(const Patch<D>& p, const ReferenceNodeSet<D>& nodes,
                                   const OrientedPointCloud<D>& cloud, const KdTree<D>& tree,
                                   double alpha, const std::vector<int>& local_data) {
  StabilizerSet<D> out;
  out.ref = reference_boundary_shell(nodes);
  out.boundary_count = static_cast<int>(out.ref.size());

  std::vector<Vec<D>> mapped;
  mapped.reserve(local_data.size());
  for (int i : local_data) mapped.push_back(p.to_reference(cloud.points[i]));
  double clearance = alpha * nodes.h_prime;
  for (const Vec<D>& c : nodes.nodes) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec<D>& m : mapped) best = std::min(best, (c - m).norm());
    if (best > clearance) out.ref.push_back(c);
  }

  out.physical.reserve(out.ref.size());
  out.target.resize(static_cast<int>(out.ref.size()));
  for (int k = 0; k < static_cast<int>(out.ref.size()); ++k) {
    Vec<D> y = p.from_reference(out.ref[k]);
    out.physical.push_back(y);
    int pix = tree.nearest(y);
    out.target[k] = (y - cloud.points[pix]).dot(cloud.normals[pix]);
  }
  return out;
}

struct LocalLs {
  Eigen::MatrixXd rows;  // acts on the patch nodal values
  Eigen::VectorXd rhs;
};

// Least-squares rows for one patch, in nodal form. Blocks in order: zero-value
// conditions at the local data, unit normal-derivative conditions at the same
// points, then the stabilizer values.
template <int D>
LocalLs assemble_local_ls(const Patch<D>& p, const OrientedPointCloud<D>& cloud,
                          const std::vector<int>& data, const StabilizerSet<D>& stab,
                          const LocalSystem<D>& sys) {
  const int m = static_cast<int>(data.size());
  const int e = stab.size();
  const int n = sys.size(), width = n + sys.poly_size();
  require(2 * m + e >= n, ErrorCode::Underdetermined,
          "local problem has " + std::to_string(2 * m + e) + " rows for " + std::to_string(n) +
              " unknowns");

  Eigen::MatrixXd full(2 * m + e, width);
  LocalLs ls;
  ls.rhs.resize(2 * m + e);
  for (int i = 0; i < m; ++i) {
    Vec<D> xp = p.to_reference(cloud.points[data[i]]);
    full.row(i) = sys.value_row(xp);
    ls.rhs[i] = 0.0;
    // n^T Q S grad' = (S Q^T n)^T grad'
    Vec<D> coef = p.scale.cwiseProduct(p.rotation.transpose() * cloud.normals[data[i]]);
    full.row(m + i) = coef.transpose() * sys.gradient_rows(xp);
    ls.rhs[m + i] = 1.0;
  }
  for (int k = 0; k < e; ++k) {
    full.row(2 * m + k) = sys.value_row(stab.ref[k]);
    ls.rhs[2 * m + k] = stab.target[k];
  }
  ls.rows = sys.nodal_rows(full);
  return ls;
}

template <int D>
struct LevelSetJet {
  double value = 0.0;
  Vec<D> grad = Vec<D>::Zero();
  Mat<D> hess = Mat<D>::Zero();
};

// Global level-set function ell(x) = sum_j w_j(x) gamma_j(T_j(x)). Immutable
// after construction; evaluation is defined exactly on the patch union.
template <int D>
class LevelSet {
 public:
  LevelSet(Cover<D> cover, Kernel kernel, ReferenceNodeSet<D> nodes, Eigen::MatrixXd nodal,
           double data_spacing, int poly_degree = -1, double cond_limit = 1e14)
      : cover_(std::make_shared<Cover<D>>(std::move(cover))),
        weights_(*cover_, GeneratorKind::BumpCInf),
        system_(kernel, std::move(nodes), poly_degree, cond_limit),
        u_(std::move(nodal)),
        data_spacing_(data_spacing) {
    require(u_.rows() == system_.size() && u_.cols() == cover_->patch_count(),
            ErrorCode::DimensionMismatch, "nodal value matrix does not match cover and nodes");
    require(u_.allFinite(), ErrorCode::SolverBreakdown, "nodal values are not finite");
    lam_ = system_.coefficients_from_nodal(u_);
  }

  const Cover<D>& cover() const { return *cover_; }
  const WeightField<D>& weights() const { return weights_; }
  const Kernel& kernel() const { return system_.kernel(); }
  const ReferenceNodeSet<D>& nodes() const { return system_.nodes(); }
  const LocalSystem<D>& system() const { return system_; }
  const Eigen::MatrixXd& nodal_values() const { return u_; }
  double data_spacing() const { return data_spacing_; }
  std::vector<std::string>& warnings() { return warnings_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  LevelSetJet<D> eval(const Vec<D>& x, int order = 2) const {
    auto terms = weights_.eval(x, order);
    LevelSetJet<D> out;
    for (const auto& t : terms) {
      const Patch<D>& p = cover_->patches[t.patch];
      auto loc = system_.eval_expansion(lam_.col(t.patch), p.to_reference(x), order);
      out.value += t.w * loc.value;
      if (order >= 1) {
        Pushforward<D> pf = pushforward_derivatives(p, loc.grad, loc.hess);
        out.grad += t.grad * loc.value + t.w * pf.grad;
        if (order >= 2)
          out.hess += t.hess * loc.value + t.grad * pf.grad.transpose() +
                      pf.grad * t.grad.transpose() + t.w * pf.hess;
      }
    }
    return out;
  }

  double value(const Vec<D>& x) const { return eval(x, 0).value; }

 private:
  std::shared_ptr<const Cover<D>> cover_;  // stable address, shared by copies
  WeightField<D> weights_;
  LocalSystem<D> system_;
  Eigen::MatrixXd u_;    // nodal values, one column per patch
  Eigen::MatrixXd lam_;  // expansion coefficients, derived from u_
  double data_spacing_ = 0.0;
  std::vector<std::string> warnings_;
};

template <int D>
LevelSetJet<D> eval_levelset(const LevelSet<D>& ls, const Vec<D>& x, int order = 2) {
  return ls.eval(x, order);
}

// Build the cover, then fit every patch independently: zero values and unit
// normal derivatives at the local data, plus stabilizer values away from the
// surface. Deterministic for fixed params.
template <int D>
LevelSet<D> solve_reconstruction(const OrientedPointCloud<D>& cloud, const SurfaceMesh<D>& mesh,
                                 const ReconstructionParams& prm) {
  prm.validate();
  CoverParams cp;
  cp.P0 = prm.P0;
  cp.delta0 = prm.delta0;
  cp.R_s = prm.R_s;
  cp.H_s = prm.H_s;
  cp.seed = prm.seed;
  cp.max_rounds = prm.max_rounds;
  Cover<D> cover = build_cover(cloud, mesh, cp);

  int min_members = std::numeric_limits<int>::max();
  for (int j = 0; j < cover.patch_count(); ++j) {
    require(!cover.patches[j].members.empty(), ErrorCode::EmptyPatch,
            "patch " + std::to_string(j) + " holds no data points");
    min_members = std::min(min_members, static_cast<int>(cover.patches[j].members.size()));
  }
  require(prm.n <= 2 * min_members, ErrorCode::OversamplingViolated,
          "n = " + std::to_string(prm.n) + " exceeds the oversampling bound 2*min_j m_j = " +
              std::to_string(2 * min_members));

  double h = mean_spacing(cloud.points);
  ReferenceNodeSet<D> nodes = make_reference_nodes<D>(prm.n, cover.R0, cover.H0);
  Kernel kernel{prm.family, prm.epsilon};
  LocalSystem<D> sys(kernel, nodes, prm.poly_degree, prm.cond_limit);
  KdTree<D> tree(cloud.points);

  const int P = cover.patch_count();
  Eigen::MatrixXd u(prm.n, P);
  std::vector<std::string> patch_warnings(P);
  parallel_for(P, prm.threads <= 0 ? static_cast<int>(std::thread::hardware_concurrency()) : prm.threads,
               [&](std::size_t j) {
                 const Patch<D>& p = cover.patches[j];
                 try {
                   std::vector<int> data = collect_local_data(p, cloud, tree, prm.rho, h);
                   StabilizerSet<D> stab = stabilizer_points(p, nodes, cloud, tree, prm.alpha, data);
                   LocalLs ls = assemble_local_ls(p, cloud, data, stab, sys);
                   Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ls.rows);
                   if (qr.rank() < prm.n)
                     patch_warnings[j] = "patch " + std::to_string(j) + ": rank " +
                                         std::to_string(qr.rank()) + " < " + std::to_string(prm.n) +
                                         ", solution truncated";
                   u.col(j) = qr.solve(ls.rhs);
                   require(u.col(j).allFinite(), ErrorCode::SolverBreakdown,
                           "local solve produced non-finite values");
                 } catch (const Error& err) {
                   std::string what = err.what();
                   std::size_t cut = what.find(": ");
                   if (cut != std::string::npos) what = what.substr(cut + 2);
                   throw Error(err.code(), "patch " + std::to_string(j) + ": " + what);
                 }
               });

  LevelSet<D> ls(std::move(cover), kernel, std::move(nodes), std::move(u), h, prm.poly_degree,
                 prm.cond_limit);
  for (auto& w : patch_warnings)
    if (!w.empty()) ls.warnings().push_back(std::move(w));
  return ls;
}

// Artifact layout: <prefix>.json carries the cover and scalar metadata,
// <prefix>.bin the node coordinates and nodal values as little-endian doubles.
template <int D>
void save_levelset(const LevelSet<D>& ls, const std::string& prefix) {
  const auto& nodes = ls.nodes();
  const int n = nodes.size(), P = ls.cover().patch_count();

  nlohmann::json j;
  j["dimension"] = D;
  j["kernel"] = {{"family", kernel_name(ls.kernel().family)}, {"epsilon", ls.kernel().eps}};
  j["nodes"] = {{"count", n}, {"R0", nodes.R0}, {"H0", nodes.H0}};
  j["poly_degree"] = ls.system().poly_degree();
  j["data_spacing"] = ls.data_spacing();
  j["patch_count"] = P;
  j["cover"] = cover_to_json(ls.cover());

  std::ofstream jf(prefix + ".json");
  require(jf.good(), ErrorCode::IoError, "cannot write " + prefix + ".json");
  jf << j.dump(2) << '\n';
  require(jf.good(), ErrorCode::IoError, "write failed on " + prefix + ".json");

  std::ofstream bf(prefix + ".bin", std::ios::binary);
  require(bf.good(), ErrorCode::IoError, "cannot write " + prefix + ".bin");
  auto put = [&](const double* ptr, std::size_t count) {
    bf.write(reinterpret_cast<const char*>(ptr), static_cast<std::streamsize>(count * sizeof(double)));
  };
  for (const Vec<D>& x : nodes.nodes) put(x.data(), D);
  put(ls.nodal_values().data(), static_cast<std::size_t>(n) * P);  // column-major
  require(bf.good(), ErrorCode::IoError, "write failed on " + prefix + ".bin");
}

template <int D>
LevelSet<D> load_levelset(const std::string& prefix) {
  std::ifstream jf(prefix + ".json");
  require(jf.good(), ErrorCode::IoError, "cannot read " + prefix + ".json");
  nlohmann::json j;
  try {
    jf >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad levelset artifact: ") + e.what());
  }
  require(j.value("dimension", 0) == D, ErrorCode::DimensionMismatch,
          "artifact dimension does not match");
  Kernel kernel{kernel_from_name(j.at("kernel").at("family").get<std::string>()),
                j.at("kernel").at("epsilon").get<double>()};
  const int n = j.at("nodes").at("count").get<int>();
  const double R0 = j.at("nodes").at("R0").get<double>();
  const double H0 = j.at("nodes").at("H0").get<double>();
  const int P = j.at("patch_count").get<int>();
  Cover<D> cover = cover_from_json<D>(j.at("cover"));
  require(cover.patch_count() == P, ErrorCode::ParseError, "patch count does not match cover");

  std::ifstream bf(prefix + ".bin", std::ios::binary);
  require(bf.good(), ErrorCode::IoError, "cannot read " + prefix + ".bin");
  auto get = [&](double* ptr, std::size_t count) {
    bf.read(reinterpret_cast<char*>(ptr), static_cast<std::streamsize>(count * sizeof(double)));
    require(bf.gcount() == static_cast<std::streamsize>(count * sizeof(double)), ErrorCode::IoError,
            "levelset artifact truncated");
  };
  std::vector<Vec<D>> coords(n);
  for (auto& x : coords) get(x.data(), D);
  Eigen::MatrixXd u(n, P);
  get(u.data(), static_cast<std::size_t>(n) * P);

  return LevelSet<D>(std::move(cover), kernel, reference_nodes_from<D>(std::move(coords), R0, H0),
                     std::move(u), j.value("data_spacing", 0.0), j.value("poly_degree", -1));
}

}  // namespace pumice
