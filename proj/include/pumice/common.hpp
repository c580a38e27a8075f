#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pumice {

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;
template <int D>
using Mat = Eigen::Matrix<double, D, D>;

inline constexpr double pi = 3.14159265358979323846;

// Errors carry a code so the CLI can map them to exit codes without string
// matching. "data" errors are malformed or insufficient input, "numerical"
// errors are failures of the solvers/algorithms on valid input.
enum class ErrorCode {
  // data
  ParseError,
  MissingNormals,
  DimensionMismatch,
  AnnotationAmbiguous,
  DegenerateInput,
  MissingLabels,
  IoError,
  // numerical
  RankDeficient,
  IllConditioned,
  Underdetermined,
  EmptyPatch,
  OutsideCover,
  ProjectionDiverged,
  InsufficientSamples,
  SolverBreakdown,
  DivisionByZeroNorm,
  OversamplingViolated,
  // usage
  InvalidArgument,
};

enum class ErrorKind { Data, Numerical, Usage };

inline ErrorKind error_kind(ErrorCode c) {
  switch (c) {
    case ErrorCode::ParseError:
    case ErrorCode::MissingNormals:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::AnnotationAmbiguous:
    case ErrorCode::DegenerateInput:
    case ErrorCode::MissingLabels:
    case ErrorCode::IoError:
      return ErrorKind::Data;
    case ErrorCode::InvalidArgument:
      return ErrorKind::Usage;
    default:
      return ErrorKind::Numerical;
  }
}

inline const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingNormals: return "MissingNormals";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AnnotationAmbiguous: return "AnnotationAmbiguous";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::MissingLabels: return "MissingLabels";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::Underdetermined: return "Underdetermined";
    case ErrorCode::EmptyPatch: return "EmptyPatch";
    case ErrorCode::OutsideCover: return "OutsideCover";
    case ErrorCode::ProjectionDiverged: return "ProjectionDiverged";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::SolverBreakdown: return "SolverBreakdown";
    case ErrorCode::DivisionByZeroNorm: return "DivisionByZeroNorm";
    case ErrorCode::OversamplingViolated: return "OversamplingViolated";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

inline double sq(double x) { return x * x; }

// Measure of the cylindrical patch {||x_r|| <= R} x [0,H]:
// 2*R*H in 2d (rectangle), pi*R^2*H in 3d.
inline double cylinder_measure(int d, double R, double H) {
  double c = std::pow(pi, 0.5 * (d - 1)) / std::tgamma(0.5 * (d + 1));
  return c * std::pow(R, d - 1) * H;
}

// Chunked parallel loop; each index is visited exactly once and results must
// be written to disjoint slots so the outcome is independent of scheduling.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 0) threads = 1;
  std::size_t hw = std::thread::hardware_concurrency();
  std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), hw == 0 ? 1 : hw);
  nt = std::min(nt, count);
  if (nt <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::exception_ptr first_error;
  std::mutex err_mutex;
  for (std::size_t t = 0; t < nt; ++t) {
    pool.emplace_back([&, t]() {
      std::size_t lo = count * t / nt, hi = count * (t + 1) / nt;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace pumice
