#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace awf {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

// Small fixed-capacity vectors: n <= kMaxDim keeps everything on the stack.
inline constexpr int kMaxDim = 4;
using CVec = Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using RVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using CMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using RMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

enum class ErrorKind {
  PointOutsideDomain,
  BoundViolated,
  DomainExit,
  StepFailure,
  TrappedOrbit,
  FitDiverged,
  Inconclusive,
  NoAdmissibleR,
  NewtonDiverged,
  PreconditionViolated,
  LimitUnstable,
  UnresolvedIntegrand,
  FitDegenerate,
  QuadratureNotConverged,
  CertificateFailed,
  MarginViolated,
  BandUnderflow,
  WaveHitSponge,
  StepSolverDiverged,
  InconclusiveGap,
  RateTooSlow,
  ConfigInvalid,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

// <x> = (1+|x|^2)^{1/2} with the complex modulus.
inline double japanese(double x) { return std::sqrt(1.0 + x * x); }
inline double japanese(const CVec& x) { return std::sqrt(1.0 + x.squaredNorm()); }
inline double japanese(const RVec& x) { return std::sqrt(1.0 + x.squaredNorm()); }

// Weight of the Sjostrand space H_{Phi0}: |Im z|^2/2.
inline double phi0(cplx z) { return 0.5 * z.imag() * z.imag(); }

// Gauss-Legendre nodes/weights on [-1,1].
struct GaussRule {
  std::vector<double> x, w;
};
const GaussRule& gauss_legendre(int n);

// Least squares y ~ sum_k c_k f_k(x). Returns coefficients and residuals.
struct LinearFit {
  std::vector<double> coef;
  std::vector<double> residual;
  double max_abs_residual = 0.0;
  double r2 = 1.0;
};
LinearFit least_squares(const std::vector<std::vector<double>>& design, const std::vector<double>& y);

// Straight-line fit y = a + b x.
LinearFit line_fit(const std::vector<double>& x, const std::vector<double>& y);

std::vector<double> linspace(double a, double b, int n);
std::vector<double> logspace(double a, double b, int n);

// Deterministic quasi-random points in [0,1)^d (Sobol sequence).
std::vector<std::vector<double>> sobol_points(int count, int dim);

// Thread count from AWF_THREADS (default: hardware concurrency).
int thread_count();

// FFTW plan creation is not thread-safe; every module plans under this lock.
std::mutex& fftw_planner_mutex();

// Static-partition parallel map over [0,n); results are independent of the thread count.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace awf
