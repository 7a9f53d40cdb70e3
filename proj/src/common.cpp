#include "awf/common.hpp"

#include <gsl/gsl_integration.h>

#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

namespace awf {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::PointOutsideDomain: return "PointOutsideDomain";
    case ErrorKind::BoundViolated: return "BoundViolated";
    case ErrorKind::DomainExit: return "DomainExit";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::TrappedOrbit: return "TrappedOrbit";
    case ErrorKind::FitDiverged: return "FitDiverged";
    case ErrorKind::Inconclusive: return "Inconclusive";
    case ErrorKind::NoAdmissibleR: return "NoAdmissibleR";
    case ErrorKind::NewtonDiverged: return "NewtonDiverged";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::LimitUnstable: return "LimitUnstable";
    case ErrorKind::UnresolvedIntegrand: return "UnresolvedIntegrand";
    case ErrorKind::FitDegenerate: return "FitDegenerate";
    case ErrorKind::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorKind::CertificateFailed: return "CertificateFailed";
    case ErrorKind::MarginViolated: return "MarginViolated";
    case ErrorKind::BandUnderflow: return "BandUnderflow";
    case ErrorKind::WaveHitSponge: return "WaveHitSponge";
    case ErrorKind::StepSolverDiverged: return "StepSolverDiverged";
    case ErrorKind::InconclusiveGap: return "InconclusiveGap";
    case ErrorKind::RateTooSlow: return "RateTooSlow";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;
  auto rule = std::make_unique<GaussRule>();
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(static_cast<size_t>(n));
  rule->x.resize(n);
  rule->w.resize(n);
  for (int i = 0; i < n; ++i) gsl_integration_glfixed_point(-1.0, 1.0, i, &rule->x[i], &rule->w[i], t);
  gsl_integration_glfixed_table_free(t);
  auto& ref = *rule;
  cache.emplace(n, std::move(rule));
  return ref;
}

LinearFit least_squares(const std::vector<std::vector<double>>& design, const std::vector<double>& y) {
  const int m = static_cast<int>(y.size());
  if (m == 0 || design.size() != y.size()) fail(ErrorKind::FitDegenerate, "empty or mismatched design");
  const int p = static_cast<int>(design[0].size());
  Eigen::MatrixXd A(m, p);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < p; ++j) A(i, j) = design[i][j];
    b(i) = y[i];
  }
  Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  LinearFit out;
  out.coef.assign(c.data(), c.data() + p);
  Eigen::VectorXd r = b - A * c;
  out.residual.assign(r.data(), r.data() + m);
  out.max_abs_residual = r.cwiseAbs().maxCoeff();
  const double mean = b.mean();
  const double ss_tot = (b.array() - mean).square().sum();
  const double ss_res = r.squaredNorm();
  out.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return out;
}

LinearFit line_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::vector<double>> d(x.size());
  for (size_t i = 0; i < x.size(); ++i) d[i] = {1.0, x[i]};
  return least_squares(d, y);
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = a;
    return v;
  }
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

std::vector<double> logspace(double a, double b, int n) {
  std::vector<double> v = linspace(std::log(a), std::log(b), n);
  for (double& t : v) t = std::exp(t);
  return v;
}

std::vector<std::vector<double>> sobol_points(int count, int dim) {
  boost::random::sobol gen(static_cast<std::size_t>(dim));
  const double scale = 1.0 / (static_cast<double>(gen.max()) + 1.0);
  gen.discard(static_cast<std::uintmax_t>(dim));  // drop the origin
  std::vector<std::vector<double>> pts(count, std::vector<double>(dim));
  for (auto& p : pts)
    for (auto& c : p) c = static_cast<double>(gen()) * scale;
  return pts;
}

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

int thread_count() {
  if (const char* env = std::getenv("AWF_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int n, const std::function<void(int)>& body) {
  const int nt = std::min(thread_count(), n);
  if (nt <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(nt);
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < n; i += nt) body(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace awf
