#pragma once

#include "awf/common.hpp"

#include <functional>
#include <string>
#include <vector>

namespace awf {

// A function on the real line given by a closed-form evaluator. breakpoints mark points where u is
// not analytic; max_frequency bounds |xi| for oscillations e^{i y xi / h}.
struct LineFunction {
  std::function<cplx(double)> f;
  std::vector<double> breakpoints;
  double lo = -1e300, hi = 1e300;  // support
  double max_frequency = 0.0;
};

// Samples u(y0 + k dy).
struct SampledLine {
  double y0 = 0.0, dy = 0.0;
  std::vector<cplx> values;
};

// Values of T u stored with the weight removed: e^{-Phi0(z)/h} T u(z, h).
struct FBIField {
  std::vector<cplx> z;
  std::vector<double> h;
  std::vector<std::vector<cplx>> weighted;  // [z][h]

  cplx value(size_t iz, size_t ih) const;
  double weighted_magnitude(size_t iz, size_t ih) const { return std::abs(weighted[iz][ih]); }
  void write_csv(const std::string& path) const;
};

struct BargmannOptions {
  double tail = 9.0;       // half-width of the y window in units of sqrt(h)
  int panel_nodes = 20;
};

// T u(z, h) = int e^{-(z-y)^2/2h} u(y) dy, returned as e^{-Phi0(z)/h} T u.
cplx bargmann_weighted(const LineFunction& u, cplx z, double h, const BargmannOptions& opt = {});
cplx bargmann_weighted(const SampledLine& u, cplx z, double h);
FBIField bargmann(const LineFunction& u, const std::vector<cplx>& z_grid, const std::vector<double>& h_ladder,
                  const BargmannOptions& opt = {});
// Throws UnresolvedIntegrand if dy > sqrt(h)/8.
FBIField bargmann(const SampledLine& u, const std::vector<cplx>& z_grid, const std::vector<double>& h_ladder);

struct DecayPoint {
  cplx z;
  double delta = 0.0;  // e^{-Phi0/h}|Tu| ~ C h^p e^{-delta/h}
  double r2 = 1.0;
  double log_power = 0.0;  // fitted p
};

struct DecayEstimate {
  std::vector<DecayPoint> points;
  double threshold = 0.02;
  double radius = 0.1;

  // min of delta over points within radius of z.
  double min_delta_near(cplx z) const;
  bool regular_at(double x, double xi) const { return min_delta_near(cplx(x, -xi)) >= threshold; }
  void write_csv(const std::string& path) const;
};

// Per z: least squares of ln|weighted| against (1, ln h, 1/h); delta is minus the 1/h coefficient.
// Needs >= 4 ladder points spanning an octave. Underflowed values give delta = +inf with r2 = 1.
DecayEstimate decay_rate(const FBIField& field, double threshold = 0.02, double radius = 0.1);

struct OpROptions {
  double R = 64.0;
  int radial_nodes = 48;
  int angular_nodes = 64;
  double rel_tol = 1e-8;  // refinement check, relative to e^{Phi0(z)/h} sup |a v e^{-Phi0/h}|
};

using Symbol2 = std::function<cplx(cplx z, cplx zeta)>;
using Holo = std::function<cplx(cplx)>;

// Op_R(a) v(z) over zeta = -Im z + iR conj(z - y), |z - y| < R^{-1/2}, n = 1.
// Throws QuadratureNotConverged if doubling both node counts moves the value by more than rel_tol.
cplx op_r_apply(const Symbol2& a, const Holo& v, cplx z, double h, const OpROptions& opt = {});

struct IntertwiningReport {
  std::vector<double> h;
  std::vector<double> sup_residual;  // max over the region of e^{-Phi0/h}|T(au) - Op_R(a~) T u|
  std::vector<double> rms_residual;
  double slope = 0.0;  // of ln rms against 1/h
};

// a~(z, zeta) = a(z + i zeta).
IntertwiningReport intertwining_residual(const Holo& a, const LineFunction& u, const std::vector<cplx>& z_region,
                                         const std::vector<double>& h_ladder, const OpROptions& opt = {});

}  // namespace awf
