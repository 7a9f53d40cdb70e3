#pragma once

#include "awf/hj_phase.hpp"

#include <string>
#include <vector>

namespace awf {

enum class Lemma { A1, A2 };

const char* to_string(Lemma l);

// One (t, s) cell of a deformation certificate.
struct DeformationRow {
  Lemma lemma = Lemma::A1;
  double t = 0.0, s = 0.0;
  double delta = 0.0;        // inf of -phase / norm over interior samples
  double delta_param = 0.0;  // A1: same with |y~|^2 + |z~|^2 as the norm; A2: unused
  double boundary_max = 0.0; // sup of the phase on the boundary of the deformed contour
  double containment = 0.0;  // A1: slack of the inclusion in the endpoint domains; A2: nu <Re w> - |Im w|
  double inclusion = 0.0;    // slack of the retained sub-contour inside the endpoint contours
  double coefficient_containment = 0.0;  // A2: same slack for w + i eta
  double complement_max = 0.0;  // t = 0, 1 only: sup of the phase off the retained sub-contour
  double endpoint_residual = 0.0;  // t = 0, 1 only: residual of the endpoint contour equations
  int samples = 0;
  int complement_samples = 0;
};

struct DeformationReport {
  Lemma lemma = Lemma::A1;
  std::vector<DeformationRow> rows;
  double delta_min = 0.0;
  double delta_spread = 1.0;  // max/min of delta over s, worst over t
  bool pass = false;
  std::string failure;

  // Columns: lemma,t,s,delta_hat,boundary_max,containment_margin
  void write_csv(const std::string& path) const;
};

// Lemma A1 works in the rescaled variables
//   eta~ = Re eta + Im z + i <s> Im eta,  y~ = <s>^{-1}(Re(y - z) - dW~(s, -Im z)) + i Im(y - z),
//   zeta~ = zeta + Im z,  z~ = z' - z,
// with the deformed family parametrized by (y~, z~), |y~| + |z~| < inner_fraction * r.
struct A1Options {
  double R = 64.0;          // contour parameter of Gamma_0 and Gamma_1
  double R_floor = 1.0;
  double r = 0.1;           // size of Gamma_0 and Gamma_1 in the tilde variables
  double inner_fraction = 0.25;
  int samples = 10000;      // per (t, s)
  int boundary_samples = 2000;
  int complement_samples = 2000;
  // Use the shift a_s of the displayed tilde form of Gamma_0 instead of the exact pull-back of
  // gamma(s, z'); the t = 0 endpoint then sits off Gamma_0 at order |z~|.
  bool displayed_shift = false;
  bool throw_on_failure = true;
};

struct A1Sample {
  cplx y, eta, z_prime, zeta;
  cplx eta_t, zeta_t;
  double phase = 0.0;  // Phi0(y) - Phi0(z) - Im((z - z') zeta + (z' - y) eta + W~(s, eta))
};

// The deformed contour point at (t, y~, z~).
A1Sample a1_point(const PhaseW& phase, double s, cplx z, double t, cplx y_t, cplx z_t, const A1Options& opt = {});

// Throws PreconditionViolated, MarginViolated.
DeformationReport certify_deformation_A1(const PhaseW& phase, const std::vector<double>& s_grid, cplx z,
                                         const std::vector<double>& t_grid, const A1Options& opt = {});

// Smallest R (to rel_tol, by bisection on [lo, hi]) for which the A1 certificate passes.
double critical_R(const PhaseW& phase, const std::vector<double>& s_grid, cplx z, const std::vector<double>& t_grid,
                  A1Options opt, double lo = 0.05, double hi = 8.0, double rel_tol = 0.01);

struct A2Options {
  double r = 0.1;    // size of Gamma' and Gamma'_1
  double r0 = 0.025;  // size of the retained sub-contours B_t
  double eps = 0.1;  // z ranges over Omega_s(z_plus, eps)
  int samples = 10000;  // per (t, s), spread over the sampled z
  int boundary_samples = 2000;
  int complement_samples = 2000;
  int w1_nodes = 6;  // Gauss-Legendre nodes for W~_1
  double newton_tol = 1e-13;
  int newton_max = 40;
  // Scale the j = 1 imaginary parts by rho_t as the rescaling maps require; the displayed
  // interpolation omits this factor.
  bool rho_on_limit = false;
  bool throw_on_failure = true;
};

// W~_1(s, zeta, eta) = int_0^1 dW~(s, t zeta + (1-t) eta) dt.
cplx wtilde1(const PhaseW& phase, double s, cplx zeta, cplx eta, int nodes = 6);

struct A2Sample {
  cplx zeta, eta;
  double phase = 0.0;  // Phi0(x) - Phi0(z) - Im((y - x) eta + (z - y) zeta)
  double norm = 0.0;   // rho_t^2 (|Re(z-y)|^2 + |Re(z-x)|^2) + |Im(z-y)|^2 + |Im(z-x)|^2
  cplx w;              // y + W~_1(s, zeta, eta)
};

// (F_0, G_0): solves the Gamma' equations for (zeta, eta) given (x, y). Throws NewtonDiverged.
std::pair<cplx, cplx> a2_solve_start(const PhaseW& phase, double s, cplx z, cplx x, cplx y, const A2Options& opt = {});
// (F_1, G_1) of Gamma'_1.
std::pair<cplx, cplx> a2_limit(cplx z, cplx x, cplx y);
A2Sample a2_point(const PhaseW& phase, double s, cplx z, double t, cplx x, cplx y, const A2Options& opt = {});

// z_plus is the base point; the certificate runs at z_plus and the four vertices of
// Omega_s(z_plus, eps). Throws PreconditionViolated, MarginViolated, DomainExit, NewtonDiverged.
DeformationReport certify_deformation_A2(const PhaseW& phase, const std::vector<double>& s_grid, cplx z_plus,
                                         const std::vector<double>& t_grid, const A2Options& opt = {});

}  // namespace awf
