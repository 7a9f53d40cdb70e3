#pragma once

#include "awf/common.hpp"

#include <map>
#include <string>

namespace awf {

// Closed-form analytic coefficient family. The built-in profiles are
//   metric:    a_jk = delta_jk + (eps_bump e^{-x^2} + eps_longrange <x>^{-sigma}) M_jk
//   drift:     a_j  = eps_drift x_j <x>^{-sigma}
//   potential: a_0  = eps_potential <x>^{2-sigma}
// with x^2 = sum x_j^2 (bilinear) and <x> = (1+x^2)^{1/2} on the principal branch.
struct MetricFamily {
  std::string name = "flat";
  double sigma = 0.5;
  double nu = 0.3;
  double C0 = 1.0;
  int dim = 1;
  double eps_bump = 0.0;
  double eps_longrange = 0.0;
  double eps_drift = 0.0;
  double eps_potential = 0.0;
  RMat shape;  // M, symmetric; identity if empty
  std::map<std::string, double> params;

  bool is_flat() const {
    return eps_bump == 0.0 && eps_longrange == 0.0 && eps_drift == 0.0 && eps_potential == 0.0;
  }
  // q depends on h only through the drift and potential terms.
  bool h_independent() const { return eps_drift == 0.0 && eps_potential == 0.0; }
};

// Built-in names: flat, metric_bump, drift, potential, metric_longrange.
MetricFamily make_family(const std::string& name, double eps = 0.1, double sigma = 0.5, double nu = 0.3,
                         int dim = 1);

// Validates parameters and sets C0 to the closed-form Assumption A bound.
void finalize_family(MetricFamily& fam);

// Closed-form C0 such that the three bounds hold on all of Gamma_nu.
double closed_form_C0(const MetricFamily& fam);

struct Coeffs {
  CMat a;   // a_{jk}
  CVec b;   // a_j
  cplx c;   // a_0
};

struct CoeffsWithGrad {
  Coeffs v;
  CMat da[kMaxDim];  // d_l a_{jk}
  CVec db[kMaxDim];  // d_l a_j
  CVec dc;           // d_l a_0
};

bool in_domain(const MetricFamily& fam, const CVec& x, double safety = 0.9);

// Throws PointOutsideDomain if |Im x| >= safety * nu <Re x>.
Coeffs eval_coeffs(const MetricFamily& fam, const CVec& x, double safety = 0.9);
Coeffs eval_coeffs_unchecked(const MetricFamily& fam, const CVec& x);
CoeffsWithGrad eval_coeffs_grad(const MetricFamily& fam, const CVec& x);

struct SymbolPoint {
  CVec x;
  CVec xi;
  double h = 0.1;
};

// Components q0 = 1/2 a xi.xi, q1 = a_j xi_j, q2 = a_0.
struct QParts {
  cplx q0, q1, q2;
};
QParts q_parts(const MetricFamily& fam, const CVec& x, const CVec& xi);
cplx q_total(const MetricFamily& fam, const SymbolPoint& pt);
cplx q_total(const MetricFamily& fam, const CVec& x, const CVec& xi, double h);

// q_order(z + i zeta, zeta).
cplx tilde_q(const MetricFamily& fam, const CVec& z, const CVec& zeta, int order);

// Gradients of q in x and xi (bilinear, no conjugation).
struct QGrad {
  cplx q;
  CVec dx;
  CVec dxi;
};
QGrad q_grad(const MetricFamily& fam, const CVec& x, const CVec& xi, double h);

// Scalar n = 1 conveniences.
cplx q_total1(const MetricFamily& fam, cplx x, cplx xi, double h);
QGrad q_grad1(const MetricFamily& fam, cplx x, cplx xi, double h);
CVec vec1(cplx v);

struct AssumptionGrid {
  int points_per_axis = 40;
  double R_max = 50.0;
  double safety = 0.9;
};

struct AssumptionReport {
  double ratio_metric = 0.0;
  double ratio_drift = 0.0;
  double ratio_potential = 0.0;
  double min_eigenvalue = 0.0;
  double max_imag_on_real = 0.0;
  double worst_ratio = 0.0;
  CVec worst_point;
  int samples = 0;
  bool pass = true;
};

// Sampled check over Gamma_{safety*nu}; throws BoundViolated on failure.
AssumptionReport check_assumption_a(const MetricFamily& fam, const AssumptionGrid& grid = {});
// Same sampling without throwing.
AssumptionReport sample_assumption_a(const MetricFamily& fam, const AssumptionGrid& grid = {});

}  // namespace awf
