#pragma once

#include "awf/fbi_quantize.hpp"
#include "awf/hj_phase.hpp"

#include <functional>
#include <string>
#include <vector>

namespace awf {

// y -> e^{-Phi0(y)/h} v(y) for a holomorphic v.
using WeightedHolo = std::function<cplx(cplx)>;

enum class ContourKind { G0, G1 };

// Contour for G0 (phase +W~) or G1 (phase -W~), n = 1, parametrized by (p, q) with
//   y = center + <s> p + i q,  |p| + |q| <= r,
// center = z +- d_eta W~(s, -Im z) and eta fixed by the contour equations.
struct ContourSpec {
  ContourKind kind = ContourKind::G0;
  double s = 0.0;
  cplx z;
  double r = 0.1;
  double A = 0.0;      // Hess W(s, -Im z)
  double js = 1.0;     // <s>
  double shift = 0.0;  // d_eta W~(s, -Im z)
  cplx center;
};

struct ContourPoint {
  cplx y, eta;
};

ContourSpec make_contour(const PhaseW& phase, ContourKind kind, double s, cplx z, double r);
ContourPoint contour_point(const ContourSpec& c, double p, double q);
// dy ^ deta = J dp dq on the contour (orientation fixed so that J = 2 at s = 0).
cplx contour_jacobian(const ContourSpec& c);

// Psi(y, eta) = Phi0(y) - Im((z - y) eta +- W~(s, eta)), W~ extended to complex eta to second order.
double psi(const PhaseW& phase, const ContourSpec& c, cplx y, cplx eta, double injected_slope = 0.0);

struct SaddleReport {
  cplx y;
  double eta = 0.0;
  double grad_norm = 0.0;   // |grad Psi| by finite differences in (Re y, Im y, Re eta, Im eta)
  double value_gap = 0.0;   // |Psi - Phi0(z)|
  double min_abs_eig = 0.0; // real 4x4 Hessian
  int positive = 0, negative = 0;
  bool pass = false;
};

// Critical point U_s^{-1}(z, -Im z). Throws PreconditionViolated if |Im z| <= delta0 and
// CertificateFailed if a gate fails.
SaddleReport saddle_certificate(const PhaseW& phase, double s, cplx z, double tol = 1e-8);

struct MarginReport {
  double delta = 0.0;            // inf of (Psi - Phi0) / -(p^2 + q^2) over interior samples
  double boundary_max = 0.0;     // sup of Psi - Phi0 on the boundary
  double r1 = 0.0;               // -boundary_max
  int samples = 0;
  double worst_p = 0.0, worst_q = 0.0;
};

// Throws MarginViolated with the offending sample.
MarginReport contour_margin(const PhaseW& phase, ContourKind kind, double s, cplx z, double r, int samples = 10000);

struct QuadOptions {
  double r = 0.0;       // contour size; 0 picks min(r_max, |Im z| - 1.25 delta0)
  double r_max = 1.5;
  int nodes = 10;       // Gauss-Legendre nodes per panel
  double v_scale = 1.0; // length over which v varies along Re y; p-panels are v_scale / <s> wide
  double rel_tol = 1e-6;
  bool check = true;    // refinement check with 2x nodes
  bool preflight = true;  // saddle and margin certificates before apply_G0 / apply_G1
  int margin_samples = 2000;
  double injected_slope = 0.0;  // adds c s to W~ in the phase
};

struct EvolvedField {
  FBIField field;
  double s = 0.0;
  std::string provenance;  // quadrature | multiplier
  void write_csv(const std::string& path) const;
};

// e^{-Phi0(z)/h} G v(z) by Gauss-Legendre over the contour, composite in p. Throws QuadratureNotConverged.
cplx contour_apply(const PhaseW& phase, ContourKind kind, const WeightedHolo& v, double s, cplx z, double h,
                   const QuadOptions& opt = {});
EvolvedField apply_G0(const PhaseW& phase, const WeightedHolo& v, double s, const std::vector<cplx>& z_grid, double h,
                      const QuadOptions& opt = {});
EvolvedField apply_G1(const PhaseW& phase, const WeightedHolo& v, double s, const std::vector<cplx>& z_grid, double h,
                      const QuadOptions& opt = {});

// Base point Z_s(z0) = z0 + d_eta W~(s, -Im z0).
cplx base_point(const PhaseW& phase, double s, cplx z0);

struct MultiplierOptions {
  double underflow_fraction = 0.01;  // spectral mass allowed below 3 delta0 / 2
  double negligible = 1e-11;         // bins below this fraction of the peak keep multiplier 1
  double injected_slope = 0.0;
};

// e^{+- i W~(s, hD)/h} u with a smooth switch to 1 on |xi| <= delta0 (width delta0/2).
// Throws BandUnderflow, PreconditionViolated (spectrum beyond the phase table).
SampledLine multiplier_apply(const PhaseW& phase, const SampledLine& u, double s, double h, int sign = +1,
                             const MultiplierOptions& opt = {});
EvolvedField apply_G0_multiplier(const PhaseW& phase, const SampledLine& u0, double s,
                                 const std::vector<cplx>& z_grid, double h, const MultiplierOptions& opt = {});

struct LadderReport {
  std::vector<double> h;
  std::vector<double> residual;  // weighted sup over the z sample
  std::vector<double> scale;     // weighted sup of the input over the same sample
  double slope = 0.0;            // ln residual against 1/h
};

// |G1(s) G0(s) v - v| on z points near Z_s(z0) with v = T u0: G0 by the multiplier, G1 by contour
// quadrature. u0_of_h supplies the sampled input per h.
LadderReport roundtrip_residual(const PhaseW& phase, const std::function<SampledLine(double)>& u0_of_h, double s,
                                const std::vector<cplx>& z_grid, const std::vector<double>& h_ladder,
                                const QuadOptions& opt = {});

struct EvolutionReport {
  std::vector<double> s;
  std::vector<double> residual;  // weighted sup of |ih d_s G0 v + (d_s W)(s, hD) G0 v|
  std::vector<double> scale;     // weighted sup of |G0 v|
  std::vector<double> floor;     // differencing floor (omega ds)^2/6 * h omega * scale, omega = max|d_s W|/h
  double ds = 0.0;
};

// Point z0 with Z_s(z0) = base, i.e. base - d_eta W~(s, -Im base).
cplx source_point(const PhaseW& phase, double s, cplx base);

// d_s by centred differences with step ds_factor * h, evaluated at source_point(s, base) + offsets.
// The symbol d_s W is q(x_hat, xi) from the eikonal; omega is taken over the band carrying the input.
EvolutionReport evolution_residual_multiplier(const PhaseW& phase, const SampledLine& u0,
                                              const std::vector<double>& s_grid, cplx base,
                                              const std::vector<cplx>& offsets, double h,
                                              double injected_slope = 0.0, double ds_factor = 0.005);
EvolutionReport evolution_residual_quadrature(const PhaseW& phase, const WeightedHolo& v,
                                              const std::vector<double>& s_grid, cplx base,
                                              const std::vector<cplx>& offsets, double h, const QuadOptions& opt = {},
                                              double ds_factor = 0.005);

// Weighted Bargmann transform of the packet e^{-(y-x1)^2/2 + i y xi1/h}, optionally after the free
// multiplier e^{i s xi^2 / 2h} (flat-family G0), in closed form.
cplx packet_transform_weighted(cplx z, double x1, double xi1, double h, double s = 0.0);

}  // namespace awf
