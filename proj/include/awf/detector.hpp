#pragma once

#include "awf/modevol.hpp"
#include "awf/schrodinger.hpp"
#include "awf/wave_ops.hpp"

#include <optional>
#include <string>
#include <vector>

namespace awf {

// Built-in initial data with a single non-analytic point at `center`:
//   heaviside: H(x - c) e^{-(x-c)^2 / 2w^2}
//   kink:      |x - c| e^{-(x-c)^2 / 2w^2}
//   gaussian:  e^{-(x-c)^2 / 2w^2 + i k x}  (analytic everywhere)
enum class U0Kind { Heaviside, Kink, Gaussian };

const char* to_string(U0Kind k);
U0Kind u0_kind_from_string(const std::string& s);

struct U0Descriptor {
  U0Kind kind = U0Kind::Heaviside;
  double center = 0.0;
  double width = 1.0;
  double frequency = 0.0;  // gaussian only

  LineFunction line() const;
  Sampler sampler() const;
};

struct DetectorOptions {
  double threshold = 0.05;  // delta*: regular iff delta >= threshold
  double radius = 0.1;      // neighbourhood of the read-out point
  int rings = 2;            // sample points: centre plus rings of 6 k points at k radius / rings
  // Pass band chi(h xi) of the right-hand side: 0 below low_edge delta0, 1 on
  // [low_full delta0, high_full], 0 above high_edge.
  double low_edge = 1.5, low_full = 2.5;
  double high_full = 2.0, high_edge = 2.6;
  double lowpass_margin = 1.5;  // u0 is low-passed to |k| <= margin * high_edge / h_min before propagation
  double wave_T = 1.0;          // horizon of the wave operator ladder
  std::vector<double> wave_ladder = {0.1, 0.05, 0.025, 0.0125};
  // dt cap and layer settings; L and N are sized per scenario. The cap is ignored on the flat family,
  // where the interaction-picture step is exact.
  PropagatorConfig propagator = [] {
    PropagatorConfig c;
    c.dt = 6e-5;
    return c;
  }();
  bool verify_propagation = true;  // Richardson check of the propagated data
  double richardson_tol = 1e-6;
  double drift_tol = 1e-8;
  bool throw_on_gap = true;
};

struct Scenario {
  std::string name;
  MetricFamily family;
  U0Descriptor u0;
  double x0 = 0.0, xi0 = 1.0;  // seed
  double t = 0.5;
  std::vector<double> h_ladder = {0.16, 0.12, 0.09, 0.06, 0.04};
  double delta0 = 0.1;
  std::optional<bool> expected_verdict;  // true iff the seed is outside WF_a(u0)
  bool time_reversal = false;
};

struct PropagationSummary {
  double L = 0.0, dt = 0.0;
  int N = 0, steps = 0;
  double norm_drift = 0.0, energy_drift = 0.0, sponge_peak = 0.0;
  double richardson = -1.0;  // -1 when not run
  bool pass = false;
};

struct VerdictRecord {
  std::string scenario;
  double x0 = 0.0, xi0 = 0.0;
  cplx lhs_point;  // x0 - i xi0
  cplx z_plus;
  double xi_plus = 0.0;
  double wave_error = 0.0;
  double lhs_delta = 0.0, rhs_delta = 0.0;
  double threshold = 0.0;
  bool lhs_regular = false, rhs_decays = false, agree = false;
  bool inconclusive = false;
  std::optional<bool> expected;
  bool matches_expected = true;
  // Both regular: min delta / threshold. Otherwise threshold / max(max delta, threshold / 16).
  double delta_gap = 0.0;
  DecayEstimate lhs_map, rhs_map;
  PropagationSummary propagation;
  std::string reference;  // R and delta of the reference ray
};

// Points around c: centre plus `rings` hexagonal rings out to radius.
std::vector<cplx> disc_points(cplx c, double radius, int rings);

// e^{-itH} u0 prepared for the multiplier: low-passed, propagated and verified.
struct PropagatedData {
  SampledLine u;
  PropagationSummary summary;
};
PropagatedData propagate_for_detector(const Scenario& sc, const DetectorOptions& opt = {});

// Weighted G0(t/h) T(chi(hD) u) on z_grid for every h of the ladder; phases[k] serves h_ladder[k].
FBIField rhs_field(const std::vector<const PhaseW*>& phases, const SampledLine& u, double t,
                   const std::vector<double>& h_ladder, const std::vector<cplx>& z_grid, double delta0,
                   const DetectorOptions& opt = {});

// Throws PreconditionViolated (seed momentum), InconclusiveGap (when opt.throw_on_gap), and
// whatever the pipeline stages raise. `propagated`, when given, must come from propagate_for_detector(sc, opt).
VerdictRecord run_equivalence(const Scenario& sc, const DetectorOptions& opt = {},
                              const PropagatedData* propagated = nullptr);

void write_verdict_json(const VerdictRecord& v, const std::string& path);
std::string verdict_json(const VerdictRecord& v);

struct SymbolCheckReport {
  std::vector<double> s;
  std::vector<double> sup_l0;  // sup |l0| over the sample at each s
  double exponent = 0.0;       // fitted decay exponent; +inf if sup_l0 vanishes beyond two points
  double required = 0.0;      // 1 + sigma - 0.2
  double b0_mismatch = 0.0;    // |b0(cached phase) - b0(quadrature phase)| at zeta = -Im z
  bool superpolynomial = false;
  bool pass = false;
};

// l0(s, z, zeta; h) = q(z + i zeta + d W~(s, zeta), zeta; h) - q(d W(s, zeta), zeta; h) on points in
// the radius-0.05 ball around (z_plus, xi_plus). injected_shift adds c s to the first argument.
// Throws RateTooSlow.
SymbolCheckReport conjugated_symbol_check(const PhaseW& phase, const std::vector<double>& s_grid, cplx z_plus,
                                          double xi_plus, double injected_shift = 0.0, int samples = 64);

struct FactorizationReport {
  std::vector<double> h;
  std::vector<double> position_error;  // |x~ - d W~(t/h, xi~) - x_plus|
  std::vector<double> momentum_error;  // |xi~ - xi_plus|
  cplx z_plus;
  double kappa_defect = 0.0;  // |kappa(R(seed)) - (x_plus - i xi_plus)| at the smallest h, minus position/momentum
  bool cauchy = false;
};

// R_{t/h}(seed) along the ladder against the wave operator limit. Throws TrappedOrbit, LimitUnstable.
FactorizationReport flow_factorization_check(const MetricFamily& fam, const ReferenceConfig& cfg, double x0,
                                             double xi0, const std::vector<double>& h_ladder, double t);

}  // namespace awf
