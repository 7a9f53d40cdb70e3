#pragma once

#include "awf/symbols.hpp"

#include <string>
#include <vector>

namespace awf {

using State = Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, 2 * kMaxDim, 1>;

struct FlowOptions {
  double tol = 1e-10;
  double s_max = 1e4;
  double domain_safety = 0.9;
  long max_steps = 2000000;
  double min_step = 1e-12;
};

struct FlowSample {
  double s = 0.0;
  CVec x, xi;
};

// Accepted step with the Dormand-Prince continuous extension.
struct DenseStep {
  double s0 = 0.0, ds = 0.0;
  State r1, r2, r3, r4, r5;
};

class Trajectory {
 public:
  SymbolPoint start;
  int dim = 1;
  std::vector<FlowSample> samples;  // step endpoints, s strictly increasing
  std::vector<DenseStep> steps;
  double energy_drift = 0.0;  // max relative |q(s) - q(0)|
  double tol = 0.0;

  double s_end() const { return samples.empty() ? 0.0 : samples.back().s; }
  FlowSample at(double s) const;
};

// exp sH_q on [0, s_end].
Trajectory integrate_to(const MetricFamily& fam, const CVec& x0, const CVec& xi0, double h, double s_end,
                        const FlowOptions& opt = {});

// Endpoint of exp sH_q without dense output or energy bookkeeping.
std::pair<CVec, CVec> flow_state(const MetricFamily& fam, const CVec& x0, const CVec& xi0, double h, double s_end,
                                 const FlowOptions& opt = {});

// exp sH_q on [0, T/h]; requires T/h <= s_max.
Trajectory integrate_flow(const MetricFamily& fam, const SymbolPoint& start, double T, double h,
                          const FlowOptions& opt = {});

// Scalar n = 1 endpoint of the flow.
std::pair<cplx, cplx> flow_endpoint1(const MetricFamily& fam, double x0, double xi0, double h, double s_end,
                                     const FlowOptions& opt = {});

// Re-integrates with every accepted step split in two; returns the largest pointwise
// deviation relative to max(1, |state|).
double step_halving_deviation(const MetricFamily& fam, const Trajectory& tr);

struct NontrapReport {
  bool nontrapping = false;
  bool trapped = false;
  double s0 = 0.0;
  double convexity_floor = 0.0;  // m = inf 2|xi|^2 on the probe
  double perturbation_const = 0.0;  // K with |U| <= K <x>^{-sigma} + L
  double h_level = 0.0;             // L
  double growth_check = 0.0;  // min over s > s0 of |x|^2 / ((s-s0)^2 m/3)
};

// Convexity criterion for |x(s)|^2 = 2|xi|^2 + U; throws Inconclusive if neither escape nor trapping is detected.
NontrapReport classify_nontrapping(const MetricFamily& fam, const SymbolPoint& start, double h,
                                   double s_probe = 200.0, const FlowOptions& opt = {});

struct AsymptoticData {
  RVec xi_plus;
  bool nontrapping = false;
  double growth_constant = 0.0;   // 1/slope of |x(s)| on the tail
  double upper_constant = 0.0;    // sup |x(s)| / (s + 1)
  double momentum_rate = 0.0;     // fitted exponent of |xi(s) - xi_plus|
  double fit_error = 0.0;
  std::vector<double> ladder_values;  // first component per ladder entry
  std::vector<double> ladder_errors;
};

struct TailFit {
  RVec value;
  double error = 0.0;
};
// xi(s) ~ xi_plus + c s^{-sigma} over [s_end/10, s_end].
TailFit tail_fit_xi(const Trajectory& tr, double sigma, int points = 64);

AsymptoticData xi_plus(const MetricFamily& fam, const SymbolPoint& start, const std::vector<double>& h_ladder,
                       double T, const FlowOptions& opt = {});

// Exponent p in |xi(s) - xi_plus| ~ c s^{-p}, fitted on [s_lo, s_hi] in log-log.
double fit_momentum_rate(const Trajectory& tr, const RVec& xi_plus, double s_lo, double s_hi, int points = 48);
// 1/slope of |x(s)| on [s_lo, s_hi].
double fit_growth_constant(const Trajectory& tr, double s_lo, double s_hi, int points = 48);

struct DeviationReport {
  double x_ratio = 0.0;   // sup |x - y| / (h <s>^{2-sigma})
  double xi_ratio = 0.0;  // sup |xi - eta| / (h <s>^{1-sigma})
};
DeviationReport flow_deviation(const MetricFamily& fam, const SymbolPoint& start, double h, double T,
                               const FlowOptions& opt = {}, int points = 200);

// CSV columns: s, Re x_j, Im x_j, Re xi_j, Im xi_j, q_drift.
void write_trajectory_csv(const MetricFamily& fam, const Trajectory& tr, const std::string& path);

}  // namespace awf
