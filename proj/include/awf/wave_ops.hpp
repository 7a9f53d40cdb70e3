#pragma once

#include "awf/hj_phase.hpp"

#include <string>
#include <vector>

namespace awf {

struct WaveOperatorPoint {
  RVec x0, xi0;
  RVec xi_plus, x_plus;
  CVec z_plus;  // x_plus - i xi_plus
  double extrapolation_error = 0.0;
  double xi_fit_error = 0.0;
  double doubling_gap = 0.0;  // |x_plus(T) - x_plus(2T)|
  double doubled_error = 0.0;  // extrapolation error of the 2T ladder
  std::vector<double> ladder_h;
  std::vector<RVec> ladder_m;  // x~(T/h) - d_xi W~(T/h, xi~(T/h))
};

struct WaveOptions {
  double abs_floor = 1e-9;  // added to 3x the extrapolation error in the doubling check
  FlowOptions flow = phase_flow_options();
};

// m(h) = x~ - d_xi W~ at s = T/h, extrapolated in h^sigma. The reference R and delta of cfg are reused
// for every ladder entry. Throws TrappedOrbit, PreconditionViolated, LimitUnstable.
WaveOperatorPoint x_plus(const MetricFamily& fam, const ReferenceConfig& cfg, const RVec& x0, const RVec& xi0,
                         double T, const std::vector<double>& h_ladder, const WaveOptions& opt = {});

// Position and momentum after the flow, pulled back by the free flow: x(s) - s xi(s) at s = T/h.
struct ComparatorReport {
  RVec position, momentum;
  std::vector<double> T_grid;
  std::vector<double> drift;  // |position(T_k) - position(T_{k-1})|
  bool converged = false;     // drifts shrink geometrically and the last is below tol
};

ComparatorReport short_range_comparator(const MetricFamily& fam, const SymbolPoint& seed,
                                        const std::vector<double>& T_grid, double tol = 1e-6,
                                        const FlowOptions& opt = phase_flow_options());

}  // namespace awf
