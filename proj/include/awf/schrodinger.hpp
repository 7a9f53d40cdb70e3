#pragma once

#include "awf/fbi_quantize.hpp"
#include "awf/symbols.hpp"

#include <functional>
#include <string>
#include <vector>

namespace awf {

// Midpoint: implicit midpoint rule for the full H, fixed point preconditioned by the exact free solve.
// Interaction: implicit midpoint for v = e^{itH0} u, exact on the flat family.
enum class StepMethod { Midpoint, Interaction };

const char* to_string(StepMethod m);
StepMethod step_method_from_string(const std::string& s);

// Periodic grid x_j = -L + j dx, dx = 2L/N, with an absorbing layer on L - w < |x| < L.
struct PropagatorConfig {
  double L = 20.0;
  int N = 1024;
  double dt = 1e-3;
  StepMethod method = StepMethod::Interaction;
  double sponge_fraction = 0.15;   // w / L, at least 0.1
  double sponge_strength = 5.0;    // absorption rate at |x| = L
  double sponge_tol = 1e-6;        // mass allowed in the layer (relative)
  double stability_budget = 0.5;   // dt/2 * |V| on the grid
  double solver_tol = 1e-13;
  int solver_max = 60;

  double dx() const { return 2.0 * L / N; }
  double k_nyquist() const { return kPi / dx(); }
};

// Throws PreconditionViolated.
void validate(const PropagatorConfig& cfg, const MetricFamily& fam);

using Sampler = std::function<cplx(double)>;

struct PropagationRun {
  PropagatorConfig cfg;
  double t = 0.0;
  int steps = 0;
  SampledLine u0, u;     // y0 = -L, dy = dx
  double norm0 = 0.0;    // |u0|^2
  double norm = 0.0;     // |u(t)|^2
  double absorbed = 0.0;  // mass removed by the layer, accumulated exactly from the midpoints
  double sponge_peak = 0.0;  // largest relative mass seen inside the layer
  double norm_drift = 0.0;    // | |u|^2 + absorbed - |u0|^2 | / |u0|^2
  double energy0 = 0.0, energy = 0.0;
  double energy_drift = 0.0;  // |<u,Hu>(t) - <u,Hu>(0)| / max(|<u,Hu>(0)|, |u0|^2)
  int max_iterations = 0;     // fixed-point sweeps, worst step
};

// e^{-itH} u0 with H = 1/2 D a D + 1/2 (b D + D b) + c, D = -i d/dx; t may be negative.
// t_origin places u0 at that absolute time for the interaction frame, so a run started from u(t) at
// t_origin = t with duration -t retraces the forward steps.
// Throws PreconditionViolated, WaveHitSponge, StepSolverDiverged.
PropagationRun assemble_and_propagate(const MetricFamily& fam, const Sampler& u0, double t,
                                      const PropagatorConfig& cfg, double t_origin = 0.0);

// Sampler reading a grid function at its nodes (nearest node).
Sampler grid_sampler(const SampledLine& u);

// H u on the grid of cfg (no absorbing layer).
std::vector<cplx> apply_H(const MetricFamily& fam, const PropagatorConfig& cfg, const std::vector<cplx>& u);

struct DriftReport {
  double norm_drift = 0.0, energy_drift = 0.0;
  bool pass = false;
};
DriftReport unitarity_energy_report(const PropagationRun& run, double tol = 1e-8);

struct RichardsonReport {
  double rel_l2 = 0.0;  // |u(dt, N) - u(dt/2, 2N)| / |u(dt/2, 2N)| on the coarse grid, within the band
  double band = 0.0;    // |k| cut used for the comparison
  bool pass = false;
  PropagationRun coarse, fine;
};

// band_fraction of the coarse Nyquist frequency bounds the compared modes.
RichardsonReport richardson_check(const MetricFamily& fam, const Sampler& u0, double t, const PropagatorConfig& cfg,
                                  double tol = 1e-6, double band_fraction = 0.5);

// Multiplies the spectrum of u by mask(k), k the angular frequency.
SampledLine spectral_filter(const SampledLine& u, const std::function<double(double)>& mask);

// C^infinity step: 0 for x <= 0, 1 for x >= 1.
double smooth_switch(double x);

// Grid for propagating data supported in [lo, hi] with frequencies |k| <= k_max over |t|:
// the ballistic extent from the classical flow times 1.5, Nyquist at least 2 k_max, dt from the budget.
PropagatorConfig suggest_config(const MetricFamily& fam, double lo, double hi, double k_max, double t,
                                const PropagatorConfig& base = {});

// Snapshot CSV: x, re_u, im_u.
void write_snapshot_csv(const SampledLine& u, const std::string& path);

}  // namespace awf
