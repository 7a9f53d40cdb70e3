#pragma once

#include "awf/flow.hpp"

#include <string>
#include <vector>

namespace awf {

// Reference ray X(xi) = (R xi/|xi|, xi) and the momentum floors.
struct ReferenceConfig {
  double delta0 = 0.1;   // momentum floor of the working domain
  double delta = 0.1;    // floor of the source momenta, J(|xi| > delta) covers |xi| > delta0
  double R_delta = 8.0;  // reference radius
  double h = 0.1;
};

struct ReferenceOptions {
  double R_start = 8.0;
  double R_limit = 32768.0;
  double jacobian_tol = 0.25;  // sampled |d xi~/d xi - I|
  double xi_max = 4.0;
  int momentum_samples = 12;
  std::vector<double> s_samples = {1.0, 10.0, 100.0};
  double s_probe = 200.0;
  FlowOptions flow;
};

// Doubles R from R_start until every sampled reference ray is non-trapping and the momentum
// Jacobian stays within jacobian_tol of the identity; delta is halved until the image covers
// |xi| > delta0. Throws NoAdmissibleR.
ReferenceConfig choose_reference(const MetricFamily& fam, double delta0, double h, const ReferenceOptions& opt = {});

// Endpoint of the ray launched at X(eta).
struct RayEnd {
  RVec x, xi;
};
RayEnd ray_endpoint(const ReferenceConfig& cfg, const MetricFamily& fam, double s, const RVec& eta,
                    const FlowOptions& opt);

struct Inversion {
  RVec source;
  RVec x_hat;
  double residual = 0.0;
  int iterations = 0;
};

FlowOptions phase_flow_options();

// Newton solve of xi~(s, X(eta)) = target. Throws NewtonDiverged, PreconditionViolated.
Inversion invert_J_full(const ReferenceConfig& cfg, const MetricFamily& fam, double s, const RVec& target,
                        const RVec* warm = nullptr, const FlowOptions& opt = phase_flow_options());
RVec invert_J(const ReferenceConfig& cfg, const MetricFamily& fam, double s, const RVec& target,
              const FlowOptions& opt = phase_flow_options());

struct PhaseOptions {
  double xi_max = 4.0;
  int xi_knots = 32;   // per sign, uniform on [delta0, xi_max]
  int s_knots = 40;    // uniform in log(1+s), including s = 0
  double quad_tol = 1e-12;
  unsigned quad_depth = 12;
  int cell_nodes = 6;  // Gauss-Legendre nodes per table cell
  double hess_step = 1e-4;
  FlowOptions flow = phase_flow_options();
};

struct WValue {
  double W = 0.0;
  double Wtilde = 0.0;
  RVec grad;  // x_hat(s, xi)
  RMat hess;
};

// Scalar (n = 1) evaluation including d_s W.
struct WValue1 {
  double W = 0.0, Wtilde = 0.0, grad = 0.0, hess = 0.0, ds = 0.0;
};

class PhaseW {
 public:
  PhaseW(MetricFamily fam, ReferenceConfig cfg, PhaseOptions opt = {});

  const MetricFamily& family() const { return fam_; }
  const ReferenceConfig& config() const { return cfg_; }
  const PhaseOptions& options() const { return opt_; }

  // On-demand evaluation by quadrature along x_hat(s', xi).
  WValue exact(double s, const RVec& xi) const;
  // Integral of q(x_hat(s', xi), xi) over [s0, s1].
  double increment(double s0, double s1, const RVec& xi) const;
  RVec x_hat(double s, const RVec& xi) const;

  // Tabulates W on the knot grid up to s_max (n = 1).
  void build_cache(double s_max);
  bool has_cache() const { return !s_knots_.empty(); }
  double cache_s_max() const { return s_knots_.empty() ? 0.0 : s_knots_.back(); }
  bool covers(double s, double xi) const;

  // Cached when covered, exact otherwise.
  WValue eval(double s, const RVec& xi) const;
  WValue1 eval1(double s, double xi) const;

  // Second-order Taylor extension of W~(s, .) to complex eta (n = 1); returns the value and
  // its eta-derivative.
  std::pair<cplx, cplx> wtilde_complex(double s, cplx eta) const;

  void write_csv(const std::string& path) const;
  void read_csv(const std::string& path);

 private:
  WValue1 exact1(double s, double xi) const;
  WValue1 interp(double s, double xi) const;

  MetricFamily fam_;
  ReferenceConfig cfg_;
  PhaseOptions opt_;
  std::vector<double> s_knots_;
  std::vector<double> xi_knots_;  // signed, increasing, two disjoint blocks
  // Knot tables indexed [xi][s].
  std::vector<std::vector<double>> W_, Ws_, X_, Wsx_, H_, Hs_, Hx_, Hsx_;
};

struct EikonalReport {
  double max_normalized = 0.0;  // max <s>^{1+sigma} |d_s W - q(d_xi W, xi)|
  double max_raw = 0.0;
  double worst_s = 0.0, worst_xi = 0.0;
  int points = 0;
};

// d_s W by centred differences of the quadrature-built W; injected_slope adds a defect c*s to W.
EikonalReport eikonal_residual(const PhaseW& phase, const std::vector<double>& s_grid,
                               const std::vector<double>& xi_grid, double injected_slope = 0.0);

}  // namespace awf
