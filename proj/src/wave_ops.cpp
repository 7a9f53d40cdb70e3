#include "awf/wave_ops.hpp"

#include <cmath>
#include <sstream>

namespace awf {

namespace {

struct LadderFit {
  RVec value;
  double error = 0.0;
  std::vector<RVec> m;
};

LadderFit fit_ladder(const MetricFamily& fam, const ReferenceConfig& cfg, const RVec& x0, const RVec& xi0, double T,
                     const std::vector<double>& hs, const WaveOptions& opt) {
  const int n = fam.dim;
  LadderFit out;
  out.m.assign(hs.size(), RVec::Zero(n));
  parallel_for(static_cast<int>(hs.size()), [&](int k) {
    const double h = hs[k];
    const double s = T / h;
    auto [x, xi] = flow_state(fam, x0.cast<cplx>(), xi0.cast<cplx>(), h, s, opt.flow);
    const RVec xr = x.real(), xir = xi.real();
    ReferenceConfig c = cfg;
    c.h = h;
    Inversion inv = invert_J_full(c, fam, s, xir, nullptr, opt.flow);
    // d_xi W~ = x_hat - R xi/|xi|
    out.m[k] = xr - (inv.x_hat - cfg.R_delta * xir / xir.norm());
  });
  out.value = RVec::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (hs.size() == 1) {
      out.value(j) = out.m[0](j);
      continue;
    }
    std::vector<std::vector<double>> d;
    std::vector<double> y;
    for (size_t i = 0; i < hs.size(); ++i) {
      d.push_back({1.0, std::pow(hs[i], fam.sigma)});
      y.push_back(out.m[i](j));
    }
    LinearFit lf = least_squares(d, y);
    out.value(j) = lf.coef[0];
    out.error = std::max(out.error, lf.max_abs_residual);
  }
  return out;
}

}  // namespace

WaveOperatorPoint x_plus(const MetricFamily& fam, const ReferenceConfig& cfg, const RVec& x0, const RVec& xi0,
                         double T, const std::vector<double>& h_ladder, const WaveOptions& opt) {
  if (h_ladder.empty() || !(T > 0.0)) fail(ErrorKind::PreconditionViolated, "need T > 0 and a non-empty ladder");
  if (x0.size() != fam.dim || xi0.size() != fam.dim) fail(ErrorKind::PreconditionViolated, "dimension mismatch");
  WaveOperatorPoint out;
  out.x0 = x0;
  out.xi0 = xi0;
  SymbolPoint seed{x0.cast<cplx>(), xi0.cast<cplx>(), h_ladder.front()};
  AsymptoticData ad = xi_plus(fam, seed, h_ladder, T);
  out.xi_plus = ad.xi_plus;
  out.xi_fit_error = ad.fit_error;
  if (ad.xi_plus.norm() <= cfg.delta0) {
    std::ostringstream os;
    os << "|xi_plus| = " << ad.xi_plus.norm() << " <= delta0 = " << cfg.delta0;
    fail(ErrorKind::PreconditionViolated, os.str());
  }
  LadderFit a = fit_ladder(fam, cfg, x0, xi0, T, h_ladder, opt);
  LadderFit b = fit_ladder(fam, cfg, x0, xi0, 2.0 * T, h_ladder, opt);
  out.x_plus = a.value;
  out.extrapolation_error = a.error;
  out.ladder_h = h_ladder;
  out.ladder_m = a.m;
  out.doubling_gap = (a.value - b.value).norm();
  out.doubled_error = b.error;
  const double allowed = 3.0 * std::max(a.error, b.error) + opt.abs_floor;
  if (out.doubling_gap > allowed) {
    std::ostringstream os;
    os << "x_plus moves by " << out.doubling_gap << " between T and 2T (allowed " << allowed << ")";
    fail(ErrorKind::LimitUnstable, os.str());
  }
  out.z_plus = out.x_plus.cast<cplx>() - I * out.xi_plus.cast<cplx>();
  return out;
}

ComparatorReport short_range_comparator(const MetricFamily& fam, const SymbolPoint& seed,
                                        const std::vector<double>& T_grid, double tol, const FlowOptions& opt) {
  if (T_grid.empty()) fail(ErrorKind::PreconditionViolated, "empty T grid");
  ComparatorReport rep;
  rep.T_grid = T_grid;
  std::vector<RVec> pos;
  for (double T : T_grid) {
    const double s = T / seed.h;
    auto [x, xi] = flow_state(fam, seed.x, seed.xi, seed.h, s, opt);
    pos.push_back((x - s * xi).real());
    rep.momentum = xi.real();
  }
  rep.position = pos.back();
  for (size_t k = 1; k < pos.size(); ++k) rep.drift.push_back((pos[k] - pos[k - 1]).norm());
  if (rep.drift.empty()) return rep;
  bool shrinking = true;
  for (size_t k = 1; k < rep.drift.size(); ++k)
    if (rep.drift[k] > 0.75 * rep.drift[k - 1] && rep.drift[k] > tol) shrinking = false;
  rep.converged = shrinking && rep.drift.back() < tol;
  return rep;
}

}  // namespace awf
