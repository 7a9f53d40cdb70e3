#include "awf/flow.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace awf {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct Field {
  const MetricFamily& fam;
  double h;
  int n;
  State operator()(const State& y) const {
    CVec x = y.head(n), xi = y.tail(n);
    QGrad g = q_grad(fam, x, xi, h);
    State f(2 * n);
    f.head(n) = g.dxi;
    f.tail(n) = -g.dx;
    return f;
  }
};

State pack(const CVec& x, const CVec& xi) {
  const int n = static_cast<int>(x.size());
  State y(2 * n);
  y.head(n) = x;
  y.tail(n) = xi;
  return y;
}

double err_norm(const State& err, const State& y0, const State& y1, double tol) {
  double acc = 0.0;
  for (int i = 0; i < err.size(); ++i) {
    const double sc = tol + tol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    const double r = std::abs(err(i)) / sc;
    acc += r * r;
  }
  return std::sqrt(acc / err.size());
}

// One Dormand-Prince step; fills the stages needed for error and dense output.
struct StepResult {
  State y1, k7, err;
  State dense5;
};

StepResult dp_step(const Field& f, const State& y, const State& k1, double ds) {
  State k2 = f(y + ds * (a21 * k1));
  State k3 = f(y + ds * (a31 * k1 + a32 * k2));
  State k4 = f(y + ds * (a41 * k1 + a42 * k2 + a43 * k3));
  State k5 = f(y + ds * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  State k6 = f(y + ds * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  StepResult r;
  r.y1 = y + ds * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
  r.k7 = f(r.y1);
  r.err = ds * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * r.k7);
  r.dense5 = ds * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * r.k7);
  return r;
}

bool state_in_domain(const MetricFamily& fam, const State& y, int n, double safety) {
  CVec x = y.head(n);
  return in_domain(fam, x, safety);
}

}  // namespace

FlowSample Trajectory::at(double s) const {
  if (steps.empty() || s <= 0.0) return samples.front();
  if (s >= s_end()) return samples.back();
  auto it = std::upper_bound(steps.begin(), steps.end(), s, [](double v, const DenseStep& d) { return v < d.s0; });
  const DenseStep& d = *(it - 1);
  const double th = (s - d.s0) / d.ds;
  const double th1 = 1.0 - th;
  State y = d.r1 + th * (d.r2 + th1 * (d.r3 + th * (d.r4 + th1 * d.r5)));
  FlowSample out;
  out.s = s;
  out.x = y.head(dim);
  out.xi = y.tail(dim);
  return out;
}

namespace {

// Adaptive Dormand-Prince driver; on_step(s0, ds, y0, k1, step) sees every accepted step.
template <class OnStep>
State run_flow(const MetricFamily& fam, const State& y0, double h, double s_end, const FlowOptions& opt,
               OnStep&& on_step) {
  const int n = fam.dim;
  Field f{fam, h, n};
  State y = y0;
  if (s_end == 0.0) return y;
  State k1 = f(y);
  double s = 0.0;
  // Initial step from the field scale.
  double ds = std::min(s_end, 0.01 * std::max(1.0, y.norm()) / std::max(1e-12, k1.norm()));
  ds = std::max(ds, 1e-6);
  long count = 0;
  while (s < s_end) {
    if (++count > opt.max_steps) fail(ErrorKind::StepFailure, "too many steps");
    if (s + ds > s_end) ds = s_end - s;
    StepResult r = dp_step(f, y, k1, ds);
    const double en = err_norm(r.err, y, r.y1, opt.tol);
    if (!std::isfinite(en)) {
      ds *= 0.25;
      if (ds < opt.min_step) fail(ErrorKind::StepFailure, "non-finite field");
      continue;
    }
    if (en <= 1.0) {
      if (!state_in_domain(fam, r.y1, n, opt.domain_safety)) {
        std::ostringstream os;
        os << "trajectory left Gamma_{0.9 nu} at s = " << s + ds;
        fail(ErrorKind::DomainExit, os.str());
      }
      const double s_next = (s + ds >= s_end * (1.0 - 1e-14)) ? s_end : s + ds;
      on_step(s, ds, s_next, y, k1, r);
      s = s_next;
      y = r.y1;
      k1 = r.k7;
    }
    const double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
    if (en > 1.0 && ds < opt.min_step * std::max(1.0, s)) fail(ErrorKind::StepFailure, "step size underflow");
    ds *= std::clamp(fac, 0.2, 5.0);
  }
  return y;
}

void check_start(const MetricFamily& fam, const CVec& x0, const CVec& xi0, double s_end, const FlowOptions& opt) {
  const int n = fam.dim;
  if (x0.size() != n || xi0.size() != n) fail(ErrorKind::PreconditionViolated, "start dimension mismatch");
  if (s_end < 0.0) fail(ErrorKind::PreconditionViolated, "negative horizon");
  if (s_end > opt.s_max * (1.0 + 1e-12)) fail(ErrorKind::PreconditionViolated, "horizon exceeds s_max");
  if (!in_domain(fam, x0, opt.domain_safety))
    fail(ErrorKind::PointOutsideDomain, "flow start outside the coefficient domain");
}

}  // namespace

Trajectory integrate_to(const MetricFamily& fam, const CVec& x0, const CVec& xi0, double h, double s_end,
                        const FlowOptions& opt) {
  check_start(fam, x0, xi0, s_end, opt);
  const int n = fam.dim;
  Trajectory tr;
  tr.dim = n;
  tr.tol = opt.tol;
  tr.start.x = x0;
  tr.start.xi = xi0;
  tr.start.h = h;
  tr.samples.push_back({0.0, x0, xi0});
  const cplx q_start = q_total(fam, x0, xi0, h);
  const double q_scale = std::max(std::abs(q_start), 1e-300);
  run_flow(fam, pack(x0, xi0), h, s_end, opt,
           [&](double s, double ds, double s_next, const State& y, const State& k1, const StepResult& r) {
             DenseStep d;
             d.s0 = s;
             d.ds = ds;
             d.r1 = y;
             d.r2 = r.y1 - y;
             d.r3 = ds * k1 - d.r2;
             d.r4 = d.r2 - ds * r.k7 - d.r3;
             d.r5 = r.dense5;
             tr.steps.push_back(std::move(d));
             tr.samples.push_back({s_next, r.y1.head(n), r.y1.tail(n)});
             const double dq = std::abs(q_total(fam, tr.samples.back().x, tr.samples.back().xi, h) - q_start) / q_scale;
             tr.energy_drift = std::max(tr.energy_drift, dq);
           });
  return tr;
}

std::pair<CVec, CVec> flow_state(const MetricFamily& fam, const CVec& x0, const CVec& xi0, double h, double s_end,
                                 const FlowOptions& opt) {
  check_start(fam, x0, xi0, s_end, opt);
  const int n = fam.dim;
  State y = run_flow(fam, pack(x0, xi0), h, s_end, opt, [](double, double, double, const State&, const State&,
                                                           const StepResult&) {});
  return {y.head(n), y.tail(n)};
}

Trajectory integrate_flow(const MetricFamily& fam, const SymbolPoint& start, double T, double h,
                          const FlowOptions& opt) {
  if (!(h > 0.0 && h <= 1.0)) fail(ErrorKind::PreconditionViolated, "h must lie in (0,1]");
  return integrate_to(fam, start.x, start.xi, h, T / h, opt);
}

std::pair<cplx, cplx> flow_endpoint1(const MetricFamily& fam, double x0, double xi0, double h, double s_end,
                                     const FlowOptions& opt) {
  Trajectory tr = integrate_to(fam, vec1(x0), vec1(xi0), h, s_end, opt);
  return {tr.samples.back().x(0), tr.samples.back().xi(0)};
}

double step_halving_deviation(const MetricFamily& fam, const Trajectory& tr) {
  const int n = tr.dim;
  Field f{fam, tr.start.h, n};
  State y = pack(tr.start.x, tr.start.xi);
  double worst = 0.0;
  for (size_t i = 0; i < tr.steps.size(); ++i) {
    const double ds = tr.steps[i].ds / 2.0;
    for (int half = 0; half < 2; ++half) {
      StepResult r = dp_step(f, y, f(y), ds);
      y = r.y1;
    }
    State ref = pack(tr.samples[i + 1].x, tr.samples[i + 1].xi);
    worst = std::max(worst, (y - ref).norm() / std::max(1.0, ref.norm()));
  }
  return worst;
}

NontrapReport classify_nontrapping(const MetricFamily& fam, const SymbolPoint& start, double h, double s_probe,
                                   const FlowOptions& opt) {
  Trajectory tr = integrate_to(fam, start.x, start.xi, h, s_probe, opt);
  const int N = 2000;
  const double ds = s_probe / N;
  std::vector<double> f(N + 1), jx(N + 1), xi2(N + 1);
  for (int i = 0; i <= N; ++i) {
    FlowSample p = tr.at(i * ds);
    f[i] = p.x.squaredNorm();
    jx[i] = japanese(p.x);
    xi2[i] = p.xi.squaredNorm();
  }
  NontrapReport rep;
  // Convexity floor m and perturbation constant K in f'' >= m - K <x>^{-sigma}.
  double m = 1e300, K = 0.0;
  std::vector<double> fpp(N + 1, 0.0);
  for (int i = 1; i < N; ++i) {
    fpp[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (ds * ds);
    m = std::min(m, 2.0 * xi2[i]);
    K = std::max(K, std::abs(fpp[i] - 2.0 * xi2[i]) * std::pow(jx[i], fam.sigma));
  }
  fpp[0] = fpp[1];
  // |U| <= K <x>^{-sigma} + L: L is the level on the second half of the probe, where the
  // h-dependent terms (bounded by C h^sigma on [0, T/h]) dominate the decaying metric part.
  double L = 0.0;
  for (int i = N / 2; i < N; ++i) L = std::max(L, std::abs(fpp[i] - 2.0 * xi2[i]));
  K = 0.0;
  for (int i = 1; i < N; ++i)
    K = std::max(K, std::max(0.0, std::abs(fpp[i] - 2.0 * xi2[i]) - L) * std::pow(jx[i], fam.sigma));
  rep.convexity_floor = m;
  rep.perturbation_const = K;
  rep.h_level = L;
  for (int i = 0; i < N; ++i) {
    const double fp = i == 0 ? (f[1] - f[0]) / ds : (f[i + 1] - f[i - 1]) / (2.0 * ds);
    const bool outgoing = fp > 0.0 || (fp >= 0.0 && fpp[i] > 0.0);
    if (!outgoing) continue;
    // Convexity from the perturbation bound, or observed directly on the rest of the probe
    // (at least its second half).
    if (K * std::pow(jx[i], -fam.sigma) + L >= m / 3.0) {
      if (i > N / 2) continue;
      bool convex = true;
      for (int j = std::max(i, 1); j < N && convex; ++j) convex = fpp[j] > 0.0;
      if (!convex) continue;
    }
    const double s0 = i * ds;
    double worst = 1e300;
    for (int j = i + 1; j <= N; ++j) {
      const double sj = j * ds;
      const double need = (sj - s0) * (sj - s0) * m / 3.0;
      worst = std::min(worst, f[j] / need);
    }
    if (worst >= 1.0 - 1e-9) {
      rep.nontrapping = true;
      rep.s0 = s0;
      rep.growth_check = worst;
      return rep;
    }
  }
  double first = 0.0, second = 0.0;
  for (int i = 0; i <= N; ++i) (i <= N / 2 ? first : second) = std::max(i <= N / 2 ? first : second, std::sqrt(f[i]));
  if (second <= first) {
    rep.trapped = true;
    return rep;
  }
  std::ostringstream os;
  os << "no escape or trapping detected within s_probe = " << s_probe;
  fail(ErrorKind::Inconclusive, os.str());
}

TailFit tail_fit_xi(const Trajectory& tr, double sigma, int points) {
  const double se = tr.s_end();
  const double lo = se / 10.0;
  std::vector<double> ss = logspace(std::max(lo, 1e-9), se, points);
  TailFit out;
  out.value = RVec::Zero(tr.dim);
  for (int j = 0; j < tr.dim; ++j) {
    std::vector<std::vector<double>> d;
    std::vector<double> y;
    for (double s : ss) {
      d.push_back({1.0, std::pow(s, -sigma)});
      y.push_back(tr.at(s).xi(j).real());
    }
    LinearFit lf = least_squares(d, y);
    out.value(j) = lf.coef[0];
    out.error = std::max(out.error, lf.max_abs_residual);
  }
  return out;
}

double fit_momentum_rate(const Trajectory& tr, const RVec& xi_plus, double s_lo, double s_hi, int points) {
  std::vector<double> lx, ly;
  for (double s : logspace(s_lo, s_hi, points)) {
    const double d = (tr.at(s).xi.real() - xi_plus).norm();
    if (d > 1e-13) {
      lx.push_back(std::log(s));
      ly.push_back(std::log(d));
    }
  }
  if (lx.size() < 4) return std::numeric_limits<double>::infinity();
  return -line_fit(lx, ly).coef[1];
}

double fit_growth_constant(const Trajectory& tr, double s_lo, double s_hi, int points) {
  std::vector<double> sx, ax;
  for (double s : linspace(s_lo, s_hi, points)) {
    sx.push_back(s);
    ax.push_back(tr.at(s).x.norm());
  }
  const double slope = line_fit(sx, ax).coef[1];
  return slope > 0.0 ? 1.0 / slope : std::numeric_limits<double>::infinity();
}

AsymptoticData xi_plus(const MetricFamily& fam, const SymbolPoint& start, const std::vector<double>& h_ladder,
                       double T, const FlowOptions& opt) {
  if (h_ladder.empty()) fail(ErrorKind::PreconditionViolated, "empty h ladder");
  AsymptoticData out;
  std::vector<RVec> vals;
  std::vector<double> hs;
  double tail_err = 0.0;
  Trajectory last;
  for (double h : h_ladder) {
    const double s_end = T / h;
    NontrapReport nt;
    try {
      nt = classify_nontrapping(fam, start, h, std::min(200.0, s_end), opt);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Inconclusive) throw;
      nt.nontrapping = false;
    }
    if (!nt.nontrapping) fail(ErrorKind::TrappedOrbit, "linear-growth test failed");
    Trajectory tr = integrate_flow(fam, start, T, h, opt);
    TailFit tf = tail_fit_xi(tr, fam.sigma);
    vals.push_back(tf.value);
    hs.push_back(h);
    tail_err = std::max(tail_err, tf.error);
    out.ladder_values.push_back(tf.value(0));
    out.ladder_errors.push_back(tf.error);
    last = std::move(tr);
  }
  out.nontrapping = true;
  out.xi_plus = RVec::Zero(fam.dim);
  double resid = 0.0;
  for (int j = 0; j < fam.dim; ++j) {
    if (vals.size() == 1) {
      out.xi_plus(j) = vals[0](j);
      continue;
    }
    std::vector<std::vector<double>> d;
    std::vector<double> y;
    for (size_t i = 0; i < vals.size(); ++i) {
      d.push_back({1.0, std::pow(hs[i], fam.sigma)});
      y.push_back(vals[i](j));
    }
    LinearFit lf = least_squares(d, y);
    out.xi_plus(j) = lf.coef[0];
    resid = std::max(resid, lf.max_abs_residual);
  }
  out.fit_error = std::max(tail_err, resid);
  if (resid > 3.0 * tail_err + 1e-9) {
    std::ostringstream os;
    os << "ladder residual " << resid << " exceeds 3x tail-fit error " << tail_err;
    fail(ErrorKind::FitDiverged, os.str());
  }
  const double se = last.s_end();
  out.growth_constant = fit_growth_constant(last, se / 10.0, se);
  for (const FlowSample& p : last.samples) out.upper_constant = std::max(out.upper_constant, p.x.norm() / (p.s + 1.0));
  out.momentum_rate = fit_momentum_rate(last, out.xi_plus, se / 10.0, se);
  return out;
}

DeviationReport flow_deviation(const MetricFamily& fam, const SymbolPoint& start, double h, double T,
                               const FlowOptions& opt, int points) {
  Trajectory full = integrate_flow(fam, start, T, h, opt);
  Trajectory principal = integrate_to(fam, start.x, start.xi, 0.0, T / h, opt);
  DeviationReport rep;
  for (double s : linspace(0.0, T / h, points)) {
    FlowSample a = full.at(s), b = principal.at(s);
    const double js = japanese(s);
    rep.x_ratio = std::max(rep.x_ratio, (a.x - b.x).norm() / (h * std::pow(js, 2.0 - fam.sigma)));
    rep.xi_ratio = std::max(rep.xi_ratio, (a.xi - b.xi).norm() / (h * std::pow(js, 1.0 - fam.sigma)));
  }
  return rep;
}

void write_trajectory_csv(const MetricFamily& fam, const Trajectory& tr, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::ConfigInvalid, "cannot write " + path);
  os << std::setprecision(17);
  os << "s";
  for (int j = 0; j < tr.dim; ++j) os << ",re_x" << j << ",im_x" << j;
  for (int j = 0; j < tr.dim; ++j) os << ",re_xi" << j << ",im_xi" << j;
  os << ",q_drift\n";
  const cplx q0 = q_total(fam, tr.start.x, tr.start.xi, tr.start.h);
  const double scale = std::max(std::abs(q0), 1e-300);
  for (const FlowSample& p : tr.samples) {
    os << p.s;
    for (int j = 0; j < tr.dim; ++j) os << ',' << p.x(j).real() << ',' << p.x(j).imag();
    for (int j = 0; j < tr.dim; ++j) os << ',' << p.xi(j).real() << ',' << p.xi(j).imag();
    os << ',' << std::abs(q_total(fam, p.x, p.xi, tr.start.h) - q0) / scale << '\n';
  }
}

}  // namespace awf
