#include "awf/schrodinger.hpp"

#include "awf/flow.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace awf {

const char* to_string(StepMethod m) { return m == StepMethod::Midpoint ? "midpoint" : "interaction"; }

StepMethod step_method_from_string(const std::string& s) {
  if (s == "midpoint") return StepMethod::Midpoint;
  if (s == "interaction") return StepMethod::Interaction;
  fail(ErrorKind::PreconditionViolated, "unknown step method '" + s + "'");
}

double smooth_switch(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

namespace {

// Unnormalized in-place transforms of length n on a private aligned buffer.
class Fft {
 public:
  explicit Fft(int n) : n_(n) {
    buf_ = fftw_alloc_complex(n);
    std::lock_guard<std::mutex> lk(fftw_planner_mutex());
    fwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft() {
    std::lock_guard<std::mutex> lk(fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  void forward(std::vector<cplx>& a) { run(fwd_, a, 1.0); }
  // Includes the 1/n.
  void inverse(std::vector<cplx>& a) { run(bwd_, a, 1.0 / n_); }

 private:
  void run(fftw_plan p, std::vector<cplx>& a, double scale) {
    auto* b = reinterpret_cast<cplx*>(buf_);
    std::copy(a.begin(), a.end(), b);
    fftw_execute(p);
    for (int i = 0; i < n_; ++i) a[i] = b[i] * scale;
  }

  int n_;
  fftw_complex* buf_;
  fftw_plan fwd_, bwd_;
};

bool power_of_two(int n) { return n >= 2 && (n & (n - 1)) == 0; }

// Discretized H - H0 and the free part, spectral in D.
struct Operator {
  int n = 0;
  double dx = 0.0;
  std::vector<double> k;      // D symbol, Nyquist set to 0 so D is symmetric
  std::vector<double> k2;     // symbol of D^2, Nyquist kept
  std::vector<double> am1, b, c, gamma;
  mutable Fft fft;
  mutable std::vector<cplx> u, du, g, p;

  Operator(const MetricFamily& fam, const PropagatorConfig& cfg) : n(cfg.N), dx(cfg.dx()), fft(cfg.N) {
    k.resize(n);
    k2.resize(n);
    for (int m = 0; m < n; ++m) {
      const int mm = m < n / 2 ? m : m - n;
      const double km = 2.0 * kPi * mm / (n * dx);
      k[m] = (m == n / 2) ? 0.0 : km;
      k2[m] = km * km;
    }
    am1.resize(n);
    b.resize(n);
    c.resize(n);
    gamma.assign(n, 0.0);
    const double w = cfg.sponge_fraction * cfg.L;
    for (int j = 0; j < n; ++j) {
      const double x = -cfg.L + j * dx;
      const Coeffs cf = eval_coeffs_unchecked(fam, vec1(cplx(x, 0.0)));
      am1[j] = cf.a(0, 0).real() - 1.0;
      b[j] = cf.b(0).real();
      c[j] = cf.c.real();
      const double d = std::abs(x) - (cfg.L - w);
      if (d > 0.0) gamma[j] = cfg.sponge_strength * (d / w) * (d / w);
    }
    u.resize(n);
    du.resize(n);
    g.resize(n);
    p.resize(n);
  }

  // (H - H0) in Fourier variables; absorb scales the -i gamma term (0 drops it).
  void apply_V(const std::vector<cplx>& uhat, std::vector<cplx>& out, double absorb) const {
    for (int m = 0; m < n; ++m) {
      u[m] = uhat[m];
      du[m] = k[m] * uhat[m];
    }
    fft.inverse(u);
    fft.inverse(du);
    for (int j = 0; j < n; ++j) {
      g[j] = 0.5 * am1[j] * du[j] + 0.5 * b[j] * u[j];
      p[j] = 0.5 * b[j] * du[j] + cplx(c[j], -absorb * gamma[j]) * u[j];
    }
    fft.forward(g);
    fft.forward(p);
    out.resize(n);
    for (int m = 0; m < n; ++m) out[m] = k[m] * g[m] + p[m];
  }

  double norm2(const std::vector<cplx>& hat) const {
    double s = 0.0;
    for (const cplx& v : hat) s += std::norm(v);
    return s * dx / n;
  }

  // <u, H u> without the absorbing layer.
  double energy(const std::vector<cplx>& hat) const {
    std::vector<cplx> vh;
    apply_V(hat, vh, 0.0);
    cplx e = 0.0;
    for (int m = 0; m < n; ++m) e += std::conj(hat[m]) * (0.5 * k2[m] * hat[m] + vh[m]);
    return e.real() * dx / n;
  }

  double vbound() const {
    double a = 0.0, bb = 0.0, cc = 0.0, gg = 0.0;
    for (int j = 0; j < n; ++j) {
      a = std::max(a, std::abs(am1[j]));
      bb = std::max(bb, std::abs(b[j]));
      cc = std::max(cc, std::abs(c[j]));
      gg = std::max(gg, gamma[j]);
    }
    const double kn = kPi / dx;
    return 0.5 * a * kn * kn + bb * kn + cc + gg;
  }
};

std::vector<cplx> sample(const Sampler& f, const PropagatorConfig& cfg) {
  std::vector<cplx> v(cfg.N);
  const double dx = cfg.dx();
  for (int j = 0; j < cfg.N; ++j) v[j] = f(-cfg.L + j * dx);
  return v;
}

double layer_mass(const Operator& op, const std::vector<cplx>& x_values) {
  double s = 0.0;
  for (int j = 0; j < op.n; ++j)
    if (op.gamma[j] > 0.0) s += std::norm(x_values[j]);
  return s * op.dx;
}

}  // namespace

void validate(const PropagatorConfig& cfg, const MetricFamily& fam) {
  std::ostringstream os;
  if (!power_of_two(cfg.N)) os << "N = " << cfg.N << " is not a power of two";
  else if (!(cfg.L > 0.0)) os << "L must be positive";
  else if (!(cfg.dt > 0.0)) os << "dt must be positive";
  else if (cfg.sponge_fraction < 0.1 || cfg.sponge_fraction >= 0.5)
    os << "sponge width " << cfg.sponge_fraction << " L outside [0.1 L, 0.5 L)";
  else if (fam.dim != 1) os << "propagation is one-dimensional";
  if (!os.str().empty()) fail(ErrorKind::PreconditionViolated, os.str());
  Operator op(fam, cfg);
  const double load = 0.5 * cfg.dt * op.vbound();
  if (load > cfg.stability_budget) {
    os << "dt/2 |V| = " << load << " exceeds the stability budget " << cfg.stability_budget;
    fail(ErrorKind::PreconditionViolated, os.str());
  }
}

PropagationRun assemble_and_propagate(const MetricFamily& fam, const Sampler& u0, double t,
                                      const PropagatorConfig& cfg, double t_origin) {
  validate(cfg, fam);
  Operator op(fam, cfg);
  const int n = cfg.N;
  PropagationRun run;
  run.cfg = cfg;
  run.t = t;
  run.u0.y0 = -cfg.L;
  run.u0.dy = cfg.dx();
  run.u0.values = sample(u0, cfg);
  run.u = run.u0;

  std::vector<cplx> hat = run.u0.values;
  op.fft.forward(hat);
  run.norm0 = op.norm2(hat);
  run.energy0 = op.energy(hat);
  if (run.norm0 <= 0.0) fail(ErrorKind::PreconditionViolated, "u0 vanishes on the grid");
  run.sponge_peak = layer_mass(op, run.u0.values) / run.norm0;
  if (run.sponge_peak > cfg.sponge_tol) {
    std::ostringstream os;
    os << "u0 has relative mass " << run.sponge_peak << " inside the absorbing layer";
    fail(ErrorKind::PreconditionViolated, os.str());
  }
  run.norm = run.norm0;
  run.energy = run.energy0;
  if (t == 0.0) return run;

  run.steps = static_cast<int>(std::ceil(std::abs(t) / cfg.dt - 1e-12));
  const double dt = t / run.steps;
  const double absorb = t > 0.0 ? 1.0 : -1.0;
  const bool inter = cfg.method == StepMethod::Interaction;

  // State: v^ = e^{i tau H0} u^ at absolute time tau = t_origin + elapsed (interaction) or u^ (midpoint).
  if (inter)
    for (int m = 0; m < n; ++m) hat[m] *= std::polar(1.0, 0.5 * t_origin * op.k2[m]);
  std::vector<cplx> v = hat, v1(n), prev, w(n), vw(n), nxt(n), free_in(n), mid(n), phase(n);
  for (int step = 0; step < run.steps; ++step) {
    const double tm = (step + 0.5) * dt;
    if (inter)
      for (int m = 0; m < n; ++m) phase[m] = std::polar(1.0, -0.5 * (t_origin + tm) * op.k2[m]);
    if (prev.empty()) v1 = v;
    else
      for (int m = 0; m < n; ++m) v1[m] = 2.0 * v[m] - prev[m];
    if (!inter)
      for (int m = 0; m < n; ++m) free_in[m] = v[m] * cplx(1.0, -0.25 * dt * op.k2[m]);
    const double scale = std::sqrt(op.norm2(v)) + 1e-300;
    double last = 1e300;
    int it = 0;
    for (;; ++it) {
      for (int m = 0; m < n; ++m) w[m] = inter ? phase[m] * (v[m] + v1[m]) : v[m] + v1[m];
      op.apply_V(w, vw, absorb);
      double diff = 0.0;
      for (int m = 0; m < n; ++m) {
        if (inter) nxt[m] = v[m] - 0.5 * I * dt * std::conj(phase[m]) * vw[m];
        else nxt[m] = (free_in[m] - 0.5 * I * dt * vw[m]) / cplx(1.0, 0.25 * dt * op.k2[m]);
        diff += std::norm(nxt[m] - v1[m]);
      }
      v1.swap(nxt);
      diff = std::sqrt(diff * cfg.dx() / n) / scale;
      if (diff <= cfg.solver_tol) break;
      if (!std::isfinite(diff) || (it >= 3 && diff > last) || it + 1 >= cfg.solver_max) {
        std::ostringstream os;
        os << "fixed point stalled at step " << step << " (update " << diff << " after " << it + 1 << " sweeps)";
        fail(ErrorKind::StepSolverDiverged, os.str());
      }
      last = diff;
    }
    run.max_iterations = std::max(run.max_iterations, it + 1);
    // |v1|^2 - |v|^2 = -2 |dt| <u_mid, gamma u_mid> exactly for the midpoint rule.
    for (int m = 0; m < n; ++m) mid[m] = 0.5 * (inter ? phase[m] * (v[m] + v1[m]) : v[m] + v1[m]);
    op.fft.inverse(mid);
    double lost = 0.0;
    for (int j = 0; j < n; ++j) lost += op.gamma[j] * std::norm(mid[j]);
    run.absorbed += 2.0 * std::abs(dt) * lost * op.dx;
    const double in_layer = (layer_mass(op, mid) + run.absorbed) / run.norm0;
    run.sponge_peak = std::max(run.sponge_peak, in_layer);
    if (in_layer > cfg.sponge_tol) {
      std::ostringstream os;
      os << "relative mass " << in_layer << " reached the absorbing layer at t = " << tm;
      fail(ErrorKind::WaveHitSponge, os.str());
    }
    prev = v;
    v.swap(v1);
  }
  if (inter)
    for (int m = 0; m < n; ++m) v[m] *= std::polar(1.0, -0.5 * (t_origin + t) * op.k2[m]);
  run.norm = op.norm2(v);
  run.energy = op.energy(v);
  run.norm_drift = std::abs(run.norm + run.absorbed - run.norm0) / run.norm0;
  run.energy_drift = std::abs(run.energy - run.energy0) / std::max(std::abs(run.energy0), run.norm0);
  op.fft.inverse(v);
  run.u.values = v;
  return run;
}

std::vector<cplx> apply_H(const MetricFamily& fam, const PropagatorConfig& cfg, const std::vector<cplx>& u) {
  if (static_cast<int>(u.size()) != cfg.N) fail(ErrorKind::PreconditionViolated, "grid size mismatch");
  Operator op(fam, cfg);
  std::vector<cplx> hat = u, vh;
  op.fft.forward(hat);
  op.apply_V(hat, vh, 0.0);
  for (int m = 0; m < cfg.N; ++m) vh[m] += 0.5 * op.k2[m] * hat[m];
  op.fft.inverse(vh);
  return vh;
}

DriftReport unitarity_energy_report(const PropagationRun& run, double tol) {
  DriftReport r;
  r.norm_drift = run.norm_drift;
  r.energy_drift = run.energy_drift;
  r.pass = r.norm_drift <= tol && r.energy_drift <= tol;
  return r;
}

RichardsonReport richardson_check(const MetricFamily& fam, const Sampler& u0, double t, const PropagatorConfig& cfg,
                                  double tol, double band_fraction) {
  RichardsonReport rep;
  PropagatorConfig fine = cfg;
  fine.dt = 0.5 * cfg.dt;
  fine.N = 2 * cfg.N;
  rep.coarse = assemble_and_propagate(fam, u0, t, cfg);
  rep.fine = assemble_and_propagate(fam, u0, t, fine);
  rep.band = band_fraction * cfg.k_nyquist();
  const double band = rep.band;
  auto mask = [band](double k) { return std::abs(k) <= band ? 1.0 : 0.0; };
  SampledLine c = spectral_filter(rep.coarse.u, mask);
  SampledLine f = spectral_filter(rep.fine.u, mask);
  double num = 0.0, den = 0.0;
  for (int j = 0; j < cfg.N; ++j) {
    num += std::norm(c.values[j] - f.values[2 * j]);
    den += std::norm(f.values[2 * j]);
  }
  rep.rel_l2 = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  rep.pass = rep.rel_l2 <= tol;
  return rep;
}

SampledLine spectral_filter(const SampledLine& u, const std::function<double(double)>& mask) {
  const int n = static_cast<int>(u.values.size());
  Fft fft(n);
  std::vector<cplx> a = u.values;
  fft.forward(a);
  for (int m = 0; m < n; ++m) {
    const int mm = m < (n + 1) / 2 ? m : m - n;
    a[m] *= mask(2.0 * kPi * mm / (n * u.dy));
  }
  fft.inverse(a);
  SampledLine out = u;
  out.values = a;
  return out;
}

PropagatorConfig suggest_config(const MetricFamily& fam, double lo, double hi, double k_max, double t,
                                const PropagatorConfig& base) {
  PropagatorConfig cfg = base;
  double extent = std::max(std::abs(lo), std::abs(hi));
  const double T = std::abs(t);
  if (T > 0.0) {
    FlowOptions fo;
    fo.tol = 1e-8;
    for (double x0 : {lo, hi})
      for (double k0 : {-k_max, 0.0, k_max}) {
        const Trajectory tr = integrate_to(fam, vec1(x0), vec1(k0), 1.0, T, fo);
        for (const FlowSample& sm : tr.samples) extent = std::max(extent, std::abs(sm.x(0).real()));
      }
  }
  cfg.L = 1.5 * extent / (1.0 - cfg.sponge_fraction);
  const double dx_max = kPi / (2.0 * k_max);
  int N = 16;
  while (2.0 * cfg.L / N > dx_max) N *= 2;
  cfg.N = N;
  Operator op(fam, cfg);
  cfg.dt = std::min(base.dt, 0.9 * 2.0 * cfg.stability_budget / op.vbound());
  return cfg;
}

Sampler grid_sampler(const SampledLine& u) {
  return [u](double x) {
    const long j = std::lround((x - u.y0) / u.dy);
    if (j < 0 || j >= static_cast<long>(u.values.size())) return cplx(0.0);
    return u.values[j];
  };
}

void write_snapshot_csv(const SampledLine& u, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::PreconditionViolated, "cannot write " + path);
  os << std::setprecision(17) << "x,re_u,im_u\n";
  for (size_t j = 0; j < u.values.size(); ++j)
    os << u.y0 + j * u.dy << ',' << u.values[j].real() << ',' << u.values[j].imag() << '\n';
}

}  // namespace awf
