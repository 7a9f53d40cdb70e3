#include "awf/modevol.hpp"

#include <Eigen/Eigenvalues>
#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>

namespace awf {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : -1.0; }

void require_strip(const PhaseW& phase, cplx z) {
  if (std::abs(z.imag()) <= phase.config().delta0) {
    std::ostringstream os;
    os << "|Im z| = " << std::abs(z.imag()) << " must exceed delta0 = " << phase.config().delta0;
    fail(ErrorKind::PreconditionViolated, os.str());
  }
}

void require_matching_h(const PhaseW& phase, double h) {
  if (!phase.family().h_independent() && std::abs(phase.config().h - h) > 1e-12 * h) {
    std::ostringstream os;
    os << "phase built for h = " << phase.config().h << " used at h = " << h;
    fail(ErrorKind::PreconditionViolated, os.str());
  }
}

// W~(s, eta) on complex eta (second-order extension), plus c s.
cplx wt(const PhaseW& phase, double s, cplx eta, double injected_slope) {
  return phase.wtilde_complex(s, eta).first + injected_slope * s;
}

}  // namespace

ContourSpec make_contour(const PhaseW& phase, ContourKind kind, double s, cplx z, double r) {
  require_strip(phase, z);
  ContourSpec c;
  c.kind = kind;
  c.s = s;
  c.z = z;
  c.r = r;
  c.js = japanese(s);
  const double eta0 = -z.imag();
  if (s > 0.0) {
    WValue1 v = phase.eval1(s, eta0);
    c.shift = v.grad - phase.config().R_delta * sgn(eta0);
    c.A = v.hess;
  }
  c.center = kind == ContourKind::G0 ? z + c.shift : z - c.shift;
  return c;
}

ContourPoint contour_point(const ContourSpec& c, double p, double q) {
  ContourPoint o;
  o.y = c.center + cplx(c.js * p, q);
  // Re eta = -Im y; Im eta = <s>^{-2}[-Re a -+ A Im a] with a = y - center.
  const double pm = c.kind == ContourKind::G0 ? 1.0 : -1.0;
  o.eta = cplx(-o.y.imag(), -(p / c.js) - pm * c.A * q / (c.js * c.js));
  return o;
}

cplx contour_jacobian(const ContourSpec& c) {
  const double pm = c.kind == ContourKind::G0 ? 1.0 : -1.0;
  return cplx(c.js + 1.0 / c.js, pm * c.A / c.js);
}

double psi(const PhaseW& phase, const ContourSpec& c, cplx y, cplx eta, double injected_slope) {
  const double pm = c.kind == ContourKind::G0 ? 1.0 : -1.0;
  const cplx f = (c.z - y) * eta + pm * wt(phase, c.s, eta, injected_slope);
  return phi0(y) - f.imag();
}

SaddleReport saddle_certificate(const PhaseW& phase, double s, cplx z, double tol) {
  ContourSpec c = make_contour(phase, ContourKind::G0, s, z, 0.1);
  SaddleReport rep;
  rep.y = c.center;
  rep.eta = -z.imag();
  auto f = [&](const Eigen::Vector4d& u) {
    return psi(phase, c, rep.y + cplx(u(0), u(1)), cplx(rep.eta + u(2), u(3)));
  };
  // Fourth-order centred differences.
  const double e = 1e-4;
  Eigen::Vector4d g;
  for (int i = 0; i < 4; ++i) {
    Eigen::Vector4d d = Eigen::Vector4d::Zero();
    d(i) = e;
    g(i) = (8.0 * (f(d) - f(-d)) - (f(2 * d) - f(-2 * d))) / (12.0 * e);
  }
  rep.grad_norm = g.norm();
  rep.value_gap = std::abs(f(Eigen::Vector4d::Zero()) - phi0(z));
  const double eh = 1e-3;
  Eigen::Matrix4d H;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      Eigen::Vector4d di = Eigen::Vector4d::Zero(), dj = Eigen::Vector4d::Zero();
      di(i) = eh;
      dj(j) = eh;
      H(i, j) = (f(di + dj) - f(di - dj) - f(-di + dj) + f(-di - dj)) / (4.0 * eh * eh);
    }
  H = 0.5 * (H + H.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es{H};
  rep.min_abs_eig = es.eigenvalues().cwiseAbs().minCoeff();
  for (int i = 0; i < 4; ++i) (es.eigenvalues()(i) > 0 ? rep.positive : rep.negative)++;
  rep.pass = rep.grad_norm <= tol && rep.value_gap <= tol && rep.min_abs_eig > 1e-8 && rep.positive == 2 &&
             rep.negative == 2;
  if (!rep.pass) {
    std::ostringstream os;
    os << "saddle at s = " << s << ": |grad| = " << rep.grad_norm << ", gap = " << rep.value_gap
       << ", min|eig| = " << rep.min_abs_eig << ", signature (" << rep.positive << "," << rep.negative << ")";
    fail(ErrorKind::CertificateFailed, os.str());
  }
  return rep;
}

MarginReport contour_margin(const PhaseW& phase, ContourKind kind, double s, cplx z, double r, int samples) {
  ContourSpec c = make_contour(phase, kind, s, z, r);
  const double d0 = phase.config().delta0;
  const double pz = phi0(z);
  MarginReport rep;
  rep.samples = samples;
  rep.delta = 1e300;
  rep.boundary_max = -1e300;
  auto fail_at = [&](double p, double q, const std::string& what) {
    std::ostringstream os;
    os << what << " at s = " << s << ", (p, q) = (" << p << ", " << q << ")";
    fail(ErrorKind::MarginViolated, os.str());
  };
  auto value = [&](double p, double q) {
    ContourPoint cp = contour_point(c, p, q);
    if (std::abs(cp.eta.real()) <= d0) fail_at(p, q, "contour leaves |Re eta| > delta0");
    return psi(phase, c, cp.y, cp.eta) - pz;
  };
  // Interior: Sobol points in the rotated square P = p + q, Q = p - q in [-r, r]^2.
  for (const auto& u : sobol_points(samples, 2)) {
    const double P = r * (2.0 * u[0] - 1.0), Q = r * (2.0 * u[1] - 1.0);
    const double p = 0.5 * (P + Q), q = 0.5 * (P - Q);
    const double n2 = p * p + q * q;
    if (n2 < 1e-14 * r * r) continue;
    const double ratio = -value(p, q) / n2;
    if (ratio < rep.delta) {
      rep.delta = ratio;
      rep.worst_p = p;
      rep.worst_q = q;
    }
  }
  const int nb = std::max(64, samples / 16);
  for (int k = 0; k < nb; ++k) {
    const double t = 4.0 * k / nb;
    const int side = static_cast<int>(t);
    const double f = t - side;
    // walk the diamond |p| + |q| = r
    const double P = side == 0 ? r : side == 1 ? r * (1 - 2 * f) : side == 2 ? -r : -r * (1 - 2 * f);
    const double Q = side == 0 ? -r * (1 - 2 * f) : side == 1 ? r : side == 2 ? r * (1 - 2 * f) : -r;
    const double p = 0.5 * (P + Q), q = 0.5 * (P - Q);
    rep.boundary_max = std::max(rep.boundary_max, value(p, q));
  }
  rep.r1 = -rep.boundary_max;
  if (!(rep.delta > 0.0)) fail_at(rep.worst_p, rep.worst_q, "phase not below Phi0(z)");
  if (!(rep.boundary_max < 0.0)) fail_at(0.0, 0.0, "boundary margin is not negative");
  return rep;
}

cplx base_point(const PhaseW& phase, double s, cplx z0) {
  return make_contour(phase, ContourKind::G0, s, z0, 0.1).center;
}

namespace {

// Integrates F(p, q) (K complex channels) over the diamond |p| + |q| <= r with Gauss-Legendre
// panels of width v_scale / <s> along p and sized to the chirp |A| q^2 / 2h along q.
// Panels are added outward from the saddle and the march stops after two consecutive panels whose
// channel-0 modulus is below tiny times the running maximum.
template <size_t K, class F>
std::array<cplx, K> integrate_contour(const ContourSpec& c, double h, int nodes, double v_scale, F&& f) {
  const GaussRule& g = gauss_legendre(nodes);
  const double tiny = 1e-18;
  const double kappa = std::max(c.js, std::abs(c.A));
  const double wp = std::min(c.r, v_scale / c.js);
  const double wq = std::min(c.r, 4.0 * kPi * h / (kappa * c.r + 1.0));
  std::array<cplx, K> acc{};
  double global = 0.0;
  // q-line through p; returns the line integral and its largest channel-0 modulus
  auto line = [&](double p, std::array<cplx, K>& out) {
    const double qm = c.r - std::abs(p);
    double lmax = 0.0;
    out = {};
    for (int side : {-1, 1}) {
      int quiet = 0;
      for (double q0 = 0.0; q0 < qm && quiet < 2; q0 += wq) {
        const double q1 = std::min(qm, q0 + wq);
        double pmax = 0.0;
        for (size_t j = 0; j < g.x.size(); ++j) {
          const double q = side * (q0 + 0.5 * (q1 - q0) * (1.0 + g.x[j]));
          const double w = 0.5 * (q1 - q0) * g.w[j];
          const std::array<cplx, K> v = f(p, q);
          pmax = std::max(pmax, std::abs(v[0]));
          for (size_t k = 0; k < K; ++k) out[k] += w * v[k];
        }
        lmax = std::max(lmax, pmax);
        quiet = pmax <= tiny * lmax ? quiet + 1 : 0;
      }
    }
    return lmax;
  };
  for (int side : {-1, 1}) {
    int quiet = 0;
    for (double p0 = 0.0; p0 < c.r && quiet < 2; p0 += wp) {
      const double p1 = std::min(c.r, p0 + wp);
      double pmax = 0.0;
      for (size_t i = 0; i < g.x.size(); ++i) {
        const double p = side * (p0 + 0.5 * (p1 - p0) * (1.0 + g.x[i]));
        const double w = 0.5 * (p1 - p0) * g.w[i];
        std::array<cplx, K> l;
        pmax = std::max(pmax, line(p, l));
        for (size_t k = 0; k < K; ++k) acc[k] += w * l[k];
      }
      global = std::max(global, pmax);
      quiet = pmax <= tiny * global ? quiet + 1 : 0;
    }
  }
  return acc;
}

cplx contour_sum(const PhaseW& phase, const ContourSpec& c, const WeightedHolo& v, double h, int nodes,
                 double v_scale, double injected_slope, double* scale) {
  const double pm = c.kind == ContourKind::G0 ? 1.0 : -1.0;
  const double pz = phi0(c.z);
  double sc = 0.0;
  const auto acc = integrate_contour<1>(c, h, nodes, v_scale, [&](double p, double q) {
    ContourPoint cp = contour_point(c, p, q);
    const cplx ph = I * ((c.z - cp.y) * cp.eta + pm * wt(phase, c.s, cp.eta, injected_slope)) / h;
    const cplx vw = v(cp.y);
    sc = std::max(sc, std::abs(vw));
    return std::array<cplx, 1>{std::exp(ph + (phi0(cp.y) - pz) / h) * vw};
  });
  *scale = sc;
  return acc[0] * contour_jacobian(c) / (2.0 * kPi * h);
}

double auto_radius(const PhaseW& phase, cplx z, const QuadOptions& opt) {
  if (opt.r > 0.0) return opt.r;
  const double r = std::min(opt.r_max, std::abs(z.imag()) - 1.25 * phase.config().delta0);
  if (!(r > 0.0)) fail(ErrorKind::PreconditionViolated, "no room for the contour below delta0");
  return r;
}

}  // namespace

cplx contour_apply(const PhaseW& phase, ContourKind kind, const WeightedHolo& v, double s, cplx z, double h,
                   const QuadOptions& opt) {
  require_matching_h(phase, h);
  ContourSpec c = make_contour(phase, kind, s, z, auto_radius(phase, z, opt));
  double s1 = 0.0;
  const cplx a = contour_sum(phase, c, v, h, opt.nodes, opt.v_scale, opt.injected_slope, &s1);
  if (!opt.check) return a;
  double s2 = 0.0;
  const cplx b = contour_sum(phase, c, v, h, 2 * opt.nodes, opt.v_scale, opt.injected_slope, &s2);
  const double scale = std::max({s1, s2, std::abs(b)});
  if (std::abs(a - b) > opt.rel_tol * scale) {
    std::ostringstream os;
    os << "contour quadrature moved by " << std::abs(a - b) / scale << " (relative) under refinement at s = " << s;
    fail(ErrorKind::QuadratureNotConverged, os.str());
  }
  return b;
}

namespace {

EvolvedField apply_kind(const PhaseW& phase, ContourKind kind, const WeightedHolo& v, double s,
                        const std::vector<cplx>& z_grid, double h, const QuadOptions& opt) {
  EvolvedField out;
  out.s = s;
  out.provenance = "quadrature";
  out.field.z = z_grid;
  out.field.h = {h};
  out.field.weighted.assign(z_grid.size(), std::vector<cplx>(1));
  if (opt.preflight)
    for (cplx z : z_grid) {
      if (kind == ContourKind::G0) saddle_certificate(phase, s, z);
      contour_margin(phase, kind, s, z, auto_radius(phase, z, opt), opt.margin_samples);
    }
  parallel_for(static_cast<int>(z_grid.size()),
               [&](int i) { out.field.weighted[i][0] = contour_apply(phase, kind, v, s, z_grid[i], h, opt); });
  return out;
}

}  // namespace

EvolvedField apply_G0(const PhaseW& phase, const WeightedHolo& v, double s, const std::vector<cplx>& z_grid, double h,
                      const QuadOptions& opt) {
  return apply_kind(phase, ContourKind::G0, v, s, z_grid, h, opt);
}

EvolvedField apply_G1(const PhaseW& phase, const WeightedHolo& v, double s, const std::vector<cplx>& z_grid, double h,
                      const QuadOptions& opt) {
  return apply_kind(phase, ContourKind::G1, v, s, z_grid, h, opt);
}

void EvolvedField::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::ConfigInvalid, "cannot write " + path);
  os << std::setprecision(17) << "re_z,im_z,h,re_val,im_val,weighted_mag,s,provenance\n";
  for (size_t i = 0; i < field.z.size(); ++i)
    for (size_t k = 0; k < field.h.size(); ++k) {
      const cplx v = field.value(i, k);
      os << field.z[i].real() << ',' << field.z[i].imag() << ',' << field.h[k] << ',' << v.real() << ',' << v.imag()
         << ',' << field.weighted_magnitude(i, k) << ',' << s << ',' << provenance << '\n';
    }
}

namespace {

void fft_inplace(std::vector<cplx>& a, int dir) {
  const int n = static_cast<int>(a.size());
  auto* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(n, p, p, dir, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lk(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
}

// Smooth step: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

// Frequency xi = h k of FFT bin m.
double bin_xi(int m, int n, double dy, double h) {
  const int mm = m < (n + 1) / 2 ? m : m - n;
  return h * 2.0 * kPi * mm / (n * dy);
}

}  // namespace

SampledLine multiplier_apply(const PhaseW& phase, const SampledLine& u, double s, double h, int sign,
                             const MultiplierOptions& opt) {
  require_matching_h(phase, h);
  const int n = static_cast<int>(u.values.size());
  std::vector<cplx> a = u.values;
  fft_inplace(a, FFTW_FORWARD);
  const double d0 = phase.config().delta0;
  double total = 0.0, low = 0.0, peak = 0.0;
  for (int m = 0; m < n; ++m) {
    const double w = std::norm(a[m]);
    total += w;
    if (std::abs(bin_xi(m, n, u.dy, h)) < 1.5 * d0) low += w;
    peak = std::max(peak, std::abs(a[m]));
  }
  if (total > 0.0 && low > opt.underflow_fraction * total) {
    std::ostringstream os;
    os << "spectral mass fraction " << low / total << " below |xi| = " << 1.5 * d0;
    fail(ErrorKind::BandUnderflow, os.str());
  }
  const double xi_max = phase.options().xi_max;
  for (int m = 0; m < n; ++m) {
    if (std::abs(a[m]) <= opt.negligible * peak) continue;
    const double xi = bin_xi(m, n, u.dy, h);
    const double ax = std::abs(xi);
    if (ax <= d0) continue;
    if (ax > xi_max) {
      std::ostringstream os;
      os << "spectrum reaches |xi| = " << ax << " beyond the phase table (" << xi_max << ")";
      fail(ErrorKind::PreconditionViolated, os.str());
    }
    const double chi = smooth_step((ax - d0) / (0.5 * d0));
    const double w = phase.eval1(s, xi).Wtilde + opt.injected_slope * s;
    a[m] *= 1.0 + chi * (std::polar(1.0, sign * w / h) - 1.0);
  }
  fft_inplace(a, FFTW_BACKWARD);
  SampledLine out = u;
  for (int m = 0; m < n; ++m) out.values[m] = a[m] / static_cast<double>(n);
  return out;
}

EvolvedField apply_G0_multiplier(const PhaseW& phase, const SampledLine& u0, double s,
                                 const std::vector<cplx>& z_grid, double h, const MultiplierOptions& opt) {
  SampledLine w = multiplier_apply(phase, u0, s, h, +1, opt);
  EvolvedField out;
  out.s = s;
  out.provenance = "multiplier";
  out.field = bargmann(w, z_grid, {h});
  return out;
}

LadderReport roundtrip_residual(const PhaseW& phase, const std::function<SampledLine(double)>& u0_of_h, double s,
                                const std::vector<cplx>& z_grid, const std::vector<double>& h_ladder,
                                const QuadOptions& opt) {
  LadderReport rep;
  std::vector<double> inv_h, logs;
  for (double h : h_ladder) {
    const SampledLine u0 = u0_of_h(h);
    const SampledLine g0 = multiplier_apply(phase, u0, s, h, +1);
    WeightedHolo g0v = [&](cplx y) { return bargmann_weighted(g0, y, h); };
    std::vector<double> r(z_grid.size()), m(z_grid.size());
    parallel_for(static_cast<int>(z_grid.size()), [&](int i) {
      const cplx v = bargmann_weighted(u0, z_grid[i], h);
      r[i] = std::abs(contour_apply(phase, ContourKind::G1, g0v, s, z_grid[i], h, opt) - v);
      m[i] = std::abs(v);
    });
    rep.h.push_back(h);
    rep.residual.push_back(*std::max_element(r.begin(), r.end()));
    rep.scale.push_back(*std::max_element(m.begin(), m.end()));
    inv_h.push_back(1.0 / h);
    logs.push_back(std::log(std::max(rep.residual.back(), 1e-300)));
  }
  if (h_ladder.size() >= 2) rep.slope = line_fit(inv_h, logs).coef[1];
  return rep;
}

namespace {

// d_s W on complex eta: q(x_hat, xi) at Re eta extended to second order in Im eta.
cplx ds_symbol(const PhaseW& phase, double s, cplx eta) {
  const double a = eta.real(), b = eta.imag();
  const double e = 1e-4 * std::max(1.0, std::abs(a));
  const double f0 = phase.eval1(s, a).ds;
  const double fp = phase.eval1(s, a + e).ds, fm = phase.eval1(s, a - e).ds;
  const double d1 = (fp - fm) / (2.0 * e), d2 = (fp - 2.0 * f0 + fm) / (e * e);
  return f0 + I * b * d1 - 0.5 * b * b * d2;
}

// largest |d_s W| over |xi| in [lo, hi] (both signs)
double max_ds(const PhaseW& phase, double s, double lo, double hi) {
  double m = 0.0;
  for (double xi : linspace(lo, hi, 48)) {
    m = std::max(m, std::abs(phase.eval1(s, xi).ds));
    m = std::max(m, std::abs(phase.eval1(s, -xi).ds));
  }
  return m;
}

}  // namespace

cplx source_point(const PhaseW& phase, double s, cplx base) {
  return base - make_contour(phase, ContourKind::G0, s, base, 0.1).shift;
}

EvolutionReport evolution_residual_multiplier(const PhaseW& phase, const SampledLine& u0,
                                              const std::vector<double>& s_grid, cplx base,
                                              const std::vector<cplx>& offsets, double h, double injected_slope,
                                              double ds_factor) {
  EvolutionReport rep;
  rep.ds = ds_factor * h;
  MultiplierOptions mo;
  mo.injected_slope = injected_slope;
  const int n = static_cast<int>(u0.values.size());
  std::vector<cplx> a0 = u0.values;
  fft_inplace(a0, FFTW_FORWARD);
  const double d0 = phase.config().delta0;
  double peak = 0.0;
  for (cplx c : a0) peak = std::max(peak, std::abs(c));
  double band_lo = 1e300, band_hi = 0.0;
  for (int m = 0; m < n; ++m) {
    const double ax = std::abs(bin_xi(m, n, u0.dy, h));
    if (std::abs(a0[m]) <= mo.negligible * peak || ax <= d0) continue;
    band_lo = std::min(band_lo, ax);
    band_hi = std::max(band_hi, ax);
  }
  for (double s : s_grid) {
    const double sm = std::max(0.0, s - rep.ds), sp = s + rep.ds;
    const double step = sp - sm;
    SampledLine gm = multiplier_apply(phase, u0, sm, h, +1, mo);
    SampledLine gp = multiplier_apply(phase, u0, sp, h, +1, mo);
    SampledLine g = multiplier_apply(phase, u0, s, h, +1, mo);
    // (d_s W)(s, hD) G0 u0 through the same spectral mask
    std::vector<cplx> a = g.values;
    fft_inplace(a, FFTW_FORWARD);
    for (int m = 0; m < n; ++m) {
      const double xi = bin_xi(m, n, u0.dy, h);
      const double ax = std::abs(xi);
      if (std::abs(a0[m]) <= mo.negligible * peak || ax <= d0) {
        a[m] = 0.0;
        continue;
      }
      a[m] *= smooth_step((ax - d0) / (0.5 * d0)) * phase.eval1(s, xi).ds;
    }
    fft_inplace(a, FFTW_BACKWARD);
    SampledLine res = g;
    for (int m = 0; m < n; ++m)
      res.values[m] = I * h * (gp.values[m] - gm.values[m]) / step + a[m] / static_cast<double>(n);
    const cplx z0 = source_point(phase, s, base);
    double r = 0.0, sc = 0.0;
    for (cplx d : offsets) {
      r = std::max(r, std::abs(bargmann_weighted(res, z0 + d, h)));
      sc = std::max(sc, std::abs(bargmann_weighted(g, z0 + d, h)));
    }
    const double omega = band_hi > 0.0 ? max_ds(phase, s, band_lo, band_hi) / h : 0.0;
    rep.s.push_back(s);
    rep.residual.push_back(r);
    rep.scale.push_back(sc);
    rep.floor.push_back(std::pow(omega * rep.ds, 2) / 6.0 * h * omega * sc);
  }
  return rep;
}

EvolutionReport evolution_residual_quadrature(const PhaseW& phase, const WeightedHolo& v,
                                              const std::vector<double>& s_grid, cplx base,
                                              const std::vector<cplx>& offsets, double h, const QuadOptions& opt,
                                              double ds_factor) {
  require_matching_h(phase, h);
  EvolutionReport rep;
  rep.ds = ds_factor * h;
  const QuadOptions& o = opt;
  for (double s : s_grid) {
    const double sm = std::max(0.0, s - rep.ds), sp = s + rep.ds;
    const double step = sp - sm;
    const cplx z0 = source_point(phase, s, base);
    std::vector<double> r(offsets.size()), m(offsets.size());
    double band_lo = 1e300, band_hi = 0.0;
    for (cplx d : offsets) {
      const double rad = auto_radius(phase, z0 + d, o);
      band_lo = std::min(band_lo, std::abs((z0 + d).imag()) - rad);
      band_hi = std::max(band_hi, std::abs((z0 + d).imag()) + rad);
    }
    parallel_for(static_cast<int>(offsets.size()), [&](int i) {
      const cplx z = z0 + offsets[i];
      // The contour is frozen at s; the s-dependence enters through W~ only.
      ContourSpec c = make_contour(phase, ContourKind::G0, s, z, auto_radius(phase, z, o));
      const double pz = phi0(z);
      const auto acc = integrate_contour<3>(c, h, o.nodes, o.v_scale, [&](double p, double q) {
        ContourPoint cp = contour_point(c, p, q);
        const cplx base_exp = I * (z - cp.y) * cp.eta / h + (phi0(cp.y) - pz) / h;
        const cplx vw = v(cp.y);
        const cplx e0 = std::exp(base_exp + I * wt(phase, s, cp.eta, o.injected_slope) / h);
        const cplx ep = std::exp(base_exp + I * wt(phase, sp, cp.eta, o.injected_slope) / h);
        const cplx em = std::exp(base_exp + I * wt(phase, sm, cp.eta, o.injected_slope) / h);
        return std::array<cplx, 3>{e0 * vw, (ep - em) / step * vw, ds_symbol(phase, s, cp.eta) * e0 * vw};
      });
      const cplx k = contour_jacobian(c) / (2.0 * kPi * h);
      r[i] = std::abs((I * h * acc[1] + acc[2]) * k);
      m[i] = std::abs(acc[0] * k);
    });
    const double omega = max_ds(phase, s, band_lo, band_hi) / h;
    rep.s.push_back(s);
    rep.residual.push_back(*std::max_element(r.begin(), r.end()));
    rep.scale.push_back(*std::max_element(m.begin(), m.end()));
    rep.floor.push_back(std::pow(omega * rep.ds, 2) / 6.0 * h * omega * rep.scale.back());
  }
  return rep;
}

cplx packet_transform_weighted(cplx z, double x1, double xi1, double h, double s) {
  const cplx c = h * cplx(1.0, -s);
  const cplx w = z - x1;
  const cplx u = w + I * c * xi1 / h;
  const cplx ex = u * u / (2.0 * c * (1.0 + c)) - w * w / (2.0 * c) + I * x1 * xi1 / h - phi0(z) / h;
  return std::sqrt(2.0 * kPi * h / (1.0 + c)) * std::exp(ex);
}

}  // namespace awf
