#include "awf/contour_lab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace awf {

const char* to_string(Lemma l) { return l == Lemma::A1 ? "A1" : "A2"; }

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sgn(double x) { return x > 0.0 ? 1.0 : -1.0; }

void require_strip(const PhaseW& phase, cplx z) {
  if (std::abs(z.imag()) <= phase.config().delta0) {
    std::ostringstream os;
    os << "|Im z| = " << std::abs(z.imag()) << " must exceed delta0 = " << phase.config().delta0;
    fail(ErrorKind::PreconditionViolated, os.str());
  }
}

// d_xi W~(s, xi) and Hess W(s, xi) on the real axis.
struct Slope {
  double dw = 0.0, A = 0.0;
};

Slope slope(const PhaseW& phase, double s, double xi) {
  if (s == 0.0) return {};
  const WValue1 v = phase.eval1(s, xi);
  return {v.grad - phase.config().R_delta * sgn(xi), v.hess};
}

std::string where(double t, double s, cplx a, cplx b) {
  std::ostringstream os;
  os << " at t = " << t << ", s = " << s << ", point (" << a.real() << ", " << a.imag() << "; " << b.real() << ", "
     << b.imag() << ")";
  return os.str();
}

// Two complex numbers with |a| + |b| = radius * (fraction of the ball), angles from u[2], u[3].
std::pair<cplx, cplx> l1_ball(const std::vector<double>& u, double radius, bool boundary) {
  const double rho = boundary ? radius : radius * std::pow(u[0], 0.25);
  const double f = u[1];
  return {std::polar(rho * f, 2.0 * kPi * u[2]), std::polar(rho * (1.0 - f), 2.0 * kPi * u[3])};
}

void finish(DeformationReport& rep) {
  rep.delta_min = 1e300;
  rep.delta_spread = 1.0;
  std::vector<double> ts;
  for (const auto& row : rep.rows) {
    rep.delta_min = std::min(rep.delta_min, row.delta);
    if (std::find(ts.begin(), ts.end(), row.t) == ts.end()) ts.push_back(row.t);
  }
  for (double t : ts) {
    double lo = 1e300, hi = -1e300;
    for (const auto& row : rep.rows)
      if (row.t == t) {
        lo = std::min(lo, row.delta);
        hi = std::max(hi, row.delta);
      }
    if (lo > 0.0) rep.delta_spread = std::max(rep.delta_spread, hi / lo);
  }
}

}  // namespace

void DeformationReport::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::ConfigInvalid, "cannot write " + path);
  os << std::setprecision(17) << "lemma,t,s,delta_hat,boundary_max,containment_margin\n";
  for (const auto& row : rows)
    os << to_string(row.lemma) << ',' << row.t << ',' << row.s << ',' << row.delta << ',' << row.boundary_max << ','
       << row.containment << '\n';
}

// ---------------------------------------------------------------- A1

namespace {

struct A1Frame {
  const PhaseW* phase;
  double s, js;
  cplx z;
  Slope at_z;
  double At;  // A / <s>
};

A1Frame a1_frame(const PhaseW& phase, double s, cplx z) {
  require_strip(phase, z);
  A1Frame f{&phase, s, japanese(s), z, slope(phase, s, -z.imag()), 0.0};
  f.At = f.at_z.A / f.js;
  return f;
}

// Shift of the eta~ equation; vanishes at t = 1.
double a1_shift(const A1Frame& f, cplx y_t, cplx z_t, const A1Options& opt) {
  const cplx zp = f.z + z_t;
  const Slope at_zp = slope(*f.phase, f.s, -zp.imag());
  const double a = (-z_t.real() + f.at_z.dw - at_zp.dw) / f.js;
  if (opt.displayed_shift) return a;
  // exact pull-back of gamma(s, z'), whose Hessian is taken at z'
  const double At_p = at_zp.A / f.js;
  return a - At_p * z_t.imag() + (At_p - f.At) * y_t.imag();
}

A1Sample a1_eval(const A1Frame& f, double t, cplx y_t, cplx z_t, const A1Options& opt) {
  const double shift = a1_shift(f, y_t, z_t, opt);
  A1Sample o;
  o.eta_t = -I * std::conj(y_t) - I * (f.At * y_t.imag() + (1.0 - t) * shift);
  o.zeta_t = -I * opt.R * std::conj(z_t) - t * y_t.imag() - I * (t / f.js) * (y_t.real() + f.At * y_t.imag());
  const double iz = f.z.imag();
  o.eta = cplx(o.eta_t.real() - iz, o.eta_t.imag() / f.js);
  o.y = f.z + f.at_z.dw + f.js * y_t.real() + I * y_t.imag();
  o.zeta = o.zeta_t - iz;
  o.z_prime = f.z + z_t;
  const cplx w = f.phase->wtilde_complex(f.s, o.eta).first;
  o.phase = phi0(o.y) - phi0(f.z) - std::imag((f.z - o.z_prime) * o.zeta + (o.z_prime - o.y) * o.eta + w);
  return o;
}

// Residual of the defining equations of Gamma_0 (t = 0) or Gamma_1 (t = 1), eta scaled by <s>.
double a1_endpoint_residual(const A1Frame& f, const A1Sample& p, double R, bool start) {
  const cplx base = start ? p.z_prime : f.z;
  const Slope sl = start ? slope(*f.phase, f.s, -base.imag()) : f.at_z;
  const double im_eta =
      (std::real(base - p.y) + sl.dw + sl.A * std::imag(base - p.y)) / (f.js * f.js);
  double r = std::max(std::abs(p.eta.real() + p.y.imag()), f.js * std::abs(p.eta.imag() - im_eta));
  if (start) {
    r = std::max(r, std::abs(p.zeta - (-f.z.imag() + I * R * std::conj(f.z - p.z_prime))));
  } else {
    r = std::max(r, R * std::abs(p.z_prime - (f.z - I / R * std::conj(p.zeta - p.eta))));
  }
  return r;
}

// Slack of (y~, z~) inside the tilde domains of Gamma_0 and Gamma_1 (positive inside both).
double a1_inclusion(const A1Frame& f, cplx y_t, cplx z_t, const A1Options& opt) {
  const cplx zp = f.z + z_t;
  const double a = (-z_t.real() + f.at_z.dw - slope(*f.phase, f.s, -zp.imag()).dw) / f.js;
  const double g0 = opt.r - (std::abs(y_t.real() + a) + std::abs(y_t.imag() - z_t.imag()));
  const double g1 = opt.r - (std::abs(y_t.real()) + std::abs(y_t.imag()));
  return std::min({g0, g1, opt.r - std::abs(z_t)});
}

}  // namespace

A1Sample a1_point(const PhaseW& phase, double s, cplx z, double t, cplx y_t, cplx z_t, const A1Options& opt) {
  return a1_eval(a1_frame(phase, s, z), t, y_t, z_t, opt);
}

DeformationReport certify_deformation_A1(const PhaseW& phase, const std::vector<double>& s_grid, cplx z,
                                         const std::vector<double>& t_grid, const A1Options& opt) {
  if (opt.R < opt.R_floor) {
    std::ostringstream os;
    os << "R = " << opt.R << " below the floor " << opt.R_floor;
    fail(ErrorKind::PreconditionViolated, os.str());
  }
  require_strip(phase, z);
  const double inner = opt.inner_fraction * opt.r;
  const auto interior = sobol_points(opt.samples, 4);
  const auto boundary = sobol_points(opt.boundary_samples, 4);
  const auto outer = sobol_points(opt.complement_samples, 4);

  DeformationReport rep;
  rep.lemma = Lemma::A1;
  auto violated = [&](const std::string& msg) {
    if (rep.failure.empty()) rep.failure = msg;
    if (opt.throw_on_failure) fail(ErrorKind::MarginViolated, msg);
  };

  for (double s : s_grid) {
    const A1Frame f = a1_frame(phase, s, z);
    for (double t : t_grid) {
      DeformationRow row;
      row.lemma = Lemma::A1;
      row.t = t;
      row.s = s;
      row.samples = opt.samples;
      const bool endpoint = t == 0.0 || t == 1.0;

      std::vector<double> ratio(interior.size()), ratio_p(interior.size()), incl(interior.size()),
          resid(interior.size(), 0.0), value(interior.size());
      parallel_for(static_cast<int>(interior.size()), [&](int k) {
        const auto [yt, zt] = l1_ball(interior[k], inner, false);
        const A1Sample p = a1_eval(f, t, yt, zt, opt);
        const double n = std::norm(p.eta_t) + std::norm(p.zeta_t);
        const double np = std::norm(yt) + std::norm(zt);
        value[k] = p.phase;
        ratio[k] = n > 0.0 ? -p.phase / n : 1e300;
        ratio_p[k] = np > 0.0 ? -p.phase / np : 1e300;
        incl[k] = a1_inclusion(f, yt, zt, opt);
        if (endpoint) resid[k] = a1_endpoint_residual(f, p, opt.R, t == 0.0);
      });
      const auto worst = std::min_element(ratio.begin(), ratio.end()) - ratio.begin();
      row.delta = ratio[worst];
      row.delta_param = *std::min_element(ratio_p.begin(), ratio_p.end());
      row.containment = *std::min_element(incl.begin(), incl.end());
      row.inclusion = row.containment;
      row.endpoint_residual = endpoint ? *std::max_element(resid.begin(), resid.end()) : kNaN;

      std::vector<double> bvals(boundary.size());
      parallel_for(static_cast<int>(boundary.size()), [&](int k) {
        const auto [yt, zt] = l1_ball(boundary[k], inner, true);
        bvals[k] = a1_eval(f, t, yt, zt, opt).phase;
      });
      row.boundary_max = *std::max_element(bvals.begin(), bvals.end());

      // Gamma_j minus the retained part: full endpoint domains with |y~| + |z~| >= inner.
      row.complement_max = kNaN;
      if (endpoint) {
        std::vector<double> cv(outer.size(), -1e300);
        std::vector<int> used(outer.size(), 0);
        parallel_for(static_cast<int>(outer.size()), [&](int k) {
          const auto& u = outer[k];
          const cplx zt = std::polar(opt.r * std::sqrt(u[0]), 2.0 * kPi * u[1]);
          // diamond |P| + |Q| < r
          const double P = opt.r * (2.0 * u[2] - 1.0), Q = opt.r * (2.0 * u[3] - 1.0);
          const double dp = 0.5 * (P + Q), dq = 0.5 * (P - Q);
          cplx yt;
          if (t == 0.0) {
            const cplx zp = z + zt;
            const double a = (-zt.real() + f.at_z.dw - slope(phase, s, -zp.imag()).dw) / f.js;
            yt = cplx(dp - a, dq + zt.imag());
          } else {
            yt = cplx(dp, dq);
          }
          if (std::abs(yt) + std::abs(zt) < inner) return;
          used[k] = 1;
          cv[k] = a1_eval(f, t, yt, zt, opt).phase;
        });
        row.complement_max = *std::max_element(cv.begin(), cv.end());
        for (int u : used) row.complement_samples += u;
      }

      if (row.containment <= 0.0) {
        std::ostringstream os;
        os << "deformed contour leaves the endpoint domains (slack " << row.containment << ") at t = " << t
           << ", s = " << s << "; lower inner_fraction";
        fail(ErrorKind::PreconditionViolated, os.str());
      }
      if (!(row.delta > 0.0)) {
        const auto [yt, zt] = l1_ball(interior[worst], inner, false);
        std::ostringstream os;
        os << "phase " << value[worst] << " not below Phi0(z)" << where(t, s, yt, zt);
        violated(os.str());
      }
      if (!(row.boundary_max < 0.0)) {
        std::ostringstream os;
        os << "boundary margin " << row.boundary_max << " is not negative at t = " << t << ", s = " << s;
        violated(os.str());
      }
      if (endpoint && row.complement_samples > 0 && !(row.complement_max < 0.0)) {
        std::ostringstream os;
        os << "phase " << row.complement_max << " off the retained sub-contour at t = " << t << ", s = " << s;
        violated(os.str());
      }
      rep.rows.push_back(row);
    }
  }
  finish(rep);
  rep.pass = rep.failure.empty();
  return rep;
}

double critical_R(const PhaseW& phase, const std::vector<double>& s_grid, cplx z, const std::vector<double>& t_grid,
                  A1Options opt, double lo, double hi, double rel_tol) {
  opt.throw_on_failure = false;
  opt.R_floor = 0.0;
  auto passes = [&](double R) {
    opt.R = R;
    return certify_deformation_A1(phase, s_grid, z, t_grid, opt).pass;
  };
  if (!passes(hi)) fail(ErrorKind::MarginViolated, "certificate fails at the upper end of the R bracket");
  if (passes(lo)) return lo;
  while (hi - lo > rel_tol * hi) {
    const double mid = std::sqrt(lo * hi);
    (passes(mid) ? hi : lo) = mid;
  }
  return hi;
}

// ---------------------------------------------------------------- A2

cplx wtilde1(const PhaseW& phase, double s, cplx zeta, cplx eta, int nodes) {
  const GaussRule& g = gauss_legendre(nodes);
  cplx acc = 0.0;
  for (size_t k = 0; k < g.x.size(); ++k) {
    const double tau = 0.5 * (g.x[k] + 1.0);
    acc += 0.5 * g.w[k] * phase.wtilde_complex(s, tau * zeta + (1.0 - tau) * eta).second;
  }
  return acc;
}

namespace {

using Vec4 = Eigen::Vector4d;

// Gamma' equations for (zeta, eta) = (u0 + i u1, u2 + i u3):
//   (y + W~_1, zeta) in gamma(s, z),  (x, eta) in gamma'(s, y + W~_1).
Vec4 gamma_prime_residual(const PhaseW& phase, double s, double js, const Slope& at_z, cplx z, cplx x, cplx y,
                          const Vec4& u, int nodes) {
  const cplx zeta(u[0], u[1]), eta(u[2], u[3]);
  const cplx yp = y + wtilde1(phase, s, zeta, eta, nodes);
  const Slope at_yp = slope(phase, s, -yp.imag());
  const double j2 = js * js;
  Vec4 e;
  e[0] = zeta.real() + yp.imag();
  e[1] = j2 * zeta.imag() - (std::real(z - yp) + at_z.dw + at_z.A * std::imag(z - yp));
  e[2] = eta.real() + x.imag();
  e[3] = j2 * eta.imag() - (std::real(yp - x) - at_yp.dw - at_yp.A * std::imag(yp - x));
  return e;
}

// Slack of (x, y) inside the domain of Gamma' once (zeta, eta) is known.
double gamma_prime_slack(const PhaseW& phase, double s, double js, const Slope& at_z, cplx z, cplx x, cplx y,
                         cplx zeta, cplx eta, double r, int nodes) {
  const cplx yp = y + wtilde1(phase, s, zeta, eta, nodes);
  const Slope at_yp = slope(phase, s, -yp.imag());
  const double g = r - (std::abs(std::real(z - yp) + at_z.dw) / js + std::abs(std::imag(z - yp)));
  const double gp = r - (std::abs(std::real(yp - x) - at_yp.dw) / js + std::abs(std::imag(yp - x)));
  return std::min(g, gp);
}

std::pair<cplx, cplx> solve_start(const PhaseW& phase, double s, cplx z, cplx x, cplx y, const A2Options& opt) {
  const double js = japanese(s);
  const Slope at_z = slope(phase, s, -z.imag());
  Vec4 u(-z.imag(), 0.0, -z.imag(), 0.0);
  Vec4 e = gamma_prime_residual(phase, s, js, at_z, z, x, y, u, opt.w1_nodes);
  for (int it = 0; it < opt.newton_max; ++it) {
    if (e.lpNorm<Eigen::Infinity>() <= opt.newton_tol * (1.0 + js)) return {cplx(u[0], u[1]), cplx(u[2], u[3])};
    Eigen::Matrix4d J;
    for (int c = 0; c < 4; ++c) {
      const double hstep = 1e-6 * (c % 2 == 1 ? 1.0 / js : 1.0);
      Vec4 up = u, um = u;
      up[c] += hstep;
      um[c] -= hstep;
      J.col(c) = (gamma_prime_residual(phase, s, js, at_z, z, x, y, up, opt.w1_nodes) -
                  gamma_prime_residual(phase, s, js, at_z, z, x, y, um, opt.w1_nodes)) /
                 (2.0 * hstep);
    }
    u -= J.fullPivLu().solve(e);
    e = gamma_prime_residual(phase, s, js, at_z, z, x, y, u, opt.w1_nodes);
  }
  if (e.lpNorm<Eigen::Infinity>() <= 1e3 * opt.newton_tol * (1.0 + js)) return {cplx(u[0], u[1]), cplx(u[2], u[3])};
  std::ostringstream os;
  os << "Gamma' solve did not converge (residual " << e.lpNorm<Eigen::Infinity>() << ") at s = " << s;
  fail(ErrorKind::NewtonDiverged, os.str());
}

double rho_t(double t, double js) { return std::sqrt((1.0 - t) / (js * js) + t); }

// Rescaled copy of a point: Re(p_j - z) = <s>^{1-j} rho_t Re(p - z), Im unchanged.
cplx rescale(cplx z, cplx p, double factor) { return cplx(z.real() + factor * (p.real() - z.real()), p.imag()); }

double a2_phase(cplx z, cplx x, cplx y, cplx zeta, cplx eta) {
  return phi0(x) - phi0(z) - std::imag((y - x) * eta + (z - y) * zeta);
}

}  // namespace

std::pair<cplx, cplx> a2_solve_start(const PhaseW& phase, double s, cplx z, cplx x, cplx y, const A2Options& opt) {
  require_strip(phase, z);
  return solve_start(phase, s, z, x, y, opt);
}

std::pair<cplx, cplx> a2_limit(cplx z, cplx x, cplx y) {
  const cplx eta = -z.imag() + I * std::conj(z - x);
  return {eta + I * std::conj(z - y), eta};
}

A2Sample a2_point(const PhaseW& phase, double s, cplx z, double t, cplx x, cplx y, const A2Options& opt) {
  const double js = japanese(s);
  const double rho = rho_t(t, js);
  std::pair<cplx, cplx> start{0.0, 0.0}, limit{0.0, 0.0};
  if (t < 1.0) start = solve_start(phase, s, z, rescale(z, x, js * rho), rescale(z, y, js * rho), opt);
  if (t > 0.0) limit = a2_limit(z, rescale(z, x, rho), rescale(z, y, rho));
  const double lim_scale = opt.rho_on_limit ? rho : 1.0;
  auto blend = [&](cplx a, cplx b) {
    return cplx((1.0 - t) * a.real() + t * b.real(), (1.0 - t) * js * rho * a.imag() + t * lim_scale * b.imag());
  };
  A2Sample o;
  o.zeta = blend(start.first, limit.first);
  o.eta = blend(start.second, limit.second);
  o.phase = a2_phase(z, x, y, o.zeta, o.eta);
  const cplx dx = z - x, dy = z - y;
  o.norm = rho * rho * (dy.real() * dy.real() + dx.real() * dx.real()) + dy.imag() * dy.imag() +
           dx.imag() * dx.imag();
  o.w = y + wtilde1(phase, s, o.zeta, o.eta, opt.w1_nodes);
  return o;
}

DeformationReport certify_deformation_A2(const PhaseW& phase, const std::vector<double>& s_grid, cplx z_plus,
                                         const std::vector<double>& t_grid, const A2Options& opt) {
  if (!(opt.r0 > 0.0 && opt.r0 <= opt.r)) fail(ErrorKind::PreconditionViolated, "need 0 < r0 <= r");
  const double nu = phase.family().nu;
  DeformationReport rep;
  rep.lemma = Lemma::A2;
  auto violated = [&](ErrorKind kind, const std::string& msg) {
    if (rep.failure.empty()) rep.failure = std::string(to_string(kind)) + ": " + msg;
    if (opt.throw_on_failure) fail(kind, msg);
  };

  for (double s : s_grid) {
    const double js = japanese(s);
    const double shrink = 0.99 * opt.eps;
    const std::vector<cplx> zs = {z_plus, z_plus + js * shrink, z_plus - js * shrink, z_plus + I * shrink,
                                  z_plus - I * shrink};
    for (cplx z : zs) require_strip(phase, z);
    const int per_z = std::max(1, opt.samples / static_cast<int>(zs.size()));
    const int per_z_b = std::max(1, opt.boundary_samples / static_cast<int>(zs.size()));
    const int per_z_c = std::max(1, opt.complement_samples / static_cast<int>(zs.size()));
    const int nz = static_cast<int>(zs.size());
    // each z takes its own slice of the sequence
    const auto interior_all = sobol_points(per_z * nz, 4);
    const auto boundary_all = sobol_points(per_z_b * nz, 4);
    const auto outer_all = sobol_points(per_z_c * nz, 4);
    auto slice = [](const std::vector<std::vector<double>>& all, int iz, int n) {
      return std::vector<std::vector<double>>(all.begin() + iz * n, all.begin() + (iz + 1) * n);
    };

    for (double t : t_grid) {
      const double rho = rho_t(t, js);
      const bool endpoint = t == 0.0 || t == 1.0;
      DeformationRow row;
      row.lemma = Lemma::A2;
      row.t = t;
      row.s = s;
      row.delta = 1e300;
      row.delta_param = kNaN;
      row.boundary_max = -1e300;
      row.containment = 1e300;
      row.coefficient_containment = 1e300;
      row.inclusion = 1e300;
      row.complement_max = endpoint ? -1e300 : kNaN;
      row.endpoint_residual = endpoint ? 0.0 : kNaN;
      cplx worst_x, worst_y;
      double worst_value = 0.0;
      cplx exit_w;

      // (x, y) in B_t x B_t: unit disks stretched by 1 / rho_t along Re.
      auto in_bt = [&](cplx z, double a, double b) {
        return z + cplx(opt.r0 * a / rho, opt.r0 * b);
      };
      for (int iz = 0; iz < nz; ++iz) {
        const cplx z = zs[iz];
        const auto interior = slice(interior_all, iz, per_z);
        const auto boundary = slice(boundary_all, iz, per_z_b);
        const auto outer = slice(outer_all, iz, per_z_c);
        const int n = static_cast<int>(interior.size());
        std::vector<double> ratio(n), cont(n), ccont(n), resid(n, 0.0), incl(n, 1e300), val(n);
        std::vector<cplx> xs(n), ys(n), ws(n);
        parallel_for(n, [&](int k) {
          const auto& u = interior[k];
          const double ra = std::sqrt(u[0]), rb = std::sqrt(u[1]);
          const cplx x = in_bt(z, ra * std::cos(2 * kPi * u[2]), ra * std::sin(2 * kPi * u[2]));
          const cplx y = in_bt(z, rb * std::cos(2 * kPi * u[3]), rb * std::sin(2 * kPi * u[3]));
          const A2Sample p = a2_point(phase, s, z, t, x, y, opt);
          xs[k] = x;
          ys[k] = y;
          ws[k] = p.w;
          val[k] = p.phase;
          ratio[k] = p.norm > 0.0 ? -p.phase / p.norm : 1e300;
          cont[k] = nu * japanese(p.w.real()) - std::abs(p.w.imag());
          const cplx wc = p.w + I * p.eta;
          ccont[k] = nu * japanese(wc.real()) - std::abs(wc.imag());
          if (t == 0.0) {
            const Slope at_z = slope(phase, s, -z.imag());
            Vec4 uu(p.zeta.real(), p.zeta.imag(), p.eta.real(), p.eta.imag());
            const Vec4 e = gamma_prime_residual(phase, s, js, at_z, z, x, y, uu, opt.w1_nodes);
            resid[k] = e.lpNorm<Eigen::Infinity>() / (js * js);
            incl[k] = gamma_prime_slack(phase, s, js, at_z, z, x, y, p.zeta, p.eta, opt.r, opt.w1_nodes);
          } else if (t == 1.0) {
            const auto [zl, el] = a2_limit(z, x, y);
            resid[k] = std::max(std::abs(zl - p.zeta), std::abs(el - p.eta));
            incl[k] = opt.r - std::max(std::abs(z - x), std::abs(z - y));
          }
        });
        for (int k = 0; k < n; ++k) {
          if (ratio[k] < row.delta) {
            row.delta = ratio[k];
            worst_x = xs[k];
            worst_y = ys[k];
            worst_value = val[k];
          }
          if (cont[k] < row.containment) {
            row.containment = cont[k];
            exit_w = ws[k];
          }
          row.coefficient_containment = std::min(row.coefficient_containment, ccont[k]);
          if (endpoint) row.endpoint_residual = std::max(row.endpoint_residual, resid[k]);
          row.inclusion = std::min(row.inclusion, incl[k]);
        }
        row.samples += n;

        const int nb = static_cast<int>(boundary.size());
        std::vector<double> bv(nb);
        parallel_for(nb, [&](int k) {
          const auto& u = boundary[k];
          // one of x, y on the rim of B_t
          const double ra = k % 2 == 0 ? 1.0 : std::sqrt(u[0]), rb = k % 2 == 0 ? std::sqrt(u[1]) : 1.0;
          const cplx x = in_bt(z, ra * std::cos(2 * kPi * u[2]), ra * std::sin(2 * kPi * u[2]));
          const cplx y = in_bt(z, rb * std::cos(2 * kPi * u[3]), rb * std::sin(2 * kPi * u[3]));
          bv[k] = a2_point(phase, s, z, t, x, y, opt).phase;
        });
        row.boundary_max = std::max(row.boundary_max, *std::max_element(bv.begin(), bv.end()));

        if (endpoint) {
          const int nc = static_cast<int>(outer.size());
          std::vector<double> cv(nc, -1e300);
          std::vector<int> used(nc, 0);
          const Slope at_z = slope(phase, s, -z.imag());
          parallel_for(nc, [&](int k) {
            const auto& u = outer[k];
            cplx x, y;
            if (t == 1.0) {
              x = z + std::polar(opt.r * std::sqrt(u[0]), 2 * kPi * u[2]);
              y = z + std::polar(opt.r * std::sqrt(u[1]), 2 * kPi * u[3]);
              if (std::abs(z - x) < opt.r0 && std::abs(z - y) < opt.r0) return;
              const auto [zl, el] = a2_limit(z, x, y);
              cv[k] = a2_phase(z, x, y, zl, el);
            } else {
              // y in the diamond of gamma(s, z), x in a diamond around y; filtered by the exact domain
              auto diamond = [&](double a, double b) {
                const double P = opt.r * (2.0 * a - 1.0), Q = opt.r * (2.0 * b - 1.0);
                return cplx(js * 0.5 * (P + Q), 0.5 * (P - Q));
              };
              y = z + diamond(u[0], u[1]);
              x = y + diamond(u[2], u[3]);
              const cplx dx = z - x, dy = z - y;
              const double inx = std::norm(dx.real() / js) + std::norm(dx.imag());
              const double iny = std::norm(dy.real() / js) + std::norm(dy.imag());
              if (inx < opt.r0 * opt.r0 && iny < opt.r0 * opt.r0) return;
              std::pair<cplx, cplx> fg;
              try {
                fg = solve_start(phase, s, z, x, y, opt);
              } catch (const Error&) {
                return;
              }
              if (gamma_prime_slack(phase, s, js, at_z, z, x, y, fg.first, fg.second, opt.r, opt.w1_nodes) <= 0.0)
                return;
              cv[k] = a2_phase(z, x, y, fg.first, fg.second);
            }
            used[k] = 1;
          });
          row.complement_max = std::max(row.complement_max, *std::max_element(cv.begin(), cv.end()));
          for (int u : used) row.complement_samples += u;
        }
      }

      if (row.inclusion <= 0.0) {
        std::ostringstream os;
        os << "retained sub-contour leaves the endpoint contour (slack " << row.inclusion << ") at t = " << t
           << ", s = " << s << "; lower r0";
        fail(ErrorKind::PreconditionViolated, os.str());
      }
      if (!(row.delta > 0.0)) {
        std::ostringstream os;
        os << "phase " << worst_value << " not below Phi0(z)" << where(t, s, worst_x, worst_y);
        violated(ErrorKind::MarginViolated, os.str());
      }
      if (!(row.boundary_max < 0.0)) {
        std::ostringstream os;
        os << "boundary margin " << row.boundary_max << " is not negative at t = " << t << ", s = " << s;
        violated(ErrorKind::MarginViolated, os.str());
      }
      if (endpoint && row.complement_samples > 0 && !(row.complement_max < 0.0)) {
        std::ostringstream os;
        os << "phase " << row.complement_max << " off the retained sub-contour at t = " << t << ", s = " << s;
        violated(ErrorKind::MarginViolated, os.str());
      }
      if (!(row.containment > 0.0)) {
        std::ostringstream os;
        os << "y + W~_1 = (" << exit_w.real() << ", " << exit_w.imag() << ") leaves |Im| < nu <Re> at t = " << t
           << ", s = " << s;
        violated(ErrorKind::DomainExit, os.str());
      }
      rep.rows.push_back(row);
    }
  }
  finish(rep);
  rep.pass = rep.failure.empty();
  return rep;
}

}  // namespace awf
