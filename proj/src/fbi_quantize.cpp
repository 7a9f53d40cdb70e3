#include "awf/fbi_quantize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace awf {

cplx FBIField::value(size_t iz, size_t ih) const { return weighted[iz][ih] * std::exp(phi0(z[iz]) / h[ih]); }

void FBIField::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::ConfigInvalid, "cannot write " + path);
  os << std::setprecision(17) << "re_z,im_z,h,re_val,im_val,weighted_mag\n";
  for (size_t i = 0; i < z.size(); ++i)
    for (size_t k = 0; k < h.size(); ++k) {
      const cplx v = value(i, k);
      os << z[i].real() << ',' << z[i].imag() << ',' << h[k] << ',' << v.real() << ',' << v.imag() << ','
         << weighted_magnitude(i, k) << '\n';
    }
}

namespace {

// e^{-(z-y)^2/2h - Phi0(z)/h} = e^{-(x-y)^2/2h - i b (x-y)/h} for z = x + i b.
inline cplx weighted_kernel(cplx z, double y, double h) {
  const double d = z.real() - y;
  return std::exp(cplx(-d * d / (2.0 * h), -z.imag() * d / h));
}

}  // namespace

cplx bargmann_weighted(const LineFunction& u, cplx z, double h, const BargmannOptions& opt) {
  const double half = opt.tail * std::sqrt(h);
  const double a = std::max(u.lo, z.real() - half), b = std::min(u.hi, z.real() + half);
  if (!(b > a)) return 0.0;
  std::vector<double> cuts{a};
  for (double c : u.breakpoints)
    if (c > a && c < b) cuts.push_back(c);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  // at most about one oscillation per panel
  const double freq = (std::abs(z.imag()) + u.max_frequency) / h;
  double width = std::sqrt(h) / 2.0;
  if (freq > 0.0) width = std::min(width, 2.0 * kPi / freq);
  const GaussRule& g = gauss_legendre(opt.panel_nodes);
  cplx acc = 0.0;
  for (size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k], hi = cuts[k + 1];
    const int m = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));
    const double w = (hi - lo) / m;
    for (int p = 0; p < m; ++p) {
      const double c = lo + (p + 0.5) * w;
      for (size_t i = 0; i < g.x.size(); ++i) {
        const double y = c + 0.5 * w * g.x[i];
        acc += 0.5 * w * g.w[i] * weighted_kernel(z, y, h) * u.f(y);
      }
    }
  }
  return acc;
}

cplx bargmann_weighted(const SampledLine& u, cplx z, double h) {
  if (u.values.empty()) return 0.0;
  const double half = 9.0 * std::sqrt(h);
  const long n = static_cast<long>(u.values.size());
  const long k0 = std::max(0L, static_cast<long>(std::floor((z.real() - half - u.y0) / u.dy)));
  const long k1 = std::min(n - 1, static_cast<long>(std::ceil((z.real() + half - u.y0) / u.dy)));
  cplx acc = 0.0;
  for (long k = k0; k <= k1; ++k) {
    const double y = u.y0 + k * u.dy;
    acc += weighted_kernel(z, y, h) * u.values[k];
  }
  return acc * u.dy;
}

FBIField bargmann(const LineFunction& u, const std::vector<cplx>& z_grid, const std::vector<double>& h_ladder,
                  const BargmannOptions& opt) {
  FBIField f;
  f.z = z_grid;
  f.h = h_ladder;
  f.weighted.assign(z_grid.size(), std::vector<cplx>(h_ladder.size()));
  parallel_for(static_cast<int>(z_grid.size()), [&](int i) {
    for (size_t k = 0; k < h_ladder.size(); ++k) f.weighted[i][k] = bargmann_weighted(u, z_grid[i], h_ladder[k], opt);
  });
  return f;
}

FBIField bargmann(const SampledLine& u, const std::vector<cplx>& z_grid, const std::vector<double>& h_ladder) {
  for (double h : h_ladder)
    if (u.dy > std::sqrt(h) / 8.0) {
      std::ostringstream os;
      os << "grid spacing " << u.dy << " exceeds sqrt(h)/8 = " << std::sqrt(h) / 8.0;
      fail(ErrorKind::UnresolvedIntegrand, os.str());
    }
  FBIField f;
  f.z = z_grid;
  f.h = h_ladder;
  f.weighted.assign(z_grid.size(), std::vector<cplx>(h_ladder.size()));
  parallel_for(static_cast<int>(z_grid.size()), [&](int i) {
    for (size_t k = 0; k < h_ladder.size(); ++k) f.weighted[i][k] = bargmann_weighted(u, z_grid[i], h_ladder[k]);
  });
  return f;
}

double DecayEstimate::min_delta_near(cplx z) const {
  double m = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const DecayPoint& p : points)
    if (std::abs(p.z - z) <= radius + 1e-12) {
      m = std::min(m, p.delta);
      any = true;
    }
  if (!any) fail(ErrorKind::PreconditionViolated, "no field point near the query");
  return m;
}

void DecayEstimate::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::ConfigInvalid, "cannot write " + path);
  os << std::setprecision(17) << "re_z,im_z,delta,r2\n";
  for (const DecayPoint& p : points) os << p.z.real() << ',' << p.z.imag() << ',' << p.delta << ',' << p.r2 << '\n';
}

DecayEstimate decay_rate(const FBIField& field, double threshold, double radius) {
  const size_t nh = field.h.size();
  if (nh < 4) fail(ErrorKind::PreconditionViolated, "decay fit needs at least 4 ladder points");
  const auto [hmin, hmax] = std::minmax_element(field.h.begin(), field.h.end());
  if (*hmax < 2.0 * *hmin) fail(ErrorKind::PreconditionViolated, "ladder must span an octave");
  DecayEstimate est;
  est.threshold = threshold;
  est.radius = radius;
  for (size_t i = 0; i < field.z.size(); ++i) {
    DecayPoint p;
    p.z = field.z[i];
    std::vector<std::vector<double>> d;
    std::vector<double> y;
    bool underflow = false;
    for (size_t k = 0; k < nh; ++k) {
      const double m = field.weighted_magnitude(i, k);
      if (!(m > std::numeric_limits<double>::min())) underflow = true;
      d.push_back({1.0, std::log(field.h[k]), 1.0 / field.h[k]});
      y.push_back(std::log(m));
    }
    if (underflow) {
      p.delta = std::numeric_limits<double>::infinity();
      p.r2 = 1.0;
    } else {
      LinearFit lf = least_squares(d, y);
      p.delta = -lf.coef[2];
      p.log_power = lf.coef[1];
      p.r2 = lf.r2;
    }
    est.points.push_back(p);
  }
  return est;
}

namespace {

cplx op_r_sum(const Symbol2& a, const Holo& v, cplx z, double h, double R, int nr, int na, double* scale) {
  // y = z + w, |w| < R^{-1/2}; zeta = -Im z - iR conj(w); dy dzeta -> (R / pi h) dA(w) with the
  // phase e^{i w Im z / h - R|w|^2 / h}.
  const double rho = 1.0 / std::sqrt(R);
  const GaussRule& g = gauss_legendre(nr);
  const double b = z.imag();
  const double pz = phi0(z);
  cplx acc = 0.0;
  double sc = 0.0;
  for (size_t i = 0; i < g.x.size(); ++i) {
    const double r = 0.5 * rho * (1.0 + g.x[i]);
    const double wr = 0.5 * rho * g.w[i] * r;
    for (int k = 0; k < na; ++k) {
      const double th = 2.0 * kPi * k / na;
      const cplx w = std::polar(r, th);
      const cplx y = z + w;
      const cplx zeta = cplx(-b, 0.0) - I * R * std::conj(w);
      const cplx val = a(0.5 * (y + z), zeta) * v(y);
      // weighted: subtract Phi0(z) in the exponent
      const cplx e = std::exp(I * w * b / h - R * r * r / h - pz / h);
      const cplx term = e * val;
      sc = std::max(sc, std::abs(val) * std::exp(-phi0(y) / h));
      acc += wr * term;
    }
  }
  *scale = sc;
  return acc * (2.0 * kPi / na) * R / (kPi * h) * std::exp(pz / h);
}

}  // namespace

cplx op_r_apply(const Symbol2& a, const Holo& v, cplx z, double h, const OpROptions& opt) {
  if (!(opt.R >= 1.0)) fail(ErrorKind::PreconditionViolated, "R must be >= 1");
  double s1 = 0.0, s2 = 0.0;
  const cplx c1 = op_r_sum(a, v, z, h, opt.R, opt.radial_nodes, opt.angular_nodes, &s1);
  const cplx c2 = op_r_sum(a, v, z, h, opt.R, 2 * opt.radial_nodes, 2 * opt.angular_nodes, &s2);
  const double scale = std::max(s1, s2) * std::exp(phi0(z) / h);
  if (std::abs(c1 - c2) > opt.rel_tol * scale) {
    std::ostringstream os;
    os << "Op_R quadrature moved by " << std::abs(c1 - c2) / scale << " relative under refinement";
    fail(ErrorKind::QuadratureNotConverged, os.str());
  }
  return c2;
}

IntertwiningReport intertwining_residual(const Holo& a, const LineFunction& u, const std::vector<cplx>& z_region,
                                         const std::vector<double>& h_ladder, const OpROptions& opt) {
  IntertwiningReport rep;
  LineFunction au = u;
  au.f = [&](double y) { return a(cplx(y, 0.0)) * u.f(y); };
  Symbol2 at = [&](cplx z, cplx zeta) { return a(z + I * zeta); };
  std::vector<double> inv_h, log_rms;
  for (double h : h_ladder) {
    std::vector<double> res(z_region.size());
    parallel_for(static_cast<int>(z_region.size()), [&](int i) {
      const cplx z = z_region[i];
      const cplx lhs = bargmann_weighted(au, z, h);
      Holo tu = [&](cplx y) { return bargmann_weighted(u, y, h) * std::exp(phi0(y) / h); };
      const cplx rhs = op_r_apply(at, tu, z, h, opt) * std::exp(-phi0(z) / h);
      res[i] = std::abs(lhs - rhs);
    });
    double sup = 0.0, ms = 0.0;
    for (double r : res) {
      sup = std::max(sup, r);
      ms += r * r;
    }
    const double rms = std::sqrt(ms / std::max<size_t>(1, res.size()));
    rep.h.push_back(h);
    rep.sup_residual.push_back(sup);
    rep.rms_residual.push_back(rms);
    inv_h.push_back(1.0 / h);
    log_rms.push_back(std::log(std::max(rms, 1e-300)));
  }
  if (h_ladder.size() >= 2) rep.slope = line_fit(inv_h, log_rms).coef[1];
  return rep;
}

}  // namespace awf
