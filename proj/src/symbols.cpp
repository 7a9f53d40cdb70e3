#include "awf/symbols.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <sstream>

namespace awf {

namespace {

RMat shape_of(const MetricFamily& fam) {
  if (fam.shape.rows() == fam.dim && fam.shape.cols() == fam.dim) return fam.shape;
  return RMat::Identity(fam.dim, fam.dim);
}

cplx bilinear_square(const CVec& x) {
  cplx s = 0.0;
  for (int j = 0; j < x.size(); ++j) s += x(j) * x(j);
  return s;
}

}  // namespace

MetricFamily make_family(const std::string& name, double eps, double sigma, double nu, int dim) {
  MetricFamily f;
  f.name = name;
  f.sigma = sigma;
  f.nu = nu;
  f.dim = dim;
  if (name == "flat") {
  } else if (name == "metric_bump") {
    f.eps_bump = eps;
  } else if (name == "metric_longrange") {
    f.eps_longrange = eps;
  } else if (name == "drift") {
    f.eps_drift = eps;
  } else if (name == "potential") {
    f.eps_potential = eps;
  } else {
    fail(ErrorKind::ConfigInvalid, "unknown family '" + name + "'");
  }
  f.params["eps"] = name == "flat" ? 0.0 : eps;
  finalize_family(f);
  return f;
}

double closed_form_C0(const MetricFamily& fam) {
  const double nu2 = fam.nu * fam.nu;
  const double s = fam.sigma;
  const RMat M = shape_of(fam);
  const double mmax = M.cwiseAbs().maxCoeff();
  // |1+x^2| >= (1-nu^2)/(1+nu^2) (1+|x|^2) on Gamma_nu.
  const double lower = std::pow((1.0 + nu2) / (1.0 - nu2), s / 2.0);
  // e^{-Re x^2} <x>^s is maximal at Re x = 0 for sigma <= 2(1-nu^2).
  double bump = std::exp(nu2) * std::pow(1.0 + nu2, s / 2.0);
  const double wstar = s / (2.0 * (1.0 - nu2));
  if (wstar > 1.0) bump *= std::exp(-(1.0 - nu2) * (wstar - 1.0)) * std::pow(wstar, s / 2.0);
  double c_metric = mmax * (std::abs(fam.eps_bump) * bump + std::abs(fam.eps_longrange) * lower);
  double c_drift = std::abs(fam.eps_drift) * lower;
  double c_pot = std::abs(fam.eps_potential);
  double c = std::max({c_metric, c_drift, c_pot});
  return c > 0.0 ? c : 1.0;
}

void finalize_family(MetricFamily& fam) {
  if (fam.dim < 1 || fam.dim > kMaxDim) fail(ErrorKind::ConfigInvalid, "dim out of range");
  if (!(fam.sigma > 0.0 && fam.sigma <= 1.0)) fail(ErrorKind::ConfigInvalid, "sigma must lie in (0,1]");
  if (!(fam.nu > 0.0 && fam.nu <= 0.5)) fail(ErrorKind::ConfigInvalid, "nu must lie in (0,0.5]");
  if (fam.shape.size() == 0) fam.shape = RMat::Identity(fam.dim, fam.dim);
  if ((fam.shape - fam.shape.transpose()).cwiseAbs().maxCoeff() > 0.0)
    fail(ErrorKind::ConfigInvalid, "metric shape must be symmetric");
  fam.C0 = closed_form_C0(fam);
}

bool in_domain(const MetricFamily& fam, const CVec& x, double safety) {
  RVec re = x.real();
  RVec im = x.imag();
  return im.norm() < safety * fam.nu * japanese(re);
}

Coeffs eval_coeffs_unchecked(const MetricFamily& fam, const CVec& x) {
  const int n = fam.dim;
  Coeffs c;
  const cplx x2 = bilinear_square(x);
  const cplx one_x2 = 1.0 + x2;
  cplx g = 0.0;
  if (fam.eps_bump != 0.0) g += fam.eps_bump * std::exp(-x2);
  if (fam.eps_longrange != 0.0) g += fam.eps_longrange * std::pow(one_x2, -fam.sigma / 2.0);
  c.a = CMat::Identity(n, n);
  if (g != 0.0) c.a += g * shape_of(fam).cast<cplx>();
  c.b = CVec::Zero(n);
  if (fam.eps_drift != 0.0) c.b = fam.eps_drift * std::pow(one_x2, -fam.sigma / 2.0) * x;
  c.c = fam.eps_potential != 0.0 ? fam.eps_potential * std::pow(one_x2, (2.0 - fam.sigma) / 2.0) : cplx(0.0);
  return c;
}

Coeffs eval_coeffs(const MetricFamily& fam, const CVec& x, double safety) {
  if (x.size() != fam.dim) fail(ErrorKind::PreconditionViolated, "dimension mismatch");
  if (!in_domain(fam, x, safety)) {
    std::ostringstream os;
    os << "|Im x| >= " << safety << " nu <Re x> at x = " << x.transpose();
    fail(ErrorKind::PointOutsideDomain, os.str());
  }
  return eval_coeffs_unchecked(fam, x);
}

CoeffsWithGrad eval_coeffs_grad(const MetricFamily& fam, const CVec& x) {
  const int n = fam.dim;
  CoeffsWithGrad out;
  out.v = eval_coeffs_unchecked(fam, x);
  const cplx x2 = bilinear_square(x);
  const cplx one_x2 = 1.0 + x2;
  const RMat M = shape_of(fam);
  // d_l g for the metric profile.
  cplx gb = fam.eps_bump != 0.0 ? fam.eps_bump * std::exp(-x2) : cplx(0.0);
  cplx pl = fam.eps_longrange != 0.0 ? fam.eps_longrange * std::pow(one_x2, -fam.sigma / 2.0 - 1.0) : cplx(0.0);
  cplx pd = fam.eps_drift != 0.0 ? std::pow(one_x2, -fam.sigma / 2.0) : cplx(0.0);
  cplx pp = fam.eps_potential != 0.0 ? std::pow(one_x2, -fam.sigma / 2.0) : cplx(0.0);
  out.dc = CVec::Zero(n);
  for (int l = 0; l < n; ++l) {
    const cplx dg = -2.0 * x(l) * gb - fam.sigma * x(l) * pl;
    out.da[l] = dg * M.cast<cplx>();
    out.db[l] = CVec::Zero(n);
    if (fam.eps_drift != 0.0) {
      const cplx pd1 = pd / one_x2;
      for (int j = 0; j < n; ++j)
        out.db[l](j) = fam.eps_drift * ((j == l ? pd : cplx(0.0)) - fam.sigma * x(j) * x(l) * pd1);
    }
    if (fam.eps_potential != 0.0) out.dc(l) = fam.eps_potential * (2.0 - fam.sigma) * x(l) * pp;
  }
  return out;
}

QParts q_parts(const MetricFamily& fam, const CVec& x, const CVec& xi) {
  const Coeffs c = eval_coeffs(fam, x);
  QParts p;
  p.q0 = 0.5 * xi.transpose() * c.a * xi;
  p.q1 = (c.b.transpose() * xi)(0);
  p.q2 = c.c;
  return p;
}

cplx q_total(const MetricFamily& fam, const CVec& x, const CVec& xi, double h) {
  const QParts p = q_parts(fam, x, xi);
  return p.q0 + h * p.q1 + h * h * p.q2;
}

cplx q_total(const MetricFamily& fam, const SymbolPoint& pt) { return q_total(fam, pt.x, pt.xi, pt.h); }

cplx tilde_q(const MetricFamily& fam, const CVec& z, const CVec& zeta, int order) {
  CVec w = z + I * zeta;
  const QParts p = q_parts(fam, w, zeta);
  switch (order) {
    case 0: return p.q0;
    case 1: return p.q1;
    case 2: return p.q2;
    default: fail(ErrorKind::PreconditionViolated, "order must be 0, 1 or 2");
  }
}

QGrad q_grad(const MetricFamily& fam, const CVec& x, const CVec& xi, double h) {
  const int n = fam.dim;
  const CoeffsWithGrad c = eval_coeffs_grad(fam, x);
  QGrad g;
  g.q = 0.5 * (xi.transpose() * c.v.a * xi)(0) + h * (c.v.b.transpose() * xi)(0) + h * h * c.v.c;
  g.dxi = c.v.a * xi + h * c.v.b;
  g.dx = CVec::Zero(n);
  for (int l = 0; l < n; ++l)
    g.dx(l) = 0.5 * (xi.transpose() * c.da[l] * xi)(0) + h * (c.db[l].transpose() * xi)(0) + h * h * c.dc(l);
  return g;
}

CVec vec1(cplx v) {
  CVec r(1);
  r(0) = v;
  return r;
}

cplx q_total1(const MetricFamily& fam, cplx x, cplx xi, double h) { return q_total(fam, vec1(x), vec1(xi), h); }

QGrad q_grad1(const MetricFamily& fam, cplx x, cplx xi, double h) { return q_grad(fam, vec1(x), vec1(xi), h); }

AssumptionReport sample_assumption_a(const MetricFamily& fam, const AssumptionGrid& grid) {
  const int n = fam.dim;
  const int P = grid.points_per_axis;
  AssumptionReport rep;
  rep.min_eigenvalue = 1e300;
  rep.worst_point = CVec::Zero(n);
  std::vector<RVec> dirs;
  for (int j = 0; j < n; ++j) dirs.push_back(RVec::Unit(n, j));
  if (n > 1) dirs.push_back(RVec::Ones(n) / std::sqrt(double(n)));
  for (const RVec& d : dirs) {
    // sinh-graded radii: dense near the origin where the profiles vary, plus t = 0.
    const double alpha = std::asinh(grid.R_max);
    for (int i = 0; i <= P; ++i) {
      const double t = i == P ? 0.0 : grid.R_max * std::sinh(alpha * (-1.0 + 2.0 * i / (P - 1))) / std::sinh(alpha);
      const RVec re = t * d;
      const double bound_im = grid.safety * fam.nu * japanese(re);
      for (int k = 0; k <= P; ++k) {
        // k == P is the real sample; others fill the open strip.
        const double frac = k == P ? 0.0 : -1.0 + (2.0 * k + 1.0) / P;
        CVec x = re.cast<cplx>() + I * (frac * bound_im) * d.cast<cplx>();
        const Coeffs c = eval_coeffs_unchecked(fam, x);
        const double jx = japanese(x);
        const double r_met = (c.a - CMat::Identity(n, n)).cwiseAbs().maxCoeff() / (fam.C0 * std::pow(jx, -fam.sigma));
        const double r_dr = c.b.cwiseAbs().maxCoeff() / (fam.C0 * std::pow(jx, 1.0 - fam.sigma));
        const double r_po = std::abs(c.c) / (fam.C0 * std::pow(jx, 2.0 - fam.sigma));
        rep.ratio_metric = std::max(rep.ratio_metric, r_met);
        rep.ratio_drift = std::max(rep.ratio_drift, r_dr);
        rep.ratio_potential = std::max(rep.ratio_potential, r_po);
        const double worst = std::max({r_met, r_dr, r_po});
        if (worst > rep.worst_ratio) {
          rep.worst_ratio = worst;
          rep.worst_point = x;
        }
        if (k == P) {
          RMat ar = c.a.real();
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(ar)};
          rep.min_eigenvalue = std::min(rep.min_eigenvalue, es.eigenvalues().minCoeff());
          double im = c.a.imag().cwiseAbs().maxCoeff();
          im = std::max(im, c.b.imag().cwiseAbs().maxCoeff());
          im = std::max(im, std::abs(c.c.imag()));
          rep.max_imag_on_real = std::max(rep.max_imag_on_real, im);
        }
        ++rep.samples;
      }
    }
  }
  rep.pass = rep.worst_ratio <= 1.0 + 1e-12 && rep.min_eigenvalue > 0.0;
  return rep;
}

AssumptionReport check_assumption_a(const MetricFamily& fam, const AssumptionGrid& grid) {
  AssumptionReport rep = sample_assumption_a(fam, grid);
  if (!rep.pass) {
    std::ostringstream os;
    os << "worst ratio " << rep.worst_ratio << " at x = " << rep.worst_point.transpose()
       << ", min eigenvalue " << rep.min_eigenvalue;
    fail(ErrorKind::BoundViolated, os.str());
  }
  return rep;
}

}  // namespace awf
