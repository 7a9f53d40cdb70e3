#include "awf/hj_phase.hpp"

#include <Eigen/SVD>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace awf {

FlowOptions phase_flow_options() {
  FlowOptions o;
  o.tol = 1e-12;
  return o;
}

RayEnd ray_endpoint(const ReferenceConfig& cfg, const MetricFamily& fam, double s, const RVec& eta,
                    const FlowOptions& opt) {
  const double m = eta.norm();
  if (m == 0.0) fail(ErrorKind::PreconditionViolated, "reference ray needs a nonzero momentum");
  RVec x0 = cfg.R_delta * eta / m;
  RayEnd out;
  if (s == 0.0) {
    out.x = x0;
    out.xi = eta;
    return out;
  }
  auto [x, xi] = flow_state(fam, x0.cast<cplx>(), eta.cast<cplx>(), cfg.h, s, opt);
  out.x = x.real();
  out.xi = xi.real();
  return out;
}

namespace {

RMat fd_jacobian(const ReferenceConfig& cfg, const MetricFamily& fam, double s, const RVec& eta, const RVec& base,
                 const FlowOptions& opt) {
  const int n = static_cast<int>(eta.size());
  RMat J(n, n);
  const double e = 1e-6 * std::max(1.0, eta.norm());
  for (int l = 0; l < n; ++l) {
    RVec p = eta;
    p(l) += e;
    J.col(l) = (ray_endpoint(cfg, fam, s, p, opt).xi - base) / e;
  }
  return J;
}

// Newton (chord, Jacobian refreshed when contraction stalls) without the delta0 precondition.
Inversion solve_source(const ReferenceConfig& cfg, const MetricFamily& fam, double s, const RVec& target,
                       const RVec* warm, const FlowOptions& opt, RMat* jac = nullptr) {
  Inversion out;
  RVec eta = warm ? *warm : target;
  const double stop = 1e-12 * std::max(1.0, target.norm());
  RMat J;
  if (jac) J = *jac;
  double last = 1e300;
  for (int it = 0; it < 50; ++it) {
    RayEnd e = ray_endpoint(cfg, fam, s, eta, opt);
    RVec r = e.xi - target;
    out.iterations = it;
    out.residual = r.norm();
    out.source = eta;
    out.x_hat = e.x;
    if (out.residual <= stop || s == 0.0) {
      if (jac) *jac = J;
      return out;
    }
    if (J.size() == 0 || out.residual > 0.25 * last) J = fd_jacobian(cfg, fam, s, eta, e.xi, opt);
    last = out.residual;
    RVec step = J.fullPivLu().solve(r);
    RVec next = eta - step;
    // Keep the source on the same side of the momentum origin.
    if (next.dot(eta) <= 0.0) next = 0.5 * eta;
    if (step.norm() <= 1e-15 * std::max(1.0, eta.norm())) {
      eta = next;
      RayEnd f = ray_endpoint(cfg, fam, s, eta, opt);
      out.source = eta;
      out.x_hat = f.x;
      out.residual = (f.xi - target).norm();
      break;
    }
    eta = next;
  }
  if (jac) *jac = J;
  if (out.residual > 1e-10 * std::max(1.0, target.norm())) {
    std::ostringstream os;
    os << "inversion of J at s = " << s << " stalled with residual " << out.residual;
    fail(ErrorKind::NewtonDiverged, os.str());
  }
  return out;
}

double real_q(const MetricFamily& fam, const RVec& x, const RVec& xi, double h) {
  return q_total(fam, x.cast<cplx>(), xi.cast<cplx>(), h).real();
}

// Breakpoints doubling from 1/4, so each panel sees a bounded relative change of s.
std::vector<double> panels(double a, double b) {
  std::vector<double> p{a};
  for (double t = 0.25; t < b; t *= 2.0)
    if (t > a) p.push_back(t);
  p.push_back(b);
  return p;
}

// Warm starts (source momentum and chord Jacobian) keyed by s'.
struct Warm {
  RVec source;
  RMat jac;
};
using WarmMap = std::map<double, Warm>;

const Warm* nearest(const WarmMap& m, double s) {
  if (m.empty()) return nullptr;
  auto it = m.lower_bound(s);
  if (it == m.end()) return &std::prev(it)->second;
  if (it == m.begin()) return &it->second;
  auto pv = std::prev(it);
  return (s - pv->first < it->first - s) ? &pv->second : &it->second;
}

double integrate_q(const ReferenceConfig& cfg, const MetricFamily& fam, const PhaseOptions& opt, double s0, double s1,
                   const RVec& xi, WarmMap& warm) {
  if (s1 <= s0) return 0.0;
  auto f = [&](double sp) {
    const Warm* w = nearest(warm, sp);
    RMat jac = w ? w->jac : RMat();
    Inversion inv = solve_source(cfg, fam, sp, xi, w ? &w->source : nullptr, opt.flow, &jac);
    warm[sp] = {inv.source, jac};
    return real_q(fam, inv.x_hat, xi, cfg.h);
  };
  double total = 0.0;
  std::vector<double> p = panels(s0, s1);
  for (size_t i = 0; i + 1 < p.size(); ++i) {
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, p[i], p[i + 1], opt.quad_depth,
                                                                          opt.quad_tol, &err);
  }
  return total;
}

// Fixed Gauss-Legendre rule for one short table cell.
double integrate_cell(const ReferenceConfig& cfg, const MetricFamily& fam, const PhaseOptions& opt, double s0,
                      double s1, const RVec& xi, WarmMap& warm) {
  const GaussRule& g = gauss_legendre(opt.cell_nodes);
  const double c = 0.5 * (s0 + s1), r = 0.5 * (s1 - s0);
  double total = 0.0;
  for (size_t i = 0; i < g.x.size(); ++i) {
    const double sp = c + r * g.x[i];
    const Warm* w = nearest(warm, sp);
    RMat jac = w ? w->jac : RMat();
    Inversion inv = solve_source(cfg, fam, sp, xi, w ? &w->source : nullptr, opt.flow, &jac);
    warm[sp] = {inv.source, jac};
    total += g.w[i] * real_q(fam, inv.x_hat, xi, cfg.h);
  }
  return r * total;
}

// d x_hat/d xi = (d x~/d eta)(d xi~/d eta)^{-1} at the source, both factors by Richardson-corrected
// centred differences of the ray map.
RMat hess_fd(const ReferenceConfig& cfg, const MetricFamily& fam, const PhaseOptions& opt, double s, const RVec& xi,
             const RVec& source) {
  const int n = static_cast<int>(xi.size());
  if (s == 0.0) {
    // Hessian of R|xi|.
    const double m = xi.norm();
    return cfg.R_delta * (RMat::Identity(n, n) - xi * xi.transpose() / (m * m)) / m;
  }
  const double k = opt.hess_step * std::max(1.0, source.norm());
  RMat Dx(n, n), Dxi(n, n);
  for (int l = 0; l < n; ++l) {
    auto end = [&](double d) {
      RVec t = source;
      t(l) += d;
      return ray_endpoint(cfg, fam, s, t, opt.flow);
    };
    RayEnd p1 = end(k), m1 = end(-k), p2 = end(k / 2), m2 = end(-k / 2);
    Dx.col(l) = (4.0 * (p2.x - m2.x) / k - (p1.x - m1.x) / (2.0 * k)) / 3.0;
    Dxi.col(l) = (4.0 * (p2.xi - m2.xi) / k - (p1.xi - m1.xi) / (2.0 * k)) / 3.0;
  }
  RMat H = Dx * Dxi.inverse();
  return 0.5 * (H + H.transpose());
}

// Cubic Hermite basis on [0,1].
struct Herm {
  double h00, h10, h01, h11;   // values
  double d00, d10, d01, d11;   // t-derivatives
};
Herm herm(double t) {
  const double t2 = t * t, t3 = t2 * t;
  return {2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + t, -2 * t3 + 3 * t2, t3 - t2,
          6 * t2 - 6 * t, 3 * t2 - 4 * t + 1, -6 * t2 + 6 * t, 3 * t2 - 2 * t};
}

// Second-order differences along a uniform block [lo, hi).
std::vector<double> diff_block(const std::vector<double>& v, int lo, int hi, double dx) {
  std::vector<double> d(hi - lo);
  const int m = hi - lo;
  for (int i = 0; i < m; ++i) {
    const int j = lo + i;
    if (i == 0) d[i] = (-3 * v[j] + 4 * v[j + 1] - v[j + 2]) / (2 * dx);
    else if (i == m - 1) d[i] = (3 * v[j] - 4 * v[j - 1] + v[j - 2]) / (2 * dx);
    else d[i] = (v[j + 1] - v[j - 1]) / (2 * dx);
  }
  return d;
}

}  // namespace

Inversion invert_J_full(const ReferenceConfig& cfg, const MetricFamily& fam, double s, const RVec& target,
                        const RVec* warm, const FlowOptions& opt) {
  if (target.norm() < cfg.delta0) {
    std::ostringstream os;
    os << "|xi| = " << target.norm() << " below delta0 = " << cfg.delta0;
    fail(ErrorKind::PreconditionViolated, os.str());
  }
  return solve_source(cfg, fam, s, target, warm, opt);
}

RVec invert_J(const ReferenceConfig& cfg, const MetricFamily& fam, double s, const RVec& target,
              const FlowOptions& opt) {
  return invert_J_full(cfg, fam, s, target, nullptr, opt).source;
}

ReferenceConfig choose_reference(const MetricFamily& fam, double delta0, double h, const ReferenceOptions& opt) {
  if (!(delta0 > 0.0)) fail(ErrorKind::PreconditionViolated, "delta0 must be positive");
  const int n = fam.dim;
  std::vector<RVec> dirs;
  for (int j = 0; j < n; ++j) {
    dirs.push_back(RVec::Unit(n, j));
    dirs.push_back(-RVec::Unit(n, j));
  }
  std::string why;
  for (double R = opt.R_start; R <= opt.R_limit; R *= 2.0) {
    ReferenceConfig cfg{delta0, delta0, R, h};
    bool ok = true;
    try {
      // Coverage: the image of |eta| = delta must stay inside |xi| <= delta0.
      bool covered = false;
      for (int halving = 0; halving < 30 && !covered; ++halving) {
        covered = true;
        for (const RVec& d : dirs)
          for (double s : opt.s_samples)
            if (ray_endpoint(cfg, fam, s, cfg.delta * d, opt.flow).xi.norm() > delta0) covered = false;
        if (!covered) cfg.delta *= 0.5;
      }
      if (!covered) {
        ok = false;
        why = "coverage";
      }
      for (int i = 0; ok && i < opt.momentum_samples; ++i) {
        const double mag = cfg.delta + (opt.xi_max - cfg.delta) * i / std::max(1, opt.momentum_samples - 1);
        for (const RVec& d : dirs) {
          const RVec xi = mag * d;
          SymbolPoint p{(R * d).cast<cplx>(), xi.cast<cplx>(), h};
          NontrapReport nt;
          try {
            nt = classify_nontrapping(fam, p, h, opt.s_probe, opt.flow);
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::Inconclusive) throw;
          }
          if (!nt.nontrapping) {
            ok = false;
            why = "trapped reference ray";
            break;
          }
          for (double s : opt.s_samples) {
            RVec base = ray_endpoint(cfg, fam, s, xi, opt.flow).xi;
            RMat J = fd_jacobian(cfg, fam, s, xi, base, opt.flow) - RMat::Identity(n, n);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(J)};
            if (svd.singularValues()(0) > opt.jacobian_tol) {
              ok = false;
              why = "momentum Jacobian";
              break;
            }
          }
          if (!ok) break;
        }
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DomainExit && e.kind() != ErrorKind::StepFailure) throw;
      ok = false;
      why = e.what();
    }
    if (ok) return cfg;
  }
  fail(ErrorKind::NoAdmissibleR, "no admissible R up to " + std::to_string(opt.R_limit) + " (last failure: " + why + ")");
}

PhaseW::PhaseW(MetricFamily fam, ReferenceConfig cfg, PhaseOptions opt)
    : fam_(std::move(fam)), cfg_(cfg), opt_(std::move(opt)) {}

double PhaseW::increment(double s0, double s1, const RVec& xi) const {
  WarmMap warm;
  return integrate_q(cfg_, fam_, opt_, s0, s1, xi, warm);
}

RVec PhaseW::x_hat(double s, const RVec& xi) const { return invert_J_full(cfg_, fam_, s, xi, nullptr, opt_.flow).x_hat; }

WValue PhaseW::exact(double s, const RVec& xi) const {
  if (s < 0.0) fail(ErrorKind::PreconditionViolated, "s must be nonnegative");
  Inversion inv = invert_J_full(cfg_, fam_, s, xi, nullptr, opt_.flow);
  WarmMap warm;
  WValue v;
  v.Wtilde = integrate_q(cfg_, fam_, opt_, 0.0, s, xi, warm);
  v.W = cfg_.R_delta * xi.norm() + v.Wtilde;
  v.grad = inv.x_hat;
  v.hess = hess_fd(cfg_, fam_, opt_, s, xi, inv.source);
  return v;
}

WValue1 PhaseW::exact1(double s, double xi) const {
  RVec x = vec1(xi).real();
  WValue v = exact(s, x);
  WValue1 o;
  o.W = v.W;
  o.Wtilde = v.Wtilde;
  o.grad = v.grad(0);
  o.hess = v.hess(0, 0);
  o.ds = real_q(fam_, v.grad, x, cfg_.h);
  return o;
}

void PhaseW::build_cache(double s_max) {
  if (fam_.dim != 1) fail(ErrorKind::PreconditionViolated, "the phase table is one-dimensional");
  const int K = opt_.s_knots;
  const int J = opt_.xi_knots;
  s_knots_.resize(K + 1);
  const double umax = std::log1p(s_max);
  for (int k = 0; k <= K; ++k) s_knots_[k] = std::expm1(umax * k / K);
  s_knots_[K] = s_max;
  xi_knots_.clear();
  for (int j = J - 1; j >= 0; --j) xi_knots_.push_back(-(cfg_.delta0 + (opt_.xi_max - cfg_.delta0) * j / (J - 1)));
  for (int j = 0; j < J; ++j) xi_knots_.push_back(cfg_.delta0 + (opt_.xi_max - cfg_.delta0) * j / (J - 1));
  const int NX = static_cast<int>(xi_knots_.size());
  for (auto* t : {&W_, &Ws_, &X_, &Wsx_, &H_, &Hs_, &Hx_, &Hsx_}) t->assign(NX, std::vector<double>(K + 1, 0.0));

  parallel_for(NX, [&](int j) {
    const double xv = xi_knots_[j];
    RVec xi = vec1(xv).real();
    WarmMap warm;
    RVec src = xi;
    RMat jac;
    for (int k = 0; k <= K; ++k) {
      const double s = s_knots_[k];
      if (k == 0) {
        W_[j][k] = cfg_.R_delta * std::abs(xv);
      } else {
        W_[j][k] = W_[j][k - 1] + integrate_cell(cfg_, fam_, opt_, s_knots_[k - 1], s, xi, warm);
      }
      Inversion inv = solve_source(cfg_, fam_, s, xi, &src, opt_.flow, &jac);
      src = inv.source;
      const double hess = hess_fd(cfg_, fam_, opt_, s, xi, src)(0, 0);
      QGrad g = q_grad(fam_, inv.x_hat.cast<cplx>(), xi.cast<cplx>(), cfg_.h);
      X_[j][k] = inv.x_hat(0);
      H_[j][k] = hess;
      Ws_[j][k] = g.q.real();
      Wsx_[j][k] = g.dx(0).real() * hess + g.dxi(0).real();
    }
  });

  // xi-derivatives of the tabulated Hessian data, per sign block.
  const double dx = (opt_.xi_max - cfg_.delta0) / (J - 1);
  for (int k = 0; k <= K; ++k) {
    std::vector<double> wsx(NX), h(NX);
    for (int j = 0; j < NX; ++j) {
      wsx[j] = Wsx_[j][k];
      h[j] = H_[j][k];
    }
    for (int b = 0; b < 2; ++b) {
      auto hs = diff_block(wsx, b * J, (b + 1) * J, dx);
      auto hx = diff_block(h, b * J, (b + 1) * J, dx);
      for (int i = 0; i < J; ++i) {
        Hs_[b * J + i][k] = hs[i];
        Hx_[b * J + i][k] = hx[i];
      }
    }
  }
  for (int k = 0; k <= K; ++k) {
    std::vector<double> hs(NX);
    for (int j = 0; j < NX; ++j) hs[j] = Hs_[j][k];
    for (int b = 0; b < 2; ++b) {
      auto d = diff_block(hs, b * J, (b + 1) * J, dx);
      for (int i = 0; i < J; ++i) Hsx_[b * J + i][k] = d[i];
    }
  }
}

bool PhaseW::covers(double s, double xi) const {
  if (s_knots_.empty()) return false;
  const double a = std::abs(xi);
  return s >= 0.0 && s <= s_knots_.back() && a >= cfg_.delta0 && a <= opt_.xi_max;
}

WValue1 PhaseW::interp(double s, double xi) const {
  const int K = static_cast<int>(s_knots_.size()) - 1;
  const int J = opt_.xi_knots;
  const double umax = std::log1p(s_knots_.back());
  int k = std::clamp(static_cast<int>(std::log1p(s) / umax * K), 0, K - 1);
  while (k < K - 1 && s > s_knots_[k + 1]) ++k;
  while (k > 0 && s < s_knots_[k]) --k;
  const double ds = s_knots_[k + 1] - s_knots_[k];
  const double t = (s - s_knots_[k]) / ds;
  const double dx = (opt_.xi_max - cfg_.delta0) / (J - 1);
  const int block = xi > 0 ? 1 : 0;
  // Position within the block measured from |xi| = delta0 outward in signed order.
  const double base = block ? cfg_.delta0 : -opt_.xi_max;
  int i = std::clamp(static_cast<int>((xi - base) / dx), 0, J - 2);
  const int j = block * J + i;
  const double v = (xi - xi_knots_[j]) / dx;
  const Herm hs = herm(t), hx = herm(v);
  const double a0[2] = {hs.h00, hs.h01}, a1[2] = {hs.h10 * ds, hs.h11 * ds};
  const double b0[2] = {hx.h00, hx.h01}, b1[2] = {hx.h10 * dx, hx.h11 * dx};
  const double da0[2] = {hs.d00 / ds, hs.d01 / ds}, da1[2] = {hs.d10, hs.d11};
  auto bicubic = [&](const auto& F, const auto& Fs, const auto& Fx, const auto& Fsx, bool dsd) {
    double r = 0.0;
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q) {
        const double A0 = dsd ? da0[p] : a0[p], A1 = dsd ? da1[p] : a1[p];
        r += A0 * b0[q] * F[j + q][k + p] + A1 * b0[q] * Fs[j + q][k + p] + A0 * b1[q] * Fx[j + q][k + p] +
             A1 * b1[q] * Fsx[j + q][k + p];
      }
    return r;
  };
  WValue1 o;
  o.W = bicubic(W_, Ws_, X_, Wsx_, false);
  o.ds = bicubic(W_, Ws_, X_, Wsx_, true);
  o.grad = bicubic(X_, Wsx_, H_, Hs_, false);
  o.hess = bicubic(H_, Hs_, Hx_, Hsx_, false);
  o.Wtilde = o.W - cfg_.R_delta * std::abs(xi);
  return o;
}

WValue1 PhaseW::eval1(double s, double xi) const {
  if (std::abs(xi) < cfg_.delta0) {
    std::ostringstream os;
    os << "|xi| = " << std::abs(xi) << " below delta0 = " << cfg_.delta0;
    fail(ErrorKind::PreconditionViolated, os.str());
  }
  return covers(s, xi) ? interp(s, xi) : exact1(s, xi);
}

WValue PhaseW::eval(double s, const RVec& xi) const {
  if (fam_.dim == 1 && covers(s, xi(0))) {
    WValue1 o = interp(s, xi(0));
    WValue v;
    v.W = o.W;
    v.Wtilde = o.Wtilde;
    v.grad = vec1(o.grad).real();
    v.hess = RMat::Constant(1, 1, o.hess);
    return v;
  }
  return exact(s, xi);
}

std::pair<cplx, cplx> PhaseW::wtilde_complex(double s, cplx eta) const {
  const double a = eta.real(), b = eta.imag();
  WValue1 v = eval1(s, a);
  const double d1 = v.grad - cfg_.R_delta * (a > 0 ? 1.0 : -1.0);
  const double d2 = v.hess;
  const cplx val = v.Wtilde + I * b * d1 - 0.5 * b * b * d2;
  const cplx der = d1 + I * b * d2;
  return {val, der};
}

void PhaseW::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::ConfigInvalid, "cannot write " + path);
  os << std::setprecision(17);
  os << "xi,s,W,dsW,dxiW,dsdxiW,hessW,ds_hessW,dxi_hessW,dsdxi_hessW\n";
  for (size_t j = 0; j < xi_knots_.size(); ++j)
    for (size_t k = 0; k < s_knots_.size(); ++k)
      os << xi_knots_[j] << ',' << s_knots_[k] << ',' << W_[j][k] << ',' << Ws_[j][k] << ',' << X_[j][k] << ','
         << Wsx_[j][k] << ',' << H_[j][k] << ',' << Hs_[j][k] << ',' << Hx_[j][k] << ',' << Hsx_[j][k] << '\n';
}

void PhaseW::read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::ConfigInvalid, "cannot read " + path);
  std::string line;
  std::getline(is, line);
  std::vector<std::array<double, 10>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::array<double, 10> r{};
    std::stringstream ss(line);
    for (double& v : r) {
      std::string cell;
      std::getline(ss, cell, ',');
      v = std::stod(cell);
    }
    rows.push_back(r);
  }
  if (rows.empty()) fail(ErrorKind::ConfigInvalid, "empty phase table");
  s_knots_.clear();
  xi_knots_.clear();
  for (const auto& r : rows) {
    if (xi_knots_.empty() || xi_knots_.back() != r[0]) xi_knots_.push_back(r[0]);
    if (xi_knots_.size() == 1) s_knots_.push_back(r[1]);
  }
  const size_t NX = xi_knots_.size(), NS = s_knots_.size();
  if (NX * NS != rows.size() || NX % 2 != 0) fail(ErrorKind::ConfigInvalid, "phase table is not a tensor grid");
  opt_.xi_knots = static_cast<int>(NX / 2);
  opt_.s_knots = static_cast<int>(NS - 1);
  opt_.xi_max = -xi_knots_.front();
  cfg_.delta0 = xi_knots_[NX / 2];
  std::vector<std::vector<double>>* tabs[8] = {&W_, &Ws_, &X_, &Wsx_, &H_, &Hs_, &Hx_, &Hsx_};
  for (auto* t : tabs) t->assign(NX, std::vector<double>(NS));
  for (size_t j = 0; j < NX; ++j)
    for (size_t k = 0; k < NS; ++k)
      for (int c = 0; c < 8; ++c) (*tabs[c])[j][k] = rows[j * NS + k][2 + c];
}

EikonalReport eikonal_residual(const PhaseW& phase, const std::vector<double>& s_grid,
                               const std::vector<double>& xi_grid, double injected_slope) {
  const MetricFamily& fam = phase.family();
  const ReferenceConfig& cfg = phase.config();
  EikonalReport rep;
  for (double xv : xi_grid) {
    RVec xi = vec1(xv).real();
    for (double s : s_grid) {
      const double d = 1e-3 * std::max(1.0, s);
      double dsW;
      if (s >= d) {
        dsW = phase.increment(s - d, s + d, xi) / (2.0 * d);
      } else {
        const double i1 = phase.increment(s, s + d, xi), i2 = phase.increment(s, s + 2.0 * d, xi);
        dsW = (4.0 * i1 - i2) / (2.0 * d);
      }
      dsW += injected_slope;
      const RVec grad = phase.x_hat(s, xi);
      const double qv = q_total(fam, grad.cast<cplx>(), xi.cast<cplx>(), cfg.h).real();
      const double raw = std::abs(dsW - qv);
      const double norm = raw * std::pow(japanese(s), 1.0 + fam.sigma);
      ++rep.points;
      rep.max_raw = std::max(rep.max_raw, raw);
      if (norm > rep.max_normalized) {
        rep.max_normalized = norm;
        rep.worst_s = s;
        rep.worst_xi = xv;
      }
    }
  }
  return rep;
}

}  // namespace awf
