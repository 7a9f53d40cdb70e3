#include "awf/detector.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace awf {

const char* to_string(U0Kind k) {
  switch (k) {
    case U0Kind::Heaviside: return "heaviside";
    case U0Kind::Kink: return "kink";
    case U0Kind::Gaussian: return "gaussian";
  }
  return "?";
}

U0Kind u0_kind_from_string(const std::string& s) {
  if (s == "heaviside") return U0Kind::Heaviside;
  if (s == "kink") return U0Kind::Kink;
  if (s == "gaussian") return U0Kind::Gaussian;
  fail(ErrorKind::PreconditionViolated, "unknown u0 kind '" + s + "'");
}

Sampler U0Descriptor::sampler() const {
  const U0Descriptor d = *this;
  return [d](double x) -> cplx {
    const double y = x - d.center;
    const double win = std::exp(-y * y / (2.0 * d.width * d.width));
    switch (d.kind) {
      case U0Kind::Heaviside: return y >= 0.0 ? win : 0.0;
      case U0Kind::Kink: return std::abs(y) * win;
      case U0Kind::Gaussian: return win * std::polar(1.0, d.frequency * x);
    }
    return 0.0;
  };
}

LineFunction U0Descriptor::line() const {
  LineFunction u;
  u.f = sampler();
  if (kind != U0Kind::Gaussian) u.breakpoints = {center};
  if (kind == U0Kind::Heaviside) u.lo = center;
  u.max_frequency = kind == U0Kind::Gaussian ? std::abs(frequency) : 0.0;
  return u;
}

std::vector<cplx> disc_points(cplx c, double radius, int rings) {
  std::vector<cplx> z{c};
  for (int r = 1; r <= rings; ++r) {
    const double rad = radius * r / rings;
    for (int k = 0; k < 6 * r; ++k) z.push_back(c + std::polar(rad, 2.0 * kPi * k / (6 * r)));
  }
  return z;
}

namespace {

double band_mask(double xi, double delta0, const DetectorOptions& o) {
  const double a = std::abs(xi);
  const double lo = smooth_switch((a - o.low_edge * delta0) / ((o.low_full - o.low_edge) * delta0));
  const double hi = 1.0 - smooth_switch((a - o.high_full) / (o.high_edge - o.high_full));
  return lo * hi;
}

// Scenario after the time-reversal conjugation: conj(u0), xi0 -> -xi0, drift -> -drift.
struct Effective {
  MetricFamily fam;
  Sampler u0;
  LineFunction line;
  double x0, xi0;
};

Effective effective(const Scenario& sc) {
  Effective e{sc.family, sc.u0.sampler(), sc.u0.line(), sc.x0, sc.xi0};
  if (sc.time_reversal) {
    e.fam.eps_drift = -e.fam.eps_drift;
    const Sampler f = e.u0;
    e.u0 = [f](double x) { return std::conj(f(x)); };
    e.line.f = e.u0;
    e.xi0 = -e.xi0;
  }
  return e;
}

double h_min(const std::vector<double>& ladder) { return *std::min_element(ladder.begin(), ladder.end()); }

}  // namespace

PropagatedData propagate_for_detector(const Scenario& sc, const DetectorOptions& opt) {
  const Effective e = effective(sc);
  const double k_pass = opt.high_edge / h_min(sc.h_ladder);
  const double k_cut = opt.lowpass_margin * k_pass;
  const double w = 8.0 * sc.u0.width;
  PropagatorConfig base = opt.propagator;
  if (e.fam.is_flat() && base.method == StepMethod::Interaction) base.dt = std::numeric_limits<double>::infinity();
  PropagatorConfig cfg = suggest_config(e.fam, sc.u0.center - w, sc.u0.center + w, k_cut, sc.t, base);
  if (opt.verify_propagation) {
    // the refined run (dt/2, 2N) must also fit the stability budget
    for (;;) {
      PropagatorConfig fine = cfg;
      fine.N *= 2;
      fine.dt /= 2.0;
      try {
        validate(fine, e.fam);
        break;
      } catch (const Error&) {
        cfg.dt /= 2.0;
      }
    }
  }
  // Filter on the doubled grid: its even nodes are the base grid, and the band-limited result subsamples
  // without aliasing, so the Richardson pair sees the same initial data.
  SampledLine fine;
  fine.y0 = -cfg.L;
  fine.dy = cfg.dx() / 2.0;
  fine.values.resize(2 * cfg.N);
  for (int j = 0; j < 2 * cfg.N; ++j) fine.values[j] = e.u0(fine.y0 + j * fine.dy);
  fine = spectral_filter(fine, [&](double k) {
    return 1.0 - smooth_switch((std::abs(k) - k_pass) / (k_cut - k_pass));
  });
  const Sampler u0 = grid_sampler(fine);

  PropagatedData out;
  PropagationRun run;
  if (opt.verify_propagation) {
    RichardsonReport rr = richardson_check(e.fam, u0, sc.t, cfg, opt.richardson_tol);
    out.summary.richardson = rr.rel_l2;
    run = std::move(rr.coarse);
  } else {
    run = assemble_and_propagate(e.fam, u0, sc.t, cfg);
  }
  PropagationSummary& s = out.summary;
  s.L = cfg.L;
  s.N = cfg.N;
  s.dt = run.steps > 0 ? std::abs(run.t) / run.steps : cfg.dt;
  s.steps = run.steps;
  s.norm_drift = run.norm_drift;
  s.energy_drift = run.energy_drift;
  s.sponge_peak = run.sponge_peak;
  s.pass = s.norm_drift <= opt.drift_tol && s.energy_drift <= opt.drift_tol &&
           (!opt.verify_propagation || s.richardson <= opt.richardson_tol);
  out.u = std::move(run.u);
  return out;
}

FBIField rhs_field(const std::vector<const PhaseW*>& phases, const SampledLine& u, double t,
                   const std::vector<double>& h_ladder, const std::vector<cplx>& z_grid, double delta0,
                   const DetectorOptions& opt) {
  if (phases.size() != h_ladder.size()) fail(ErrorKind::PreconditionViolated, "one phase per ladder entry");
  FBIField f;
  f.z = z_grid;
  f.h = h_ladder;
  f.weighted.assign(z_grid.size(), std::vector<cplx>(h_ladder.size()));
  for (size_t k = 0; k < h_ladder.size(); ++k) {
    const double h = h_ladder[k];
    const SampledLine v = spectral_filter(u, [&](double kk) { return band_mask(h * kk, delta0, opt); });
    const EvolvedField g = apply_G0_multiplier(*phases[k], v, t / h, z_grid, h);
    for (size_t i = 0; i < z_grid.size(); ++i) f.weighted[i][k] = g.field.weighted[i][0];
  }
  return f;
}

VerdictRecord run_equivalence(const Scenario& sc, const DetectorOptions& opt, const PropagatedData* propagated) {
  if (sc.h_ladder.size() < 4) fail(ErrorKind::PreconditionViolated, "the h ladder needs at least 4 entries");
  if (!(sc.t > 0.0)) fail(ErrorKind::PreconditionViolated, "t must be positive");
  const Effective e = effective(sc);
  VerdictRecord v;
  v.scenario = sc.name;
  v.x0 = sc.x0;
  v.xi0 = sc.xi0;
  v.threshold = opt.threshold;
  v.expected = sc.expected_verdict;

  // Right-hand side read-out point.
  const double h_max = *std::max_element(sc.h_ladder.begin(), sc.h_ladder.end());
  const ReferenceConfig ref = choose_reference(e.fam, sc.delta0, h_max);
  {
    std::ostringstream os;
    os << "R = " << ref.R_delta << ", delta = " << ref.delta;
    v.reference = os.str();
  }
  const WaveOperatorPoint wp =
      x_plus(e.fam, ref, RVec::Constant(1, e.x0), RVec::Constant(1, e.xi0), opt.wave_T, opt.wave_ladder);
  v.z_plus = wp.z_plus(0);
  v.xi_plus = wp.xi_plus(0);
  v.wave_error = wp.extrapolation_error;
  if (std::abs(v.xi_plus) <= sc.delta0) {
    std::ostringstream os;
    os << "|xi_plus| = " << std::abs(v.xi_plus) << " does not exceed delta0 = " << sc.delta0;
    fail(ErrorKind::PreconditionViolated, os.str());
  }

  // Left-hand side: decay of T u0 near x0 - i xi0.
  v.lhs_point = cplx(e.x0, -e.xi0);
  v.lhs_map = decay_rate(bargmann(e.line, disc_points(v.lhs_point, opt.radius, opt.rings), sc.h_ladder),
                         opt.threshold, opt.radius);
  v.lhs_delta = v.lhs_map.min_delta_near(v.lhs_point);

  // Right-hand side: G0(t/h) T(e^{-itH} u0) near z_plus.
  PropagatedData local;
  if (!propagated) local = propagate_for_detector(sc, opt);
  const PropagatedData& pd = propagated ? *propagated : local;
  v.propagation = pd.summary;
  std::vector<std::unique_ptr<PhaseW>> owned;
  std::vector<const PhaseW*> phases;
  const double s_max = 1.05 * sc.t / h_min(sc.h_ladder);
  for (double h : sc.h_ladder) {
    if (!owned.empty() && e.fam.h_independent()) {
      phases.push_back(owned.front().get());
      continue;
    }
    ReferenceConfig rc = e.fam.h_independent() ? ref : choose_reference(e.fam, sc.delta0, h);
    rc.h = h;
    owned.push_back(std::make_unique<PhaseW>(e.fam, rc));
    owned.back()->build_cache(s_max);
    phases.push_back(owned.back().get());
  }
  v.rhs_map = decay_rate(rhs_field(phases, pd.u, sc.t, sc.h_ladder, disc_points(v.z_plus, opt.radius, opt.rings),
                                   sc.delta0, opt),
                         opt.threshold, opt.radius);
  v.rhs_delta = v.rhs_map.min_delta_near(v.z_plus);

  v.lhs_regular = v.lhs_delta >= opt.threshold;
  v.rhs_decays = v.rhs_delta >= opt.threshold;
  v.agree = v.lhs_regular == v.rhs_decays;
  auto in_gap = [&](double d) { return d >= 0.5 * opt.threshold && d <= 2.0 * opt.threshold; };
  v.inconclusive = in_gap(v.lhs_delta) || in_gap(v.rhs_delta);
  if (v.expected) v.matches_expected = *v.expected == v.lhs_regular && *v.expected == v.rhs_decays;
  const double lo = std::min(v.lhs_delta, v.rhs_delta), hi = std::max(v.lhs_delta, v.rhs_delta);
  v.delta_gap = v.lhs_regular && v.rhs_decays ? lo / opt.threshold
                                              : opt.threshold / std::max(hi, opt.threshold / 16.0);
  if (v.inconclusive && opt.throw_on_gap) {
    std::ostringstream os;
    os << "scenario " << sc.name << ": delta readings lhs " << v.lhs_delta << ", rhs " << v.rhs_delta
       << " within [" << 0.5 * opt.threshold << ", " << 2.0 * opt.threshold << "]";
    fail(ErrorKind::InconclusiveGap, os.str());
  }
  return v;
}

std::string verdict_json(const VerdictRecord& v) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["scenario"] = v.scenario;
  j["seed"] = {v.x0, v.xi0};
  j["lhs_point"] = {v.lhs_point.real(), v.lhs_point.imag()};
  j["z_plus"] = {v.z_plus.real(), v.z_plus.imag()};
  j["xi_plus"] = v.xi_plus;
  j["wave_extrapolation_error"] = v.wave_error;
  j["reference"] = v.reference;
  j["threshold"] = v.threshold;
  j["lhs_delta"] = v.lhs_delta;
  j["rhs_delta"] = v.rhs_delta;
  j["lhs_regular"] = v.lhs_regular;
  j["rhs_decays"] = v.rhs_decays;
  j["agree"] = v.agree;
  j["inconclusive"] = v.inconclusive;
  j["delta_gap"] = v.delta_gap;
  if (v.expected) j["expected_verdict"] = *v.expected;
  else j["expected_verdict"] = nullptr;
  j["matches_expected"] = v.matches_expected;
  const PropagationSummary& p = v.propagation;
  j["propagation"] = {{"L", p.L},           {"N", p.N},
                      {"dt", p.dt},         {"steps", p.steps},
                      {"norm_drift", p.norm_drift}, {"energy_drift", p.energy_drift},
                      {"sponge_peak", p.sponge_peak}, {"richardson", p.richardson},
                      {"pass", p.pass}};
  return j.dump(2);
}

void write_verdict_json(const VerdictRecord& v, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::PreconditionViolated, "cannot write " + path);
  os << verdict_json(v) << '\n';
}

SymbolCheckReport conjugated_symbol_check(const PhaseW& phase, const std::vector<double>& s_grid, cplx z_plus,
                                          double xi_plus, double injected_shift, int samples) {
  const MetricFamily& fam = phase.family();
  const double h = phase.config().h;
  const double R = phase.config().R_delta;
  SymbolCheckReport rep;
  rep.required = 1.0 + fam.sigma - 0.2;
  // Sample (z, zeta) in the radius-0.05 ball of C x C around (z_plus, xi_plus).
  const auto pts = sobol_points(samples, 4);
  std::vector<std::pair<cplx, cplx>> zz;
  for (const auto& p : pts) {
    // uniform direction on S^3 scaled into the ball
    Eigen::Vector4d g;
    for (int k = 0; k < 4; ++k) g(k) = 2.0 * p[k] - 1.0;
    if (g.norm() > 1.0) g /= g.norm();
    g *= 0.05;
    zz.emplace_back(z_plus + cplx(g(0), g(1)), xi_plus + cplx(g(2), g(3)));
  }
  for (double s : s_grid) {
    double sup = 0.0;
    for (const auto& [z, zeta] : zz) {
      const cplx dwt = phase.wtilde_complex(s, zeta).second;
      const cplx dw = dwt + R * (zeta.real() >= 0.0 ? 1.0 : -1.0);  // d_zeta W(0, zeta) = R sgn
      const cplx l0 = q_total1(fam, z + I * zeta + dwt + injected_shift * s, zeta, h) - q_total1(fam, dw, zeta, h);
      sup = std::max(sup, std::abs(l0));
    }
    rep.s.push_back(s);
    rep.sup_l0.push_back(sup);
  }
  std::vector<double> ls, ll;
  for (size_t k = 0; k < rep.s.size(); ++k)
    if (rep.sup_l0[k] > 0.0) {
      ls.push_back(std::log(japanese(rep.s[k])));
      ll.push_back(std::log(rep.sup_l0[k]));
    }
  if (ls.size() < 3) {
    rep.superpolynomial = true;
    rep.exponent = std::numeric_limits<double>::infinity();
  } else {
    rep.exponent = -line_fit(ls, ll).coef[1];
    // exponents far beyond any power law: the profile decays faster than every <s>^{-k}
    rep.superpolynomial = rep.exponent > 20.0;
  }
  // b0 at zeta = -Im z: cached phase against the on-demand quadrature.
  {
    const double s = s_grid.back();
    const double zeta = -z_plus.imag();
    const double d_cache = phase.eval1(s, zeta).grad - R * (zeta >= 0.0 ? 1.0 : -1.0);
    const double d_exact = phase.exact(s, RVec::Constant(1, zeta)).grad(0) - R * (zeta >= 0.0 ? 1.0 : -1.0);
    const cplx b_cache = tilde_q(fam, vec1(z_plus + d_cache), vec1(cplx(zeta)), 0);
    const cplx b_exact = q_parts(fam, vec1(cplx(z_plus.real() + d_exact)), vec1(cplx(zeta))).q0;
    rep.b0_mismatch = std::abs(b_cache - b_exact) / std::max(1.0, std::abs(b_exact));
  }
  rep.pass = rep.exponent >= rep.required;
  if (!rep.pass) {
    std::ostringstream os;
    os << "fitted decay exponent " << rep.exponent << " of sup |l0| below " << rep.required;
    fail(ErrorKind::RateTooSlow, os.str());
  }
  return rep;
}

FactorizationReport flow_factorization_check(const MetricFamily& fam, const ReferenceConfig& cfg, double x0,
                                             double xi0, const std::vector<double>& h_ladder, double t) {
  const WaveOperatorPoint w = x_plus(fam, cfg, RVec::Constant(1, x0), RVec::Constant(1, xi0), t, h_ladder);
  FactorizationReport rep;
  rep.z_plus = w.z_plus(0);
  const double xp = w.x_plus(0), xip = w.xi_plus(0);
  double worst_kappa = 0.0;
  for (size_t k = 0; k < w.ladder_h.size(); ++k) {
    const double h = w.ladder_h[k];
    const auto [xs, xis] = flow_endpoint1(fam, x0, xi0, h, t / h, phase_flow_options());
    const double m = w.ladder_m[k](0);
    rep.h.push_back(h);
    rep.position_error.push_back(std::abs(m - xp));
    rep.momentum_error.push_back(std::abs(xis.real() - xip));
    // kappa(x, xi) = (x - i xi, xi) applied to R_s(seed) against (z_plus, xi_plus)
    const cplx kz = cplx(m, -xis.real());
    const double d = std::abs(std::abs(kz - rep.z_plus) -
                              std::hypot(rep.position_error.back(), rep.momentum_error.back()));
    worst_kappa = std::max(worst_kappa, d);
  }
  rep.kappa_defect = worst_kappa;
  rep.cauchy = true;
  for (size_t k = 2; k < w.ladder_m.size(); ++k) {
    const double a = std::abs(w.ladder_m[k](0) - w.ladder_m[k - 1](0));
    const double b = std::abs(w.ladder_m[k - 1](0) - w.ladder_m[k - 2](0));
    if (a > b + 1e-9) rep.cauchy = false;
  }
  if (!rep.cauchy) {
    std::ostringstream os;
    os << "ladder of R_{t/h}(seed) is not Cauchy";
    fail(ErrorKind::LimitUnstable, os.str());
  }
  return rep;
}

}  // namespace awf
