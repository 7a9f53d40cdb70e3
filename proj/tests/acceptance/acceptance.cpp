// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is 0 when the failing criteria are exactly the documented known failures.
//
//   acceptance [--only N[,N...]] [--scenarios DIR]

#include "awf/contour_lab.hpp"
#include "awf/detector.hpp"
#include "awf/flow.hpp"
#include "awf/modevol.hpp"
#include "awf/wave_ops.hpp"

#include "scenario_config.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

using namespace awf;

namespace {

// Pinned tolerances.
constexpr double kAnalyticTol = 1e-8;
constexpr double kQuadratureTol = 1e-6;
constexpr double kEikonalTol = 1e-3;
constexpr double kRateBand = 0.1;       // |fitted momentum exponent - sigma|
constexpr double kGrowthSpread = 0.2;   // growth constant across the h ladder
constexpr double kSaddleTol = 1e-8;
constexpr double kContourSpread = 0.3;  // (max - min) / max over s
constexpr int kDeformationSamples = 10000;
constexpr double kL0Slack = 0.2;        // exponent >= 1 + sigma - slack
constexpr double kVerdictGap = 4.0;

// Criteria that fail for documented reasons; see the README.
const std::set<int> kKnownFailures = {8};

std::string g_scenario_dir = AWF_SCENARIO_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return (*hi - *lo) / std::max(std::abs(*hi), 1e-300);
}

template <class F>
std::string error_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return to_string(e.kind());
  }
  return "none";
}

RVec r1(double v) { return RVec::Constant(1, v); }

PhaseW make_phase(const std::string& family, double h, double s_max) {
  MetricFamily f = make_family(family, 0.1);
  ReferenceConfig c = family == "flat" ? ReferenceConfig{0.1, 0.1, 8.0, h} : choose_reference(f, 0.1, h);
  c.h = h;
  PhaseW p(f, c);
  p.build_cache(s_max);
  return p;
}

SampledLine packet_line(double h, double xi1, double y0, double dy, int n) {
  SampledLine u;
  u.y0 = y0;
  u.dy = dy;
  u.values.resize(n);
  for (int i = 0; i < n; ++i) {
    const double y = y0 + i * dy;
    u.values[i] = std::exp(cplx(-y * y / 2.0, y * xi1 / h));
  }
  return u;
}

std::vector<cplx> around(cplx c) { return {c, c + 0.3, c - 0.3, c + cplx(0.0, 0.15), c - cplx(0.0, 0.15)}; }

// 1. flat family in closed form
Outcome flat_exactness() {
  const MetricFamily flat = make_family("flat");
  const double h = 0.05, R = 8.0;
  PhaseW ph(flat, ReferenceConfig{0.1, 0.1, R, h});
  ph.build_cache(1000.0);
  double w_quad = 0.0, w_cache = 0.0;
  for (double s : {0.0, 1.0, 10.0, 100.0, 1000.0})
    for (double xi : {-2.0, -0.5, 0.5, 1.0, 2.0}) {
      const double want = R * std::abs(xi) + s * xi * xi / 2.0;
      w_quad = std::max(w_quad, std::abs(ph.exact(s, r1(xi)).W - want) / want);
      w_cache = std::max(w_cache, std::abs(ph.eval1(s, xi).W - want) / want);
    }
  double xp = 0.0, rs = 0.0;
  const std::vector<double> ladder = {0.1, 0.05, 0.025, 0.0125};
  for (double x0 : {-3.0, 0.0, 2.0})
    for (double xi0 : {-1.0, 0.7, 1.5}) {
      const WaveOperatorPoint w = x_plus(flat, ph.config(), r1(x0), r1(xi0), 1.0, ladder);
      xp = std::max(xp, std::abs(w.z_plus(0) - cplx(x0, -xi0)));
      const FactorizationReport f = flow_factorization_check(flat, ph.config(), x0, xi0, ladder, 1.0);
      for (double e : f.position_error) rs = std::max(rs, e);
      for (double e : f.momentum_error) rs = std::max(rs, e);
    }
  // G0 against the closed-form free packet: multiplier (exact in Fourier space) and contour quadrature.
  const double xi1 = 1.5;
  const cplx base(0.0, -xi1);
  double g_mult = 0.0;
  for (double s : {1.0, 5.0, 80.0}) {
    const std::vector<cplx> zs = around(source_point(ph, s, base));
    const EvolvedField f = apply_G0_multiplier(ph, packet_line(h, xi1, -150.0, 0.02, 10000), s, zs, h);
    for (size_t i = 0; i < zs.size(); ++i)
      g_mult = std::max(g_mult, std::abs(f.field.weighted[i][0] - packet_transform_weighted(zs[i], 0.0, xi1, h, s)));
  }
  // the contour is truncated at e^{-r1/h}; h = 0.01 keeps that below the quadrature tolerance
  const double hq = 0.01;
  PhaseW phq(flat, ReferenceConfig{0.1, 0.1, R, hq});
  phq.build_cache(100.0);
  double g_quad = 0.0;
  const WeightedHolo v = [=](cplx y) { return packet_transform_weighted(y, 0.0, xi1, hq, 0.0); };
  QuadOptions qo;
  qo.v_scale = 0.25;
  qo.nodes = 16;
  for (double s : {1.0, 20.0}) {
    const std::vector<cplx> zs = around(source_point(phq, s, base));
    const EvolvedField f = apply_G0(phq, v, s, zs, hq, qo);
    for (size_t i = 0; i < zs.size(); ++i)
      g_quad = std::max(g_quad, std::abs(f.field.weighted[i][0] - packet_transform_weighted(zs[i], 0.0, xi1, hq, s)));
  }
  Outcome o;
  o.pass = w_quad <= kAnalyticTol && w_cache <= kQuadratureTol && xp <= kAnalyticTol && rs <= kAnalyticTol &&
           g_mult <= kAnalyticTol && g_quad <= kQuadratureTol;
  o.detail = "W rel " + fmt(w_quad) + " (cache " + fmt(w_cache) + "), |z+ - (x0 - i xi0)| " + fmt(xp) +
             ", R_s " + fmt(rs) + ", G0 multiplier " + fmt(g_mult) + ", G0 quadrature " + fmt(g_quad);
  return o;
}

// 2. eikonal certificate on the bump family
Outcome eikonal() {
  const PhaseW ph = make_phase("metric_bump", 0.05, 100.0);
  const EikonalReport r = eikonal_residual(ph, linspace(0.0, 100.0, 21), linspace(0.5, 2.0, 16));
  return {r.max_normalized <= kEikonalTol,
          "max <s>^{1+sigma} residual " + fmt(r.max_normalized) + " over " + std::to_string(r.points) + " points"};
}

// 3. flow rates
Outcome flow_rates() {
  // a = 1 + eps <x>^{-sigma}: xi(s) -> sqrt(2E) with E = a(x0) xi0^2 / 2 (a -> 1 at infinity)
  const double sigma = 0.5, eps = 0.1, x0 = 1.0, xi0 = 1.0, h = 0.05, T = 50.0;
  const MetricFamily lr = make_family("metric_longrange", eps, sigma);
  const Trajectory tr = integrate_flow(lr, {vec1(x0), vec1(xi0), h}, T, h);
  const double xi_inf = std::sqrt(1.0 + eps * std::pow(1.0 + x0 * x0, -sigma / 2.0)) * xi0;
  const double s_end = tr.s_end();
  const double rate = fit_momentum_rate(tr, r1(xi_inf), s_end / 10.0, s_end);
  const bool rate_ok = std::abs(rate - sigma) <= kRateBand;

  std::string growth;
  bool growth_ok = true;
  for (const char* name : {"metric_longrange", "drift"}) {
    const MetricFamily f = make_family(name, eps, sigma);
    std::vector<double> c;
    for (double hh : {0.1, 0.05, 0.025}) {
      const Trajectory t = integrate_flow(f, {vec1(x0), vec1(xi0), hh}, 1.0, hh);
      c.push_back(fit_growth_constant(t, t.s_end() / 2.0, t.s_end()));
    }
    growth_ok = growth_ok && spread(c) <= kGrowthSpread;
    growth += std::string(", ") + name + " growth C " + fmt(c[0]) + "/" + fmt(c[1]) + "/" + fmt(c[2]);
  }
  return {rate_ok && growth_ok, "momentum exponent " + fmt(rate) + " (sigma " + fmt(sigma) + ")" + growth};
}

// 4. saddle certificate
Outcome saddle() {
  double grad = 0.0, gap = 0.0;
  bool ok = true;
  for (const char* name : {"flat", "metric_bump", "metric_longrange"}) {
    const PhaseW ph = make_phase(name, 0.05, 1000.0);
    for (double s : {0.0, 10.0, 100.0, 1000.0}) {
      const SaddleReport r = saddle_certificate(ph, s, source_point(ph, s, cplx(0.0, -1.5)), kSaddleTol);
      grad = std::max(grad, r.grad_norm);
      gap = std::max(gap, r.value_gap);
      ok = ok && r.pass;
    }
  }
  return {ok && grad <= kSaddleTol && gap <= kSaddleTol,
          "max |grad Psi| " + fmt(grad) + ", max |Psi - Phi0| " + fmt(gap) + " (flat, bump, long-range)"};
}

// 5. uniform good contour
Outcome good_contour() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"flat", "metric_bump", "metric_longrange"}) {
    const PhaseW ph = make_phase(name, 0.05, 1000.0);
    std::vector<double> d, r;
    for (double s : {1.0, 10.0, 100.0, 1000.0}) {
      const MarginReport m =
          contour_margin(ph, ContourKind::G0, s, source_point(ph, s, cplx(0.0, -1.5)), 1.0, 10000);
      d.push_back(m.delta);
      r.push_back(m.r1);
    }
    const double dmin = *std::min_element(d.begin(), d.end()), rmin = *std::min_element(r.begin(), r.end());
    ok = ok && dmin > 0.0 && rmin > 0.0 && spread(d) <= kContourSpread && spread(r) <= kContourSpread;
    detail += std::string(detail.empty() ? "" : "; ") + name + " delta min " + fmt(dmin) + " spread " +
              fmt(spread(d)) + ", r1 min " + fmt(rmin) + " spread " + fmt(spread(r));
  }
  return {ok, detail};
}

// 6. round trip and evolution residual
Outcome round_trip() {
  QuadOptions o;
  o.check = false;
  o.preflight = false;
  const cplx base(0.0, -1.5);
  const auto line = [](double h) { return packet_line(h, 1.5, -70.0, 0.01, 14000); };
  const std::vector<double> ladder = {0.1, 0.05, 0.025};
  bool ok = true;
  std::string detail;
  {
    const PhaseW ph = make_phase("flat", 0.05, 100.0);
    const LadderReport r = roundtrip_residual(ph, line, 20.0, {base, base + 0.3}, {0.05}, o);
    const double rel = r.residual[0] / r.scale[0];
    ok = ok && rel <= 1e-10;
    detail = "flat round trip " + fmt(rel);
    const EvolutionReport e = evolution_residual_multiplier(ph, line(0.05), {5.0, 20.0, 80.0}, base, around(0.0), 0.05);
    for (size_t i = 0; i < e.s.size(); ++i) ok = ok && e.residual[i] <= e.floor[i];
    detail += ", flat evolution at floor";
  }
  for (const char* name : {"metric_bump", "metric_longrange"}) {
    const PhaseW ph = make_phase(name, 0.05, 100.0);
    const LadderReport r =
        roundtrip_residual(ph, line, 20.0, {base, base + 0.3, base + cplx(0.0, 0.15)}, ladder, o);
    ok = ok && r.slope < 0.0;
    detail += std::string("; ") + name + " round-trip slope " + fmt(r.slope);
    // evolution residual along the ladder, each h against the flat differencing floor
    double worst = 0.0;
    for (double h : ladder) {
      const PhaseW phh = make_phase(name, h, 100.0);
      const PhaseW flat = make_phase("flat", h, 100.0);
      const EvolutionReport e = evolution_residual_multiplier(phh, line(h), {5.0, 20.0}, base, around(0.0), h);
      const EvolutionReport f = evolution_residual_multiplier(flat, line(h), {5.0, 20.0}, base, around(0.0), h);
      for (size_t i = 0; i < e.s.size(); ++i) worst = std::max(worst, e.residual[i] / f.floor[i]);
    }
    ok = ok && worst <= 10.0;
    detail += ", evolution residual <= " + fmt(worst) + " x floor";
  }
  return {ok, detail};
}

// 7. intertwining and Op_R(zeta) = h D_z
Outcome intertwining() {
  LineFunction g;
  g.f = [](double y) { return cplx(std::exp(-y * y / 2.0)); };
  std::vector<cplx> region{cplx(0.0, -0.8)};
  for (int k = 0; k < 4; ++k) region.push_back(cplx(0.0, -0.8) + std::polar(0.1, kPi * k / 2.0));
  OpROptions fine;
  fine.radial_nodes = 96;
  fine.angular_nodes = 128;
  const std::vector<double> ladder = {0.2, 0.1, 0.05};
  const IntertwiningReport a = intertwining_residual([](cplx x) { return x; }, g, region, ladder, fine);
  const IntertwiningReport b =
      intertwining_residual([](cplx x) { return std::exp(-x * x / 4.0); }, g, region, ladder, fine);
  // Op_R(zeta) v - h D_z v with v = T e^{-y^2/2} = sqrt(2 pi h/(1+h)) e^{-z^2/(2(1+h))}
  std::vector<double> inv_h, ln_res;
  for (double h : ladder) {
    const Holo v = [h](cplx z) { return std::sqrt(2.0 * kPi * h / (1.0 + h)) * std::exp(-z * z / (2.0 * (1.0 + h))); };
    double worst = 0.0;
    for (cplx z : region) {
      const cplx hdz = I * h * z / (1.0 + h) * v(z);
      const cplx got = op_r_apply([](cplx, cplx zeta) { return zeta; }, v, z, h, fine);
      worst = std::max(worst, std::abs(got - hdz) * std::exp(-phi0(z) / h));
    }
    inv_h.push_back(1.0 / h);
    ln_res.push_back(std::log(std::max(worst, 1e-300)));
  }
  const double slope = line_fit(inv_h, ln_res).coef[1];
  return {a.slope < 0.0 && b.slope < 0.0 && slope < 0.0,
          "T(au) - Op_R(a~)Tu slopes " + fmt(a.slope) + " (a = x), " + fmt(b.slope) +
              " (a = e^{-x^2/4}); Op_R(zeta) - hD_z slope " + fmt(slope)};
}

// 8. deformation certificates and their negative controls
Outcome deformations() {
  const PhaseW ph = make_phase("metric_bump", 0.05, 1000.0);
  const std::vector<double> s_grid = {1.0, 10.0, 100.0, 1000.0}, t_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  A1Options a1;
  a1.samples = kDeformationSamples;
  const DeformationReport r1 = certify_deformation_A1(ph, s_grid, cplx(0.0, -1.5), t_grid, a1);
  A2Options a2;
  a2.samples = kDeformationSamples;
  const DeformationReport r2 = certify_deformation_A2(ph, s_grid, cplx(4.8, -1.5), t_grid, a2);
  const bool certified = r1.pass && r2.pass && r1.delta_min > 0.0 && r2.delta_min > 0.0;
  // controls: R = 1 and an inflated eps are both expected to fail
  A1Options bad1 = a1;
  bad1.R = 1.0;
  const std::string k1 = error_kind([&] { certify_deformation_A1(ph, s_grid, cplx(0.0, -1.5), t_grid, bad1); });
  A2Options bad2 = a2;
  bad2.eps = 1.0;
  const std::string k2 = error_kind([&] { certify_deformation_A2(ph, s_grid, cplx(4.8, -1.5), t_grid, bad2); });
  const bool controls = k1 != "none" && k2 != "none";
  return {certified && controls, "A1 delta_hat " + fmt(r1.delta_min) + ", A2 delta_hat " + fmt(r2.delta_min) +
                                     " at " + std::to_string(kDeformationSamples) +
                                     " samples per (t, s); R = 1 control: " + (k1 == "none" ? "passed" : k1) +
                                     ", inflated eps control: " + (k2 == "none" ? "passed" : k2)};
}

// 9. decay of l0
Outcome l0_rate() {
  const std::vector<double> s_grid = logspace(10.0, 1000.0, 9);
  std::string detail;
  bool ok = false;
  for (const char* name : {"metric_bump", "metric_longrange"}) {
    const PhaseW ph = make_phase(name, 0.05, 1000.0);
    const ReferenceConfig ref = ph.config();
    const WaveOperatorPoint w = x_plus(ph.family(), ref, r1(2.0), r1(1.0), 1.0, {0.1, 0.05, 0.025, 0.0125});
    std::string reading;
    try {
      const SymbolCheckReport r = conjugated_symbol_check(ph, s_grid, w.z_plus(0), w.xi_plus(0));
      reading = r.superpolynomial ? "superpolynomial (l0 below underflow)" : "exponent " + fmt(r.exponent);
      if (std::string(name) == "metric_bump") ok = r.exponent >= 1.0 + ph.family().sigma - kL0Slack;
    } catch (const Error& e) {
      reading = e.what();
    }
    detail += std::string(detail.empty() ? "" : "; ") + name + " " + reading;
  }
  return {ok, detail + "; required >= " + fmt(1.5 - kL0Slack)};
}

// 10. end-to-end equivalence on the shipped scenarios
Outcome equivalence() {
  bool ok = true;
  double min_regular = 1e300, max_singular = -1e300, threshold = 0.0;
  std::string detail;
  for (const char* file : {"flat_heaviside_singular.json", "flat_heaviside_regular.json", "bump_kink_singular.json"}) {
    const cli::RunConfig c = cli::load_config(g_scenario_dir + "/" + file);
    threshold = c.detector.threshold;
    std::string reading;
    try {
      const VerdictRecord v = run_equivalence(c.scenario, c.detector);
      ok = ok && v.agree && v.matches_expected && v.propagation.pass && !v.inconclusive;
      for (double d : {v.lhs_delta, v.rhs_delta}) {
        if (v.lhs_regular) min_regular = std::min(min_regular, d);
        else max_singular = std::max(max_singular, d);
      }
      reading = std::string(v.agree ? "agree" : "DISAGREE") + " lhs " + fmt(v.lhs_delta) + " rhs " + fmt(v.rhs_delta);
    } catch (const Error& e) {
      ok = false;
      reading = e.what();
    }
    detail += std::string(detail.empty() ? "" : "; ") + c.scenario.name + " " + reading;
  }
  const double gap = min_regular / std::max(max_singular, threshold / 4.0);
  ok = ok && gap >= kVerdictGap;
  return {ok, detail + "; delta gap " + fmt(gap)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    } else if (a == "--scenarios" && i + 1 < argc) {
      g_scenario_dir = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--only N[,N...]] [--scenarios DIR]\n");
      return 1;
    }
  }
  const std::vector<Criterion> criteria = {
      {1, "flat-family exactness", 60, flat_exactness},
      {2, "eikonal certificate", 300, eikonal},
      {3, "flow rates", 300, flow_rates},
      {4, "saddle certificate", 60, saddle},
      {5, "uniform good contour", 300, good_contour},
      {6, "round trip and evolution residual", 600, round_trip},
      {7, "intertwining", 600, intertwining},
      {8, "deformation certificates", 600, deformations},
      {9, "l0 rate", 300, l0_rate},
      {10, "end-to-end equivalence", 1800, equivalence},
  };
  std::set<int> failed;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = sec <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) failed.insert(c.id);
    std::printf("%s [%d] %s: %s (%.1f s of %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
                o.detail.c_str(), sec, c.budget_seconds, in_time ? "" : " over budget");
    std::fflush(stdout);
  }
  std::set<int> expected;
  for (int id : kKnownFailures)
    if (only.empty() || only.count(id)) expected.insert(id);
  if (!failed.empty() || !expected.empty()) {
    std::printf("known failures:");
    for (int id : expected) std::printf(" %d", id);
    std::printf("%s\n", expected.empty() ? " none" : " (documented in README)");
  }
  return failed == expected ? 0 : 1;
}
