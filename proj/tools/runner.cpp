#include "runner.hpp"

#include "awf/contour_lab.hpp"
#include "awf/flow.hpp"
#include "awf/hj_phase.hpp"
#include "awf/modevol.hpp"
#include "awf/wave_ops.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>

namespace awf::cli {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

const char* to_string(StageStatus s) {
  switch (s) {
    case StageStatus::Pass: return "pass";
    case StageStatus::Fail: return "fail";
    case StageStatus::Error: return "error";
    case StageStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"flow", "phase", "fbi", "evolve", "contours", "detect", "all"};
  return names;
}

namespace {

ordered_json cjson(cplx z) { return {z.real(), z.imag()}; }

struct Context {
  const RunConfig& cfg;
  fs::path dir;
  std::ostream& log;
  std::optional<PropagatedData> propagated;  // shared by evolve and detect

  std::string file(StageResult& st, const std::string& name) {
    st.outputs.push_back(name);
    return (dir / name).string();
  }
};

double h_max(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

void stage_flow(Context& cx, StageResult& st) {
  const Scenario& sc = cx.cfg.scenario;
  const FlowSection& fl = cx.cfg.flow;
  const MetricFamily& fam = sc.family;
  const SymbolPoint start{vec1(sc.x0), vec1(sc.xi0), fl.h};
  FlowOptions fo;
  fo.tol = fl.tol;
  const Trajectory tr = integrate_flow(fam, start, fl.T, fl.h, fo);
  write_trajectory_csv(fam, tr, cx.file(st, "trajectory.csv"));
  const AsymptoticData ad = xi_plus(fam, start, fl.ladder, fl.T, fo);

  const DetectorOptions& det = cx.cfg.detector;
  const ReferenceConfig ref = choose_reference(fam, sc.delta0, h_max(sc.h_ladder));
  const WaveOperatorPoint wp =
      x_plus(fam, ref, RVec::Constant(1, sc.x0), RVec::Constant(1, sc.xi0), det.wave_T, det.wave_ladder);
  {
    std::ofstream os(cx.file(st, "wave_ladder.csv"));
    os << std::setprecision(17) << "h,m\n";
    for (size_t k = 0; k < wp.ladder_h.size(); ++k) os << wp.ladder_h[k] << ',' << wp.ladder_m[k](0) << '\n';
  }
  const bool energy_ok = tr.energy_drift <= 10.0 * fl.tol;
  st.certificates = {{"energy_drift", tr.energy_drift},
                     {"energy_gate", 10.0 * fl.tol},
                     {"nontrapping", ad.nontrapping},
                     {"xi_plus", ad.xi_plus(0)},
                     {"xi_plus_fit_error", ad.fit_error},
                     {"momentum_rate", ad.momentum_rate},
                     {"growth_constant", ad.growth_constant},
                     {"reference_R", ref.R_delta},
                     {"reference_delta", ref.delta},
                     {"z_plus", cjson(wp.z_plus(0))},
                     {"x_plus_extrapolation_error", wp.extrapolation_error},
                     {"x_plus_doubling_gap", wp.doubling_gap}};
  st.status = energy_ok && ad.nontrapping ? StageStatus::Pass : StageStatus::Fail;
  cx.log << "flow: xi_plus " << ad.xi_plus(0) << ", z_plus " << wp.z_plus(0) << ", energy drift " << tr.energy_drift
         << '\n';
}

void stage_phase(Context& cx, StageResult& st) {
  const Scenario& sc = cx.cfg.scenario;
  const PhaseSection& p = cx.cfg.phase;
  ReferenceConfig ref = choose_reference(sc.family, sc.delta0, p.h);
  ref.h = p.h;
  PhaseW phase(sc.family, ref);
  phase.build_cache(p.s_max);
  phase.write_csv(cx.file(st, "phase_table.csv"));
  const EikonalReport er =
      eikonal_residual(phase, linspace(0.0, p.s_max, p.s_points), linspace(p.xi_lo, p.xi_hi, p.xi_points));
  st.certificates = {{"reference_R", ref.R_delta},       {"reference_delta", ref.delta},
                     {"eikonal_normalized", er.max_normalized}, {"eikonal_raw", er.max_raw},
                     {"eikonal_tol", p.eikonal_tol},      {"worst_s", er.worst_s},
                     {"worst_xi", er.worst_xi},           {"points", er.points}};
  st.status = er.max_normalized <= p.eikonal_tol ? StageStatus::Pass : StageStatus::Fail;
  cx.log << "phase: R " << ref.R_delta << ", eikonal residual " << er.max_normalized << '\n';
}

void stage_fbi(Context& cx, StageResult& st) {
  const Scenario& sc = cx.cfg.scenario;
  const DetectorOptions& det = cx.cfg.detector;
  const cplx point(sc.x0, -sc.xi0);
  const FBIField f = bargmann(sc.u0.line(), disc_points(point, det.radius, det.rings), sc.h_ladder);
  f.write_csv(cx.file(st, "fbi_field.csv"));
  const DecayEstimate d = decay_rate(f, det.threshold, det.radius);
  d.write_csv(cx.file(st, "lhs_decay.csv"));
  const double delta = d.min_delta_near(point);
  const bool regular = delta >= det.threshold;
  st.certificates = {{"point", cjson(point)}, {"delta", delta}, {"threshold", det.threshold}, {"regular", regular}};
  if (sc.expected_verdict) st.certificates["expected_verdict"] = *sc.expected_verdict;
  st.status = !sc.expected_verdict || *sc.expected_verdict == regular ? StageStatus::Pass : StageStatus::Fail;
  cx.log << "fbi: delta " << delta << " at " << point << (regular ? " (regular)" : " (singular)") << '\n';
}

ordered_json summary_json(const PropagationSummary& p) {
  return {{"L", p.L},
          {"N", p.N},
          {"dt", p.dt},
          {"steps", p.steps},
          {"norm_drift", p.norm_drift},
          {"energy_drift", p.energy_drift},
          {"sponge_peak", p.sponge_peak},
          {"richardson", p.richardson},
          {"pass", p.pass}};
}

void stage_evolve(Context& cx, StageResult& st) {
  cx.propagated = propagate_for_detector(cx.cfg.scenario, cx.cfg.detector);
  write_snapshot_csv(cx.propagated->u, cx.file(st, "snapshot.csv"));
  const PropagationSummary& p = cx.propagated->summary;
  st.certificates = summary_json(p);
  st.certificates["drift_tol"] = cx.cfg.detector.drift_tol;
  st.certificates["richardson_tol"] = cx.cfg.detector.richardson_tol;
  st.status = p.pass ? StageStatus::Pass : StageStatus::Fail;
  cx.log << "evolve: N " << p.N << ", steps " << p.steps << ", norm drift " << p.norm_drift << ", energy drift "
         << p.energy_drift << ", richardson " << p.richardson << '\n';
}

void stage_contours(Context& cx, StageResult& st) {
  const Scenario& sc = cx.cfg.scenario;
  const ContourSection& k = cx.cfg.contours;
  ReferenceConfig ref = choose_reference(sc.family, sc.delta0, k.h);
  ref.h = k.h;
  PhaseW phase(sc.family, ref);
  phase.build_cache(std::max(1.0, *std::max_element(k.s.begin(), k.s.end())));
  bool ok = true;
  std::vector<std::string> failures;
  {
    std::ofstream os(cx.file(st, "contours.csv"));
    os << std::setprecision(17) << "s,saddle_grad,saddle_gap,margin_delta,margin_r1\n";
    for (double s : k.s) {
      double grad = NAN, gap = NAN, delta = NAN, r1 = NAN;
      try {
        const SaddleReport sr = saddle_certificate(phase, s, k.a1_z, k.saddle_tol);
        grad = sr.grad_norm;
        gap = sr.value_gap;
      } catch (const Error& e) {
        ok = false;
        failures.push_back(e.what());
      }
      try {
        const MarginReport mr = contour_margin(phase, ContourKind::G0, s, k.a1_z, k.r, k.samples);
        delta = mr.delta;
        r1 = mr.r1;
      } catch (const Error& e) {
        ok = false;
        failures.push_back(e.what());
      }
      os << s << ',' << grad << ',' << gap << ',' << delta << ',' << r1 << '\n';
    }
  }
  A1Options a1;
  a1.R = k.R;
  a1.r = k.r;
  a1.samples = k.samples;
  a1.throw_on_failure = false;
  const DeformationReport r1 = certify_deformation_A1(phase, k.s, k.a1_z, k.t, a1);
  r1.write_csv(cx.file(st, "a1.csv"));
  if (!r1.pass) failures.push_back(r1.failure);
  ok = ok && r1.pass;
  st.certificates["A1"] = {{"R", k.R}, {"pass", r1.pass}, {"delta_min", r1.delta_min}, {"delta_spread", r1.delta_spread}};
  if (k.a2) {
    A2Options a2;
    a2.r = k.r;
    a2.r0 = k.r / 4.0;
    a2.eps = k.a2_eps;
    a2.samples = k.samples;
    a2.throw_on_failure = false;
    const DeformationReport r2 = certify_deformation_A2(phase, k.s, k.a2_z, k.t, a2);
    r2.write_csv(cx.file(st, "a2.csv"));
    if (!r2.pass) failures.push_back(r2.failure);
    ok = ok && r2.pass;
    st.certificates["A2"] = {{"pass", r2.pass}, {"delta_min", r2.delta_min}, {"delta_spread", r2.delta_spread}};
  }
  st.certificates["reference_R"] = ref.R_delta;
  st.certificates["failures"] = failures;
  st.status = ok ? StageStatus::Pass : StageStatus::Fail;
  if (!ok) st.error = failures.front();
  cx.log << "contours: " << (ok ? "certified" : "failed") << " (R = " << k.R << ")";
  if (!ok) cx.log << ": " << failures.front();
  cx.log << '\n';
}

void stage_detect(Context& cx, StageResult& st) {
  const Scenario& sc = cx.cfg.scenario;
  const VerdictRecord v =
      run_equivalence(sc, cx.cfg.detector, cx.propagated ? &*cx.propagated : nullptr);
  write_verdict_json(v, cx.file(st, "verdict.json"));
  v.lhs_map.write_csv(cx.file(st, "lhs_decay.csv"));
  v.rhs_map.write_csv(cx.file(st, "rhs_decay.csv"));
  st.certificates = ordered_json::parse(verdict_json(v));
  cx.log << verdict_json(v) << '\n';
  st.status = v.agree && v.propagation.pass && v.matches_expected ? StageStatus::Pass : StageStatus::Fail;
}

using StageFn = void (*)(Context&, StageResult&);

const std::vector<std::pair<std::string, StageFn>>& stages() {
  static const std::vector<std::pair<std::string, StageFn>> s = {
      {"flow", stage_flow},         {"phase", stage_phase},   {"fbi", stage_fbi},
      {"evolve", stage_evolve},     {"contours", stage_contours}, {"detect", stage_detect}};
  return s;
}

}  // namespace

RunResult run(const std::string& subcommand, const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
    fail(ErrorKind::ConfigInvalid, "unknown subcommand '" + subcommand + "'");
  fs::create_directories(out_dir);
  Context cx{cfg, fs::path(out_dir), log, std::nullopt};
  RunResult res;
  for (const auto& [name, fn] : stages()) {
    if (subcommand != "all" && subcommand != name) continue;
    StageResult st;
    st.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(cx, st);
    } catch (const Error& e) {
      st.status = e.kind() == ErrorKind::InconclusiveGap ? StageStatus::Inconclusive : StageStatus::Error;
      st.error = e.what();
      log << name << ": " << e.what() << '\n';
    } catch (const std::exception& e) {
      st.status = StageStatus::Error;
      st.error = e.what();
      log << name << ": " << e.what() << '\n';
    }
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.stages.push_back(std::move(st));
  }
  bool any_fail = false, any_gap = false;
  for (const StageResult& st : res.stages) {
    any_fail = any_fail || st.status == StageStatus::Fail || st.status == StageStatus::Error;
    any_gap = any_gap || st.status == StageStatus::Inconclusive;
  }
  res.exit_code = any_fail ? 1 : any_gap ? 2 : 0;

  ordered_json m;
  m["schema_version"] = kSchemaVersion;
  m["subcommand"] = subcommand;
  m["threads"] = thread_count();
  m["scenario"] = cfg.raw;
  m["config"] = resolved(cfg);
  m["family"] = {{"name", cfg.scenario.family.name},
                 {"sigma", cfg.scenario.family.sigma},
                 {"nu", cfg.scenario.family.nu},
                 {"C0", cfg.scenario.family.C0},
                 {"eps", cfg.family_eps}};
  ordered_json stages_json = ordered_json::array(), outputs = ordered_json::array();
  for (const StageResult& st : res.stages) {
    stages_json.push_back({{"name", st.name},
                           {"status", to_string(st.status)},
                           {"error", st.error},
                           {"seconds", st.seconds},
                           {"certificates", st.certificates},
                           {"outputs", st.outputs}});
    for (const std::string& f : st.outputs) outputs.push_back(f);
  }
  m["stages"] = stages_json;
  m["outputs"] = outputs;
  m["exit_code"] = res.exit_code;
  std::ofstream os(fs::path(out_dir) / "manifest.json");
  os << m.dump(2) << '\n';
  return res;
}

}  // namespace awf::cli
