#include "scenario_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace awf::cli {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void invalid(const std::string& ptr, const std::string& what) {
  fail(ErrorKind::ConfigInvalid, (ptr.empty() ? std::string("/") : ptr) + ": " + what);
}

// Reads one JSON object; every key must be consumed, unknown keys are rejected at finish().
class Obj {
 public:
  Obj(const ordered_json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {
    if (!j_.is_object()) invalid(ptr_, "expected an object");
  }

  bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }
  std::string at(const std::string& k) const { return ptr_ + "/" + k; }

  const ordered_json* get(const std::string& k, bool required) {
    seen_.insert(k);
    if (!j_.contains(k)) {
      if (required) invalid(at(k), "missing required field");
      return nullptr;
    }
    return &j_.at(k);
  }

  double num(const std::string& k, double def, bool required = false) {
    const ordered_json* v = get(k, required);
    if (!v) return def;
    if (!v->is_number()) invalid(at(k), "expected a number");
    return v->get<double>();
  }
  double positive(const std::string& k, double def, bool required = false) {
    const double v = num(k, def, required);
    if (!(v > 0.0)) invalid(at(k), "must be positive");
    return v;
  }
  int integer(const std::string& k, int def, int min) {
    const ordered_json* v = get(k, false);
    if (!v) return def;
    if (!v->is_number_integer()) invalid(at(k), "expected an integer");
    const int n = v->get<int>();
    if (n < min) invalid(at(k), "must be at least " + std::to_string(min));
    return n;
  }
  bool boolean(const std::string& k, bool def) {
    const ordered_json* v = get(k, false);
    if (!v) return def;
    if (!v->is_boolean()) invalid(at(k), "expected true or false");
    return v->get<bool>();
  }
  std::string str(const std::string& k, const std::string& def, bool required = false) {
    const ordered_json* v = get(k, required);
    if (!v) return def;
    if (!v->is_string()) invalid(at(k), "expected a string");
    return v->get<std::string>();
  }
  std::vector<double> list(const std::string& k, std::vector<double> def, size_t min_size, bool positive_only) {
    const ordered_json* v = get(k, false);
    if (!v) return def;
    if (!v->is_array()) invalid(at(k), "expected an array of numbers");
    if (v->size() < min_size) invalid(at(k), "needs at least " + std::to_string(min_size) + " entries");
    std::vector<double> out;
    for (size_t i = 0; i < v->size(); ++i) {
      const ordered_json& e = (*v)[i];
      const std::string p = at(k) + "/" + std::to_string(i);
      if (!e.is_number()) invalid(p, "expected a number");
      const double x = e.get<double>();
      if (positive_only && !(x > 0.0)) invalid(p, "must be positive");
      out.push_back(x);
    }
    return out;
  }
  cplx point(const std::string& k, cplx def) {
    const std::vector<double> v = list(k, {def.real(), def.imag()}, 2, false);
    if (v.size() != 2) invalid(at(k), "expected [re, im]");
    return {v[0], v[1]};
  }
  std::optional<Obj> child(const std::string& k, bool required = false) {
    const ordered_json* v = get(k, required);
    if (!v) return std::nullopt;
    return Obj(*v, at(k));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) invalid(at(k), "unknown field");
  }

 private:
  const ordered_json& j_;
  std::string ptr_;
  std::set<std::string> seen_;
};

void in_range(double v, double lo, double hi, const std::string& ptr, bool lo_open = true) {
  if ((lo_open ? v <= lo : v < lo) || v > hi) {
    std::ostringstream os;
    os << "must lie in " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
    invalid(ptr, os.str());
  }
}

}  // namespace

RunConfig parse_config(const ordered_json& j) {
  RunConfig c;
  c.raw = j;
  Obj root(j, "");

  {
    const ordered_json* v = root.get("version", true);
    if (!v->is_number_integer()) invalid("/version", "expected an integer");
    c.version = v->get<int>();
    if (c.version != kSchemaVersion)
      invalid("/version", "unsupported schema version " + std::to_string(c.version));
  }
  Scenario& sc = c.scenario;
  sc.name = root.str("name", "", true);
  if (sc.name.empty()) invalid("/name", "must not be empty");

  {
    Obj f = *root.child("family", true);
    c.family_name = f.str("name", "", true);
    const double sigma = f.num("sigma", 0.5, true);
    in_range(sigma, 0.0, 1.0, "/family/sigma");
    const double nu = f.num("nu", 0.3);
    in_range(nu, 0.0, 0.5, "/family/nu");
    c.family_eps = f.num("eps", c.family_name == "flat" ? 0.0 : 0.1);
    in_range(std::abs(c.family_eps), 0.0, 0.2, "/family/eps", false);
    f.finish();
    try {
      sc.family = make_family(c.family_name, c.family_eps, sigma, nu);
    } catch (const Error& e) {
      invalid("/family/name", e.what());
    }
  }
  {
    Obj u = *root.child("u0", true);
    const std::string kind = u.str("kind", "", true);
    try {
      sc.u0.kind = u0_kind_from_string(kind);
    } catch (const Error&) {
      invalid("/u0/kind", "expected heaviside, kink or gaussian");
    }
    sc.u0.center = u.num("center", 0.0);
    sc.u0.width = u.positive("width", 1.0);
    sc.u0.frequency = u.num("frequency", 0.0);
    u.finish();
  }
  {
    Obj s = *root.child("seed", true);
    sc.x0 = s.num("x", 0.0, true);
    sc.xi0 = s.num("xi", 1.0, true);
    s.finish();
  }
  sc.t = root.positive("t", 0.5);
  sc.h_ladder = root.list("h_ladder", sc.h_ladder, 4, true);
  sc.delta0 = root.positive("delta0", sc.delta0);
  if (const ordered_json* e = root.get("expected_verdict", false); e && !e->is_null()) {
    if (!e->is_boolean()) invalid("/expected_verdict", "expected true, false or null");
    sc.expected_verdict = e->get<bool>();
  }
  sc.time_reversal = root.boolean("time_reversal", false);

  if (auto d = root.child("detector")) {
    DetectorOptions& o = c.detector;
    o.threshold = d->positive("threshold", o.threshold);
    o.radius = d->positive("radius", o.radius);
    o.rings = d->integer("rings", o.rings, 1);
    o.propagator.dt = d->positive("dt", o.propagator.dt);
    o.verify_propagation = d->boolean("verify_propagation", o.verify_propagation);
    o.richardson_tol = d->positive("richardson_tol", o.richardson_tol);
    o.drift_tol = d->positive("drift_tol", o.drift_tol);
    o.wave_T = d->positive("wave_T", o.wave_T);
    o.wave_ladder = d->list("wave_ladder", o.wave_ladder, 2, true);
    d->finish();
  }
  if (auto f = root.child("flow")) {
    FlowSection& o = c.flow;
    o.h = f->positive("h", o.h);
    o.T = f->positive("T", o.T);
    o.tol = f->positive("tol", o.tol);
    o.ladder = f->list("ladder", o.ladder, 2, true);
    f->finish();
  }
  if (auto p = root.child("phase")) {
    PhaseSection& o = c.phase;
    o.h = p->positive("h", o.h);
    o.s_max = p->positive("s_max", o.s_max);
    o.xi_lo = p->positive("xi_lo", o.xi_lo);
    o.xi_hi = p->positive("xi_hi", o.xi_hi);
    if (o.xi_hi < o.xi_lo) invalid("/phase/xi_hi", "must not be below xi_lo");
    o.s_points = p->integer("s_points", o.s_points, 2);
    o.xi_points = p->integer("xi_points", o.xi_points, 2);
    o.eikonal_tol = p->positive("eikonal_tol", o.eikonal_tol);
    p->finish();
  }
  if (auto k = root.child("contours")) {
    ContourSection& o = c.contours;
    o.h = k->positive("h", o.h);
    o.s = k->list("s", o.s, 1, false);
    for (size_t i = 0; i < o.s.size(); ++i)
      if (o.s[i] < 0.0) invalid("/contours/s/" + std::to_string(i), "must not be negative");
    o.t = k->list("t", o.t, 1, false);
    for (size_t i = 0; i < o.t.size(); ++i) in_range(o.t[i], 0.0, 1.0, "/contours/t/" + std::to_string(i), false);
    o.R = k->positive("R", o.R);
    o.r = k->positive("r", o.r);
    o.samples = k->integer("samples", o.samples, 1);
    o.a1_z = k->point("a1_z", o.a1_z);
    o.a2_z = k->point("a2_z", o.a2_z);
    o.a2_eps = k->positive("a2_eps", o.a2_eps);
    o.a2 = k->boolean("a2", o.a2);
    o.saddle_tol = k->positive("saddle_tol", o.saddle_tol);
    k->finish();
  }
  root.finish();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigInvalid, "/: cannot read " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    invalid("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

ordered_json resolved(const RunConfig& c) {
  const Scenario& sc = c.scenario;
  ordered_json j;
  j["version"] = c.version;
  j["name"] = sc.name;
  j["family"] = {{"name", c.family_name}, {"sigma", sc.family.sigma}, {"nu", sc.family.nu}, {"eps", c.family_eps}};
  j["u0"] = {{"kind", to_string(sc.u0.kind)},
             {"center", sc.u0.center},
             {"width", sc.u0.width},
             {"frequency", sc.u0.frequency}};
  j["seed"] = {{"x", sc.x0}, {"xi", sc.xi0}};
  j["t"] = sc.t;
  j["h_ladder"] = sc.h_ladder;
  j["delta0"] = sc.delta0;
  j["expected_verdict"] = sc.expected_verdict ? ordered_json(*sc.expected_verdict) : ordered_json(nullptr);
  j["time_reversal"] = sc.time_reversal;
  const DetectorOptions& d = c.detector;
  j["detector"] = {{"threshold", d.threshold},
                   {"radius", d.radius},
                   {"rings", d.rings},
                   {"dt", d.propagator.dt},
                   {"verify_propagation", d.verify_propagation},
                   {"richardson_tol", d.richardson_tol},
                   {"drift_tol", d.drift_tol},
                   {"wave_T", d.wave_T},
                   {"wave_ladder", d.wave_ladder}};
  j["flow"] = {{"h", c.flow.h}, {"T", c.flow.T}, {"tol", c.flow.tol}, {"ladder", c.flow.ladder}};
  const PhaseSection& p = c.phase;
  j["phase"] = {{"h", p.h},           {"s_max", p.s_max},           {"xi_lo", p.xi_lo},
                {"xi_hi", p.xi_hi},   {"s_points", p.s_points},     {"xi_points", p.xi_points},
                {"eikonal_tol", p.eikonal_tol}};
  const ContourSection& k = c.contours;
  j["contours"] = {{"h", k.h},
                   {"s", k.s},
                   {"t", k.t},
                   {"R", k.R},
                   {"r", k.r},
                   {"samples", k.samples},
                   {"a1_z", {k.a1_z.real(), k.a1_z.imag()}},
                   {"a2_z", {k.a2_z.real(), k.a2_z.imag()}},
                   {"a2_eps", k.a2_eps},
                   {"a2", k.a2},
                   {"saddle_tol", k.saddle_tol}};
  return j;
}

}  // namespace awf::cli
