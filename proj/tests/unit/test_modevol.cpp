#include "doctest.h"

#include "awf/modevol.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>

using namespace awf;

namespace {

constexpr double kH = 0.05;
constexpr double kXi = 1.5;
const cplx kBase(0.0, -kXi);

const PhaseW& flat_phase() {
  static PhaseW p = [] {
    PhaseW w(make_family("flat"), ReferenceConfig{0.1, 0.1, 8.0, kH});
    w.build_cache(100);
    return w;
  }();
  return p;
}

const PhaseW& family_phase(const std::string& name) {
  static std::map<std::string, PhaseW> cache;
  auto it = cache.find(name);
  if (it == cache.end()) {
    MetricFamily f = make_family(name, 0.1);
    PhaseW w(f, choose_reference(f, 0.1, kH));
    w.build_cache(100);
    it = cache.emplace(name, std::move(w)).first;
  }
  return it->second;
}

SampledLine packet_line(double h, double xi1, double y0 = -150.0, double dy = 0.02, int n = 10000) {
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

WeightedHolo packet_holo(double h, double xi1) {
  return [=](cplx y) { return packet_transform_weighted(y, 0.0, xi1, h, 0.0); };
}

// e^{-Phi0(z)/h} T(e^{i s (hD)^2/2h} u)(z) for u = e^{-y^2/2 + i y xi1/h}, integrated on the Fourier side.
cplx free_packet_oracle(cplx z, double xi1, double h, double s) {
  const double k0 = xi1 / h;
  auto f = [&](double k) {
    return std::exp(-h * k * k / 2.0 + I * s * h * k * k / 2.0 - (k - k0) * (k - k0) / 2.0 + I * k * z - phi0(z) / h);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto re = [&](double k) { return f(k).real(); };
  auto im = [&](double k) { return f(k).imag(); };
  const double lo = k0 - 14.0, hi = k0 + 14.0;
  const cplx integral(GK::integrate(re, lo, hi, 12, 1e-14), GK::integrate(im, lo, hi, 12, 1e-14));
  return std::sqrt(h) * integral;  // (1/2pi) sqrt(2 pi h) sqrt(2 pi)
}

double flat_delta(double s) {
  const double k = s / std::sqrt(1.0 + s * s);
  const double t = 1.5 + k * k;
  return (t - std::sqrt(t * t - 2.0)) / 2.0;
}

double flat_r1(double s, double r) {
  const double k = s / std::sqrt(1.0 + s * s);
  return r * r / (1.0 + 2.0 * (1.0 + k) * (1.0 + k));
}

// Contour truncation bound e^{-r1/h} at the automatic radius.
double truncation(double s, cplx z, double h) { return std::exp(-flat_r1(s, std::abs(z.imag()) - 0.125) / h); }

std::vector<cplx> around(cplx c) { return {c, c + 0.3, c - 0.3, c + cplx(0.0, 0.15), c - cplx(0.0, 0.15)}; }

}  // namespace

TEST_CASE("closed-form free packet agrees with the Fourier-side oracle") {
  for (double s : {0.0, 1.0, 20.0})
    for (cplx z : {cplx(0.0, -1.5), cplx(-s * kXi + 0.2, -1.4), cplx(1.0, -1.0)}) {
      const cplx a = packet_transform_weighted(z, 0.0, kXi, kH, s);
      const cplx b = free_packet_oracle(z, kXi, kH, s);
      CHECK(std::abs(a - b) <= 1e-11 * std::max(1.0, std::abs(b)));
    }
}

TEST_CASE("saddle certificate") {
  SUBCASE("flat, s = 0: critical point (z, -Im z)") {
    const cplx z(0.4, -1.2);
    SaddleReport r = saddle_certificate(flat_phase(), 0.0, z);
    CHECK(std::abs(r.y - z) == 0.0);
    CHECK(r.eta == 1.2);
    CHECK(r.pass);
    CHECK(r.positive == 2);
  }
  SUBCASE("flat, s = 10: critical point shifted by s(-Im z)") {
    const cplx z(-3.0, -1.2);
    SaddleReport r = saddle_certificate(flat_phase(), 10.0, z);
    CHECK(std::abs(r.y - (z + 10.0 * 1.2)) < 1e-10);
    CHECK(r.grad_norm <= 1e-8);
    CHECK(r.value_gap <= 1e-8);
    CHECK(r.min_abs_eig > 0.0);
  }
  SUBCASE("bump and long-range, s = 50") {
    for (const char* name : {"metric_bump", "metric_longrange"}) {
      const cplx z = source_point(family_phase(name), 50.0, kBase);
      SaddleReport r = saddle_certificate(family_phase(name), 50.0, z);
      CHECK(r.pass);
      CHECK(r.negative == 2);
    }
  }
  CHECK_THROWS_AS(saddle_certificate(flat_phase(), 1.0, cplx(0.0, -0.05)), Error);
}

TEST_CASE("flat contour margin matches the quadratic form") {
  const double r = 1.0;
  for (double s : {0.0, 1.0, 10.0, 100.0, 1000.0}) {
    for (ContourKind k : {ContourKind::G0, ContourKind::G1}) {
      MarginReport m = contour_margin(flat_phase(), k, s, cplx(0.2, -1.5), r, 4000);
      CHECK(m.delta >= flat_delta(s) - 1e-9);
      CHECK(m.delta <= flat_delta(s) * 1.01);
      CHECK(m.r1 >= flat_r1(s, r) - 1e-9);
      CHECK(m.r1 <= flat_r1(s, r) * 1.01);
    }
  }
  // s = 0 is the standard FBI contour
  CHECK(contour_margin(flat_phase(), ContourKind::G0, 0.0, cplx(0.0, -1.5), r).delta == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("margin is uniform in s on the long-range family") {
  const PhaseW& ph = family_phase("metric_longrange");
  std::vector<double> d, r1;
  for (double s : {1.0, 10.0, 100.0}) {
    MarginReport m = contour_margin(ph, ContourKind::G0, s, source_point(ph, s, kBase), 1.0, 4000);
    d.push_back(m.delta);
    r1.push_back(m.r1);
  }
  const auto [dlo, dhi] = std::minmax_element(d.begin(), d.end());
  const auto [rlo, rhi] = std::minmax_element(r1.begin(), r1.end());
  CHECK(*dlo > 0.0);
  CHECK(*dhi <= 1.3 / 0.7 * *dlo);
  CHECK(*rhi <= 1.3 / 0.7 * *rlo);
}

TEST_CASE("oversized contour on the bump family is rejected") {
  // At r = 1 and Im z = -1 the contour reaches |Re eta| <= delta0.
  const PhaseW& ph = family_phase("metric_bump");
  CHECK_NOTHROW(contour_margin(ph, ContourKind::G0, 20.0, cplx(-20.0, -1.5), 1.0));
  try {
    contour_margin(ph, ContourKind::G0, 20.0, cplx(-20.0, -1.0), 1.0);
    FAIL("expected MarginViolated");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MarginViolated);
  }
}

TEST_CASE("G0(0) and G1(0) are the identity up to contour truncation") {
  const WeightedHolo v = packet_holo(kH, kXi);
  const std::vector<cplx> zs = around(kBase);
  for (auto apply : {apply_G0, apply_G1}) {
    EvolvedField f = apply(flat_phase(), v, 0.0, zs, kH, {});
    for (size_t i = 0; i < zs.size(); ++i) CHECK(std::abs(f.field.weighted[i][0] - v(zs[i])) <= truncation(0.0, zs[i], kH));
    CHECK(f.provenance == "quadrature");
  }
}

TEST_CASE("flat G0 and G1 by quadrature match the free propagator") {
  const WeightedHolo v = packet_holo(kH, kXi);
  for (double s : {1.0, 20.0}) {
    const std::vector<cplx> zs = around(source_point(flat_phase(), s, kBase));
    EvolvedField g0 = apply_G0(flat_phase(), v, s, zs, kH, {});
    for (size_t i = 0; i < zs.size(); ++i)
      CHECK(std::abs(g0.field.weighted[i][0] - free_packet_oracle(zs[i], kXi, kH, s)) <= truncation(s, zs[i], kH));
    // G1 moves the packet the other way
    std::vector<cplx> zs1;
    for (cplx z : zs) zs1.push_back(2.0 * kBase - z);
    EvolvedField g1 = apply_G1(flat_phase(), v, s, zs1, kH, {});
    for (size_t i = 0; i < zs1.size(); ++i)
      CHECK(std::abs(g1.field.weighted[i][0] - free_packet_oracle(zs1[i], kXi, kH, -s)) <= truncation(s, zs1[i], kH));
  }
}

TEST_CASE("G0 of a plane wave is the symbol times the wave") {
  // G0 e^{i y xi0/h} = e^{i (z xi0 + W~(s, xi0))/h}; the saddle sits at eta = xi0 = -Im z.
  const double xi0 = 1.5;
  const WeightedHolo wave = [=](cplx y) { return std::exp(I * y * xi0 / kH - phi0(y) / kH); };
  for (const char* name : {"flat", "metric_longrange"}) {
    const PhaseW& ph = std::string(name) == "flat" ? flat_phase() : family_phase(name);
    for (double s : {2.0, 20.0}) {
      const cplx z(0.3, -xi0);
      const cplx want = std::exp(I * (z * xi0 + ph.eval1(s, xi0).Wtilde) / kH - phi0(z) / kH);
      const cplx got = contour_apply(ph, ContourKind::G0, wave, s, z, kH);
      CHECK(std::abs(got - want) <= truncation(s, z, kH) * std::abs(want));
    }
  }
}

TEST_CASE("multiplier path") {
  SUBCASE("s = 0 is the Bargmann transform") {
    const SampledLine u = packet_line(kH, kXi);
    const std::vector<cplx> zs = around(kBase);
    EvolvedField f = apply_G0_multiplier(flat_phase(), u, 0.0, zs, kH);
    FBIField b = bargmann(u, zs, {kH});
    for (size_t i = 0; i < zs.size(); ++i) CHECK(std::abs(f.field.weighted[i][0] - b.weighted[i][0]) <= 1e-14);
    CHECK(f.provenance == "multiplier");
  }
  SUBCASE("flat family equals free propagation") {
    for (double s : {5.0, 80.0}) {
      const std::vector<cplx> zs = around(source_point(flat_phase(), s, kBase));
      EvolvedField f = apply_G0_multiplier(flat_phase(), packet_line(kH, kXi), s, zs, kH);
      for (size_t i = 0; i < zs.size(); ++i)
        CHECK(std::abs(f.field.weighted[i][0] - free_packet_oracle(zs[i], kXi, kH, s)) <= 1e-10);
    }
  }
  SUBCASE("agrees with the contour quadrature at s = 20") {
    for (const char* name : {"metric_bump", "metric_longrange"}) {
      const PhaseW& ph = family_phase(name);
      const std::vector<cplx> zs = around(source_point(ph, 20.0, kBase));
      EvolvedField m = apply_G0_multiplier(ph, packet_line(kH, kXi), 20.0, zs, kH);
      EvolvedField q = apply_G0(ph, packet_holo(kH, kXi), 20.0, zs, kH, {});
      double scale = 0.0, diff = 0.0;
      for (size_t i = 0; i < zs.size(); ++i) {
        scale = std::max(scale, std::abs(m.field.weighted[i][0]));
        diff = std::max(diff, std::abs(m.field.weighted[i][0] - q.field.weighted[i][0]));
      }
      CHECK(diff <= 1e-4 * scale);
    }
  }
  SUBCASE("low-frequency input is rejected") {
    try {
      multiplier_apply(flat_phase(), packet_line(kH, 0.12), 1.0, kH);
      FAIL("expected BandUnderflow");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::BandUnderflow);
    }
  }
  SUBCASE("h-dependent phase used at another h") {
    MetricFamily f = make_family("drift", 0.1);
    PhaseW ph(f, choose_reference(f, 0.1, kH));
    CHECK_THROWS_AS(multiplier_apply(ph, packet_line(0.1, kXi), 1.0, 0.1), Error);
  }
}

TEST_CASE("weighted mapping bound is stable in s") {
  const PhaseW& ph = family_phase("metric_longrange");
  const SampledLine u = packet_line(kH, kXi);
  double vmax = 0.0;
  for (cplx z : around(kBase)) vmax = std::max(vmax, std::abs(bargmann_weighted(u, z, kH)));
  std::vector<double> ratio;
  for (double s : {0.0, 5.0, 20.0, 80.0}) {
    EvolvedField f = apply_G0_multiplier(ph, u, s, around(source_point(ph, s, kBase)), kH);
    double m = 0.0;
    for (const auto& w : f.field.weighted) m = std::max(m, std::abs(w[0]));
    ratio.push_back(m / vmax);
  }
  for (double r : ratio) CHECK(r <= 1.0 + 1e-9);
  CHECK(*std::min_element(ratio.begin(), ratio.end()) >= 0.25);
}

TEST_CASE("round trip G1 G0") {
  QuadOptions o;
  o.check = false;
  o.preflight = false;
  SUBCASE("flat family sits at the quadrature floor") {
    LadderReport r = roundtrip_residual(flat_phase(), [](double h) { return packet_line(h, kXi, -70.0); }, 20.0,
                                        {kBase, kBase + 0.3}, {kH}, o);
    CHECK(r.residual[0] <= 1e-10 * r.scale[0]);
  }
  SUBCASE("bump family residual decays along the ladder") {
    LadderReport r = roundtrip_residual(family_phase("metric_bump"),
                                        [](double h) { return packet_line(h, kXi, -70.0); }, 20.0,
                                        {kBase, kBase + 0.3, kBase + cplx(0.0, 0.15)}, {0.1, 0.05, 0.025}, o);
    CHECK(r.slope < 0.0);
    CHECK(r.residual.back() <= 1e-10);
  }
  SUBCASE("zero input") {
    LadderReport r = roundtrip_residual(
        flat_phase(), [](double h) { SampledLine u = packet_line(h, kXi, -70.0); std::fill(u.values.begin(), u.values.end(), 0.0); return u; },
        5.0, {kBase}, {kH}, o);
    CHECK(r.residual[0] == 0.0);
  }
}

TEST_CASE("evolution equation residual") {
  const std::vector<cplx> offsets{0.0, 0.3, -0.3, cplx(0.0, 0.15), cplx(0.0, -0.15)};
  const std::vector<double> s_grid{5.0, 20.0, 80.0};
  EvolutionReport flat = evolution_residual_multiplier(flat_phase(), packet_line(kH, kXi), s_grid, kBase, offsets, kH);
  for (size_t i = 0; i < flat.s.size(); ++i) CHECK(flat.residual[i] <= flat.floor[i]);
  for (const char* name : {"metric_bump", "metric_longrange"}) {
    EvolutionReport r =
        evolution_residual_multiplier(family_phase(name), packet_line(kH, kXi), s_grid, kBase, offsets, kH);
    for (size_t i = 0; i < r.s.size(); ++i) CHECK(r.residual[i] <= 10.0 * flat.floor[i]);
  }
  // a defect c s in the phase shows up as c |G0 v|
  EvolutionReport bad =
      evolution_residual_multiplier(flat_phase(), packet_line(kH, kXi), s_grid, kBase, offsets, kH, 0.01);
  for (size_t i = 0; i < bad.s.size(); ++i) {
    CHECK(bad.residual[i] >= 100.0 * bad.floor[i]);
    CHECK(bad.residual[i] == doctest::Approx(0.01 * bad.scale[i]).epsilon(0.05));
  }
  // the quadrature path reads the same residual
  EvolutionReport q = evolution_residual_quadrature(family_phase("metric_longrange"), packet_holo(kH, kXi),
                                                    {1.0, 5.0}, kBase, {0.0, 0.3}, kH);
  for (size_t i = 0; i < q.s.size(); ++i) CHECK(q.residual[i] <= q.floor[i]);
}

TEST_CASE("evolved field CSV") {
  EvolvedField f = apply_G0_multiplier(flat_phase(), packet_line(kH, kXi), 1.0, {kBase}, kH);
  f.write_csv("evolved.csv");
  std::FILE* fp = std::fopen("evolved.csv", "r");
  REQUIRE(fp != nullptr);
  char line[256];
  REQUIRE(std::fgets(line, sizeof line, fp) != nullptr);
  CHECK(std::string(line) == "re_z,im_z,h,re_val,im_val,weighted_mag,s,provenance\n");
  std::fclose(fp);
}
