#include "doctest.h"

#include "awf/symbols.hpp"

#include <boost/multiprecision/cpp_complex.hpp>

using namespace awf;
using mpc = boost::multiprecision::cpp_complex_50;

namespace {

// Independent 50-digit re-evaluation of the closed-form coefficients.
mpc mp(cplx z) { return mpc(z.real(), z.imag()); }
cplx to_c(const mpc& z) { return {static_cast<double>(z.real()), static_cast<double>(z.imag())}; }

struct MpFamily {
  double bump = 0, drift = 0, pot = 0, sigma = 0.5;
};

mpc mp_q(const MpFamily& f, cplx x, cplx xi, double h) {
  mpc X = mp(x), XI = mp(xi), H(h);
  mpc one(1), x2 = X * X;
  mpc a11 = one + mpc(f.bump) * exp(-x2);
  mpc a1 = mpc(f.drift) * X * pow(one + x2, mpc(-f.sigma / 2));
  mpc a0 = mpc(f.pot) * pow(one + x2, mpc((2 - f.sigma) / 2));
  return mpc(0.5) * a11 * XI * XI + H * a1 * XI + H * H * a0;
}

MetricFamily full_family() {
  MetricFamily f = make_family("flat");
  f.name = "full";
  f.eps_bump = 0.1;
  f.eps_drift = 0.1;
  f.eps_potential = 0.1;
  finalize_family(f);
  return f;
}

}  // namespace

TEST_CASE("flat coefficients are the identity") {
  MetricFamily f = make_family("flat", 0.0, 0.5, 0.3, 2);
  CVec x(2);
  x << cplx(0.3, 0.1), cplx(-2.0, 0.2);
  Coeffs c = eval_coeffs(f, x);
  CHECK((c.a - CMat::Identity(2, 2)).norm() == 0.0);
  CHECK(c.b.norm() == 0.0);
  CHECK(c.c == cplx(0.0));
}

TEST_CASE("potential coefficient at the origin") {
  MetricFamily f = make_family("potential", 0.1);
  CHECK(std::abs(eval_coeffs(f, vec1(0.0)).c - 0.1) < 1e-15);
  CHECK(std::abs(q_total1(f, 0.0, 1.0, 0.1) - 0.501) < 1e-15);
}

TEST_CASE("bump coefficient against high-precision oracle") {
  MetricFamily f = make_family("metric_bump", 0.1);
  const cplx x(1.0, 0.1);
  const cplx got = eval_coeffs(f, vec1(x)).a(0, 0);
  const cplx want = to_c(mpc(1) + mpc(0.1) * exp(-mp(x) * mp(x)));
  CHECK(std::abs(got - want) < 1e-15);
}

TEST_CASE("full perturbed q_total against high-precision oracle") {
  MetricFamily f = full_family();
  const cplx x(1.0, 0.1), xi(1.0, -0.05);
  const cplx want = to_c(mp_q({0.1, 0.1, 0.1, 0.5}, x, xi, 0.05));
  CHECK(std::abs(q_total1(f, x, xi, 0.05) - want) < 1e-14);
}

TEST_CASE("flat q_total and tilde_q") {
  MetricFamily f = make_family("flat");
  CHECK(q_total1(f, 0.0, 2.0, 0.3) == cplx(2.0));
  CHECK(tilde_q(f, vec1(cplx(0.4, -1.0)), vec1(1.0), 0) == cplx(0.5));
  CHECK(tilde_q(f, vec1(cplx(0.4, -1.0)), vec1(1.0), 1) == cplx(0.0));
}

TEST_CASE("tilde_q at z = 1 - i, zeta = 1 reduces to the real point 1") {
  MetricFamily f = full_family();
  const QParts p = q_parts(f, vec1(1.0), vec1(1.0));
  CHECK(std::abs(tilde_q(f, vec1(cplx(1.0, -1.0)), vec1(1.0), 0) - p.q0) < 1e-15);
  CHECK(std::abs(tilde_q(f, vec1(cplx(1.0, -1.0)), vec1(1.0), 1) - p.q1) < 1e-15);
  CHECK(std::abs(tilde_q(f, vec1(cplx(1.0, -1.0)), vec1(1.0), 2) - p.q2) < 1e-15);
}

TEST_CASE("eval_coeffs rejects points outside the strip") {
  MetricFamily f = make_family("metric_bump");
  CHECK_THROWS_AS(eval_coeffs(f, vec1(cplx(0.0, 0.28))), Error);
  try {
    eval_coeffs(f, vec1(cplx(0.0, 0.28)));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PointOutsideDomain);
  }
  CHECK_NOTHROW(eval_coeffs(f, vec1(cplx(0.0, 0.26))));
}

TEST_CASE("assumption check") {
  AssumptionReport flat = check_assumption_a(make_family("flat"));
  CHECK(flat.worst_ratio == 0.0);
  CHECK(flat.min_eigenvalue == doctest::Approx(1.0));
  for (const char* name : {"metric_bump", "metric_longrange", "drift", "potential"}) {
    CAPTURE(name);
    AssumptionReport r = check_assumption_a(make_family(name, 0.2));
    CHECK(r.pass);
    CHECK(r.max_imag_on_real < 1e-15);
  }
  // The potential bound saturates at the real origin with C0 = eps.
  AssumptionReport pot = sample_assumption_a(make_family("potential", 0.1));
  CHECK(pot.ratio_potential <= 1.0 + 1e-12);
  CHECK(pot.ratio_potential > 0.9);

  MetricFamily bad = make_family("metric_bump", 0.1);
  bad.eps_bump = 2.0 * bad.C0 * 1.5;  // a11 - 1 = 3 C0 at the origin
  CHECK_THROWS_AS(check_assumption_a(bad), Error);
}

TEST_CASE("C0 bounds hold over the full strip for every family in 2-D") {
  for (const char* name : {"metric_bump", "metric_longrange", "drift", "potential"}) {
    CAPTURE(name);
    CHECK(sample_assumption_a(make_family(name, 0.15, 0.7, 0.4, 2)).pass);
  }
}

TEST_CASE("reality and conjugate symmetry") {
  MetricFamily f = full_family();
  for (double x : {-3.0, -0.4, 0.0, 1.2, 7.0})
    for (double xi : {-2.0, 0.3, 1.0}) {
      CHECK(std::abs(q_total1(f, x, xi, 0.07).imag()) < 1e-16);
      const cplx z(x, 0.1 * japanese(x)), w(xi, 0.2);
      CHECK(std::abs(q_total1(f, std::conj(z), std::conj(w), 0.07) - std::conj(q_total1(f, z, w, 0.07))) < 1e-14);
    }
}

TEST_CASE("tilde_q on the real slice equals q at Re z") {
  MetricFamily f = full_family();
  for (double re : {-1.0, 0.5, 2.0}) {
    const cplx z(re, -0.2);
    const cplx zeta = -z.imag();
    const QParts p = q_parts(f, vec1(re), vec1(zeta));
    CHECK(std::abs(tilde_q(f, vec1(z), vec1(zeta), 0) - p.q0) < 1e-15);
  }
}

TEST_CASE("analytic gradient matches finite differences") {
  MetricFamily f = make_family("metric_longrange", 0.15);
  f.eps_bump = 0.1;
  f.eps_drift = 0.1;
  f.eps_potential = 0.05;
  f.dim = 2;
  f.shape = RMat();
  finalize_family(f);
  CVec x(2), xi(2);
  x << cplx(0.7, 0.05), cplx(-0.3, 0.02);
  xi << cplx(1.1, -0.03), cplx(0.4, 0.01);
  const double h = 0.1, e = 1e-6;
  QGrad g = q_grad(f, x, xi, h);
  for (int l = 0; l < 2; ++l) {
    CVec xp = x, xm = x, wp = xi, wm = xi;
    xp(l) += e;
    xm(l) -= e;
    wp(l) += e;
    wm(l) -= e;
    const cplx dx = (q_total(f, xp, xi, h) - q_total(f, xm, xi, h)) / (2 * e);
    const cplx dxi = (q_total(f, x, wp, h) - q_total(f, x, wm, h)) / (2 * e);
    CHECK(std::abs(g.dx(l) - dx) < 1e-8);
    CHECK(std::abs(g.dxi(l) - dxi) < 1e-8);
  }
}

TEST_CASE("invalid family parameters") {
  CHECK_THROWS_AS(make_family("nope"), Error);
  CHECK_THROWS_AS(make_family("flat", 0.1, 1.5), Error);
  CHECK_THROWS_AS(make_family("flat", 0.1, 0.5, 0.6), Error);
}
