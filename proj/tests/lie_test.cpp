#include <doctest.h>

#include <cmath>
#include <random>

#include "kolmo/demos.hpp"
#include "kolmo/error.hpp"
#include "kolmo/lie.hpp"

using namespace kolmo;

namespace {

LocalOperator grade0(std::string kind, LocalOperator::Action a, double norm = 1) {
  LocalOperator::Spec s;
  s.kind = std::move(kind);
  s.grade = 0;
  s.norm_bound = norm;
  return LocalOperator(s, std::move(a));
}

// Keeps the coefficients of the listed degrees.
LocalOperator keep(std::vector<int> degrees) {
  return grade0("keep", [degrees](const TruncatedSeries& P) {
    TruncatedSeries out(1, P.cap(), P.ref_radius());
    for (int d : degrees)
      if (d <= P.cap()) out.set(d, P.at(d));
    return out;
  });
}

const FieldAction kTaylorAction = [](const TruncatedSeries& v, const TruncatedSeries& y) {
  return multiply_full(v.rebased(y.ref_radius()), derivative(y));
};

TruncatedSeries monomial(int n, int cap, double r = 1, double c = 1) {
  TruncatedSeries f(1, cap, r);
  f.set(n, c);
  return f;
}

double max_coeff(const TruncatedSeries& f) {
  double m = 0;
  for (const auto& c : f.coefficients()) m = std::max(m, std::abs(c));
  return m;
}

LieSchedule morse_schedule(const ActionProblem& p, double t) {
  return rho_schedule(p, PositiveSequence::exp_power(-1, 1.5), t, 40);
}

}  // namespace

TEST_CASE("lie_step on the Morse problem") {
  const double t = 1;
  const auto p = morse_problem(32, t);
  const auto sch = morse_schedule(p, t);

  SUBCASE("zero perturbation stays zero") {
    auto st = initial_state(p, TruncatedSeries(1, 32, t), t);
    for (int n = 0; n < 3; ++n) {
      st = lie_step(st, p, sch.radii);
      CHECK(st.r.is_zero());
      CHECK(st.tau.same_coefficients(p.f));
    }
  }
  SUBCASE("one step doubles the order and stays consistent") {
    auto st = initial_state(p, monomial(3, 32, t, 1e-3), t);
    const auto next = lie_step(st, p, sch.radii);
    CHECK(order(next.r, 0.0) >= 4);
    CHECK(st.consistency <= 1e-12);
    CHECK(next.radius == doctest::Approx(sch.radii.at(1)));
    // Hand expansion: u = (eps/2) z^2 d/dz, u(z^2) = eps z^3, u(eps z^3) = u^2(z^2) = (3/2) eps^2 z^4,
    // so e^{-u}(z^2 + eps z^3) = z^2 - (3/4) eps^2 z^4 + O(z^5).
    const double eps = 1e-3;
    const double c4 = -0.75 * eps * eps;
    CHECK(std::abs(next.r.at(4).real() - c4) <= 1e-18);
  }
}

TEST_CASE("rho_schedule") {
  const auto p = morse_problem(32, 1);
  const auto sch = morse_schedule(p, 1);
  CHECK(sch.passed);
  // s_1 = rho_0 s_0 and rho_0 = K b_0 c_0 / e < 1/e, so no limit above 1/e is reachable.
  CHECK(sch.radii.limit() > 0);
  CHECK(sch.radii.at(1) < std::exp(-1.0));
  for (std::size_t n = 0; n < 40; ++n) CHECK(sch.radii.at(n + 1) < sch.radii.at(n));
  bool vacuous2 = false;
  for (const auto& c : sch.conditions) {
    CHECK(c.holds);
    if (c.id == 2) vacuous2 = c.vacuous;
  }
  CHECK(vacuous2);

  auto bad = p;
  bad.constants->j = PositiveSequence::exp_power(1, 2);
  CHECK_THROWS_AS(morse_schedule(bad, 1), DomainError);
}

TEST_CASE("certify on Morse runs") {
  const double t = 1;
  const auto p = morse_problem(32, t);
  const auto sch = morse_schedule(p, t);

  auto run = run_lie(p, monomial(3, 32, t, 1e-3), sch.radii, {.steps = 8});
  const auto cert = certify(run, p, sch);
  CHECK(cert.all());
  for (std::size_t n = 0; n < run.states.size(); ++n)
    CHECK(run.states[n].r_norm <= std::exp(sch.b.log_at(n)) * (1 + 1e-12));

  auto zero = run_lie(p, TruncatedSeries(1, 32, t), sch.radii, {.steps = 4});
  CHECK(certify(zero, p, sch).all());
  CHECK(zero.residual() == 0.0);
  for (double d : zero.versality_defect) CHECK(d == 0.0);

  auto big = run_lie(p, monomial(3, 32, t, 0.5), sch.radii, {.steps = 2});
  const auto bc = certify(big, p, sch);
  CHECK_FALSE(bc.all());
  CHECK_FALSE(bc.n2);
  bool n2_at_0 = false;
  for (const auto& c : bc.checks)
    if (c.name == "N2" && c.n == 0) n2_at_0 = !c.holds;
  CHECK(n2_at_0);
}

TEST_CASE("property: below the a priori threshold the certificate always passes") {
  const double t = 1;
  const auto p = morse_problem(32, t);
  const auto sch = morse_schedule(p, t);
  REQUIRE(sch.threshold > 0);
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-1, 1), scale(0.05, 0.99);
  for (int trial = 0; trial < 10; ++trial) {
    TruncatedSeries r0(1, 32, t);
    for (int n = 3; n <= 8; ++n) r0.set(n, u(rng));
    r0 *= Complex(scale(rng) * sch.threshold / norm(r0, t));
    auto run = run_lie(p, r0, sch.radii, {.steps = 6});
    const auto cert = certify(run, p, sch);
    CHECK(cert.hypothesis);
    CHECK(cert.all());
    // Versality defect is nonincreasing along a certified run.
    for (std::size_t n = 1; n < run.versality_defect.size(); ++n)
      CHECK(run.versality_defect[n] <= run.versality_defect[n - 1] * (1 + 1e-12));
  }
}

TEST_CASE("property: phi has a quadratic zero, psi a simple one") {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(-1, 1), ratio(0.01, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    TruncatedSeries a(1, 40, 1.0), g(1, 40, 1.0);
    for (int n = 0; n <= 3; ++n) a.set(n, u(rng));
    for (int n = 0; n <= 8; ++n) g.set(n, u(rng));
    const double t = 1, s = 0.5;
    const double x = ratio(rng);
    a *= Complex(x * (t - s) / norm(a, 1.0));
    const auto op = certify_vector_field(a);
    REQUIRE(op.borel_constant() / (t - s) == doctest::Approx(x));
    const double phi = norm(borel_apply(BorelKernel::phi(), op, t, s, g), s);
    const double psi = norm(borel_apply(BorelKernel::psi(), op, t, s, g), s);
    // Majorants of the kernels: x^2/(1-x)^2 and x/(1-x).
    CHECK(phi <= x * x / ((1 - x) * (1 - x)) * norm(g, t) * (1 + 1e-12));
    CHECK(psi <= x / (1 - x) * norm(g, t) * (1 + 1e-12));
    if (x <= 1 - std::sqrt(0.5)) CHECK(phi <= 2 * x * x * norm(g, t) * (1 + 1e-12));
  }
}

TEST_CASE("involutive quasi-inverse") {
  SUBCASE("exact inverse with pi = identity") {
    // x = z, act(v, x) = v, so L = identity inverts the action exactly.
    const auto x = monomial(1, 12);
    const auto L = grade0("identity", [](const TruncatedSeries& y) { return y; });
    const auto pi = grade0("identity", [](const TruncatedSeries& y) { return y; });
    const auto inv = involutive_quasi_inverse(L, pi, kTaylorAction, x);
    std::mt19937_64 rng(35);
    std::uniform_real_distribution<double> u(-1, 1);
    TruncatedSeries r(1, 12, 1.0);
    for (int n = 0; n <= 8; ++n) r.set(n, u(rng));
    CHECK(max_coeff(inv.j(x, r) - r) == 0.0);
    CHECK(inv.kappa0(r).is_zero());
  }
  SUBCASE("pi = 0 gives kappa_0 = 1 - L") {
    // x = z^3, L(y) = [y / 3z^2]: act(L(y), x) reproduces y above degree 1.
    const auto x = monomial(3, 16);
    const auto L = grade0("divide", [](const TruncatedSeries& y) {
      TruncatedSeries out(1, y.cap(), y.ref_radius());
      for (int n = 2; n <= y.cap(); ++n) out.set(n - 2, y.at(n) / 3.0);
      return out;
    });
    const auto pi = grade0("zero", [](const TruncatedSeries& y) { return TruncatedSeries(1, y.cap(), y.ref_radius()); });
    const auto inv = involutive_quasi_inverse(L, pi, kTaylorAction, x);
    TruncatedSeries y(1, 16, 1.0);
    for (int n = 0; n <= 8; ++n) y.set(n, n + 1.0);
    const auto k = inv.kappa0(y);
    CHECK(k.at(0) == Complex(1));
    CHECK(k.at(1) == Complex(2));
    for (int n = 2; n <= 16; ++n) CHECK(std::abs(k.at(n)) < 1e-15);
    CHECK(check_involutive_identity(inv, L, pi, kTaylorAction, x, 50, 8, 3).holds);
  }
  SUBCASE("truncated division with a two-dimensional transversal") {
    const auto x = monomial(3, 16);
    const auto L = grade0("cut_quotient", [](const TruncatedSeries& y) {
      TruncatedSeries out(1, y.cap(), y.ref_radius());
      out.set(0, y.at(2) / 3.0);
      out.set(1, y.at(3) / 3.0);
      return out;
    }, 1.0 / 3);
    const auto pi = keep({0, 1});
    const auto inv = involutive_quasi_inverse(L, pi, kTaylorAction, x);
    const auto chk = check_involutive_identity(inv, L, pi, kTaylorAction, x, 100, 8, 4, 1e-12);
    CHECK(chk.holds);
    CHECK(chk.samples == 100);
  }
  SUBCASE("refuses when L(y) moves the transversal") {
    // T = span{z}: a field L(y) = a + bz applied to cz gives ac + bcz, whose
    // constant term leaves T.
    const auto x = monomial(3, 16);
    const auto L = grade0("cut_quotient", [](const TruncatedSeries& y) {
      TruncatedSeries out(1, y.cap(), y.ref_radius());
      out.set(0, y.at(2) / 3.0);
      out.set(1, y.at(3) / 3.0);
      return out;
    });
    CHECK_THROWS_WITH_AS(involutive_quasi_inverse(L, keep({1}), kTaylorAction, x),
                         doctest::Contains("witness"), DomainError);
  }
}
