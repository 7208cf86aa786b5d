#include <doctest.h>

#include <cmath>
#include <random>

#include "kolmo/error.hpp"
#include "kolmo/kolmogorov.hpp"
#include "kolmo/local_ops.hpp"

using namespace kolmo;

namespace {

TruncatedSeries poly(std::vector<Complex> c, int cap, double r = 1) {
  return TruncatedSeries::from_coefficients(c, r, cap);
}

TruncatedSeries random_series(std::mt19937_64& rng, int cap, double r = 1, int max_degree = -1) {
  std::normal_distribution<double> g;
  TruncatedSeries f(1, cap, r);
  for (int n = 0; n <= (max_degree < 0 ? cap : max_degree); ++n) f.set(n, Complex(g(rng), g(rng)));
  return f;
}

// Time-1 flow of z' = a(z) by classical RK4.
Complex flow(const TruncatedSeries& a, Complex z) {
  const int steps = 2000;
  const double h = 1.0 / steps;
  for (int i = 0; i < steps; ++i) {
    const Complex k1 = a.evaluate(z), k2 = a.evaluate(z + 0.5 * h * k1), k3 = a.evaluate(z + 0.5 * h * k2),
                  k4 = a.evaluate(z + h * k3);
    z += h / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return z;
}

}  // namespace

TEST_CASE("weights") {
  const WeightFunction w{.C = 2, .p = 1, .q = 0.5, .k = 1};
  CHECK(w(1, 0.5) == doctest::Approx(2 * 0.5 * 0.5));
  CHECK(w.graded(0, 1, 0.5) == 1.0);
  CHECK(w.graded(2, 1, 0.5) == doctest::Approx(std::exp(2.0) * std::pow(w(1, 0.5), 2) / 4));
  CHECK(w.operator_weight(2, 1, 0.5) == doctest::Approx(std::pow(w(1, 0.5), 2) / 4));
  const CutoffWeight c{.a = 1, .b = 2};
  CHECK(c(3, 0.5, 1) == doctest::Approx(std::pow(2.0, 8) * 0.5 * 0.25));
  CHECK(c.log_value(3, 0.5, 1) == doctest::Approx(std::log(c(3, 0.5, 1))));
}

TEST_CASE("submult_check") {
  // Midpoint equality for lambda = t - s, p = q = 1 at (0.2, 1).
  const WeightFunction w;
  const double m = 0.6;
  CHECK(w.graded(2, 1, 0.2) == doctest::Approx(w.graded(1, 1, m) * w.graded(1, m, 0.2)));
  for (int p = 1; p <= 4; ++p)
    for (int q = 1; q <= 4; ++q) {
      CHECK(submult_check(w, p, q).holds);
      CHECK(submult_check(WeightFunction{.C = 3, .k = 0}, p, q).holds);
      CHECK(submult_check(WeightFunction{.C = 1, .p = 1, .q = 2, .k = 1}, p, q).holds);
    }
  const auto r = submult_check(w, 2, 2, 60);
  CHECK(r.samples > 0);
  CHECK(r.worst_margin >= -1e-12);
}

TEST_CASE("certify_vector_field norms") {
  CHECK(certify_vector_field(poly({1}, 8)).norm_bound() == doctest::Approx(1));
  const double t = 0.7;
  CHECK(certify_vector_field(poly({0, 0, 1}, 8, t)).norm_bound() == doctest::Approx(t * t));
  const auto zero = certify_vector_field(poly({0}, 8));
  CHECK(zero.norm_bound() == 0.0);
  CHECK(zero.apply(poly({1, 2, 3}, 8), 1, 0.5).is_zero());
}

TEST_CASE("compose") {
  const auto d = certify_vector_field(poly({1}, 12));
  const auto dd = compose(d, d);
  CHECK(dd.grade() == 2);
  CHECK(dd.norm_bound() <= 1.0);
  const auto g = poly({0, 0, 0, 1}, 12);
  const auto out = dd.apply(g, 1, 0.5);
  CHECK(out.at(1) == Complex(6));

  CHECK(compose(d, LocalOperator::zero(1, 1)).apply(g, 1, 0.5).is_zero());
  // Grade-0 cutoffs compose freely; a graded cutoff weight is refused.
  CHECK_NOTHROW(compose(certify_cutoff(0, 4, 1), certify_cutoff(0, 4, 1)));
  LocalOperator::Spec cs;
  cs.kind = "graded_cutoff";
  cs.grade = 1;
  cs.weight = CutoffWeight{.a = 0, .b = 1};
  const LocalOperator graded(cs, [](const TruncatedSeries& x) { return x; });
  CHECK_THROWS_AS(compose(graded, d), DomainError);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  const auto a = random_series(rng, 16, 1, 2), b = random_series(rng, 16, 1, 2);
  const auto A = certify_vector_field(a), B = certify_vector_field(b);
  const auto AB = compose(A, B);
  CHECK(AB.norm_bound() <= A.norm_bound() * B.norm_bound() * (1 + 1e-12));
  for (int i = 0; i < 200; ++i) {
    double s = u(rng), t = u(rng);
    if (s > t) std::swap(s, t);
    if (t - s < 1e-3) continue;
    const auto h = random_series(rng, 16, 1, 12);
    const double ratio = AB.operator_weight(t, s) * norm(AB.apply(h, t, s), s) / norm(h, t);
    CHECK(ratio <= AB.norm_bound() * (1 + 1e-12));
  }
}

TEST_CASE("property: operators commute with restriction") {
  std::mt19937_64 rng(9);
  const auto v = certify_vector_field(random_series(rng, 12, 1, 3));
  const auto m = certify_multiplication(random_series(rng, 12, 1, 3));
  const auto c = certify_cutoff(2, 7, 1);
  for (const LocalOperator* op : {&v, &m, &c}) {
    const auto g = random_series(rng, 12, 1, 8);
    // 3-point chain 1 > 0.8 > 0.5: apply then restrict vs restrict then apply.
    const auto a = restrict(op->apply(g, 1, 0.8), 0.8, 0.5);
    const auto b = op->apply(restrict(g, 1, 0.8), 0.8, 0.5);
    CHECK(a.same_coefficients(b));
  }
}

TEST_CASE("property: certificate soundness over random samples") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_series(rng, 12, 1, 4);
    const LocalOperator op = i % 2 ? certify_vector_field(a) : certify_multiplication(a);
    double s = u(rng), t = u(rng);
    if (s > t) std::swap(s, t);
    if (t - s < 1e-3) continue;
    const auto g = random_series(rng, 12, 1, 8);
    const double ratio = op.operator_weight(t, s) * norm(op.apply(g, t, s), s) / norm(g, t);
    if (ratio > op.norm_bound() * (1 + 1e-12)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("property: |u^n| <= |u|^n for n <= 5") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto u = certify_vector_field(random_series(rng, 20, 1, 2));
    LocalOperator p = u;
    for (int n = 2; n <= 5; ++n) {
      p = compose(u, p);
      CHECK(p.grade() == n);
      CHECK(p.norm_bound() <= std::pow(u.norm_bound(), n) * (1 + 1e-12));
      const auto g = random_series(rng, 20, 1, 6);
      const double ratio = p.operator_weight(1, 0.4) * norm(p.apply(g, 1, 0.4), 0.4) / norm(g, 1);
      CHECK(ratio <= std::pow(u.norm_bound(), n) * (1 + 1e-12));
    }
  }
}

TEST_CASE("Borel map and exponentials") {
  std::mt19937_64 rng(13);
  const auto g = random_series(rng, 16, 1, 10);

  SUBCASE("zero operator is the identity") {
    const auto out = borel_apply(BorelKernel::exponential(), LocalOperator::zero(1, 1), 1, 0.5, g);
    CHECK(out.same_coefficients(g));
  }
  SUBCASE("constant field is a shift") {
    const double c = 0.3;
    const auto out = exp_apply(certify_vector_field(poly({c}, 16)), 1, 0.5, g);
    const auto sh = shift(g, c);
    for (int n = 0; n <= 10; ++n) CHECK(std::abs(out.at(n) - sh.at(n)) <= 1e-12 * (1 + std::abs(sh.at(n))));
  }
  SUBCASE("flow of z' = z^2 maps z to z/(1-z)") {
    const double r = 0.5;
    const auto u = certify_vector_field(poly({0, 0, 1}, 24, r));
    const auto out = exp_apply(u, r, 0.2, poly({0, 1}, 24, r));
    for (int n = 1; n <= 24; ++n) CHECK(std::abs(out.at(n) - 1.0) < 1e-12);
    CHECK(std::abs(out.at(0)) < 1e-15);
  }
  SUBCASE("domain boundary") {
    const auto u99 = certify_vector_field(poly({0.99 * 0.5}, 16));
    CHECK_NOTHROW(exp_apply(u99, 1, 0.5, g));
    const auto u101 = certify_vector_field(poly({1.01 * 0.5}, 16));
    CHECK_THROWS_AS(exp_apply(u101, 1, 0.5, g), DomainError);
  }
  SUBCASE("exp(-u) exp(u) is close to the identity") {
    const auto u = certify_vector_field(poly({0.02, 0.05, 0.03}, 20));
    const auto rt = exp_round_trip(u, 1, 0.5, g.with_cap(20));
    CHECK(rt.consistent);
    CHECK(rt.defect <= rt.bound + 1e-12);
  }
  SUBCASE("other kernels") {
    const auto u = certify_vector_field(poly({0.1}, 16));
    // psi: e^{-u} - 1; phi: e^{-u}(1 + u) - 1.
    const auto em = exp_apply(u, 1, 0.5, g, -1);
    const auto psi = borel_apply(BorelKernel::psi(), u, 1, 0.5, g);
    for (int n = 0; n <= 10; ++n) CHECK(std::abs(psi.at(n) - (em.at(n) - g.at(n))) < 1e-12);
    const auto phi = borel_apply(BorelKernel::phi(), u, 1, 0.5, g);
    const auto ug = u.apply(g, 1, 0.75);
    const auto emug = exp_apply(u, 0.75, 0.5, ug, -1);
    for (int n = 0; n <= 9; ++n) CHECK(std::abs(phi.at(n) - (em.at(n) + emug.at(n) - g.at(n))) < 1e-11);
  }
}

TEST_CASE("property: exponential bound 1/(1 - |u|/(t-s))") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> un(0.01, 0.3), us(0.0, 1.0);
  int violations = 0;
  for (int i = 0; i < 500; ++i) {
    auto a = random_series(rng, 8, 1, 4);
    a *= un(rng) / norm(a, 1);
    const auto u = certify_vector_field(a.with_cap(72));
    const double t = 1, s = 0.02 + us(rng) * (t - u.norm_bound() / 0.95 - 0.02);
    const auto g = random_series(rng, 8);
    const auto out = exp_apply(u, t, s, g.with_cap(72), i % 2 ? 1 : -1);
    if (!(norm(out, s) <= norm(g, t) / (1 - u.norm_bound() / (t - s)) * (1 + 1e-12))) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("property: exponential matches the time-one flow") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> c(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    TruncatedSeries a(1, 60, 1.0);
    for (int n = 0; n <= 3; ++n) a.set(n, Complex(c(rng), c(rng)) * 0.04);
    const auto f = random_series(rng, 60, 1, 5);
    const auto out = exp_apply(certify_vector_field(a), 1, 0.6, f);
    for (Complex z : {Complex(0.1, 0), Complex(0, 0.2), Complex(-0.15, 0.1)}) {
      const Complex expect = f.evaluate(flow(a, z));
      CHECK(std::abs(out.evaluate(z) - expect) < 1e-8);
    }
  }
}

TEST_CASE("product of exponentials") {
  std::mt19937_64 rng(16);
  const auto g = random_series(rng, 16, 1, 10);
  const std::vector<double> radii{1, 0.8, 0.6};

  const auto id = product_of_exponentials({LocalOperator::zero(1, 1), LocalOperator::zero(1, 1)}, radii);
  CHECK(id.sigma == 0.0);
  CHECK(id.apply(g).same_coefficients(g));

  const double c0 = 0.05, c1 = -0.08;
  const auto pe = product_of_exponentials(
      {certify_vector_field(poly({c0}, 16)), certify_vector_field(poly({c1}, 16))}, radii);
  const auto out = pe.apply(g);
  const auto sh = shift(g, c0 + c1);
  for (int n = 0; n <= 10; ++n) CHECK(std::abs(out.at(n) - sh.at(n)) <= 1e-12 * (1 + std::abs(sh.at(n))));
  REQUIRE(pe.bound);
  CHECK(norm(out - g.restricted(0.6), 0.6) <= *pe.bound * norm(g, 1));

  CHECK_THROWS_WITH_AS(product_of_exponentials({certify_vector_field(poly({0.1}, 16)),
                                                certify_vector_field(poly({0.3}, 16))},
                                               radii),
                       doctest::Contains("1"), DomainError);
}

TEST_CASE("descriptor serializes") {
  const auto u = certify_vector_field(poly({0, 0, 1}, 8));
  const auto d = u.descriptor();
  CHECK(d["class"].is_string());
  CHECK(d["grade"] == 1);
  CHECK(d["norm_bound"].get<double>() == doctest::Approx(1));
}
