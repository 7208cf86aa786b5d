#include <doctest.h>

#include <cmath>
#include <random>

#include "kolmo/error.hpp"
#include "kolmo/sequences.hpp"

using namespace kolmo;

TEST_CASE("families evaluate in log space") {
  const auto g = PositiveSequence::geometric(2);
  CHECK(g(10) == doctest::Approx(1024));
  const auto e = PositiveSequence::exp_power(-1, 1.5);
  CHECK(e.log_at(60) == doctest::Approx(-std::pow(1.5, 60)));
  CHECK(e(60) == 0.0);  // underflows as a double, log stays finite
  CHECK((g * g).log_at(3) == doctest::Approx(6 * std::log(2.0)));
  CHECK(g.pow(0.5).log_at(4) == doctest::Approx(2 * std::log(2.0)));
  CHECK(g.scaled(3).log_at(0) == doctest::Approx(std::log(3.0)));
  CHECK_THROWS_AS(PositiveSequence::tabulated({1, 0, 2}), InputError);
  CHECK_THROWS_AS(PositiveSequence::tabulated({1, 2})(5), InputError);
}

TEST_CASE("json and CLI shorthand round trip") {
  for (const char* s : {"geometric:2", "exp_power:1.2", "exp_power:-1.5", "constant:0.5"}) {
    const auto a = PositiveSequence::parse(s);
    const auto b = PositiveSequence::from_json(a.to_json());
    for (std::size_t n = 0; n < 12; ++n) CHECK(a.log_at(n) == b.log_at(n));
  }
  const auto t = PositiveSequence::from_json({{"family", "tabulated"}, {"values", {1.0, 2.0, 4.0}}});
  CHECK(t(2) == 4.0);
  CHECK(monotonicity(t, 2) == Monotonicity::increasing);
  CHECK_THROWS_AS(PositiveSequence::parse("fibonacci:3"), InputError);
}

TEST_CASE("bruno_check verdicts") {
  SUBCASE("alpha = 2 diverges") {
    const auto c = bruno_check(PositiveSequence::exp_power(1, 2.0), 40);
    CHECK(c.verdict == BrunoVerdict::not_bruno);
  }
  SUBCASE("constant one") {
    const auto c = bruno_check(PositiveSequence::constant(1), 40);
    CHECK(c.partial_sum == 0.0);
    CHECK(c.verdict == BrunoVerdict::bruno);
  }
  SUBCASE("2^n sums to log 2") {
    // Independent oracle: sum_k k log2 / 2^{k+1} to convergence.
    double oracle = 0;
    for (int k = 0; k <= 40; ++k) oracle += k * std::log(2.0) / std::ldexp(1.0, k + 1);
    const auto c = bruno_check(PositiveSequence::geometric(2), 40);
    CHECK(c.partial_sum == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(c.partial_sum == doctest::Approx(std::log(2.0)).epsilon(1e-10));
    REQUIRE(c.tail_bound);
    CHECK(*c.tail_bound >= 0);
    CHECK(c.verdict == BrunoVerdict::bruno);
  }
  SUBCASE("tables have no tail bound") {
    const auto c = bruno_check(PositiveSequence::tabulated({1, 2, 4, 8, 16}), 4);
    CHECK_FALSE(c.tail_bound);
    CHECK(c.verdict == BrunoVerdict::inconclusive);
  }
}

TEST_CASE("bruno_transform values") {
  CHECK(bruno_transform(PositiveSequence::constant(1), 3, 40).value == 1.0);

  // q = 3: truncated product times the closed-form tail sum_{k>N} k / 2^{k+1} = (N+2)/2^{N+1}.
  const std::size_t N = 60;
  double log_trunc = 0;
  for (std::size_t k = 0; k <= N; ++k) log_trunc -= k * std::log(3.0) / std::ldexp(1.0, k + 1);
  const double tail = (N + 2) / std::ldexp(1.0, N + 1) * std::log(3.0);
  const auto v = bruno_transform(PositiveSequence::geometric(3), 0, N);
  CHECK(std::exp(log_trunc - tail) == doctest::Approx(1.0 / 3).epsilon(1e-10));
  CHECK(v.value == doctest::Approx(1.0 / 3).epsilon(1e-10));
  CHECK(v.lower <= 1.0 / 3 + 1e-15);
  CHECK(v.upper >= 1.0 / 3 - 1e-15);
}

TEST_CASE("property: transform recursion a^pi_{n+1} = a_n (a^pi_n)^2") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> alpha(1.05, 1.9), q(1.1, 5.0);
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = trial % 2 ? PositiveSequence::exp_power(1, alpha(rng)) : PositiveSequence::geometric(q(rng));
    for (std::size_t n = 0; n < 8; ++n) {
      const auto t0 = bruno_transform_tight(a, n);
      const auto t1 = bruno_transform_tight(a, n + 1);
      const double lhs = t1.log_value;
      const double rhs = a.log_at(n) + 2 * t0.log_value;
      const double width = (t1.log_upper - t1.log_lower) + 2 * (t0.log_upper - t0.log_lower);
      CHECK(std::abs(lhs - rhs) <= width + 1e-12 * (1 + std::abs(rhs)));
    }
  }
}

TEST_CASE("property: products and powers of Bruno sequences stay Bruno") {
  const auto a = PositiveSequence::exp_power(1, 1.3);
  const auto b = PositiveSequence::geometric(2.5);
  CHECK(bruno_check(a * b, 50).verdict == BrunoVerdict::bruno);
  CHECK(bruno_check(a.pow(3), 50).verdict == BrunoVerdict::bruno);
  CHECK(bruno_check(b.pow(0.5) * a.pow(2), 50).verdict == BrunoVerdict::bruno);
}

TEST_CASE("tame_check") {
  const auto a = PositiveSequence::exp_power(1, 1.2);
  const auto b = PositiveSequence::exp_power(-1, 1.5).scaled(0.1);
  CHECK(tame_check(a, b, 200).tame());

  // Oracle: (*) at n is log eps <= 1.5^n/2 - 1.2^n, binding near n = 4 for these exponents.
  double binding = INFINITY;
  for (int n = 0; n <= 200; ++n) binding = std::min(binding, 0.5 * std::pow(1.5, n) - std::pow(1.2, n));
  CHECK(std::log(0.1) <= binding);

  const auto sq = PositiveSequence::custom("0.3^(2^n)", [](std::size_t n) { return std::ldexp(std::log(0.3), n); });
  const auto eq = tame_check(PositiveSequence::constant(1), sq, 30);
  CHECK(eq.tame());

  const auto bad = tame_check(PositiveSequence::exp_power(1, 2), PositiveSequence::exp_power(-1, 2), 10);
  REQUIRE(bad.first_violation);
  CHECK(*bad.first_violation == 0);
  for (bool s : bad.star_holds) CHECK_FALSE(s);
}

TEST_CASE("tame_implies_bruno") {
  const auto cert = tame_implies_bruno(PositiveSequence::exp_power(1, 1.2),
                                       PositiveSequence::exp_power(-1, 1.5).scaled(0.1), 60);
  CHECK(cert.tame);
  CHECK_FALSE(cert.first_failure);
  CHECK(cert.verdict == BrunoVerdict::bruno);

  const auto deg = tame_implies_bruno(PositiveSequence::constant(1), PositiveSequence::exp_power(-1, 2), 30);
  CHECK(deg.verdict == BrunoVerdict::inconclusive);
  CHECK_FALSE(deg.log_b_scaled_vanishes);
}

TEST_CASE("taming_epsilon") {
  CHECK(taming_epsilon(PositiveSequence::constant(1), 40).epsilon == doctest::Approx(1.0));
  // a_n = 2^n has a^pi_n = 2^{-(n+1)} in closed form, so the infimum sits at the
  // end of the window: eps = 4^{-(depth+1)}.
  const auto e = taming_epsilon(PositiveSequence::geometric(2), 60);
  CHECK(e.log_epsilon == doctest::Approx(-61 * std::log(4.0)).epsilon(1e-12));
  CHECK(e.argmin == 60);
  CHECK(taming_epsilon(PositiveSequence::geometric(2), 1).epsilon == doctest::Approx(1.0 / 16).epsilon(1e-8));
  CHECK_THROWS_AS(taming_epsilon(PositiveSequence::exp_power(1, 2), 20), DomainError);
}

TEST_CASE("property: taming_epsilon tames every eps'^(2^n)") {
  const auto a = PositiveSequence::geometric(2);
  const double eps = taming_epsilon(a, 60).epsilon;
  for (double ep : {0.01, 0.2, 0.5, 0.9, 0.999}) {
    const auto b = PositiveSequence::custom("strict", [ep](std::size_t n) { return std::ldexp(std::log(ep), n); })
                       .scaled(eps);
    CHECK_MESSAGE(tame_check(a, b, 60).tame(), "eps' = " << ep);
  }
}

TEST_CASE("model_iteration") {
  SUBCASE("pure quadratic halved") {
    const auto zero_b = PositiveSequence::custom("zero", [](std::size_t) { return -INFINITY; });
    const auto tr = model_iteration(PositiveSequence::constant(1), zero_b, 0.5, 3);
    REQUIRE(tr.steps.size() == 4);
    CHECK(tr.steps[1].remainder == doctest::Approx(0.125));
    CHECK(tr.steps[2].remainder == doctest::Approx(0.0078125));
    CHECK(tr.steps[3].remainder == doctest::Approx(3.0517578125e-5));
  }
  SUBCASE("x0 = 0 stays at zero") {
    const auto tr = model_iteration(PositiveSequence::exp_power(1, 1.2),
                                    PositiveSequence::exp_power(-1, 1.5).scaled(0.1), 0, 10);
    for (const auto& r : tr.steps) CHECK(r.remainder == 0.0);
  }
  SUBCASE("x0 above b0 is not certified") {
    const auto tr = model_iteration(PositiveSequence::exp_power(1, 1.2),
                                    PositiveSequence::exp_power(-1, 1.5).scaled(0.1), 0.1, 4);
    CHECK(tr.status == "uncertified");
    CHECK_FALSE(tr.steps[0].checks_passed);
  }
  SUBCASE("overflow is reported as divergence") {
    const auto tr = model_iteration(PositiveSequence::constant(10), PositiveSequence::constant(1), 5, 40);
    CHECK(tr.status == "diverged");
  }
}

TEST_CASE("property: model iteration stays below b under random tame pairs") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> al(1.05, 1.4), be(1.45, 1.9), u(0.0, 1.0);
  int certified = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = PositiveSequence::exp_power(1, al(rng));
    const auto base = PositiveSequence::exp_power(-1, be(rng));
    const double le = taming_epsilon(a, 100).log_epsilon + std::log(0.9);
    const auto b = PositiveSequence::custom("tamed", [le, base](std::size_t n) { return le + base.log_at(n); });
    const auto report = tame_check(a, b, 100);
    if (!report.tame()) continue;
    const auto tr = model_iteration(a, b, std::exp(b.log_at(0)) * u(rng), 100);
    for (const auto& r : tr.steps) CHECK(r.checks_passed);
    CHECK(tr.certified);
    ++certified;
  }
  CHECK(certified >= 90);
}

TEST_CASE("lemma_rho") {
  const auto one = PositiveSequence::constant(1);
  const auto b = PositiveSequence::custom("2^-2^n", [](std::size_t n) { return -std::ldexp(std::log(2.0), n); });
  LemmaRhoOptions opt;
  opt.K = 0.5;
  opt.auto_tune = false;
  const auto res = lemma_rho(one, one, b, 0, 0, opt);
  CHECK(res.passed);
  CHECK(res.conclusion1_failures.empty());
  CHECK(res.conclusion2_failures.empty());

  // rho is in B^-: its reciprocal is Bruno on the window.
  const auto inv = PositiveSequence::tabulated_log([&] {
    std::vector<double> v;
    for (double x : res.log_rho) v.push_back(-x);
    return v;
  }());
  CHECK(bruno_check(inv, res.log_rho.size() - 1).partial_sum < INFINITY);

  for (std::size_t n = 0; n < res.sigma.size(); ++n)
    CHECK(res.sigma[n] == doctest::Approx(-std::expm1(res.log_rho[n] / std::ldexp(1.0, n))));

  // With log b_n / 2^n -> 0, sigma_n -> 0 like (alpha^n - log c_n - log b_n) / 2^n.
  const auto slow = PositiveSequence::exp_power(-1, 1.5).scaled(0.5);
  const auto res2 = lemma_rho(one, one, slow, 0, 0);
  CHECK(res2.passed);
  for (std::size_t n : {20u, 30u}) {
    const double approx =
        (std::pow(1.5, n) - res2.c.log_at(n) - slow.log_at(n) - std::log(res2.K)) / std::ldexp(1.0, n);
    CHECK(res2.sigma[n] == doctest::Approx(approx).epsilon(1e-2));
    CHECK(res2.sigma[n] >= std::pow(1.5, n) / std::ldexp(1.0, n));
  }
  CHECK(res2.sigma[39] < res2.sigma[20]);
  CHECK(res2.sigma[39] < 1e-4);

  CHECK_THROWS_AS(lemma_rho(one, one, b, 0, 0, {.alpha = 2.5}), InputError);
}

TEST_CASE("log helpers") {
  CHECK(log1m_exp(-1e-20) == doctest::Approx(std::log(1e-20)));
  CHECK(log_add_exp(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)));
  CHECK(log_add_exp(-INFINITY, 1.0) == 1.0);
}
