#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kolmo/error.hpp"
#include "kolmo/series.hpp"

using namespace kolmo;

namespace {

TruncatedSeries poly(std::vector<Complex> c, int cap = -1, double r = 1) {
  return TruncatedSeries::from_coefficients(c, r, cap);
}

TruncatedSeries random_series(std::mt19937_64& rng, int dim, int cap, int min_degree = 0) {
  std::normal_distribution<double> g;
  TruncatedSeries f(dim, cap, 1.0);
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.degree(i) >= min_degree) f.coeff(i) = {g(rng), g(rng)};
  return f;
}

}  // namespace

TEST_CASE("majorant norm") {
  CHECK(norm(poly({0, 0, 1}), 0.5) == doctest::Approx(0.25));
  CHECK(norm(poly({1, 1, 1}), 1) == doctest::Approx(3));
  TruncatedSeries t(1, 2, 1.0);
  t.add_tail(0.1, 3);
  CHECK(norm(t, 0.5) == doctest::Approx(0.0125));
  CHECK_THROWS_AS(norm(poly({1, 1}), 1.5), DomainError);
}

TEST_CASE("property: restriction never increases the norm") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 200; ++i) {
    auto f = random_series(rng, 1 + i % 3, 8);
    f.add_tail(u(rng), 9);
    double s = u(rng), t = u(rng);
    if (s > t) std::swap(s, t);
    CHECK(norm(f, s) <= norm(f, t));
    CHECK(norm(f.restricted(s), s) <= norm(f, t) * (1 + 1e-15));
  }
}

TEST_CASE("hilbert norm") {
  for (int N : {0, 3, 7}) {
    TruncatedSeries f(1, 10, 1.0);
    f.set(N, 1);
    const double t = 0.7;
    CHECK(hilbert_norm(f, t).value == doctest::Approx(std::sqrt(std::numbers::pi / (1 + N)) * std::pow(t, 1 + N)));
  }
  CHECK(hilbert_norm(TruncatedSeries(1, 5, 1.0), 0.5).value == 0.0);
  TruncatedSeries g(2, 4, 1.0);
  g.set(MultiIndex{1, 1, 0}, 1);
  CHECK(hilbert_norm(g, 1).value == doctest::Approx(std::numbers::pi / 2));
  g.add_tail(1e-3, 5);
  CHECK_THROWS_AS(hilbert_norm(g, 1), DomainError);
}

TEST_CASE("multiply") {
  const auto p = multiply(poly({1, 1}, 4), poly({1, -1}, 4));
  CHECK(p.at(0) == Complex(1));
  CHECK(p.at(1) == Complex(0));
  CHECK(p.at(2) == Complex(-1));
  CHECK(p.tail() == 0.0);

  TruncatedSeries zd(1, 4, 1.0), z(1, 4, 1.0);
  zd.set(4, 1);
  z.set(1, 1);
  const auto over = multiply(zd, z);
  CHECK(over.polynomial_part().is_zero());
  CHECK(over.tail() == doctest::Approx(1.0));
  CHECK(over.tail_order() == 5);

  const auto f = poly({1, 1}, 4);
  CHECK(norm(multiply(f, f), 1) <= norm(f, 1) * norm(f, 1));
  CHECK_THROWS_AS(multiply(f, TruncatedSeries::fourier(4, 1)), InputError);
}

TEST_CASE("property: tails are sound against a doubled cap") {
  // Compute at cap D and at 2D; the cap-D result plus its tail must dominate
  // the part of the exact product that the cap-D run dropped.
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    const int D = 6;
    const double t = 0.3 + 0.6 * (i % 7) / 7.0;
    const auto f = random_series(rng, 1 + i % 2, D);
    const auto g = random_series(rng, 1 + i % 2, D);
    const auto low = multiply(f, g);
    const auto full = multiply_full(f, g);
    const auto [kept, dropped] = full.split_at(D);
    CHECK(kept.same_coefficients(low.polynomial_part()));
    CHECK(dropped.poly_norm(t) <= low.tail_at(t) * (1 + 1e-12) + 1e-300);
    // The overflow tail is one scalar rescaled by (t/r)^{D+1}, which is exact
    // only at the reference radius.
    CHECK(norm(low, 1.0) <= norm(f, 1.0) * norm(g, 1.0) * (1 + 1e-12));
    CHECK(norm(full, t) <= norm(f, t) * norm(g, t) * (1 + 1e-12));
  }
}

TEST_CASE("derivative") {
  TruncatedSeries f(1, 6, 1.0);
  f.set(4, 1);
  const auto d = derivative(f);
  CHECK(norm(d, 0.5) == doctest::Approx(0.5));
  CHECK(norm(d, 0.5) <= norm(f, 1) / 0.5);
  CHECK(derivative(poly({3}, 4)).is_zero());

  // Calculus oracle: max over s of n s^{n-1} (t - s) sits at s = t (n-1)/n.
  for (int n = 1; n < 30; ++n) {
    const double t = 0.9, s = t * (n - 1) / n;
    const double peak = n * std::pow(s, n - 1) * (t - s);
    CHECK(peak == doctest::Approx(std::pow(t, n) * std::pow((n - 1.0) / n, n - 1)));
    CHECK(peak <= std::pow(t, n) * (1 + 1e-15));
  }
}

TEST_CASE("property: Cauchy-Nagumo and division over random samples") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const int dim = 1 + i % 3;
    auto f = random_series(rng, dim, dim == 1 ? 12 : 6);
    if (i % 4 == 0) f.add_tail(u(rng), f.cap() + 1);
    double s = u(rng), t = u(rng);
    if (s > t) std::swap(s, t);
    if (t - s < 1e-3) continue;
    const auto d = derivative(f, i % dim);
    if (s <= d.ref_radius()) CHECK(norm(d, s) <= norm(f, t) / (t - s) * (1 + 1e-12));

    auto h = random_series(rng, dim, 6, 1);
    MultiIndex e{};
    e[i % dim] = 1;
    const auto z = [&] {
      TruncatedSeries zz(dim, 6, 1.0);
      zz.set(e, 1);
      return zz;
    }();
    const auto fz = multiply_full(h, z).with_cap(6);
    const auto q = divide_by_coordinate(fz, i % dim, 1e-12);
    CHECK(norm(q, t) <= norm(fz, t) / t * (1 + 1e-12));
  }
}

TEST_CASE("divide_by_coordinate") {
  const auto q = divide_by_coordinate(poly({0, 0, 1, 1}), 0, 1e-12);
  CHECK(q.at(1) == Complex(1));
  CHECK(q.at(2) == Complex(1));
  for (double t : {0.2, 0.7, 1.0}) CHECK(norm(q, t) == doctest::Approx((t * t + t * t * t) / t));
  CHECK(divide_by_coordinate(poly({0, 0}), 0, 1e-12).is_zero());

  const auto r = divide_by_coordinate(poly({1e-16, 0, 1}), 0, 1e-12);
  CHECK(r.at(1) == Complex(1));
  CHECK(r.tail() >= 1e-16);
  CHECK(r.tail() <= 2e-16);
  CHECK_THROWS_AS(divide_by_coordinate(poly({1e-3, 1}), 0, 1e-12), DomainError);
}

TEST_CASE("cutoff and the Arnold-Moser estimate") {
  const auto c = cutoff(poly({1, 1, 1, 1}), 1, 3);
  CHECK(c.same_coefficients(poly({0, 1, 1, 0})));

  for (int N : {1, 4, 9}) {
    TruncatedSeries f(1, 12, 1.0);
    f.set(N, 1);
    const double s = 0.3, t = 0.9;
    CHECK(hilbert_norm(f, s).value / hilbert_norm(f, t).value == doctest::Approx(std::pow(s / t, 1 + N)));
  }

  std::mt19937_64 rng(31);
  for (int i = 0; i < 300; ++i) {
    const int dim = 1 + i % 3, N = 3;
    const auto f = random_series(rng, dim, 8, N);
    const auto r = arnold_moser(f, N, 0.4, 0.8);
    CHECK(r.holds);
    CHECK(r.lhs <= r.rhs * (1 + 1e-12));
    if (dim == 2) CHECK(r.lhs <= std::pow(0.5, 5) * hilbert_norm(f, 0.8).value * (1 + 1e-12));
  }
}

TEST_CASE("order") {
  CHECK(order(poly({0, 0, 0, 1, 0, 1})) == 3);
  CHECK(order(TruncatedSeries(1, 7, 1.0)) == 8);
  CHECK(order(poly({0, 1e-15, 1}), 1e-12) == 2);
}

TEST_CASE("shift") {
  const auto a = shift(poly({0, 0, 1}, -1, 2), 1);
  CHECK(a.same_coefficients(poly({1, 2, 1}, -1, 1)));
  CHECK(a.ref_radius() == doctest::Approx(1));
  const auto b = shift(poly({0, 1}, -1, 2), Complex(0, 1));
  CHECK(b.at(0) == Complex(0, 1));
  CHECK(b.at(1) == Complex(1));
  CHECK_THROWS_AS(shift(poly({0, 1}), 1.5), DomainError);

  // Oracle: Taylor coefficients of f(z + c) by repeated synthetic division (Horner).
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Complex> c(6);
    for (auto& x : c) x = {g(rng), g(rng)};
    const Complex z0(0.3 * g(rng), 0.3 * g(rng));
    std::vector<Complex> work = c, expect;
    for (int k = 0; k < 6; ++k) {
      for (int j = 4; j >= k; --j) work[j] += z0 * work[j + 1];
      expect.push_back(work[k]);
    }
    const auto s = shift(poly(c, -1, 4), z0);
    for (int k = 0; k < 6; ++k) CHECK(std::abs(s.at(k) - expect[k]) <= 1e-14 * (1 + std::abs(expect[k])));
  }
}

TEST_CASE("reciprocal and formal quotient") {
  const auto f = poly({2, 0.5}, 20, 1);
  const auto inv = reciprocal(f);
  const auto one = multiply(f, inv);
  CHECK(std::abs(one.at(0) - 1.0) < 1e-15);
  for (int n = 1; n <= 20; ++n) CHECK(std::abs(one.at(n)) < 1e-15);
  CHECK(norm(one - poly({1}, 20), 1) <= one.tail() + 1e-14);

  const auto q = formal_quotient(poly({0, 2, 0.5}, 8), poly({2, 0.5}, 8));
  CHECK(std::abs(q.at(1) - 1.0) < 1e-15);
  for (int n = 2; n <= 8; ++n) CHECK(std::abs(q.at(n)) < 1e-15);
}

TEST_CASE("fourier basis") {
  auto f = TruncatedSeries::fourier(4, 0.5);
  f.set(1, 1);
  f.set(-1, 1);
  CHECK(norm(f, 0.5) == doctest::Approx(2 * std::exp(0.5)));
  CHECK(f.evaluate(0.0) == Complex(2));
  f.add_tail(1e-3, 5);
  CHECK(f.tail_at(0.3) == doctest::Approx(1e-3 * std::exp(5 * (0.3 - 0.5))));
}

TEST_CASE("json round trip") {
  std::mt19937_64 rng(2);
  auto f = random_series(rng, 2, 5);
  f.add_tail(0.25, 6);
  const auto g = TruncatedSeries::from_json(f.to_json());
  CHECK(g.same_coefficients(f));
  CHECK(g.tail() == f.tail());
  CHECK(g.tail_order() == f.tail_order());
  CHECK(g.to_json().dump() == f.to_json().dump());
}
