#include <doctest.h>

#include <random>

#include "kolmo/error.hpp"
#include "kolmo/kolmogorov.hpp"

using namespace kolmo;

namespace {

TruncatedSeries sample(std::mt19937_64& rng, int cap = 6) {
  std::normal_distribution<double> g;
  TruncatedSeries f(1, cap, 1.0);
  for (std::size_t i = 0; i < f.size(); ++i) f.coeff(i) = g(rng);
  return f;
}

// Brute-force sup over {j : point(j) <= point(i)} (down = true) or >= (down = false).
NormMap brute(const NormMap& n, const FiniteBase& b, bool down) {
  NormMap out(n.size(), 0);
  for (std::size_t i = 0; i < n.size(); ++i)
    for (std::size_t j = 0; j < n.size(); ++j) {
      bool le = true;
      for (std::size_t c = 0; c < b.point(i).size(); ++c)
        le = le && (down ? b.point(j)[c] <= b.point(i)[c] : b.point(j)[c] >= b.point(i)[c]);
      if (le) out[i] = std::max(out[i], n[j]);
    }
  return out;
}

}  // namespace

TEST_CASE("restrict") {
  std::mt19937_64 rng(1);
  auto f = sample(rng);
  f.add_tail(0.3, 7);
  CHECK(norm(restrict(f, 1, 0.6), 0.6) <= norm(f, 1));
  const auto same = restrict(f, 1, 1);
  CHECK(same.same_coefficients(f));
  CHECK(same.tail() == f.tail());

  const auto two = restrict(restrict(f, 1, 0.7), 0.7, 0.4);
  const auto one = restrict(f, 1, 0.4);
  CHECK(two.same_coefficients(one));
  CHECK(two.tail_at(0.4) <= one.tail_at(0.4) * (1 + 1e-15));
  CHECK_THROWS_AS(restrict(f, 0.5, 0.7), InputError);
}

TEST_CASE("finite bases") {
  CHECK_THROWS_AS(FiniteBase({{1, 0.5}, {1, 0.5}}), InputError);
  const FiniteBase chain = FiniteBase::radii({0.25, 0.5, 1});
  CHECK(chain.is_chain());
  CHECK(chain.top() == 2u);
  const FiniteBase grid({{0, 0.5}, {1, 0.5}, {0, 1}, {1, 1}});
  CHECK_FALSE(grid.is_chain());
  CHECK(grid.top() == 3u);
  CHECK(grid.down_set(3).size() == 4);
  CHECK(grid.up_set(0).size() == 4);
  CHECK(grid.down_set(1).size() == 2);
  const FiniteBase anti({{0, 1}, {1, 0.5}});
  CHECK_FALSE(anti.top());
}

TEST_CASE("sup_norm_over") {
  std::mt19937_64 rng(2);
  const FiniteBase chain = FiniteBase::radii({0.2, 0.5, 0.8, 1});
  const auto f = sample(rng);
  const Section s = Section::horizontal(chain, f);
  CHECK(s.is_horizontal());
  CHECK(sup_norm_over(s, {1}) == s.norm_at(1));
  CHECK(sup_norm_over(s, {0, 1, 2, 3}) == s.norm_at(3));
  const Section z = Section::horizontal(chain, TruncatedSeries(1, 6, 1.0));
  CHECK(sup_norm_over(z, {0, 1, 2, 3}) == 0.0);
  CHECK_THROWS_AS(sup_norm_over(s, {}), InputError);
}

TEST_CASE("kolmogorify and its opposite") {
  const FiniteBase two = FiniteBase::radii({0.5, 1});
  CHECK(kolmogorify({3, 2}, two) == NormMap{3, 3});
  CHECK(kolmogorify({1, 2}, two) == NormMap{1, 2});
  CHECK(opposite_kolmogorify({3, 2}, two) == NormMap{3, 2});
  CHECK(opposite_kolmogorify({1, 2}, two) == NormMap{2, 2});

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<BasePoint> pts;
    for (int i = 0; i < 6; ++i) pts.push_back({std::floor(u(rng) * 3), 0.1 + u(rng)});
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const FiniteBase b(pts);
    NormMap n;
    for (std::size_t i = 0; i < b.size(); ++i) n.push_back(u(rng));
    const auto k = kolmogorify(n, b);
    CHECK(k == brute(n, b, true));
    CHECK(kolmogorify(k, b) == k);
    CHECK(is_kolmogorov(k, b));
    const auto o = opposite_kolmogorify(n, b);
    CHECK(o == brute(n, b, false));
    CHECK(opposite_kolmogorify(o, b) == o);
  }
}

TEST_CASE("property: kolmogorification keeps the top norm of a monotone chain") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto f = sample(rng);
    const Section s = Section::horizontal(FiniteBase::radii({0.1, 0.3, 0.6, 0.9, 1}), f);
    REQUIRE(is_kolmogorov(s.norms(), s.base()));
    const auto k = kolmogorify(s.norms(), s.base());
    CHECK(k.back() == s.norms().back());
    CHECK(k == s.norms());
  }
}

TEST_CASE("rescale") {
  const FiniteBase two = FiniteBase::radii({0.5, 1});
  const auto id = rescale({1, 2}, [](const BasePoint&) { return 1.0; }, two);
  CHECK(id.norms == NormMap{1, 2});

  const auto up = rescale({1, 1}, [](const BasePoint& p) { return p.back(); }, two);
  CHECK(up.norms == NormMap{0.5, 1});
  CHECK(up.weight_increasing);
  CHECK(up.kolmogorov);

  const auto down = rescale({1, 1}, [](const BasePoint& p) { return 1 / p.back(); }, two);
  CHECK_FALSE(down.weight_increasing);
  CHECK_FALSE(down.kolmogorov);
  CHECK(is_kolmogorov(kolmogorify(down.norms, two), two));
}

TEST_CASE("property: sections") {
  std::mt19937_64 rng(6);
  const FiniteBase chain = FiniteBase::radii({0.3, 0.6, 1});
  const std::vector<std::size_t> all{0, 1, 2};
  for (int trial = 0; trial < 50; ++trial) {
    const Section a = Section::horizontal(chain, sample(rng));
    const Section b = Section::horizontal(chain, sample(rng));
    CHECK((a + b).is_horizontal());
    CHECK(a.scaled(2.5).is_horizontal());
    CHECK(sup_norm_over(a + b, all) <= (sup_norm_over(a, all) + sup_norm_over(b, all)) * (1 + 1e-15));
    CHECK(sup_norm_over(a.scaled({0, -3}), all) == doctest::Approx(3 * sup_norm_over(a, all)));
    // Horizontality survives restriction to a sub-chain.
    std::vector<TruncatedSeries> vals{restrict(a.value(1), 0.6, 0.3), a.value(1)};
    CHECK(Section(FiniteBase::radii({0.3, 0.6}), vals).is_horizontal());
  }
  std::vector<TruncatedSeries> vals{sample(rng), sample(rng)};
  CHECK_FALSE(Section(FiniteBase::radii({0.5, 1}), vals).is_horizontal());
}
