#include "kolmo/local_ops.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "kolmo/error.hpp"

namespace kolmo {

namespace {
constexpr double kE = std::numbers::e;
constexpr int kMaxBorelTerms = 2000;
}  // namespace

double WeightFunction::operator()(double t, double s) const {
  return C * std::pow(s, p) * std::pow(t, -q) * std::pow(t - s, k);
}

double WeightFunction::graded(int n, double t, double s) const {
  if (n == 0) return 1;
  return std::pow(kE * (*this)(t, s) / n, n);
}

double WeightFunction::operator_weight(int n, double t, double s) const {
  if (n == 0) return 1;
  return std::pow((*this)(t, s) / n, n);
}

nlohmann::json WeightFunction::to_json() const {
  return {{"type", "submultiplicative"}, {"C", C}, {"p", p}, {"q", q}, {"k", k}};
}

double CutoffWeight::log_value(int n, double s, double t) const {
  return std::ldexp(1.0, n) * std::log(t / s) + a * std::log(s) + b * std::log(t - s);
}

double CutoffWeight::operator()(int n, double s, double t) const { return std::exp(log_value(n, s, t)); }

nlohmann::json CutoffWeight::to_json() const {
  return {{"type", "cutoff"}, {"a", a}, {"b", b}, {"submultiplicative", false}};
}

SubmultReport submult_check(const WeightFunction& w, int p, int q, int grid) {
  if (p < 1 || q < 1) throw InputError("submultiplicativity check needs p, q >= 1");
  SubmultReport rep;
  rep.worst_margin = 1;
  const double pq = p + q;
  for (int j = 1; j <= grid; ++j) {
    const double t = static_cast<double>(j) / grid;
    for (int i = 0; i < grid; ++i) {
      const double s = t * i / grid;
      if (!(s > 0) && (w.p > 0)) continue;
      const double m = p / pq * s + q / pq * t;
      const double lhs = w.graded(p + q, t, s);
      const double rhs = w.graded(p, t, m) * w.graded(q, m, s);
      ++rep.samples;
      if (rhs == 0) {
        if (lhs > 0) rep.holds = false;
        continue;
      }
      rep.worst_margin = std::min(rep.worst_margin, (rhs - lhs) / rhs);
      if (lhs > rhs * (1 + 1e-12)) rep.holds = false;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

LocalOperator::LocalOperator(Spec spec, Action action) : spec_(std::move(spec)), action_(std::move(action)) {
  if (spec_.grade < 0) throw InputError("operator grade must be nonnegative");
  if (!(spec_.norm_bound >= 0)) throw InputError("operator norm bound must be nonnegative");
  if (!(spec_.ref_radius > 0)) throw InputError("operator reference radius must be positive");
}

LocalOperator LocalOperator::zero(int grade, double ref_radius) {
  Spec spec;
  spec.kind = "zero";
  spec.grade = grade;
  spec.ref_radius = ref_radius;
  spec.degree_shift = 0;
  spec.derivation = grade == 1;
  return LocalOperator(spec, [](const TruncatedSeries& g) {
    return TruncatedSeries(g.dim(), g.cap(), g.ref_radius(), g.basis());
  });
}

double LocalOperator::borel_constant() const {
  return spec_.derivation ? spec_.norm_bound : kE * spec_.norm_bound;
}

double LocalOperator::operator_weight(double t, double s) const {
  if (spec_.grade == 0) return 1;
  if (const auto* w = std::get_if<WeightFunction>(&spec_.weight))
    return w->operator_weight(spec_.grade, t, s);
  throw DomainError("cutoff-weighted operators carry no graded weight");
}

TruncatedSeries LocalOperator::image(const TruncatedSeries& g) const { return action_(g.polynomial_part()); }

TruncatedSeries LocalOperator::apply(const TruncatedSeries& g, double t, double s) const {
  const bool strict = spec_.grade > 0;
  if (!(s > 0) || (strict ? !(s < t) : !(s <= t)))
    throw DomainError("operator application needs 0 < s < t");
  if (t > std::min(spec_.ref_radius, g.ref_radius()) * (1 + 1e-12))
    throw DomainError("operator applied beyond its certified radius");
  const int D = g.cap();
  const TruncatedSeries P = g.polynomial_part();
  auto [low, high] = action_(P).split_at(D);
  TruncatedSeries out = low.cap() == D ? low.rebased(s) : low.with_cap(D).rebased(s);
  const double w = operator_weight(t, s);
  out.add_tail(high.poly_norm(s), D + 1);
  if (g.tail() > 0) {
    int o = spec_.degree_shift == kMixing ? 0 : std::max(0, g.tail_order() + std::min(0, spec_.degree_shift));
    if (g.basis() == Basis::fourier) o = 0;
    out.add_tail(spec_.norm_bound * g.tail_at(t) / w, o);
  }
  if (spec_.tail_norm > 0) {
    int o = 0;
    if (g.basis() == Basis::taylor && spec_.tail_shift != kMixing)
      o = std::max(0, P.min_degree() + spec_.tail_shift);
    out.add_tail(spec_.tail_norm * P.poly_norm(t) / w, o);
  }
  return out;
}

nlohmann::json LocalOperator::descriptor() const {
  nlohmann::json weight = std::visit([](const auto& w) { return w.to_json(); }, spec_.weight);
  return {{"class", spec_.kind},
          {"grade", spec_.grade},
          {"weight", weight},
          {"norm_bound", spec_.norm_bound},
          {"tail_norm", spec_.tail_norm},
          {"ref_radius", spec_.ref_radius},
          {"degree_shift", spec_.degree_shift == kMixing ? nlohmann::json(nullptr)
                                                         : nlohmann::json(spec_.degree_shift)},
          {"tail_shift", spec_.tail_shift == kMixing ? nlohmann::json(nullptr)
                                                     : nlohmann::json(spec_.tail_shift)},
          {"derivation", spec_.derivation},
          {"parameters", spec_.parameters}};
}

LocalOperator certify_vector_field(const TruncatedSeries& a) {
  if (a.basis() != Basis::taylor || a.dim() != 1)
    throw InputError("vector fields are univariate Taylor series");
  LocalOperator::Spec spec;
  spec.kind = "vector_field";
  spec.grade = 1;
  spec.weight = WeightFunction{};
  spec.ref_radius = a.ref_radius();
  spec.norm_bound = norm(a, a.ref_radius());
  spec.tail_norm = a.tail();
  int shift = a.min_degree() - 1;
  if (a.tail() > 0) {
    shift = std::min(shift, a.tail_order() - 1);
    spec.tail_shift = a.tail_order() - 1;
  }
  spec.degree_shift = shift;
  spec.derivation = true;
  spec.parameters = {{"a", a.to_json()}};
  TruncatedSeries ap = a.polynomial_part();
  return LocalOperator(spec, [ap](const TruncatedSeries& P) {
    return multiply_full(ap.rebased(P.ref_radius()), derivative(P));
  });
}

LocalOperator certify_ad_vector_field(const TruncatedSeries& v) {
  if (v.basis() != Basis::fourier) throw InputError("ad action is implemented on the Fourier side");
  const TruncatedSeries vp = derivative(v);
  const double R = vp.ref_radius();
  LocalOperator::Spec spec;
  spec.kind = "ad_vector_field";
  spec.grade = 1;
  spec.weight = WeightFunction{};
  spec.ref_radius = R;
  // |v X'|_s <= |v|_t |X|_t / (e (t-s)) on the strip, |v' X|_s <= |v'|_t |X|_t.
  spec.norm_bound = norm(v, R) / kE + R * norm(vp, R);
  spec.tail_norm = v.tail_at(R) / kE + R * vp.tail();
  spec.degree_shift = LocalOperator::kMixing;
  spec.derivation = false;
  spec.parameters = {{"v", v.to_json()}};
  TruncatedSeries v0 = v.polynomial_part();
  TruncatedSeries v1 = derivative(v0);
  return LocalOperator(spec, [v0, v1](const TruncatedSeries& X) {
    const double r = X.ref_radius();
    return multiply_full(v0.rebased(r), derivative(X)) - multiply_full(v1.rebased(r), X);
  });
}

LocalOperator certify_multiplication(const TruncatedSeries& m) {
  LocalOperator::Spec spec;
  spec.kind = "multiplication";
  spec.grade = 0;
  spec.ref_radius = m.ref_radius();
  spec.norm_bound = norm(m, m.ref_radius());
  spec.tail_norm = m.tail();
  if (m.basis() == Basis::taylor) {
    int shift = m.min_degree();
    if (m.tail() > 0) {
      shift = std::min(shift, m.tail_order());
      spec.tail_shift = m.tail_order();
    }
    spec.degree_shift = shift;
  }
  spec.parameters = {{"m", m.to_json()}};
  TruncatedSeries mp = m.polynomial_part();
  return LocalOperator(spec, [mp](const TruncatedSeries& P) { return multiply_full(mp.rebased(P.ref_radius()), P); });
}

LocalOperator certify_cutoff(int k, int l, double ref_radius) {
  LocalOperator::Spec spec;
  spec.kind = "cutoff";
  spec.grade = 0;
  spec.weight = CutoffWeight{};
  spec.ref_radius = ref_radius;
  spec.norm_bound = 1;
  spec.degree_shift = 0;
  spec.parameters = {{"k", k}, {"l", l}};
  return LocalOperator(spec, [k, l](const TruncatedSeries& P) { return cutoff(P, k, l); });
}

LocalOperator compose(const LocalOperator& u, const LocalOperator& v) {
  const auto* wu = std::get_if<WeightFunction>(&u.weight());
  const auto* wv = std::get_if<WeightFunction>(&v.weight());
  if ((u.grade() > 0 && !wu) || (v.grade() > 0 && !wv))
    throw DomainError("cutoff weights are not submultiplicative; grade composition refused");
  LocalOperator::Spec spec;
  spec.kind = "composition";
  spec.grade = u.grade() + v.grade();
  spec.weight = wu ? *wu : (wv ? *wv : WeightFunction{});
  spec.ref_radius = std::min(u.ref_radius(), v.ref_radius());
  spec.norm_bound = u.norm_bound() * v.norm_bound();
  spec.tail_norm = u.norm_bound() * v.tail_norm() + u.tail_norm() * v.norm_bound();
  if (u.degree_shift() == LocalOperator::kMixing || v.degree_shift() == LocalOperator::kMixing) {
    spec.degree_shift = LocalOperator::kMixing;
  } else {
    spec.degree_shift = u.degree_shift() + v.degree_shift();
    const int us = u.tail_norm() > 0 ? u.tail_shift() : INT_MAX;
    const int vs = v.tail_norm() > 0 ? v.tail_shift() : INT_MAX;
    if (us != LocalOperator::kMixing && vs != LocalOperator::kMixing) {
      const long a = us == INT_MAX ? INT_MAX : static_cast<long>(us) + v.degree_shift();
      const long b = vs == INT_MAX ? INT_MAX : static_cast<long>(vs) + u.degree_shift();
      const long m = std::min(a, b);
      if (m < INT_MAX) spec.tail_shift = static_cast<int>(m);
    }
  }
  spec.parameters = {{"outer", u.descriptor()}, {"inner", v.descriptor()}};
  return LocalOperator(spec, [u, v](const TruncatedSeries& P) { return u.image(v.image(P)); });
}

// ---------------------------------------------------------------------------

BorelKernel BorelKernel::exponential(int sign) {
  BorelKernel f;
  f.name = sign >= 0 ? "exp" : "exp_minus";
  f.radius = 1;
  const double sg = sign >= 0 ? 1.0 : -1.0;
  f.coeff = [sg](int n) { return (n % 2 == 0) ? 1.0 : sg; };
  f.scaled_tail = [](int, double x) { return 1.0 / (1.0 - x); };
  f.majorant_derivative = [](double x) { return 1.0 / ((1.0 - x) * (1.0 - x)); };
  return f;
}

BorelKernel BorelKernel::phi() {
  BorelKernel f;
  f.name = "phi";
  f.radius = 1;
  f.coeff = [](int n) {
    if (n < 2) return 0.0;
    return (n % 2 == 0 ? 1.0 : -1.0) * (1.0 - n);
  };
  f.scaled_tail = [](int m, double x) {
    const double g = 1.0 / (1.0 - x);
    if (m == 0) return x * x * g * g;
    return (m - 1) * g + x * g * g;
  };
  f.majorant_derivative = [](double x) { return 2 * x / std::pow(1.0 - x, 3); };
  return f;
}

BorelKernel BorelKernel::psi() {
  BorelKernel f;
  f.name = "psi";
  f.radius = 1;
  f.coeff = [](int n) {
    if (n == 0) return 0.0;
    return n % 2 == 0 ? 1.0 : -1.0;
  };
  f.scaled_tail = [](int m, double x) { return m == 0 ? x / (1.0 - x) : 1.0 / (1.0 - x); };
  f.majorant_derivative = [](double x) { return 1.0 / ((1.0 - x) * (1.0 - x)); };
  return f;
}

BorelKernel BorelKernel::polynomial(std::vector<double> c) {
  BorelKernel f;
  f.name = "polynomial";
  f.radius = std::numeric_limits<double>::infinity();
  f.coeff = [c](int n) { return n < static_cast<int>(c.size()) ? c[n] : 0.0; };
  f.scaled_tail = [c](int m, double x) {
    double s = 0;
    for (int n = static_cast<int>(c.size()) - 1; n >= m; --n) s = s * x + std::abs(c[n]);
    return s;
  };
  f.majorant_derivative = [c](double x) {
    double s = 0;
    for (int n = static_cast<int>(c.size()) - 1; n >= 1; --n) s = s * x + n * std::abs(c[n]);
    return s;
  };
  return f;
}

TruncatedSeries borel_apply(const BorelKernel& f, const LocalOperator& u, double t, double s,
                            const TruncatedSeries& g) {
  if (u.grade() != 1) throw InputError("the Borel map takes a grade-1 operator");
  if (!(0 < s && s < t)) throw DomainError("Borel map needs 0 < s < t");
  if (t > std::min(u.ref_radius(), g.ref_radius()) * (1 + 1e-12))
    throw DomainError("Borel map applied beyond the certified radius");
  const auto* w = std::get_if<WeightFunction>(&u.weight());
  if (!w) throw DomainError("Borel map needs a submultiplicative weight");
  const double lam = (*w)(t, s);
  const double x = u.borel_constant() / lam;
  if (!(x < f.radius))
    throw DomainError("outside the Borel disc: |u|/lambda = " + std::to_string(x) +
                      " >= radius " + std::to_string(f.radius));

  const int D = g.cap();
  const int shift = u.degree_shift();
  const bool graded = g.basis() == Basis::taylor && shift != LocalOperator::kMixing;
  const TruncatedSeries P = g.polynomial_part();
  const double Pt = P.poly_norm(t);

  TruncatedSeries out = (P * f.coeff(0)).rebased(s);
  TruncatedSeries v = P;  // u^n P / n!
  std::vector<std::pair<int, double>> dropped;  // (n, |content past the cap|_t) per term
  bool stopped = false;                          // terms past the last computed one remain
  int n = 1;
  for (;; ++n) {
    if (v.max_degree() < 0) break;
    // A degree-raising u empties v after at most cap steps. Otherwise the
    // terms decay geometrically and the sum runs until the remainder bound
    // is below the smallest normal double.
    const double rem = std::pow(x, n) * f.scaled_tail(n, x) * Pt;
    const bool exhausts = graded && shift >= 1;
    if ((!exhausts && n > 1 && rem < std::numeric_limits<double>::min()) || n > kMaxBorelTerms) {
      stopped = rem > 0;
      break;
    }
    auto [low, high] = (u.image(v) * (1.0 / n)).split_at(D);
    const double hn = high.poly_norm(t);
    if (hn > 0) dropped.emplace_back(n, hn);
    v = low.cap() == D ? low : low.with_cap(D);
    const double fn = f.coeff(n);
    if (fn != 0) out += (v * fn).rebased(s);
  }

  // A remainder of order o >= 1 can be bounded at an intermediate radius
  // s < s' < t and carried down to s by the factor (s/s')^o. bound(x, lam) is
  // its estimate from t to the radius with weight lam.
  auto graded_tail = [&](int o, const std::function<double(double, double)>& bound) {
    double best = bound(x, lam);
    if (o < 1) return best;
    for (int k = 1; k < 8; ++k) {
      const double sm = s + (t - s) * k / 8.0;
      const double lm = (*w)(t, sm);
      const double xm = u.borel_constant() / lm;
      if (!(xm < f.radius)) continue;
      best = std::min(best, bound(xm, lm) * std::pow(s / sm, o));
    }
    return best;
  };

  if (!dropped.empty()) {
    const int o = graded && shift >= 0 ? D + 1 : 0;
    out.add_tail(graded_tail(o, [&](double xx, double) {
                   double sum = 0;
                   for (auto [k, hn] : dropped) sum += hn * f.scaled_tail(k, xx);
                   return sum;
                 }),
                 o);
  }
  if (stopped) {
    const int o = graded && shift >= 0 ? std::max(0, P.min_degree() + n * shift) : 0;
    out.add_tail(graded_tail(o, [&](double xx, double) { return std::pow(xx, n) * f.scaled_tail(n, xx) * Pt; }), o);
  }
  if (g.tail() > 0) {
    const int o = graded && shift >= 0 ? g.tail_order() : 0;
    const double gt = g.tail_at(t);
    out.add_tail(graded_tail(o, [&](double xx, double) { return f.majorant(xx) * gt; }), o);
  }
  if (u.tail_norm() > 0) {
    const double tn = u.is_derivation() ? u.tail_norm() : kE * u.tail_norm();
    int o = 0;
    if (graded && shift >= 0 && u.tail_shift() != LocalOperator::kMixing)
      o = std::max(0, P.min_degree() + u.tail_shift());
    out.add_tail(graded_tail(o, [&](double xx, double ll) { return f.majorant_derivative(xx) * tn / ll * Pt; }), o);
  }
  return out;
}

TruncatedSeries exp_apply(const LocalOperator& u, double t, double s, const TruncatedSeries& g, int sign) {
  return borel_apply(BorelKernel::exponential(sign), u, t, s, g);
}

RoundTrip exp_round_trip(const LocalOperator& u, double t, double s, const TruncatedSeries& g) {
  const double m = 0.5 * (t + s);
  TruncatedSeries h = exp_apply(u, t, m, g, 1);
  TruncatedSeries k = exp_apply(u, m, s, h, -1);
  RoundTrip rt;
  rt.defect = (k.rebased(s) - g.rebased(s)).poly_norm(s);
  rt.bound = k.tail() + g.tail_at(s);
  rt.consistent = rt.defect <= rt.bound * (1 + 1e-9) + 1e-14 * g.poly_norm(t);
  return rt;
}

TruncatedSeries ExponentialProduct::apply(const TruncatedSeries& g) const {
  TruncatedSeries h = g;
  for (std::size_t n = 0; n < us.size(); ++n) h = exp_apply(us[n], radii[n], radii[n + 1], h);
  return h;
}

ExponentialProduct product_of_exponentials(std::vector<LocalOperator> us, std::vector<double> radii) {
  if (radii.size() != us.size() + 1) throw InputError("need one more radius than operators");
  for (std::size_t n = 0; n + 1 < radii.size(); ++n)
    if (!(radii[n + 1] > 0 && radii[n + 1] < radii[n])) throw InputError("radii must decrease strictly");
  ExponentialProduct out;
  for (std::size_t n = 0; n < us.size(); ++n) {
    const auto* w = std::get_if<WeightFunction>(&us[n].weight());
    if (!w) throw DomainError("product of exponentials needs submultiplicative weights");
    const double x = us[n].borel_constant() / (*w)(radii[n], radii[n + 1]);
    if (!(x < 1))
      throw DomainError("product of exponentials: step " + std::to_string(n) +
                        " violates |u_n| < lambda(t_n, t_{n+1})");
    out.ratios.push_back(x);
    out.sigma += x;
  }
  if (out.sigma < 1) out.bound = out.sigma / (1 - out.sigma);
  out.us = std::move(us);
  out.radii = std::move(radii);
  return out;
}

}  // namespace kolmo
