#include "kolmo/iterate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kolmo/error.hpp"

namespace kolmo {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Increments growing three steps in a row.
bool growing_run(const std::vector<double>& inc) {
  const std::size_t n = inc.size();
  if (n < 4) return false;
  return inc[n - 1] > inc[n - 2] && inc[n - 2] > inc[n - 3] && inc[n - 3] > inc[n - 4];
}

}  // namespace

RadiusSchedule RadiusSchedule::geometric(double q, double s0, double s_inf) {
  if (!(q > 0 && q < 1)) throw InputError("geometric schedule needs 0 < q < 1");
  if (!(s_inf > 0)) throw InputError("schedule limit must be positive");
  if (!(s0 > s_inf)) throw InputError("schedule needs s0 > s_inf");
  RadiusSchedule r;
  r.kind_ = Kind::geometric;
  r.q_ = q;
  r.s0_ = s0;
  r.limit_ = s_inf;
  return r;
}

RadiusSchedule RadiusSchedule::rho_driven(PositiveSequence rho, double s0) {
  if (!(s0 > 0)) throw InputError("schedule start must be positive");
  if (rho.diverges()) throw InputError("sum |log rho_n| / 2^n diverges; the radii collapse");
  RadiusSchedule r;
  r.kind_ = Kind::rho_driven;
  r.s0_ = s0;
  const std::size_t len = rho.length().value_or(1100);
  double log_s = std::log(s0);
  for (std::size_t n = 0; n < len; ++n) {
    const double lr = rho.log_at(n);
    if (!(lr < 0)) throw InputError("rho_n must lie in (0, 1) for a decreasing schedule");
    const double term = std::ldexp(lr, -static_cast<int>(std::min<std::size_t>(n, 1070)));
    log_s += term;
    if (n > 8 && std::abs(term) < 1e-18 * std::max(1.0, std::abs(log_s))) break;
  }
  r.limit_ = std::exp(log_s);
  if (!(r.limit_ > 0)) throw InputError("schedule limit underflows to zero");
  r.rho_ = std::move(rho);
  return r;
}

double RadiusSchedule::at(std::size_t n) const {
  if (kind_ == Kind::geometric) return limit_ + (s0_ - limit_) * std::pow(q_, static_cast<double>(n));
  double log_s = std::log(s0_);
  for (std::size_t k = 0; k < n; ++k)
    log_s += std::ldexp(rho_.log_at(k), -static_cast<int>(std::min<std::size_t>(k, 1070)));
  return std::exp(log_s);
}

double RadiusSchedule::gap(std::size_t n) const {
  if (kind_ == Kind::geometric) return (s0_ - limit_) * (1 - q_) * std::pow(q_, static_cast<double>(n));
  return at(n) - at(n + 1);
}

nlohmann::json RadiusSchedule::to_json() const {
  if (kind_ == Kind::geometric)
    return {{"kind", "geometric"}, {"q", q_}, {"s0", s0_}, {"s_inf", limit_}};
  return {{"kind", "rho_driven"}, {"rho", rho_.describe()}, {"s0", s0_}, {"s_inf", json_number(limit_)}};
}

// ---------------------------------------------------------------------------

IterationTrace relative_contraction(const StepMap& T, const PositiveSequence& lambda,
                                    const TruncatedSeries& x0, std::size_t steps,
                                    const ContractionOptions& options) {
  IterationTrace tr;
  tr.engine = "relative_contraction";
  bool contracting = true;
  for (std::size_t n = 1; n <= steps; ++n)
    if (lambda.log_at(n) > 1e-15) contracting = false;
  if (!contracting) tr.messages.push_back("some lambda_n exceeds 1: certification refused");

  // Sampled horizontality: T(restrict x0) against restrict T(x0).
  bool commutes = true;
  {
    const double r = x0.ref_radius();
    TruncatedSeries a = T(x0.restricted(0.5 * r), 0);
    TruncatedSeries b = T(x0, 0);
    commutes = a.same_coefficients(b);
  }
  if (!commutes) tr.messages.push_back("step map does not commute with restriction on the sample");

  TruncatedSeries x = x0;
  double d0 = 0, log_prod = 0;
  bool ok = contracting && commutes;
  std::vector<double> incs;
  for (std::size_t n = 0; n < steps; ++n) {
    TruncatedSeries next = T(x, n);
    const double r = next.ref_radius();
    const double d = norm(next - x.restricted(r), r);
    StepRecord rec;
    rec.n = n + 1;
    rec.radius = r;
    rec.remainder = norm(next, r);
    rec.increment = d;
    if (n == 0) {
      d0 = d;
      rec.bound = d0;
    } else {
      log_prod += lambda.log_at(n);
      rec.bound = d0 * std::exp(log_prod);
      rec.checks_passed = d <= rec.bound * (1 + 1e-12) + 1e-300;
    }
    if (!rec.checks_passed) {
      ok = false;
      tr.messages.push_back("contraction bound fails at step " + std::to_string(n + 1));
    }
    incs.push_back(d);
    tr.steps.push_back(rec);
    x = next;
    if (growing_run(incs)) {
      tr.status = "diverged";
      break;
    }
  }
  const double product = std::exp(log_prod);
  const bool vanishing = product <= options.product_threshold;
  tr.provenance = {{"lambda", lambda.describe()},
                   {"steps", steps},
                   {"lambda_product", json_number(product)},
                   {"product_threshold", options.product_threshold},
                   {"restriction_commutes", commutes}};
  tr.certified = ok && vanishing && tr.status != "diverged";
  if (tr.status.empty()) tr.status = tr.certified ? "certified" : (ok ? "bounded-only" : "uncertified");
  if (ok && !vanishing) tr.messages.push_back("product of lambda does not vanish on the window");
  return tr;
}

IterationTrace majorized_iteration(const std::function<TruncatedSeries(const TruncatedSeries&)>& F,
                                   const std::function<double(double)>& f, const TruncatedSeries& x0,
                                   double y0, std::size_t steps,
                                   std::function<double(const TruncatedSeries&)> nu) {
  if (!nu) nu = [](const TruncatedSeries& x) { return norm(x, x.ref_radius()); };
  IterationTrace tr;
  tr.engine = "majorized_iteration";
  TruncatedSeries x = x0;
  double y = y0;
  bool ok = true, y_decreasing = true;
  std::optional<std::size_t> first_violation;
  for (std::size_t n = 0; n <= steps; ++n) {
    StepRecord rec;
    rec.n = n;
    rec.radius = x.ref_radius();
    rec.remainder = nu(x);
    rec.bound = y;
    rec.checks_passed = rec.remainder <= y * (1 + 1e-12) + 1e-300;
    if (n < steps) {
      TruncatedSeries xn = F(x);
      double yn = f(y);
      // The ordered diagram nu(F(x)) <= f(nu(x)).
      const double lhs = nu(xn), rhs = f(rec.remainder);
      if (lhs > rhs * (1 + 1e-12) + 1e-300) {
        rec.checks_passed = false;
        rec.note = "nu(F(x)) > f(nu(x))";
      }
      if (!(yn <= y)) y_decreasing = false;
      rec.increment = norm(xn - x.restricted(xn.ref_radius()), xn.ref_radius());
      x = xn;
      y = yn;
    }
    if (!rec.checks_passed && !first_violation) first_violation = n;
    ok = ok && rec.checks_passed;
    tr.steps.push_back(rec);
  }
  const bool y_vanishes = y_decreasing && (y == 0 || y <= 1e-12 * std::max(y0, 1e-300));
  tr.provenance = {{"y0", y0}, {"steps", steps}, {"y_final", json_number(y)}, {"y_decreasing", y_decreasing}};
  if (first_violation) {
    tr.status = "majorization-violated";
    tr.provenance["first_violation"] = *first_violation;
    tr.messages.push_back("majorization violated at step " + std::to_string(*first_violation));
  } else if (y_vanishes) {
    tr.status = "converged";
    tr.certified = true;
  } else {
    tr.status = "bounded-only";
  }
  return tr;
}

IterationTrace newton(const std::function<double(double)>& f, const std::function<double(double)>& j,
                      double x0, double y, double m, double M, std::size_t steps) {
  IterationTrace tr;
  tr.engine = "newton";
  const double C = 0.5 * m * M;
  double x = x0;
  std::vector<double> deltas;
  bool ok = true;
  std::string failure;
  for (std::size_t n = 0; n < steps; ++n) {
    const double jx = j(x);
    if (!std::isfinite(jx)) {
      failure = "derivative not invertible at x = " + format_double(x);
      break;
    }
    const double res = f(x) - y;
    const double nx = x - jx * res;
    const double d = std::abs(nx - x);
    StepRecord rec;
    rec.n = n + 1;
    rec.remainder = std::abs(f(nx) - y);
    rec.increment = d;
    rec.bound = C;
    const double noise = 16 * kEps * std::max(1.0, std::abs(nx));
    const bool at_floor = d <= noise / 2;
    if (!deltas.empty() && deltas.back() > 0 && !at_floor) {
      // The ratio is recorded only when rounding in d moves it by less than
      // 1e-9; below that the step is checked with a rounding allowance.
      const double prev = deltas.back();
      if (C * noise <= 1e-9 * d) {
        rec.quad_const = d / (prev * prev);
        rec.checks_passed = rec.quad_const <= C * (1 + 1e-9) + 1e-9;
      } else {
        rec.checks_passed = d <= C * prev * prev * (1 + 1e-9) + noise;
        rec.note = "increment at rounding level";
      }
      ok = ok && rec.checks_passed;
    }
    deltas.push_back(d);
    tr.steps.push_back(rec);
    x = nx;
    if (d == 0 || at_floor) break;
    if (growing_run(deltas)) {
      tr.status = "diverged";
      break;
    }
  }
  const bool gate = !deltas.empty() && deltas.front() * C < 1;
  tr.provenance = {{"x0", x0}, {"y", y}, {"m", m}, {"M", M}, {"C", C},
                   {"x_final", json_number(x)}, {"gate_delta0_below_1_over_C", gate}};
  if (!failure.empty()) {
    tr.status = "step-error";
    tr.messages.push_back(failure);
    return tr;
  }
  tr.certified = ok && gate && tr.status != "diverged";
  if (tr.status.empty()) tr.status = tr.certified ? "certified" : "uncertified";
  return tr;
}

// ---------------------------------------------------------------------------

double nash_moser_constant(const NashMoserProblem& p, const RadiusSchedule& s, std::size_t n) {
  const double half_gap = 0.5 * s.gap(n);
  return p.M * std::pow(half_gap, -(2 * p.k + p.l)) * std::pow(s.midpoint(n), -(p.a + 2 * p.b));
}

TransformValue nash_moser_threshold(const NashMoserProblem& p, const RadiusSchedule& s) {
  const double alpha = 2 * p.k + p.l;
  double lead = p.M * std::pow(0.5 * s.gap(0), -alpha) * std::pow(s.limit(), -(p.a + 2 * p.b));
  PositiveSequence seq = PositiveSequence::geometric(std::pow(s.q(), -alpha)).scaled(lead).at_least(1.0);
  if (s.kind() != RadiusSchedule::Kind::geometric) {
    std::vector<double> logs;
    for (std::size_t n = 0; n < 64; ++n) logs.push_back(std::log(std::max(1.0, nash_moser_constant(p, s, n))));
    seq = PositiveSequence::tabulated_log(logs, "nash_moser_constants");
  }
  return bruno_transform_tight(seq, 0);
}

IterationTrace nash_moser(const NashMoserProblem& problem, const TruncatedSeries& x0,
                          const TruncatedSeries& y, const NashMoserOptions& options) {
  const RadiusSchedule& sched = options.schedule;
  IterationTrace tr;
  tr.engine = "nash_moser";
  const double s0 = sched.at(0);
  if (x0.ref_radius() < s0 * (1 - 1e-12) || y.ref_radius() < s0 * (1 - 1e-12))
    throw DomainError("x0 and y must be defined on the first schedule radius");

  const TransformValue eps = nash_moser_threshold(problem, sched);
  const double threshold = eps.lower;
  TruncatedSeries x = x0.restricted(s0);
  std::vector<double> incs;
  bool ok = true;
  std::string error;
  std::optional<std::size_t> failing;
  for (std::size_t n = 0; n < options.steps; ++n) {
    const double sn1 = sched.at(n + 1), mid = sched.midpoint(n);
    StepRecord rec;
    rec.n = n + 1;
    rec.radius = sn1;
    try {
      TruncatedSeries e = y.restricted(mid) - problem.f(x).restricted(mid);
      LocalOperator J = problem.j(x);
      // The tail of d bounds the distance to the exact step. The step taken
      // is the polynomial part, and the residual below is that of the new x.
      TruncatedSeries d = J.apply(e, mid, sn1).polynomial_part();
      x = x.restricted(sn1) + d;
      rec.increment = norm(d, sn1);
      rec.remainder = norm(problem.f(x) - y.restricted(sn1), sn1);
    } catch (const DomainError& ex) {
      error = ex.what();
      failing = n + 1;
      break;
    }
    rec.quad_const = nash_moser_constant(problem, sched, n);
    if (!incs.empty()) {
      rec.bound = rec.quad_const * incs.back() * incs.back();
      rec.checks_passed = rec.increment <= rec.bound * (1 + 1e-9) + 1e-300;
    } else {
      rec.bound = threshold;
      rec.checks_passed = rec.increment < threshold;
      if (!rec.checks_passed) rec.note = "|x_1 - x_0| above the Bruno constant";
    }
    ok = ok && rec.checks_passed;
    incs.push_back(rec.increment);
    tr.steps.push_back(rec);
    if (rec.increment <= 1e-15 * std::max(1.0, norm(x, sn1))) break;
    if (growing_run(incs)) {
      tr.status = "diverged";
      break;
    }
  }

  double final_residual = std::numeric_limits<double>::quiet_NaN();
  if (!failing) {
    const double sinf = sched.limit();
    TruncatedSeries xr = x.restricted(std::min(sinf, x.ref_radius()));
    final_residual = norm(problem.f(xr) - y.restricted(xr.ref_radius()), xr.ref_radius());
  }
  tr.provenance = {{"schedule", sched.to_json()},
                   {"exponents", {{"a", problem.a}, {"b", problem.b}, {"k", problem.k}, {"l", problem.l}}},
                   {"alpha", 2 * problem.k + problem.l},
                   {"M", problem.M},
                   {"bruno_constant", json_number(threshold)},
                   {"final_residual", json_number(final_residual)},
                   {"problem", problem.description},
                   {"x_final", x.to_json()}};
  if (failing) {
    tr.status = "domain-error";
    tr.provenance["failing_step"] = *failing;
    tr.messages.push_back("step " + std::to_string(*failing) + ": " + error);
    return tr;
  }
  tr.certified = ok && tr.status != "diverged";
  if (tr.status.empty()) tr.status = tr.certified ? "certified" : "uncertified";
  return tr;
}

}  // namespace kolmo
