#pragma once

// Iteration engines over series: relative contraction, majorized iteration,
// scalar Newton and the analytic Nash-Moser scheme on a shrinking radius
// schedule. All engines return an IterationTrace.

#include <cstddef>
#include <functional>
#include <optional>

#include <json.hpp>

#include "kolmo/local_ops.hpp"
#include "kolmo/sequences.hpp"
#include "kolmo/series.hpp"
#include "kolmo/trace.hpp"

namespace kolmo {

class RadiusSchedule {
 public:
  enum class Kind { geometric, rho_driven };

  /// s_n = s_inf + (s0 - s_inf) q^n.
  static RadiusSchedule geometric(double q, double s0, double s_inf);
  /// s_{n+1} = rho_n^{1/2^n} s_n.
  static RadiusSchedule rho_driven(PositiveSequence rho, double s0);

  Kind kind() const { return kind_; }
  double at(std::size_t n) const;
  double midpoint(std::size_t n) const { return 0.5 * (at(n) + at(n + 1)); }
  double limit() const { return limit_; }
  /// s_n - s_{n+1}.
  double gap(std::size_t n) const;
  double q() const { return q_; }

  nlohmann::json to_json() const;

 private:
  RadiusSchedule() = default;
  Kind kind_ = Kind::geometric;
  double q_ = 0.5;
  double s0_ = 1;
  double limit_ = 0.5;
  PositiveSequence rho_;
};

using StepMap = std::function<TruncatedSeries(const TruncatedSeries&, std::size_t)>;

struct ContractionOptions {
  /// The product lambda_1...lambda_N counts as vanishing below this value.
  double product_threshold = 0.1;
};

/// x_{n+1} = T(x_n, n). Certifies d(x_{n+1}, x_n) <= lambda_n...lambda_1 d(x_1, x_0)
/// and declares the sequence Cauchy when the product vanishes on the window.
IterationTrace relative_contraction(const StepMap& T, const PositiveSequence& lambda,
                                    const TruncatedSeries& x0, std::size_t steps,
                                    const ContractionOptions& options = {});

/// Runs x_{n+1} = F(x_n) and y_{n+1} = f(y_n) in lockstep and asserts
/// nu(x_n) <= y_n. nu defaults to the majorant norm at x's reference radius.
IterationTrace majorized_iteration(const std::function<TruncatedSeries(const TruncatedSeries&)>& F,
                                   const std::function<double(double)>& f, const TruncatedSeries& x0,
                                   double y0, std::size_t steps,
                                   std::function<double(const TruncatedSeries&)> nu = {});

/// x_{n+1} = x_n - j(x_n)(f(x_n) - y) with j(x) = 1/f'(x). Certified when
/// |Delta_0| < 1/C and every ratio |Delta_{n+1}|/|Delta_n|^2 <= C = mM/2.
IterationTrace newton(const std::function<double(double)>& f, const std::function<double(double)>& j,
                      double x0, double y, double m, double M, std::size_t steps);

struct NashMoserProblem {
  /// f evaluated on a series at its reference radius.
  std::function<TruncatedSeries(const TruncatedSeries&)> f;
  /// Right inverse of Df(x), as a certified local operator.
  std::function<LocalOperator(const TruncatedSeries&)> j;
  /// Locality exponents: D^2 f has weight (t-s)^k s^a, j has (u-t)^l t^b.
  double a = 0, b = 0, k = 0, l = 0;
  /// Constant of the quadratic estimate (4 C C').
  double M = 1;
  nlohmann::json description = nlohmann::json::object();
};

struct NashMoserOptions {
  RadiusSchedule schedule = RadiusSchedule::geometric(0.5, 1.0, 0.5);
  std::size_t steps = 40;
};

/// a_n = M (gap_n / 2)^{-(2k+l)} s_{n+1/2}^{-(a+2b)}.
double nash_moser_constant(const NashMoserProblem& p, const RadiusSchedule& s, std::size_t n);
/// Bruno constant of the majorizing sequence M' q^{-(2k+l) n}, clipped below by 1.
TransformValue nash_moser_threshold(const NashMoserProblem& p, const RadiusSchedule& s);

IterationTrace nash_moser(const NashMoserProblem& problem, const TruncatedSeries& x0,
                          const TruncatedSeries& y, const NashMoserOptions& options = {});

}  // namespace kolmo
