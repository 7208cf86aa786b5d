#pragma once

// The Lie iteration for an action (E, f + M, g): x_n = tau_n + r_n with tau_n
// in f + T, u_n = j(tau_n)(r_n), x_{n+1} = e^{-u_n} x_n. Includes the radius
// scheduler that makes the iteration provably convergent, the stepwise
// certificate, the assembly of the conjugacy and the involutivity combinator.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kolmo/iterate.hpp"
#include "kolmo/local_ops.hpp"
#include "kolmo/sequences.hpp"
#include "kolmo/series.hpp"
#include "kolmo/trace.hpp"

namespace kolmo {

/// Weight exponents of pi, j (two factors) and kappa (two factors), each
/// collapsed to the sum of its components.
struct LieExponents {
  double alpha = 0;
  double beta = 0;
  double gamma = 0;
  double nu = 0;
  double xi = 0;

  /// 2 (alpha + beta + gamma + 1), the quadratic exponent.
  double k() const { return 2 * (alpha + beta + gamma + 1); }
  /// nu + xi + 1, the linear exponent.
  double l() const { return nu + xi + 1; }
  nlohmann::json to_json() const;
};

/// Norm data feeding the convergence theorem.
struct LieConstants {
  PositiveSequence pi = PositiveSequence::constant(1);
  PositiveSequence j = PositiveSequence::constant(1);
  PositiveSequence kappa = PositiveSequence::constant(1);
  bool kappa_zero = false;
  LieExponents exponents;
  double tau0_norm = 1;

  nlohmann::json to_json() const;
};

struct ActionProblem {
  std::string name;
  /// tau_0. Shares cap and basis with every remainder.
  TruncatedSeries f;
  /// The vector field j(tau)(r) at step n, from stored coefficients.
  std::function<TruncatedSeries(const TruncatedSeries& tau, const TruncatedSeries& r, std::size_t n)> solve;
  /// Certified infinitesimal action of a vector field on E.
  std::function<LocalOperator(const TruncatedSeries& field)> act;
  /// Projector onto the transversal T. Empty means T = {0}.
  std::function<TruncatedSeries(const TruncatedSeries& m, std::size_t n)> project;
  /// Minimal degree of kappa_n when it is known algebraically. Coefficients
  /// below it are rounding noise and are cleared (checked against 1e-12 |r|).
  std::function<int(std::size_t n)> kappa_order;
  /// Membership r in M_n (empty: no constraint).
  std::function<bool(const TruncatedSeries& r, std::size_t n)> in_M;
  std::optional<LieConstants> constants;
  nlohmann::json description = nlohmann::json::object();
};

struct LieState {
  std::size_t n = 0;
  double radius = 0;
  TruncatedSeries tau;
  TruncatedSeries r;
  TruncatedSeries delta;  // delta_n, zero for n = 0
  TruncatedSeries field;  // coefficients of u_n, filled in by the step
  double r_norm = 0;
  double delta_norm = 0;
  double u_norm = 0;
  double borel_ratio = 0;   // Borel constant of u_n over the three quarter width
  double consistency = 0;   // max |tau_{n+1} + r_{n+1} - e^{-u_n} x_n| coefficientwise
  double kappa_noise = 0;   // largest cleared coefficient of kappa_n
  bool in_M = true;
};

LieState initial_state(const ActionProblem& p, const TruncatedSeries& r0, double t);

/// One step from s_n to s_{n+1}. The interval is cut in quarters: u_n(tau_n)
/// lands at s_{n+1/4}, the three exponential factors run from there to
/// s_{n+1}. Domain errors name the failing sub-expression.
LieState lie_step(LieState& state, const ActionProblem& p, const RadiusSchedule& schedule);

/// a' = |pi| (1 + |j|)(2 + |tau0|)(1 + |tau0|), a'' = 4 e^2 (1 + |tau0|)^2 |j|^2,
/// a''' = 4 e (1 + |tau0|) |j| a', a'''' = 4 |kappa| (at least 1).
struct DerivedSequences {
  PositiveSequence a1;
  PositiveSequence a2;
  PositiveSequence a3;
  PositiveSequence a4;
  double k = 0;
  double l = 0;
};
DerivedSequences derived_sequences(const LieConstants& c);

struct ConditionReport {
  int id = 0;
  std::string name;
  bool holds = false;
  bool vacuous = false;
  std::optional<std::size_t> first_failure;
};

struct LieSchedule {
  PositiveSequence b;
  PositiveSequence rho;
  std::vector<double> log_rho;
  std::vector<double> log_sigma;
  std::vector<double> sigma;
  RadiusSchedule radii = RadiusSchedule::geometric(0.5, 1, 0.5);
  DerivedSequences derived;
  double K = 0;
  int halvings = 0;
  std::size_t window = 0;
  std::vector<ConditionReport> conditions;
  bool passed = false;
  /// |r_0| below threshold = epsilon t^m meets the a priori hypotheses.
  double threshold = 0;
  double epsilon = 0;
  double m = 0;

  double log_sigma_at(std::size_t n) const;
  double log_rho_at(std::size_t n) const;
  nlohmann::json to_json() const;
};

/// Finds rho (via the rho lemma, halving K further if needed) so that the
/// five proof conditions hold on the window. Domain error with the binding
/// condition when no K within 64 halvings works, or when |pi|, |j|, |kappa|
/// are not Bruno sequences.
LieSchedule rho_schedule(const ActionProblem& p, const PositiveSequence& b, double t,
                         std::size_t window = 40);

struct LieCheck {
  std::size_t n = 0;
  std::string name;
  double lhs = 0;
  double rhs = 0;
  bool holds = true;
};

struct LieCertificate {
  std::vector<LieCheck> checks;
  bool n1 = true;
  bool n2 = true;
  bool master = true;
  bool r_bound = true;
  bool delta_bound = true;
  bool membership = true;
  bool hypothesis = false;  // |r_0| < epsilon t^m
  bool all() const { return n1 && n2 && master && r_bound && delta_bound && membership; }
  nlohmann::json to_json() const;
};

struct LieRunOptions {
  std::size_t steps = 8;
  bool assemble = true;
};

struct LieRun {
  std::vector<LieState> states;  // states[0] = initial, one more per step
  IterationTrace trace;
  /// |G_n(tau_0 + r_0) - tau_0 - sum delta_i|_{s_n} for the partial conjugacies
  /// G_n = e^{-u_{n-1}} ... e^{-u_0}.
  std::vector<double> versality_defect;
  /// max coefficient of G_N(x_0) - tau_N - r_N.
  double identity_error = 0;
  std::optional<double> product_sigma;
  std::optional<double> product_bound;
  /// |G_N(x_0) - x_0|_{s_N} / |x_0|_{s_0}, to compare with product_bound.
  std::optional<double> product_observed;
  double residual() const;
};

/// Iterates lie_step and assembles the conjugacy. The trace is filled with
/// norms; certification is left to certify().
LieRun run_lie(const ActionProblem& p, const TruncatedSeries& r0, const RadiusSchedule& schedule,
               const LieRunOptions& options = {});

/// Stepwise checks N1, N2, the master inequality and the conclusions
/// |r_n| <= b_n, |delta_n| <= b_n; also membership r_n in M_n. Marks the run's
/// trace certified when everything holds.
LieCertificate certify(LieRun& run, const ActionProblem& p, const LieSchedule& schedule);

/// Structural checks only (N1, membership, monotone decay of |r_n|) for runs
/// without theorem constants.
LieCertificate certify_structural(LieRun& run, const ActionProblem& p);

/// Quasi-inverse built from an inverse L that preserves the transversal.
struct InvolutiveInverse {
  /// j(tau)(r) = L(r - L(r)(tau - x)).
  std::function<TruncatedSeries(const TruncatedSeries& tau, const TruncatedSeries& r)> j;
  /// kappa_0 = (1 - pi)(1 - L), with L(y) acting on the base point x.
  std::function<TruncatedSeries(const TruncatedSeries& y)> kappa0;
};

/// The action of a vector field (series of coefficients) on an element of E.
using FieldAction = std::function<TruncatedSeries(const TruncatedSeries& field, const TruncatedSeries& x)>;

/// Checks on random degree-limited samples that (1 - pi) L(y)(delta) = 0 for
/// delta in T and refuses with a witness otherwise.
InvolutiveInverse involutive_quasi_inverse(const LocalOperator& L, const LocalOperator& pi,
                                           FieldAction act, const TruncatedSeries& x,
                                           int samples = 20, unsigned seed = 7);

struct IdentityCheck {
  std::size_t samples = 0;
  double max_defect = 0;
  bool holds = false;
};

/// (1 - pi)(j(x + delta)(r)(x + delta) - r) = -kappa_0(r - L(r)(delta)) on
/// random r of degree <= max_degree and delta = pi(random).
IdentityCheck check_involutive_identity(const InvolutiveInverse& inv, const LocalOperator& L,
                                        const LocalOperator& pi, const FieldAction& act,
                                        const TruncatedSeries& x, int samples, int max_degree,
                                        unsigned seed, double tol = 1e-12);

}  // namespace kolmo
