#pragma once

// Positive sequences and the quadratic-iteration toolkit built on them:
// Bruno sums and transforms, tame pairs, the mixed linear-quadratic model
// iteration and the construction of radius-loss sequences (rho, sigma).
//
// Every sequence is evaluated in log space. Terms such as rho_60 are far below
// the smallest double, so comparisons and products never leave log space.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kolmo/trace.hpp"

namespace kolmo {

enum class Monotonicity { increasing, decreasing, constant, none };

std::string to_string(Monotonicity m);

class PositiveSequence {
 public:
  struct Node;

  /// The constant sequence 1.
  PositiveSequence();

  /// a_n = c.
  static PositiveSequence constant(double c);
  /// a_n = q^n.
  static PositiveSequence geometric(double q);
  /// a_n = exp(sign * alpha^n).
  static PositiveSequence exp_power(int sign, double alpha);
  /// Finite table; evaluation past the end is an input error.
  static PositiveSequence tabulated(std::vector<double> values);
  /// Finite table given by the logarithms of its terms.
  static PositiveSequence tabulated_log(std::vector<double> logs, std::string name = "tabulated_log");
  /// Arbitrary log-evaluator. No tail knowledge, not serializable.
  static PositiveSequence custom(std::string name, std::function<double(std::size_t)> log_term);
  /// The Bruno transform n -> a^pi_n viewed as a sequence of its own.
  static PositiveSequence bruno_transform_of(const PositiveSequence& a);

  PositiveSequence operator*(const PositiveSequence& other) const;
  PositiveSequence pow(double p) const;
  PositiveSequence scaled(double c) const;
  PositiveSequence reciprocal() const { return pow(-1.0); }
  /// Pointwise sum a_n + b_n.
  PositiveSequence plus(const PositiveSequence& other) const;
  /// max(a_n, c).
  PositiveSequence at_least(double c) const;

  double log_at(std::size_t n) const;
  double operator()(std::size_t n) const;
  /// Order-preserving key used for exact monotonicity checks: the raw value for
  /// tables, the logarithm otherwise.
  double compare_key(std::size_t n) const;

  /// Number of available terms for tables, nullopt for infinite families.
  std::optional<std::size_t> length() const;
  /// Certified upper bound on sum_{k>N} |log a_k| / 2^{k+1}, if the family has one.
  std::optional<double> log_tail(std::size_t N) const;
  /// Upper bound on log_tail(M+1)/log_tail(M) valid for every M >= N.
  std::optional<double> tail_ratio(std::size_t N) const;
  /// True when the Bruno sum provably diverges (exp_power with alpha >= 2 and
  /// non-degenerate powers or rescalings of it).
  bool diverges() const;

  std::string describe() const;
  nlohmann::json to_json() const;
  static PositiveSequence from_json(const nlohmann::json& j);
  /// CLI shorthand: "geometric:2", "exp_power:1.2" (sign taken from the number),
  /// "constant:0.5".
  static PositiveSequence parse(const std::string& spec);

 private:
  explicit PositiveSequence(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Monotonicity of a_0..a_window, with exact comparisons.
Monotonicity monotonicity(const PositiveSequence& a, std::size_t window);

enum class BrunoVerdict { bruno, not_bruno, inconclusive };
std::string to_string(BrunoVerdict v);

struct BrunoCertificate {
  double partial_sum = 0;  // sum_{k<=depth} |log a_k| / 2^{k+1}
  std::size_t depth = 0;
  std::optional<double> tail_bound;
  BrunoVerdict verdict = BrunoVerdict::inconclusive;
  Monotonicity monotonicity = Monotonicity::none;
};

BrunoCertificate bruno_check(const PositiveSequence& a, std::size_t depth);

/// a^pi_n with an enclosure of the truncated tail. Values are also given in
/// log space because they underflow quickly for exp-power families.
struct TransformValue {
  double log_value = 0;
  double log_lower = 0;
  double log_upper = 0;
  double value = 1;
  double lower = 1;
  double upper = 1;
  bool tail_known = false;
  bool hypotheses_ok = true;  // a >= 1 and nondecreasing on the evaluated window
  std::size_t depth = 0;
};

TransformValue bruno_transform(const PositiveSequence& a, std::size_t n, std::size_t depth);

/// Depth chosen so that the log-enclosure width drops below ~1e-15 relative
/// (capped at 4096 terms).
TransformValue bruno_transform_tight(const PositiveSequence& a, std::size_t n);

struct TamePairReport {
  std::size_t window = 0;
  std::vector<bool> star_holds;  // a_n b_n^2 <= b_{n+1}, n < window
  bool a_at_least_one = true;
  bool b_at_most_one = true;
  bool b_vanishing = true;  // heuristic, reported but never fatal
  bool bounds_hold = true;  // a >= 1 and b <= 1
  std::optional<std::size_t> first_violation;

  bool tame() const { return bounds_hold && !first_violation; }
};

TamePairReport tame_check(const PositiveSequence& a, const PositiveSequence& b, std::size_t window);
/// Same check on explicit log tables; log_b needs one more entry than log_a.
TamePairReport tame_check_logs(const std::vector<double>& log_a, const std::vector<double>& log_b);

struct TameBrunoCertificate {
  bool tame = false;
  bool log_b_scaled_vanishes = false;  // log(b_n)/2^n -> 0 on the window
  std::vector<double> lhs;             // sum_{k<M} log a_k / 2^{k+1}, M = 1..window
  std::vector<double> rhs;             // log b_M / 2^M - log b_0
  std::vector<bool> holds;
  std::optional<std::size_t> first_failure;
  BrunoVerdict verdict = BrunoVerdict::inconclusive;
};

TameBrunoCertificate tame_implies_bruno(const PositiveSequence& a, const PositiveSequence& b,
                                        std::size_t window);

struct TamingEpsilon {
  double epsilon = 0;
  double log_epsilon = 0;
  std::size_t argmin = 0;
};

/// inf over n <= depth of the lower enclosure of (a^pi_n)^2. Domain error when
/// a is not certified Bruno.
TamingEpsilon taming_epsilon(const PositiveSequence& a, std::size_t depth);

/// x_{n+1} = (a_n x_n^2 + b_n x_n)/2. When (a,b) is tame on the window and
/// x0 <= b0, every x_n <= b_n is asserted and violations are flagged.
IterationTrace model_iteration(const PositiveSequence& a, const PositiveSequence& b, double x0,
                               std::size_t steps);

struct LemmaRhoOptions {
  double K = 0.5;
  double alpha = 1.5;
  std::size_t window = 40;
  bool auto_tune = true;
  int max_halvings = 64;
};

struct LemmaRhoResult {
  PositiveSequence rho;
  PositiveSequence c;  // the tamer of a * aprime^2
  std::vector<double> log_rho;
  std::vector<double> sigma;  // 1 - rho_n^{1/2^n}
  std::vector<double> log_sigma;
  double K = 0;
  int halvings = 0;
  bool passed = false;
  std::vector<std::size_t> conclusion1_failures;  // star / side conditions
  std::vector<std::size_t> conclusion2_failures;  // rho a' sigma^{-l} < b
};

/// Builds rho_n = K b_n c_n exp(-alpha^n) with c the Bruno transform of
/// a * aprime^2, then checks on the window that (a sigma^{-k}, rho a' sigma^{-l})
/// is tame and that rho a' sigma^{-l} < b. With auto_tune, K is halved until both
/// hold or max_halvings is reached.
LemmaRhoResult lemma_rho(const PositiveSequence& a, const PositiveSequence& aprime,
                         const PositiveSequence& b, double k, double l,
                         const LemmaRhoOptions& options = {});

/// log(1 - exp(x)) for x < 0, accurate near 0.
double log1m_exp(double x);
/// log(exp(x) + exp(y)).
double log_add_exp(double x, double y);

}  // namespace kolmo
