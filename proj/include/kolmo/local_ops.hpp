#pragma once

// Local operators between the spaces E_t of a Kolmogorov family, with certified
// norms, and the functional calculus built on them (Borel map, exponentials,
// products of exponentials).
//
// Norm conventions. For a grade-n operator U the certificate norm_bound is
//   sup over s < t <= ref_radius of  w_n(t,s) |U g|_s / |g|_t,
//   w_n(t,s) = lambda(t,s)^n / n^n   (w_0 = 1).
// This is the graded weight e^n lambda^n / n^n with the factor e^n removed, so
// a derivation a d/dz has norm |a| and compositions multiply norms. The e^n
// comes back in the Borel estimate: |U^n g|_s <= n! (e N / lambda)^n |g|_t for a
// general first-order U of norm N. For derivations the majorant flow gives the
// sharper n! (N / lambda)^n, which is what borel_constant() reports.

#include <climits>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kolmo/series.hpp"

namespace kolmo {

/// lambda(t,s) = C s^p t^{-q} (t-s)^k.
struct WeightFunction {
  double C = 1;
  double p = 0;
  double q = 0;
  int k = 1;

  double operator()(double t, double s) const;
  /// e^n lambda^n / n^n, with lambda_0 = 1.
  double graded(int n, double t, double s) const;
  /// lambda^n / n^n: the weight operator certificates are measured against.
  double operator_weight(int n, double t, double s) const;
  nlohmann::json to_json() const;
};

/// lambda(n,s,t) = (t/s)^{2^n} s^a (t-s)^b. Not submultiplicative.
struct CutoffWeight {
  double a = 0;
  double b = 0;

  double operator()(int n, double s, double t) const;
  double log_value(int n, double s, double t) const;
  nlohmann::json to_json() const;
};

struct SubmultReport {
  int samples = 0;
  double worst_margin = 0;  // min over the grid of (rhs - lhs) / rhs
  bool holds = true;
};

/// lambda_{p+q}(t,s) <= lambda_p(t,m) lambda_q(m,s) at m = p/(p+q) s + q/(p+q) t
/// over a grid of (s,t) pairs in (0,1].
SubmultReport submult_check(const WeightFunction& w, int p, int q, int grid = 40);

class LocalOperator {
 public:
  using Weight = std::variant<WeightFunction, CutoffWeight>;
  /// Exact image of a polynomial (zero-tail series). The result may have a
  /// larger cap; nothing is truncated.
  using Action = std::function<TruncatedSeries(const TruncatedSeries&)>;
  /// Marks operators that move content between arbitrary degrees (Fourier
  /// convolutions, for instance).
  static constexpr int kMixing = INT_MIN;

  struct Spec {
    std::string kind;
    int grade = 1;
    Weight weight = WeightFunction{};
    double norm_bound = 0;
    double tail_norm = 0;  // part of norm_bound due to uncertain coefficients
    double ref_radius = 1;
    int degree_shift = kMixing;  // image degree >= input degree + shift
    int tail_shift = kMixing;    // same for the image under the uncertain part
    bool derivation = false;
    nlohmann::json parameters = nlohmann::json::object();
  };

  LocalOperator(Spec spec, Action action);
  static LocalOperator zero(int grade, double ref_radius);

  const std::string& kind() const { return spec_.kind; }
  int grade() const { return spec_.grade; }
  const Weight& weight() const { return spec_.weight; }
  double norm_bound() const { return spec_.norm_bound; }
  double tail_norm() const { return spec_.tail_norm; }
  double ref_radius() const { return spec_.ref_radius; }
  int degree_shift() const { return spec_.degree_shift; }
  int tail_shift() const { return spec_.tail_shift; }
  bool is_derivation() const { return spec_.derivation; }
  /// Constant N with |u^n g|_s <= n! (N / lambda(t,s))^n |g|_t.
  double borel_constant() const;

  /// w_grade(t,s) for this operator's weight.
  double operator_weight(double t, double s) const;

  /// Exact image of the stored polynomial of g.
  TruncatedSeries image(const TruncatedSeries& g) const;
  /// Certified u(g) in E_s: kept coefficients up to g's cap, everything else
  /// (dropped degrees, g's tail, operator uncertainty) charged to the tail.
  TruncatedSeries apply(const TruncatedSeries& g, double t, double s) const;

  nlohmann::json descriptor() const;

 private:
  Spec spec_;
  Action action_;
};

/// u = a(z) d/dz on univariate Taylor series, weight t - s, norm |a|_{ref}.
LocalOperator certify_vector_field(const TruncatedSeries& a);

/// X -> [v, X] = v X' - v' X on the Fourier side (vector fields on the circle).
LocalOperator certify_ad_vector_field(const TruncatedSeries& v);

/// g -> m g, grade 0.
LocalOperator certify_multiplication(const TruncatedSeries& m);

/// g -> [g]_k^l, grade 0, norm 1, cutoff weight.
LocalOperator certify_cutoff(int k, int l, double ref_radius);

/// Grade p+q operator u o v (v applied first).
LocalOperator compose(const LocalOperator& u, const LocalOperator& v);

/// The power series f entering the Borel map B(f) = sum f_n z^n / n!.
struct BorelKernel {
  std::string name;
  double radius = 1;                                  // radius of convergence of f
  std::function<double(int)> coeff;                   // f_n
  std::function<double(int, double)> scaled_tail;     // sum_{n>=m} |f_n| x^{n-m}
  std::function<double(double)> majorant_derivative;  // |f|'(x)

  double majorant(double x) const { return scaled_tail(0, x); }

  /// f = 1/(1 - sign z), B(f) = e^{sign z}.
  static BorelKernel exponential(int sign = 1);
  /// B(f) = e^{-z}(1 + z) - 1.
  static BorelKernel phi();
  /// B(f) = e^{-z} - 1.
  static BorelKernel psi();
  /// Finite f.
  static BorelKernel polynomial(std::vector<double> c);
};

/// B(f)(u) g from E_t to E_s. Domain error when the Borel constant of u is not
/// below radius * lambda(t,s).
TruncatedSeries borel_apply(const BorelKernel& f, const LocalOperator& u, double t, double s,
                            const TruncatedSeries& g);

/// e^{sign u} g from E_t to E_s.
TruncatedSeries exp_apply(const LocalOperator& u, double t, double s, const TruncatedSeries& g,
                          int sign = 1);

struct RoundTrip {
  double defect = 0;  // |e^{-u} e^{u} g - g|_s on the stored coefficients
  double bound = 0;   // tail certified for e^{-u} e^{u} g
  bool consistent = false;
};
/// e^{u} from t to the midpoint, then e^{-u} down to s.
RoundTrip exp_round_trip(const LocalOperator& u, double t, double s, const TruncatedSeries& g);

struct ExponentialProduct {
  std::vector<LocalOperator> us;
  std::vector<double> radii;
  std::vector<double> ratios;  // borel_constant(u_n) / lambda(t_n, t_{n+1})
  double sigma = 0;
  std::optional<double> bound;  // sigma / (1 - sigma) when sigma < 1

  /// e^{u_N} ... e^{u_0} g, from radii.front() to radii.back().
  TruncatedSeries apply(const TruncatedSeries& g) const;
};

/// Domain error naming the first index n with ratio >= 1.
ExponentialProduct product_of_exponentials(std::vector<LocalOperator> us, std::vector<double> radii);

}  // namespace kolmo
