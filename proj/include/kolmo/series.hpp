#pragma once

// Truncated power series (Taylor, up to three variables) and truncated Fourier
// series (one angle) with a certified tail.
//
// A series stands for f = P + R where P is the stored polynomial and R is an
// unknown remainder whose terms have degree >= tail_order (total degree for
// Taylor, |k| for Fourier) and whose majorant norm at ref_radius is at most
// tail. Norms are l1 coefficient norms:
//   taylor:  |f|_t = sum |a_I| t^{|I|}
//   fourier: |f|_t = sum |a_k| e^{|k| t}       (t = strip half-width)
// which dominate the supremum norm on the polydisc (strip) of radius t.
// For tail_order o the remainder satisfies |R|_t <= tail * (t/r)^o
// (resp. tail * e^{o (t - r)}) for every t <= r = ref_radius.

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

namespace kolmo {

using Complex = std::complex<double>;
using MultiIndex = std::array<int, 3>;

enum class Basis { taylor, fourier };

struct SeriesLayout;

class TruncatedSeries {
 public:
  /// Zero series in one variable, cap 0, radius 1.
  TruncatedSeries();
  TruncatedSeries(int dim, int cap, double ref_radius, Basis basis = Basis::taylor);

  static TruncatedSeries fourier(int cap, double width);
  /// One variable Taylor polynomial sum c[n] z^n, cap defaults to c.size()-1.
  static TruncatedSeries from_coefficients(const std::vector<Complex>& c, double ref_radius,
                                           int cap = -1);

  int dim() const { return dim_; }
  int cap() const { return cap_; }
  double ref_radius() const { return ref_radius_; }
  Basis basis() const { return basis_; }
  double tail() const { return tail_; }
  int tail_order() const { return tail_order_; }

  std::size_t size() const { return coeffs_.size(); }
  const MultiIndex& index(std::size_t pos) const;
  /// Total degree (Taylor) or |k| (Fourier) of the coefficient at pos.
  int degree(std::size_t pos) const;
  Complex coeff(std::size_t pos) const { return coeffs_[pos]; }
  Complex& coeff(std::size_t pos) { return coeffs_[pos]; }
  const std::vector<Complex>& coefficients() const { return coeffs_; }

  std::optional<std::size_t> position(const MultiIndex& I) const;
  Complex at(const MultiIndex& I) const;
  void set(const MultiIndex& I, Complex c);
  /// One variable shorthand: degree n (Taylor) or mode k (Fourier).
  Complex at(int n) const { return at(MultiIndex{n, 0, 0}); }
  void set(int n, Complex c) { set(MultiIndex{n, 0, 0}, c); }

  /// Adds a remainder of majorant norm <= T at ref_radius with terms of degree
  /// >= order. Orders combine by minimum.
  TruncatedSeries& add_tail(double T, int order);
  void clear_tail();

  /// Weight of a degree-d coefficient at radius t.
  double weight(int d, double t) const;
  /// Upper bound on |R|_t for t <= ref_radius.
  double tail_at(double t) const;
  /// sum |a_I| w(I, t) over stored coefficients; no radius check.
  double poly_norm(double t) const;

  TruncatedSeries polynomial_part() const;
  /// The stored polynomial, now labelled with reference radius r.
  TruncatedSeries rebased(double r) const;
  /// Same data viewed at a smaller radius (coefficients unchanged, tail rescaled).
  TruncatedSeries restricted(double s) const;
  /// Change the cap. Growing pads with zeros; shrinking moves the dropped
  /// coefficients into the tail.
  TruncatedSeries with_cap(int cap) const;
  /// Stored coefficients above cap are split off: returns (low part, high part).
  std::pair<TruncatedSeries, TruncatedSeries> split_at(int cap) const;

  /// Smallest degree with a nonzero stored coefficient, cap+1 if none.
  int min_degree() const;
  /// Largest degree with a nonzero stored coefficient, -1 if none.
  int max_degree() const;
  bool is_zero() const;

  /// Evaluate the stored polynomial (one variable): z for Taylor, x for Fourier.
  Complex evaluate(Complex z) const;

  TruncatedSeries operator-() const;
  TruncatedSeries& operator+=(const TruncatedSeries& g);
  TruncatedSeries& operator-=(const TruncatedSeries& g);
  TruncatedSeries& operator*=(Complex c);
  friend TruncatedSeries operator+(TruncatedSeries f, const TruncatedSeries& g) { return f += g; }
  friend TruncatedSeries operator-(TruncatedSeries f, const TruncatedSeries& g) { return f -= g; }
  friend TruncatedSeries operator*(TruncatedSeries f, Complex c) { return f *= c; }
  friend TruncatedSeries operator*(Complex c, TruncatedSeries f) { return f *= c; }

  /// Coefficient-exact comparison of the stored parts (tails ignored).
  bool same_coefficients(const TruncatedSeries& g) const;

  nlohmann::json to_json() const;
  static TruncatedSeries from_json(const nlohmann::json& j);

 private:
  void require_compatible(const TruncatedSeries& g, const char* op) const;

  int dim_ = 1;
  int cap_ = 0;
  double ref_radius_ = 1;
  Basis basis_ = Basis::taylor;
  double tail_ = 0;
  int tail_order_ = 1;
  std::shared_ptr<const SeriesLayout> layout_;
  std::vector<Complex> coeffs_;
};

struct NormValue {
  enum class Kind { majorant_sup, hilbert };
  Kind kind = Kind::majorant_sup;
  double radius = 0;
  double value = 0;
};

/// sum |a_I| t^{|I|} + tail (t/r)^{o}. Domain error for t > ref_radius.
NormValue majorant_norm(const TruncatedSeries& f, double t);
/// Shorthand for majorant_norm(f, t).value.
double norm(const TruncatedSeries& f, double t);

/// sqrt(sum |a_I|^2 C(I) t^{2d+2|I|}), C(I) = pi^d / prod(1+i_k). Taylor only,
/// exact data only.
NormValue hilbert_norm(const TruncatedSeries& f, double t);

/// Product truncated at the common cap; the overflow and the tails go into
/// the tail. Both factors must share dim, basis, cap and ref_radius.
TruncatedSeries multiply(const TruncatedSeries& f, const TruncatedSeries& g);
/// Product of the stored parts with cap f.cap + g.cap, so nothing is dropped.
/// Tails are propagated as in multiply.
TruncatedSeries multiply_full(const TruncatedSeries& f, const TruncatedSeries& g);

/// Partial derivative. A nonzero tail forces the result onto the smaller
/// radius r*o/(o+1), where the remainder's derivative is still controlled.
TruncatedSeries derivative(const TruncatedSeries& f, int axis = 0);

/// g = f / z_axis. Coefficients not divisible by z_axis must be below tol;
/// they are charged to the tail.
TruncatedSeries divide_by_coordinate(const TruncatedSeries& f, int axis, double tol);

/// [f]_k^l: keep total degrees (|mode| for Fourier) in [k, l).
TruncatedSeries cutoff(const TruncatedSeries& f, int k, int l);

struct ArnoldMoserCheck {
  double lhs = 0;  // hilbert(iota [f]_N, s)
  double rhs = 0;  // (s/t)^{d+N} hilbert(f, t)
  bool holds = false;
};
/// Requires f to vanish below degree N.
ArnoldMoserCheck arnold_moser(const TruncatedSeries& f, int N, double s, double t);

/// Smallest degree with a coefficient above tol; cap+1 when none (and the tail
/// is below tol as well).
int order(const TruncatedSeries& f, double tol = 1e-12);

/// f(z + c) for a one variable Taylor series; ref radius shrinks by |c|.
TruncatedSeries shift(const TruncatedSeries& f, Complex c);

/// 1/f for a one variable Taylor series with f(0) != 0 and |f/f(0) - 1| < 1 at
/// the reference radius.
TruncatedSeries reciprocal(const TruncatedSeries& f);

/// Formal power-series quotient b/f of the stored parts up to b's cap. No tail
/// is attached: the result is meant to be cut off before use.
TruncatedSeries formal_quotient(const TruncatedSeries& b, const TruncatedSeries& f);

std::string to_string(Basis b);

}  // namespace kolmo
