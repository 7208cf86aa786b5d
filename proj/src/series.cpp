#include "kolmo/series.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "kolmo/error.hpp"

namespace kolmo {

struct SeriesLayout {
  int dim = 1;
  int cap = 0;
  Basis basis = Basis::taylor;
  std::vector<MultiIndex> idx;
  std::vector<int> deg;
  std::vector<int> dense;  // taylor: (cap+1)^dim table of positions, -1 when |I| > cap

  int dense_index(const MultiIndex& I) const {
    int k = 0;
    for (int a = dim - 1; a >= 0; --a) k = k * (cap + 1) + I[a];
    return k;
  }

  std::optional<std::size_t> find(const MultiIndex& I) const {
    if (basis == Basis::fourier) {
      if (I[0] < -cap || I[0] > cap || I[1] != 0 || I[2] != 0) return std::nullopt;
      return static_cast<std::size_t>(I[0] + cap);
    }
    int total = 0;
    for (int a = 0; a < 3; ++a) {
      if (I[a] < 0 || (a >= dim && I[a] != 0)) return std::nullopt;
      total += I[a];
    }
    if (total > cap) return std::nullopt;
    return static_cast<std::size_t>(dense[dense_index(I)]);
  }
};

namespace {

std::shared_ptr<const SeriesLayout> build_layout(int dim, int cap, Basis basis) {
  auto L = std::make_shared<SeriesLayout>();
  L->dim = dim;
  L->cap = cap;
  L->basis = basis;
  if (basis == Basis::fourier) {
    for (int k = -cap; k <= cap; ++k) {
      L->idx.push_back({k, 0, 0});
      L->deg.push_back(std::abs(k));
    }
    return L;
  }
  std::size_t table = 1;
  for (int a = 0; a < dim; ++a) table *= static_cast<std::size_t>(cap + 1);
  L->dense.assign(table, -1);
  // Graded order: all indices of total degree 0, then 1, ...
  for (int d = 0; d <= cap; ++d) {
    for (int i0 = d; i0 >= 0; --i0) {
      if (dim == 1) {
        if (i0 != d) continue;
        L->idx.push_back({i0, 0, 0});
      } else if (dim == 2) {
        L->idx.push_back({i0, d - i0, 0});
      } else {
        for (int i1 = d - i0; i1 >= 0; --i1) L->idx.push_back({i0, i1, d - i0 - i1});
        continue;
      }
    }
  }
  for (std::size_t p = 0; p < L->idx.size(); ++p) {
    const auto& I = L->idx[p];
    L->deg.push_back(I[0] + I[1] + I[2]);
    L->dense[L->dense_index(I)] = static_cast<int>(p);
  }
  return L;
}

std::shared_ptr<const SeriesLayout> layout_for(int dim, int cap, Basis basis) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int>, std::shared_ptr<const SeriesLayout>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(dim, cap, static_cast<int>(basis));
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto L = build_layout(dim, cap, basis);
  cache.emplace(key, L);
  return L;
}

bool radius_equal(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }

}  // namespace

std::string to_string(Basis b) { return b == Basis::taylor ? "taylor" : "fourier"; }

TruncatedSeries::TruncatedSeries() : TruncatedSeries(1, 0, 1.0) {}

TruncatedSeries::TruncatedSeries(int dim, int cap, double ref_radius, Basis basis)
    : dim_(dim), cap_(cap), ref_radius_(ref_radius), basis_(basis), tail_order_(cap + 1) {
  if (dim < 1 || dim > 3) throw InputError("series dimension must be 1, 2 or 3");
  if (basis == Basis::fourier && dim != 1) throw InputError("fourier series are one dimensional");
  if (cap < 0) throw InputError("degree cap must be nonnegative");
  if (!(ref_radius > 0) || !std::isfinite(ref_radius))
    throw InputError("reference radius must be positive and finite");
  layout_ = layout_for(dim, cap, basis);
  coeffs_.assign(layout_->idx.size(), Complex(0, 0));
}

TruncatedSeries TruncatedSeries::fourier(int cap, double width) {
  return TruncatedSeries(1, cap, width, Basis::fourier);
}

TruncatedSeries TruncatedSeries::from_coefficients(const std::vector<Complex>& c, double ref_radius,
                                                   int cap) {
  if (cap < 0) cap = std::max<int>(0, static_cast<int>(c.size()) - 1);
  TruncatedSeries f(1, cap, ref_radius);
  for (std::size_t n = 0; n < c.size(); ++n) {
    if (static_cast<int>(n) <= cap) {
      f.coeffs_[n] = c[n];
    } else if (c[n] != Complex(0, 0)) {
      f.add_tail(std::abs(c[n]) * std::pow(ref_radius, static_cast<double>(n)), cap + 1);
    }
  }
  return f;
}

const MultiIndex& TruncatedSeries::index(std::size_t pos) const { return layout_->idx[pos]; }
int TruncatedSeries::degree(std::size_t pos) const { return layout_->deg[pos]; }

std::optional<std::size_t> TruncatedSeries::position(const MultiIndex& I) const {
  return layout_->find(I);
}

Complex TruncatedSeries::at(const MultiIndex& I) const {
  auto p = position(I);
  return p ? coeffs_[*p] : Complex(0, 0);
}

void TruncatedSeries::set(const MultiIndex& I, Complex c) {
  auto p = position(I);
  if (!p) throw InputError("multi-index outside the stored range");
  coeffs_[*p] = c;
}

TruncatedSeries& TruncatedSeries::add_tail(double T, int order) {
  if (std::isnan(T) || T < 0) throw DomainError("tail bound must be nonnegative");
  if (T == 0) return *this;
  order = std::max(order, 0);
  if (tail_ == 0) {
    tail_order_ = order;
  } else {
    tail_order_ = std::min(tail_order_, order);
  }
  tail_ += T;
  return *this;
}

void TruncatedSeries::clear_tail() {
  tail_ = 0;
  tail_order_ = cap_ + 1;
}

double TruncatedSeries::weight(int d, double t) const {
  if (basis_ == Basis::fourier) return std::exp(d * t);
  return d == 0 ? 1.0 : std::pow(t, d);
}

double TruncatedSeries::tail_at(double t) const {
  if (tail_ == 0) return 0;
  if (basis_ == Basis::fourier) return tail_ * std::exp(tail_order_ * (t - ref_radius_));
  if (tail_order_ == 0) return tail_;
  return tail_ * std::pow(t / ref_radius_, tail_order_);
}

double TruncatedSeries::poly_norm(double t) const {
  double s = 0;
  for (std::size_t p = 0; p < coeffs_.size(); ++p) {
    if (coeffs_[p] != Complex(0, 0)) s += std::abs(coeffs_[p]) * weight(layout_->deg[p], t);
  }
  return s;
}

TruncatedSeries TruncatedSeries::polynomial_part() const {
  TruncatedSeries g = *this;
  g.clear_tail();
  return g;
}

TruncatedSeries TruncatedSeries::rebased(double r) const {
  if (!(r > 0) || !std::isfinite(r)) throw InputError("reference radius must be positive and finite");
  TruncatedSeries g = polynomial_part();
  g.ref_radius_ = r;
  return g;
}

TruncatedSeries TruncatedSeries::restricted(double s) const {
  if (!(s > 0) || s > ref_radius_ * (1 + 1e-12))
    throw DomainError("restriction radius must lie in (0, ref_radius]");
  TruncatedSeries g = *this;
  g.tail_ = tail_at(std::min(s, ref_radius_));
  if (g.tail_ == 0) g.tail_order_ = cap_ + 1;
  g.ref_radius_ = s;
  return g;
}

TruncatedSeries TruncatedSeries::with_cap(int cap) const {
  TruncatedSeries g(dim_, cap, ref_radius_, basis_);
  g.tail_ = tail_;
  g.tail_order_ = tail_ == 0 ? cap + 1 : tail_order_;
  double dropped = 0;
  for (std::size_t p = 0; p < coeffs_.size(); ++p) {
    if (coeffs_[p] == Complex(0, 0)) continue;
    if (layout_->deg[p] <= cap) {
      g.coeffs_[*g.position(layout_->idx[p])] = coeffs_[p];
    } else {
      dropped += std::abs(coeffs_[p]) * weight(layout_->deg[p], ref_radius_);
    }
  }
  g.add_tail(dropped, cap + 1);
  return g;
}

std::pair<TruncatedSeries, TruncatedSeries> TruncatedSeries::split_at(int cap) const {
  TruncatedSeries low(dim_, std::min(cap, cap_), ref_radius_, basis_);
  TruncatedSeries high(dim_, cap_, ref_radius_, basis_);
  for (std::size_t p = 0; p < coeffs_.size(); ++p) {
    if (layout_->deg[p] <= cap) {
      low.coeffs_[*low.position(layout_->idx[p])] = coeffs_[p];
    } else {
      high.coeffs_[p] = coeffs_[p];
    }
  }
  return {low, high};
}

int TruncatedSeries::min_degree() const {
  int m = cap_ + 1;
  for (std::size_t p = 0; p < coeffs_.size(); ++p)
    if (coeffs_[p] != Complex(0, 0)) m = std::min(m, layout_->deg[p]);
  return m;
}

int TruncatedSeries::max_degree() const {
  int m = -1;
  for (std::size_t p = 0; p < coeffs_.size(); ++p)
    if (coeffs_[p] != Complex(0, 0)) m = std::max(m, layout_->deg[p]);
  return m;
}

bool TruncatedSeries::is_zero() const { return tail_ == 0 && max_degree() < 0; }

Complex TruncatedSeries::evaluate(Complex z) const {
  if (dim_ != 1) throw InputError("evaluate is defined for one variable");
  if (basis_ == Basis::fourier) {
    Complex s(0, 0);
    for (int k = -cap_; k <= cap_; ++k)
      s += coeffs_[k + cap_] * std::exp(Complex(0, static_cast<double>(k)) * z);
    return s;
  }
  Complex s(0, 0);
  for (int n = cap_; n >= 0; --n) s = s * z + coeffs_[n];
  return s;
}

void TruncatedSeries::require_compatible(const TruncatedSeries& g, const char* op) const {
  if (dim_ != g.dim_ || basis_ != g.basis_)
    throw InputError(std::string(op) + ": dimension or basis mismatch");
  if (cap_ != g.cap_) throw InputError(std::string(op) + ": degree cap mismatch");
  if (!radius_equal(ref_radius_, g.ref_radius_))
    throw InputError(std::string(op) + ": reference radius mismatch");
}

TruncatedSeries TruncatedSeries::operator-() const {
  TruncatedSeries g = *this;
  for (auto& c : g.coeffs_) c = -c;
  return g;
}

TruncatedSeries& TruncatedSeries::operator+=(const TruncatedSeries& g) {
  require_compatible(g, "add");
  for (std::size_t p = 0; p < coeffs_.size(); ++p) coeffs_[p] += g.coeffs_[p];
  add_tail(g.tail_, g.tail_order_);
  return *this;
}

TruncatedSeries& TruncatedSeries::operator-=(const TruncatedSeries& g) {
  require_compatible(g, "subtract");
  for (std::size_t p = 0; p < coeffs_.size(); ++p) coeffs_[p] -= g.coeffs_[p];
  add_tail(g.tail_, g.tail_order_);
  return *this;
}

TruncatedSeries& TruncatedSeries::operator*=(Complex c) {
  for (auto& a : coeffs_) a *= c;
  tail_ *= std::abs(c);
  if (tail_ == 0) tail_order_ = cap_ + 1;
  return *this;
}

bool TruncatedSeries::same_coefficients(const TruncatedSeries& g) const {
  return dim_ == g.dim_ && basis_ == g.basis_ && cap_ == g.cap_ && coeffs_ == g.coeffs_;
}

nlohmann::json TruncatedSeries::to_json() const {
  nlohmann::json coeffs = nlohmann::json::array();
  for (std::size_t p = 0; p < coeffs_.size(); ++p) {
    if (coeffs_[p] == Complex(0, 0)) continue;
    nlohmann::json row = nlohmann::json::array();
    for (int a = 0; a < dim_; ++a) row.push_back(layout_->idx[p][a]);
    row.push_back(coeffs_[p].real());
    row.push_back(coeffs_[p].imag());
    coeffs.push_back(row);
  }
  return {{"dim", dim_},         {"cap", cap_},   {"ref_radius", ref_radius_},
          {"basis", to_string(basis_)}, {"coeffs", coeffs}, {"tail", tail_},
          {"tail_order", tail_order_}};
}

TruncatedSeries TruncatedSeries::from_json(const nlohmann::json& j) {
  try {
    Basis basis = Basis::taylor;
    if (j.contains("basis")) {
      auto b = j.at("basis").get<std::string>();
      if (b == "fourier") {
        basis = Basis::fourier;
      } else if (b != "taylor") {
        throw InputError("unknown basis '" + b + "'");
      }
    }
    TruncatedSeries f(j.value("dim", 1), j.at("cap").get<int>(), j.at("ref_radius").get<double>(),
                      basis);
    for (const auto& row : j.at("coeffs")) {
      if (!row.is_array() || static_cast<int>(row.size()) != f.dim_ + 2)
        throw InputError("coefficient rows must be [index..., re, im]");
      MultiIndex I{0, 0, 0};
      for (int a = 0; a < f.dim_; ++a) I[a] = row[a].get<int>();
      Complex c(row[f.dim_].get<double>(), row[f.dim_ + 1].get<double>());
      auto p = f.position(I);
      if (p) {
        f.coeffs_[*p] += c;
      } else {
        bool negative = false;
        int d = 0;
        for (int a = 0; a < f.dim_; ++a) {
          negative = negative || (basis == Basis::taylor && I[a] < 0);
          d += std::abs(I[a]);
        }
        if (negative) throw InputError("negative Taylor exponent");
        f.add_tail(std::abs(c) * f.weight(d, f.ref_radius_), f.cap_ + 1);
      }
    }
    double T = j.value("tail", 0.0);
    f.add_tail(T, j.value("tail_order", f.cap_ + 1));
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed series: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

NormValue majorant_norm(const TruncatedSeries& f, double t) {
  if (!(t >= 0) || (f.basis() == Basis::taylor && !(t > 0)))
    throw DomainError("norm radius must be positive");
  if (t > f.ref_radius() * (1 + 1e-12))
    throw DomainError("norm requested beyond the certified radius");
  t = std::min(t, f.ref_radius());
  return {NormValue::Kind::majorant_sup, t, f.poly_norm(t) + f.tail_at(t)};
}

double norm(const TruncatedSeries& f, double t) { return majorant_norm(f, t).value; }

NormValue hilbert_norm(const TruncatedSeries& f, double t) {
  if (f.basis() != Basis::taylor) throw InputError("hilbert norm needs a Taylor series");
  if (f.tail() != 0) throw DomainError("hilbert norm needs exact coefficients (zero tail)");
  if (!(t > 0)) throw DomainError("norm radius must be positive");
  double s = 0;
  const int d = f.dim();
  for (std::size_t p = 0; p < f.size(); ++p) {
    Complex c = f.coeff(p);
    if (c == Complex(0, 0)) continue;
    double C = std::pow(std::numbers::pi, d);
    for (int a = 0; a < d; ++a) C /= 1.0 + f.index(p)[a];
    s += std::norm(c) * C * std::pow(t, 2 * d + 2 * f.degree(p));
  }
  return {NormValue::Kind::hilbert, t, std::sqrt(s)};
}

namespace {

// Convolution into a series of cap out_cap; products beyond it are majorized at
// the reference radius and returned in overflow.
TruncatedSeries convolve(const TruncatedSeries& f, const TruncatedSeries& g, int out_cap,
                         double& overflow) {
  const double r = f.ref_radius();
  TruncatedSeries h(f.dim(), out_cap, r, f.basis());
  overflow = 0;
  std::vector<std::size_t> nf, ng;
  for (std::size_t p = 0; p < f.size(); ++p)
    if (f.coeff(p) != Complex(0, 0)) nf.push_back(p);
  for (std::size_t q = 0; q < g.size(); ++q)
    if (g.coeff(q) != Complex(0, 0)) ng.push_back(q);
  for (std::size_t p : nf) {
    const MultiIndex& I = f.index(p);
    for (std::size_t q : ng) {
      const MultiIndex& J = g.index(q);
      MultiIndex K{I[0] + J[0], I[1] + J[1], I[2] + J[2]};
      auto pos = h.position(K);
      Complex prod = f.coeff(p) * g.coeff(q);
      if (pos) {
        h.coeff(*pos) += prod;
      } else {
        int d = f.basis() == Basis::fourier ? std::abs(K[0]) : K[0] + K[1] + K[2];
        overflow += std::abs(prod) * h.weight(d, r);
      }
    }
  }
  return h;
}

void product_tails(const TruncatedSeries& f, const TruncatedSeries& g, TruncatedSeries& h) {
  const double r = f.ref_radius();
  const double Pf = f.poly_norm(r), Pg = g.poly_norm(r);
  const bool fourier = f.basis() == Basis::fourier;
  if (f.tail() > 0) {
    int o = fourier ? std::max(0, f.tail_order() - std::max(0, g.max_degree())) : f.tail_order();
    h.add_tail(f.tail() * Pg, o);
  }
  if (g.tail() > 0) {
    int o = fourier ? std::max(0, g.tail_order() - std::max(0, f.max_degree())) : g.tail_order();
    h.add_tail(g.tail() * Pf, o);
  }
  if (f.tail() > 0 && g.tail() > 0) {
    int o = fourier ? 0 : f.tail_order() + g.tail_order();
    h.add_tail(f.tail() * g.tail(), o);
  }
}

void require_same(const TruncatedSeries& f, const TruncatedSeries& g, const char* op) {
  if (f.dim() != g.dim() || f.basis() != g.basis())
    throw InputError(std::string(op) + ": dimension or basis mismatch");
  if (!radius_equal(f.ref_radius(), g.ref_radius()))
    throw InputError(std::string(op) + ": reference radius mismatch");
}

}  // namespace

TruncatedSeries multiply(const TruncatedSeries& f, const TruncatedSeries& g) {
  require_same(f, g, "multiply");
  if (f.cap() != g.cap()) throw InputError("multiply: degree cap mismatch");
  double overflow = 0;
  TruncatedSeries h = convolve(f, g, f.cap(), overflow);
  h.add_tail(overflow, f.cap() + 1);
  product_tails(f, g, h);
  return h;
}

TruncatedSeries multiply_full(const TruncatedSeries& f, const TruncatedSeries& g) {
  require_same(f, g, "multiply");
  double overflow = 0;
  TruncatedSeries h = convolve(f, g, f.cap() + g.cap(), overflow);
  product_tails(f, g, h);
  return h;
}

TruncatedSeries derivative(const TruncatedSeries& f, int axis) {
  if (axis < 0 || axis >= f.dim()) throw InputError("derivative axis out of range");
  const double r = f.ref_radius();
  double r_new = r, T_new = 0;
  int o_new = f.cap() + 1;
  if (f.tail() > 0) {
    const int o = f.tail_order();
    if (f.basis() == Basis::taylor) {
      if (o >= 1) {
        // max over n >= o of n s^{n-1} / r^n is attained at n = o once s <= r o/(o+1).
        const double theta = static_cast<double>(o) / (o + 1);
        r_new = theta * r;
        T_new = f.tail() * o * std::pow(theta, o - 1) / r;
        o_new = o - 1;
      } else {
        r_new = r / 2;
        T_new = f.tail() / (r - r_new);
        o_new = 0;
      }
    } else {
      // max over |k| >= o of |k| e^{-|k| delta}.
      double delta = (o >= 1 && 1.0 / o < r / 2) ? 1.0 / o : r / 2;
      double factor = (o * delta >= 1) ? o * std::exp(-o * delta) : 1.0 / (std::numbers::e * delta);
      r_new = r - delta;
      T_new = f.tail() * factor;
      o_new = o;
    }
  }
  TruncatedSeries g(f.dim(), f.cap(), r_new, f.basis());
  for (std::size_t p = 0; p < f.size(); ++p) {
    Complex c = f.coeff(p);
    if (c == Complex(0, 0)) continue;
    MultiIndex I = f.index(p);
    if (f.basis() == Basis::fourier) {
      g.coeff(p) = Complex(0, static_cast<double>(I[0])) * c;
      continue;
    }
    if (I[axis] == 0) continue;
    const double n = I[axis];
    --I[axis];
    g.set(I, n * c);
  }
  g.add_tail(T_new, o_new);
  return g;
}

TruncatedSeries divide_by_coordinate(const TruncatedSeries& f, int axis, double tol) {
  if (f.basis() != Basis::taylor) throw InputError("division by a coordinate needs a Taylor series");
  if (axis < 0 || axis >= f.dim()) throw InputError("division axis out of range");
  const double r = f.ref_radius();
  TruncatedSeries g(f.dim(), f.cap(), r);
  double residue = 0;
  for (std::size_t p = 0; p < f.size(); ++p) {
    Complex c = f.coeff(p);
    if (c == Complex(0, 0)) continue;
    MultiIndex I = f.index(p);
    if (I[axis] == 0) {
      if (std::abs(c) > tol)
        throw DomainError("division by a coordinate: term not divisible, |coefficient| = " +
                          std::to_string(std::abs(c)));
      residue += std::abs(c) * std::pow(r, f.degree(p)) / r;
      continue;
    }
    --I[axis];
    g.set(I, c);
  }
  if (f.tail() > 0) g.add_tail(f.tail() / r, std::max(0, f.tail_order() - 1));
  g.add_tail(residue, 0);
  return g;
}

TruncatedSeries cutoff(const TruncatedSeries& f, int k, int l) {
  if (k < 0 || l < k) throw InputError("cutoff needs 0 <= k <= l");
  TruncatedSeries g = f.polynomial_part();
  for (std::size_t p = 0; p < g.size(); ++p) {
    int d = g.degree(p);
    if (d < k || d >= l) g.coeff(p) = Complex(0, 0);
  }
  if (f.tail() > 0 && l > f.tail_order()) g.add_tail(f.tail(), std::max(f.tail_order(), k));
  return g;
}

ArnoldMoserCheck arnold_moser(const TruncatedSeries& f, int N, double s, double t) {
  if (!(0 < s && s <= t)) throw DomainError("Arnold-Moser check needs 0 < s <= t");
  TruncatedSeries high = cutoff(f, N, INT_MAX);
  ArnoldMoserCheck out;
  out.lhs = hilbert_norm(high, s).value;
  out.rhs = std::pow(s / t, f.dim() + N) * hilbert_norm(high, t).value;
  out.holds = out.lhs <= out.rhs * (1 + 1e-12);
  return out;
}

int order(const TruncatedSeries& f, double tol) {
  int best = f.cap() + 1;
  for (std::size_t p = 0; p < f.size(); ++p)
    if (std::abs(f.coeff(p)) > tol) best = std::min(best, f.degree(p));
  if (f.tail() > tol) best = std::min(best, f.tail_order());
  return best;
}

TruncatedSeries shift(const TruncatedSeries& f, Complex c) {
  if (f.basis() != Basis::taylor || f.dim() != 1) throw InputError("shift needs a univariate Taylor series");
  if (!(std::abs(c) < f.ref_radius())) throw DomainError("shift needs |c| < ref_radius");
  const int D = f.cap();
  std::vector<Complex> b(f.coefficients());
  // Repeated synthetic division (Taylor shift).
  for (int i = 0; i < D; ++i)
    for (int j = D - 1; j >= i; --j) b[j] += c * b[j + 1];
  TruncatedSeries g(1, D, f.ref_radius() - std::abs(c));
  for (int n = 0; n <= D; ++n) g.coeff(n) = b[n];
  // |R(.+c)|_{r-|c|} <= |R|_r, but the shift mixes degrees.
  g.add_tail(f.tail(), 0);
  return g;
}

TruncatedSeries reciprocal(const TruncatedSeries& f) {
  if (f.basis() != Basis::taylor || f.dim() != 1)
    throw InputError("reciprocal needs a univariate Taylor series");
  const double r = f.ref_radius();
  const int D = f.cap();
  const Complex a0 = f.coeff(0);
  const double m0 = std::abs(a0);
  if (m0 == 0) throw DomainError("reciprocal of a series vanishing at the origin");
  const double hP = (f.poly_norm(r) - m0) / m0;
  const double hf = hP + f.tail() / m0;
  if (!(hf < 1)) throw DomainError("reciprocal: series is not a unit on the reference disc");
  TruncatedSeries g(1, D, r);
  g.coeff(0) = 1.0 / a0;
  for (int n = 1; n <= D; ++n) {
    Complex s(0, 0);
    for (int k = 1; k <= n; ++k) s += f.coeff(k) * g.coeff(n - k);
    g.coeff(n) = -s / a0;
  }
  const double bound_P = 1.0 / (m0 * (1 - hP));
  const double high = std::max(0.0, bound_P - g.poly_norm(r));
  g.add_tail(high, D + 1);
  // Rounding in the recursion, charged to every degree.
  g.add_tail(1e-15 * (D + 1) * bound_P, 0);
  if (f.tail() > 0) g.add_tail(f.tail() / (m0 * m0 * (1 - hf) * (1 - hP)), f.tail_order());
  return g;
}

TruncatedSeries formal_quotient(const TruncatedSeries& b, const TruncatedSeries& f) {
  if (b.basis() != Basis::taylor || b.dim() != 1 || f.basis() != Basis::taylor || f.dim() != 1)
    throw InputError("formal quotient needs univariate Taylor series");
  const Complex f0 = f.coeff(0);
  if (f0 == Complex(0, 0)) throw DomainError("formal quotient by a non-unit");
  TruncatedSeries q(1, b.cap(), b.ref_radius());
  for (int n = 0; n <= b.cap(); ++n) {
    Complex s = b.coeff(n);
    for (int k = 1; k <= std::min(n, f.cap()); ++k) s -= f.coeff(k) * q.coeff(n - k);
    q.coeff(n) = s / f0;
  }
  return q;
}

}  // namespace kolmo
