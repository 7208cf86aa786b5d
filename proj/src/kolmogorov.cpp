#include "kolmo/kolmogorov.hpp"

#include <algorithm>
#include <cmath>

#include "kolmo/error.hpp"

namespace kolmo {

FiniteBase::FiniteBase(std::vector<BasePoint> points) : points_(std::move(points)) {
  if (points_.empty()) throw InputError("a base needs at least one point");
  const std::size_t arity = points_.front().size();
  for (const auto& p : points_) {
    if (p.size() != arity || arity == 0) throw InputError("base points must share a positive arity");
    for (double x : p)
      if (!std::isfinite(x)) throw InputError("base coordinates must be finite");
    if (!(p.back() > 0)) throw InputError("the radius coordinate must be positive");
  }
  // Componentwise >= is antisymmetric exactly when no point is repeated.
  for (std::size_t i = 0; i < points_.size(); ++i)
    for (std::size_t j = i + 1; j < points_.size(); ++j)
      if (geq(i, j) && geq(j, i)) throw InputError("base points must be distinct");
}

FiniteBase FiniteBase::radii(const std::vector<double>& ts) {
  std::vector<BasePoint> pts;
  for (double t : ts) pts.push_back({t});
  return FiniteBase(std::move(pts));
}

bool FiniteBase::geq(std::size_t i, std::size_t j) const {
  const auto& a = points_[i];
  const auto& b = points_[j];
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k] < b[k]) return false;
  return true;
}

std::vector<std::size_t> FiniteBase::down_set(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j)
    if (geq(i, j)) out.push_back(j);
  return out;
}

std::vector<std::size_t> FiniteBase::up_set(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j)
    if (geq(j, i)) out.push_back(j);
  return out;
}

bool FiniteBase::is_chain() const {
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < size(); ++j)
      if (!geq(i, j) && !geq(j, i)) return false;
  return true;
}

std::optional<std::size_t> FiniteBase::top() const {
  for (std::size_t i = 0; i < size(); ++i)
    if (down_set(i).size() == size()) return i;
  return std::nullopt;
}

nlohmann::json FiniteBase::to_json() const { return {{"points", points_}}; }

TruncatedSeries restrict(const TruncatedSeries& f, double t, double s) {
  if (s > t) throw InputError("restriction must go down the order (s <= t)");
  if (t > f.ref_radius() * (1 + 1e-12)) throw DomainError("restriction source beyond ref_radius");
  return f.restricted(s);
}

Section::Section(FiniteBase base, std::vector<TruncatedSeries> values)
    : base_(std::move(base)), values_(std::move(values)) {
  if (values_.size() != base_.size()) throw InputError("one value per base point is required");
  for (std::size_t i = 0; i < values_.size(); ++i) norms_.push_back(norm(values_[i], base_.radius(i)));
}

Section Section::horizontal(FiniteBase base, const TruncatedSeries& f) {
  std::vector<TruncatedSeries> vals;
  for (std::size_t i = 0; i < base.size(); ++i) vals.push_back(f.restricted(base.radius(i)));
  return Section(std::move(base), std::move(vals));
}

bool Section::is_horizontal() const {
  for (std::size_t i = 0; i < base_.size(); ++i)
    for (std::size_t j = 0; j < base_.size(); ++j)
      if (i != j && base_.geq(i, j) && !values_[i].same_coefficients(values_[j])) return false;
  return true;
}

Section Section::operator+(const Section& other) const {
  if (other.base_.size() != base_.size()) throw InputError("sections over different bases");
  std::vector<TruncatedSeries> vals;
  for (std::size_t i = 0; i < base_.size(); ++i) vals.push_back(values_[i] + other.values_[i]);
  return Section(base_, std::move(vals));
}

Section Section::scaled(Complex c) const {
  std::vector<TruncatedSeries> vals;
  for (const auto& v : values_) vals.push_back(v * c);
  return Section(base_, std::move(vals));
}

nlohmann::json Section::to_json() const {
  nlohmann::json vals = nlohmann::json::array();
  for (const auto& v : values_) vals.push_back(v.to_json());
  return {{"base", base_.to_json()}, {"values", vals}, {"norms", norms_}};
}

double sup_norm_over(const Section& s, const std::vector<std::size_t>& A) {
  if (A.empty()) throw InputError("sup over an empty set of base points");
  double m = 0;
  for (std::size_t i : A) {
    if (i >= s.base().size()) throw InputError("base index out of range");
    m = std::max(m, s.norm_at(i));
  }
  return m;
}

namespace {

NormMap sup_over(const NormMap& norms, const FiniteBase& base, bool down) {
  if (norms.size() != base.size()) throw InputError("one norm per base point is required");
  NormMap out(norms.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    double m = 0;
    for (std::size_t j : down ? base.down_set(i) : base.up_set(i)) m = std::max(m, norms[j]);
    out[i] = m;
  }
  return out;
}

}  // namespace

NormMap kolmogorify(const NormMap& norms, const FiniteBase& base) { return sup_over(norms, base, true); }

NormMap opposite_kolmogorify(const NormMap& norms, const FiniteBase& base) {
  return sup_over(norms, base, false);
}

bool is_kolmogorov(const NormMap& norms, const FiniteBase& base) {
  for (std::size_t i = 0; i < base.size(); ++i)
    for (std::size_t j = 0; j < base.size(); ++j)
      if (base.geq(i, j) && norms[j] > norms[i]) return false;
  return true;
}

RescaleResult rescale(const NormMap& norms, const std::function<double(const BasePoint&)>& lambda,
                      const FiniteBase& base) {
  if (norms.size() != base.size()) throw InputError("one norm per base point is required");
  RescaleResult out;
  std::vector<double> lam(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    lam[i] = lambda(base.point(i));
    if (!(lam[i] > 0)) throw InputError("rescaling weight must be positive");
    out.norms.push_back(lam[i] * norms[i]);
  }
  out.weight_increasing = is_kolmogorov(lam, base);
  out.kolmogorov = is_kolmogorov(out.norms, base);
  return out;
}

}  // namespace kolmo
