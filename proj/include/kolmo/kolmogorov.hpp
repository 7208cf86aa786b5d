#pragma once

// Finite ordered bases and sections over them. Only finite bases are ever
// materialized; the engines walk continuous radius ranges through schedules.

#include <cstddef>
#include <functional>
#include <vector>

#include <json.hpp>

#include "kolmo/series.hpp"

namespace kolmo {

/// A radius t, a pair (n, t) or a tuple; ordered componentwise. The last
/// coordinate is the radius at which sections are measured.
using BasePoint = std::vector<double>;

class FiniteBase {
 public:
  explicit FiniteBase(std::vector<BasePoint> points);
  static FiniteBase radii(const std::vector<double>& ts);

  std::size_t size() const { return points_.size(); }
  const BasePoint& point(std::size_t i) const { return points_[i]; }
  double radius(std::size_t i) const { return points_[i].back(); }

  /// point(i) >= point(j) componentwise.
  bool geq(std::size_t i, std::size_t j) const;
  /// Indices j with point(j) <= point(i).
  std::vector<std::size_t> down_set(std::size_t i) const;
  /// Indices j with point(j) >= point(i).
  std::vector<std::size_t> up_set(std::size_t i) const;
  bool is_chain() const;
  /// Index of the unique maximum, if there is one.
  std::optional<std::size_t> top() const;

  nlohmann::json to_json() const;

 private:
  std::vector<BasePoint> points_;
};

/// Values indexed by base position.
using NormMap = std::vector<double>;

/// s <= t <= ref_radius. Coefficients are kept, the tail is rescaled to s.
TruncatedSeries restrict(const TruncatedSeries& f, double t, double s);

class Section {
 public:
  Section(FiniteBase base, std::vector<TruncatedSeries> values);
  /// The horizontal section a -> f restricted to radius(a).
  static Section horizontal(FiniteBase base, const TruncatedSeries& f);

  const FiniteBase& base() const { return base_; }
  const TruncatedSeries& value(std::size_t i) const { return values_[i]; }
  /// Majorant norm of value(i) at radius(i).
  double norm_at(std::size_t i) const { return norms_[i]; }
  const NormMap& norms() const { return norms_; }

  /// Comparable points carry identical coefficient arrays. Tails are ignored:
  /// each is a sound enclosure of the same remainder.
  bool is_horizontal() const;

  Section operator+(const Section& other) const;
  Section scaled(Complex c) const;

  nlohmann::json to_json() const;

 private:
  FiniteBase base_;
  std::vector<TruncatedSeries> values_;
  NormMap norms_;
};

/// sup of the section norms over the given base indices.
double sup_norm_over(const Section& s, const std::vector<std::size_t>& A);

/// b -> sup over the down-set of b.
NormMap kolmogorify(const NormMap& norms, const FiniteBase& base);
/// b -> sup over the up-set of b.
NormMap opposite_kolmogorify(const NormMap& norms, const FiniteBase& base);

/// norms nondecreasing along the order (restrictions have norm <= 1).
bool is_kolmogorov(const NormMap& norms, const FiniteBase& base);

struct RescaleResult {
  NormMap norms;
  bool weight_increasing = false;  // lambda nondecreasing along the order
  bool kolmogorov = false;         // the rescaled norms are still monotone
};

RescaleResult rescale(const NormMap& norms, const std::function<double(const BasePoint&)>& lambda,
                      const FiniteBase& base);

}  // namespace kolmo
