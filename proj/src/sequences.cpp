#include "kolmo/sequences.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "kolmo/error.hpp"

namespace kolmo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// sum_{k>N} 1/2^{k+1}
double half_power_tail(std::size_t N) { return std::ldexp(1.0, -static_cast<int>(N) - 1); }

std::optional<double> max_opt(std::optional<double> x, std::optional<double> y) {
  if (!x || !y) return std::nullopt;
  return std::max(*x, *y);
}

std::optional<double> sum_opt(std::optional<double> x, std::optional<double> y) {
  if (!x || !y) return std::nullopt;
  return *x + *y;
}

}  // namespace

double log_add_exp(double x, double y) {
  if (x == -kInf) return y;
  if (y == -kInf) return x;
  const double m = std::max(x, y);
  return m + std::log1p(std::exp(-std::abs(x - y)));
}

double log1m_exp(double x) {
  if (x > 0) return std::numeric_limits<double>::quiet_NaN();
  if (x == 0) return -kInf;
  if (x > -std::numbers::ln2) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

std::string to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::increasing: return "increasing";
    case Monotonicity::decreasing: return "decreasing";
    case Monotonicity::constant: return "constant";
    case Monotonicity::none: return "none";
  }
  return "none";
}

std::string to_string(BrunoVerdict v) {
  switch (v) {
    case BrunoVerdict::bruno: return "bruno";
    case BrunoVerdict::not_bruno: return "not_bruno";
    case BrunoVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

// ---------------------------------------------------------------------------
// Sequence families

struct PositiveSequence::Node {
  virtual ~Node() = default;
  virtual double log_at(std::size_t n) const = 0;
  // Exact comparison key; tables compare their raw values.
  virtual double key(std::size_t n) const { return log_at(n); }
  virtual std::optional<std::size_t> length() const { return std::nullopt; }
  virtual std::optional<double> log_tail(std::size_t) const { return std::nullopt; }
  virtual std::optional<double> tail_ratio(std::size_t) const { return std::nullopt; }
  virtual bool diverges() const { return false; }
  virtual nlohmann::json to_json() const = 0;
  virtual std::string describe() const = 0;
};

namespace {

using Node = PositiveSequence::Node;
using NodePtr = std::shared_ptr<const Node>;

struct ConstantNode final : Node {
  double c;
  explicit ConstantNode(double c) : c(c) {}
  double log_at(std::size_t) const override { return std::log(c); }
  std::optional<double> log_tail(std::size_t N) const override {
    return std::abs(std::log(c)) * half_power_tail(N);
  }
  std::optional<double> tail_ratio(std::size_t) const override { return 0.5; }
  nlohmann::json to_json() const override { return {{"family", "constant"}, {"value", c}}; }
  std::string describe() const override { return "constant(" + format_double(c) + ")"; }
};

struct GeometricNode final : Node {
  double q;
  explicit GeometricNode(double q) : q(q) {}
  double log_at(std::size_t n) const override { return static_cast<double>(n) * std::log(q); }
  // sum_{k>N} k/2^{k+1} = (N+2)/2^{N+1}
  std::optional<double> log_tail(std::size_t N) const override {
    return std::abs(std::log(q)) * static_cast<double>(N + 2) * half_power_tail(N);
  }
  std::optional<double> tail_ratio(std::size_t N) const override {
    return 0.5 * static_cast<double>(N + 3) / static_cast<double>(N + 2);
  }
  nlohmann::json to_json() const override { return {{"family", "geometric"}, {"q", q}}; }
  std::string describe() const override { return "geometric(" + format_double(q) + ")"; }
};

struct ExpPowerNode final : Node {
  int sign;
  double alpha;
  ExpPowerNode(int sign, double alpha) : sign(sign), alpha(alpha) {}
  double log_at(std::size_t n) const override {
    return sign * std::pow(alpha, static_cast<double>(n));
  }
  // sum_{k>N} alpha^k/2^{k+1} = (alpha/2)^{N+1} / (2 (1 - alpha/2)) for alpha < 2
  std::optional<double> log_tail(std::size_t N) const override {
    if (alpha >= 2) return std::nullopt;
    const double r = alpha / 2;
    return std::pow(r, static_cast<double>(N + 1)) / (2 * (1 - r));
  }
  std::optional<double> tail_ratio(std::size_t) const override {
    if (alpha >= 2) return std::nullopt;
    return alpha / 2;
  }
  bool diverges() const override { return alpha >= 2; }
  nlohmann::json to_json() const override {
    return {{"family", "exp_power"}, {"sign", sign}, {"alpha", alpha}};
  }
  std::string describe() const override {
    return std::string("exp_power(") + (sign > 0 ? "+" : "-") + format_double(alpha) + ")";
  }
};

struct TableNode final : Node {
  std::vector<double> values;
  explicit TableNode(std::vector<double> v) : values(std::move(v)) {}
  double log_at(std::size_t n) const override {
    if (n >= values.size()) {
      throw InputError("tabulated sequence has " + std::to_string(values.size()) +
                       " terms, index " + std::to_string(n) + " requested");
    }
    return std::log(values[n]);
  }
  double key(std::size_t n) const override {
    log_at(n);
    return values[n];
  }
  std::optional<std::size_t> length() const override { return values.size(); }
  nlohmann::json to_json() const override { return {{"family", "tabulated"}, {"values", values}}; }
  std::string describe() const override {
    return "tabulated[" + std::to_string(values.size()) + "]";
  }
};

struct LogTableNode final : Node {
  std::vector<double> logs;
  std::string name;
  LogTableNode(std::vector<double> l, std::string name) : logs(std::move(l)), name(std::move(name)) {}
  double log_at(std::size_t n) const override {
    if (n >= logs.size()) {
      throw InputError(name + " has " + std::to_string(logs.size()) + " terms, index " +
                       std::to_string(n) + " requested");
    }
    return logs[n];
  }
  std::optional<std::size_t> length() const override { return logs.size(); }
  nlohmann::json to_json() const override {
    nlohmann::json j = {{"family", "tabulated_log"}, {"name", name}};
    nlohmann::json arr = nlohmann::json::array();
    for (double x : logs) arr.push_back(json_number(x));
    j["logs"] = std::move(arr);
    return j;
  }
  std::string describe() const override { return name + "[" + std::to_string(logs.size()) + "]"; }
};

struct CustomNode final : Node {
  std::string name;
  std::function<double(std::size_t)> fn;
  CustomNode(std::string name, std::function<double(std::size_t)> fn)
      : name(std::move(name)), fn(std::move(fn)) {}
  double log_at(std::size_t n) const override { return fn(n); }
  nlohmann::json to_json() const override { return {{"family", "custom"}, {"name", name}}; }
  std::string describe() const override { return "custom(" + name + ")"; }
};

struct ProductNode final : Node {
  std::vector<NodePtr> factors;
  explicit ProductNode(std::vector<NodePtr> f) : factors(std::move(f)) {}
  double log_at(std::size_t n) const override {
    double s = 0;
    for (const auto& f : factors) s += f->log_at(n);
    return s;
  }
  std::optional<std::size_t> length() const override {
    std::optional<std::size_t> len;
    for (const auto& f : factors) {
      if (auto l = f->length()) len = len ? std::min(*len, *l) : *l;
    }
    return len;
  }
  std::optional<double> log_tail(std::size_t N) const override {
    std::optional<double> t = 0.0;
    for (const auto& f : factors) t = sum_opt(t, f->log_tail(N));
    return t;
  }
  std::optional<double> tail_ratio(std::size_t N) const override {
    std::optional<double> r = 0.0;
    for (const auto& f : factors) r = max_opt(r, f->tail_ratio(N));
    return r;
  }
  nlohmann::json to_json() const override {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : factors) arr.push_back(f->to_json());
    return {{"family", "product"}, {"factors", std::move(arr)}};
  }
  std::string describe() const override {
    std::string s;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      s += (i ? "*" : "") + factors[i]->describe();
    }
    return s;
  }
};

struct PowerNode final : Node {
  NodePtr base;
  double p;
  PowerNode(NodePtr b, double p) : base(std::move(b)), p(p) {}
  double log_at(std::size_t n) const override { return p == 0 ? 0.0 : p * base->log_at(n); }
  std::optional<std::size_t> length() const override { return base->length(); }
  std::optional<double> log_tail(std::size_t N) const override {
    if (p == 0) return 0.0;
    auto t = base->log_tail(N);
    if (!t) return std::nullopt;
    return std::abs(p) * *t;
  }
  std::optional<double> tail_ratio(std::size_t N) const override {
    if (p == 0) return 0.0;
    return base->tail_ratio(N);
  }
  bool diverges() const override { return p != 0 && base->diverges(); }
  nlohmann::json to_json() const override {
    return {{"family", "power"}, {"base", base->to_json()}, {"exponent", p}};
  }
  std::string describe() const override {
    return "(" + base->describe() + ")^" + format_double(p);
  }
};

struct ScaledNode final : Node {
  NodePtr base;
  double c;
  ScaledNode(NodePtr b, double c) : base(std::move(b)), c(c) {}
  double log_at(std::size_t n) const override { return std::log(c) + base->log_at(n); }
  std::optional<std::size_t> length() const override { return base->length(); }
  std::optional<double> log_tail(std::size_t N) const override {
    auto t = base->log_tail(N);
    if (!t) return std::nullopt;
    return *t + std::abs(std::log(c)) * half_power_tail(N);
  }
  std::optional<double> tail_ratio(std::size_t N) const override {
    return max_opt(base->tail_ratio(N), 0.5);
  }
  bool diverges() const override { return base->diverges(); }
  nlohmann::json to_json() const override {
    return {{"family", "scaled"}, {"base", base->to_json()}, {"factor", c}};
  }
  std::string describe() const override {
    return format_double(c) + "*" + base->describe();
  }
};

struct SumNode final : Node {
  NodePtr x, y;
  SumNode(NodePtr x, NodePtr y) : x(std::move(x)), y(std::move(y)) {}
  double log_at(std::size_t n) const override { return log_add_exp(x->log_at(n), y->log_at(n)); }
  std::optional<std::size_t> length() const override {
    auto lx = x->length(), ly = y->length();
    if (lx && ly) return std::min(*lx, *ly);
    return lx ? lx : ly;
  }
  // |log(a+b)| <= log 2 + |log a| + |log b|
  std::optional<double> log_tail(std::size_t N) const override {
    auto t = sum_opt(x->log_tail(N), y->log_tail(N));
    if (!t) return std::nullopt;
    return *t + std::numbers::ln2 * half_power_tail(N);
  }
  std::optional<double> tail_ratio(std::size_t N) const override {
    return max_opt(max_opt(x->tail_ratio(N), y->tail_ratio(N)), 0.5);
  }
  nlohmann::json to_json() const override {
    return {{"family", "sum"}, {"terms", {x->to_json(), y->to_json()}}};
  }
  std::string describe() const override {
    return "(" + x->describe() + "+" + y->describe() + ")";
  }
};

struct AtLeastNode final : Node {
  NodePtr base;
  double floor;
  AtLeastNode(NodePtr b, double f) : base(std::move(b)), floor(f) {}
  double log_at(std::size_t n) const override {
    return std::max(base->log_at(n), std::log(floor));
  }
  std::optional<std::size_t> length() const override { return base->length(); }
  std::optional<double> log_tail(std::size_t N) const override {
    auto t = base->log_tail(N);
    if (!t) return std::nullopt;
    return *t + std::abs(std::log(floor)) * half_power_tail(N);
  }
  std::optional<double> tail_ratio(std::size_t N) const override {
    return max_opt(base->tail_ratio(N), 0.5);
  }
  nlohmann::json to_json() const override {
    return {{"family", "at_least"}, {"base", base->to_json()}, {"floor", floor}};
  }
  std::string describe() const override {
    return "max(" + base->describe() + "," + format_double(floor) + ")";
  }
};

struct TransformNode final : Node {
  PositiveSequence base;
  explicit TransformNode(PositiveSequence b) : base(std::move(b)) {}
  double log_at(std::size_t n) const override { return bruno_transform_tight(base, n).log_value; }
  std::optional<std::size_t> length() const override { return base.length(); }
  // sum_{n>N} |log a^pi_n|/2^{n+1} <= (1/2) sum_{j>=0} tail_a(N+j); the series of
  // base tails is summed explicitly and closed with the base tail ratio.
  std::optional<double> log_tail(std::size_t N) const override {
    constexpr std::size_t kTerms = 64;
    double s = 0;
    for (std::size_t j = 0; j < kTerms; ++j) {
      auto t = base.log_tail(N + j);
      if (!t) return std::nullopt;
      s += *t;
    }
    auto last = base.log_tail(N + kTerms);
    auto r = base.tail_ratio(N + kTerms);
    if (!last || !r || *r >= 1) return std::nullopt;
    s += *last / (1 - *r);
    return 0.5 * s;
  }
  std::optional<double> tail_ratio(std::size_t N) const override { return base.tail_ratio(N); }
  nlohmann::json to_json() const override {
    return {{"family", "bruno_transform"}, {"base", base.to_json()}};
  }
  std::string describe() const override { return "pi(" + base.describe() + ")"; }
};

}  // namespace

// ---------------------------------------------------------------------------
// PositiveSequence

PositiveSequence::PositiveSequence() : node_(std::make_shared<ConstantNode>(1.0)) {}

PositiveSequence PositiveSequence::constant(double c) {
  if (!(c > 0) || !std::isfinite(c)) throw InputError("constant sequence needs a positive value");
  return PositiveSequence(std::make_shared<ConstantNode>(c));
}

PositiveSequence PositiveSequence::geometric(double q) {
  if (!(q > 0) || !std::isfinite(q)) throw InputError("geometric sequence needs q > 0");
  return PositiveSequence(std::make_shared<GeometricNode>(q));
}

PositiveSequence PositiveSequence::exp_power(int sign, double alpha) {
  if (sign != 1 && sign != -1) throw InputError("exp_power sign must be +1 or -1");
  if (!(alpha > 0) || !std::isfinite(alpha)) throw InputError("exp_power needs alpha > 0");
  return PositiveSequence(std::make_shared<ExpPowerNode>(sign, alpha));
}

PositiveSequence PositiveSequence::tabulated(std::vector<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0) || !std::isfinite(values[i])) {
      throw InputError("tabulated sequence term " + std::to_string(i) + " is not positive");
    }
  }
  return PositiveSequence(std::make_shared<TableNode>(std::move(values)));
}

PositiveSequence PositiveSequence::tabulated_log(std::vector<double> logs, std::string name) {
  for (std::size_t i = 0; i < logs.size(); ++i) {
    if (!std::isfinite(logs[i])) {
      throw InputError(name + " term " + std::to_string(i) + " has no finite logarithm");
    }
  }
  return PositiveSequence(std::make_shared<LogTableNode>(std::move(logs), std::move(name)));
}

PositiveSequence PositiveSequence::custom(std::string name,
                                          std::function<double(std::size_t)> log_term) {
  return PositiveSequence(std::make_shared<CustomNode>(std::move(name), std::move(log_term)));
}

PositiveSequence PositiveSequence::bruno_transform_of(const PositiveSequence& a) {
  return PositiveSequence(std::make_shared<TransformNode>(a));
}

PositiveSequence PositiveSequence::operator*(const PositiveSequence& other) const {
  return PositiveSequence(std::make_shared<ProductNode>(std::vector<NodePtr>{node_, other.node_}));
}

PositiveSequence PositiveSequence::pow(double p) const {
  if (!std::isfinite(p)) throw InputError("power exponent must be finite");
  return PositiveSequence(std::make_shared<PowerNode>(node_, p));
}

PositiveSequence PositiveSequence::scaled(double c) const {
  if (!(c > 0) || !std::isfinite(c)) throw InputError("scale factor must be positive");
  return PositiveSequence(std::make_shared<ScaledNode>(node_, c));
}

PositiveSequence PositiveSequence::plus(const PositiveSequence& other) const {
  return PositiveSequence(std::make_shared<SumNode>(node_, other.node_));
}

PositiveSequence PositiveSequence::at_least(double c) const {
  if (!(c > 0) || !std::isfinite(c)) throw InputError("floor must be positive");
  return PositiveSequence(std::make_shared<AtLeastNode>(node_, c));
}

double PositiveSequence::log_at(std::size_t n) const { return node_->log_at(n); }
double PositiveSequence::operator()(std::size_t n) const { return std::exp(node_->log_at(n)); }
double PositiveSequence::compare_key(std::size_t n) const { return node_->key(n); }
std::optional<std::size_t> PositiveSequence::length() const { return node_->length(); }
std::optional<double> PositiveSequence::log_tail(std::size_t N) const { return node_->log_tail(N); }
std::optional<double> PositiveSequence::tail_ratio(std::size_t N) const {
  return node_->tail_ratio(N);
}
bool PositiveSequence::diverges() const { return node_->diverges(); }
std::string PositiveSequence::describe() const { return node_->describe(); }
nlohmann::json PositiveSequence::to_json() const { return node_->to_json(); }

PositiveSequence PositiveSequence::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family")) throw InputError("sequence JSON needs a family");
  const std::string family = j.at("family").get<std::string>();
  try {
    if (family == "constant") return constant(j.at("value").get<double>());
    if (family == "geometric") return geometric(j.at("q").get<double>());
    if (family == "exp_power") {
      return exp_power(j.value("sign", 1), j.at("alpha").get<double>());
    }
    if (family == "tabulated") return tabulated(j.at("values").get<std::vector<double>>());
    if (family == "product") {
      const auto& fs = j.at("factors");
      if (!fs.is_array() || fs.empty()) throw InputError("product needs factors");
      PositiveSequence out = from_json(fs.at(0));
      for (std::size_t i = 1; i < fs.size(); ++i) out = out * from_json(fs.at(i));
      return out;
    }
    if (family == "power") return from_json(j.at("base")).pow(j.at("exponent").get<double>());
    if (family == "scaled") return from_json(j.at("base")).scaled(j.at("factor").get<double>());
    if (family == "sum") {
      const auto& ts = j.at("terms");
      return from_json(ts.at(0)).plus(from_json(ts.at(1)));
    }
    if (family == "at_least") return from_json(j.at("base")).at_least(j.at("floor").get<double>());
    if (family == "bruno_transform") return bruno_transform_of(from_json(j.at("base")));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed " + family + " sequence: " + e.what());
  }
  throw InputError("unknown sequence family '" + family + "'");
}

PositiveSequence PositiveSequence::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw InputError("sequence spec '" + spec + "' needs family:value");
  const std::string family = spec.substr(0, colon);
  double v = 0;
  try {
    std::size_t used = 0;
    v = std::stod(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw InputError("sequence spec '" + spec + "' has a malformed number");
  }
  if (family == "geometric") return geometric(v);
  if (family == "constant") return constant(v);
  if (family == "exp_power") return exp_power(v < 0 ? -1 : 1, std::abs(v));
  throw InputError("unknown sequence family '" + family + "'");
}

Monotonicity monotonicity(const PositiveSequence& a, std::size_t window) {
  bool inc = true, dec = true;
  double prev = a.compare_key(0);
  for (std::size_t n = 1; n <= window; ++n) {
    const double cur = a.compare_key(n);
    if (!(cur >= prev)) inc = false;
    if (!(cur <= prev)) dec = false;
    prev = cur;
  }
  if (inc && dec) return Monotonicity::constant;
  if (inc) return Monotonicity::increasing;
  if (dec) return Monotonicity::decreasing;
  return Monotonicity::none;
}

}  // namespace kolmo
