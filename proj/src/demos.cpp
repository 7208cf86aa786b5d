#include "kolmo/demos.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kolmo/error.hpp"

namespace kolmo {

namespace {

void require_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw InputError(std::string(what) + " config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw InputError(std::string(what) + " config: unknown key '" + key + "'");
  }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config key '") + key + "': " + e.what());
  }
}

std::map<int, double> read_modes(const nlohmann::json& j, const char* key, std::map<int, double> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& m = j.at(key);
  if (!m.is_object()) throw InputError(std::string("config key '") + key + "' must map degrees to numbers");
  std::map<int, double> out;
  for (const auto& [k, v] : m.items()) {
    int d = 0;
    try {
      std::size_t used = 0;
      d = std::stoi(k, &used);
      if (used != k.size()) throw std::invalid_argument(k);
    } catch (const std::exception&) {
      throw InputError(std::string("config key '") + key + "': '" + k + "' is not an integer");
    }
    if (!v.is_number()) throw InputError(std::string("config key '") + key + "': values must be numbers");
    out[d] = v.get<double>();
  }
  return out;
}

nlohmann::json modes_json(const std::map<int, double>& m) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, v] : m) out[std::to_string(k)] = v;
  return out;
}

TruncatedSeries taylor_from(const std::map<int, double>& terms, int cap, double r, double scale = 1) {
  TruncatedSeries g(1, cap, r);
  for (const auto& [d, c] : terms) {
    if (d < 0 || d > cap) throw InputError("perturbation degree " + std::to_string(d) + " outside [0, cap]");
    g.set(d, Complex(c * scale, 0));
  }
  return g;
}

int min_order(std::size_t n, int base, int cap) {
  const double need = base + std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(n, 60)));
  return static_cast<int>(std::min<double>(need, cap + 1));
}

void fill_common(DemoReport& rep, const LieRun& run) {
  nlohmann::json defects = nlohmann::json::array(), norms = nlohmann::json::array();
  for (double v : run.versality_defect) defects.push_back(json_number(v));
  for (const auto& s : run.states) norms.push_back(json_number(s.r_norm));
  rep.summary["remainder_norms"] = norms;
  rep.summary["versality_defect"] = defects;
  rep.summary["residual"] = json_number(run.residual());
  rep.summary["conjugacy_defect"] = json_number(run.versality_defect.empty() ? run.residual() : run.versality_defect.back());
  rep.summary["identity_error"] = json_number(run.identity_error);
  rep.summary["final_radius"] = json_number(run.states.back().radius);
  if (run.product_sigma) rep.summary["product_sigma"] = json_number(*run.product_sigma);
  if (run.product_bound) rep.summary["product_bound"] = json_number(*run.product_bound);
  if (run.product_observed) rep.summary["product_observed"] = json_number(*run.product_observed);
  double cons = 0;
  for (const auto& s : run.states) cons = std::max(cons, s.consistency);
  rep.summary["max_consistency_defect"] = json_number(cons);
}

// The conjugacy defect at the last radius must meet the tolerance; recorded as
// a trace message and folded into the certificate.
bool residual_ok(DemoReport& rep, const LieRun& run, double tol) {
  const double d = run.versality_defect.empty() ? run.residual() : run.versality_defect.back();
  const bool ok = d <= tol && run.trace.status != "domain-error";
  rep.summary["residual_tol"] = tol;
  rep.summary["residual_ok"] = ok;
  if (!ok) rep.trace.messages.push_back("conjugacy defect " + format_double(d) + " above " + format_double(tol));
  return ok;
}

void finish(DemoReport& rep, bool extra_ok) {
  rep.certified = rep.trace.certified && extra_ok;
  if (rep.trace.certified && !extra_ok) {
    rep.trace.certified = false;
    rep.trace.status = "uncertified";
  }
  rep.trace.provenance["demo"] = rep.name;
  rep.trace.provenance["summary"] = rep.summary;
}

}  // namespace

// ---------------------------------------------------------------------------

MorseParams MorseParams::from_json(const nlohmann::json& j) {
  require_keys(j, {"eps", "t", "steps", "cap", "perturbation", "window", "residual_tol"}, "morse");
  MorseParams p;
  read(j, "eps", p.eps);
  read(j, "t", p.t);
  read(j, "steps", p.steps);
  read(j, "cap", p.cap);
  read(j, "window", p.window);
  read(j, "residual_tol", p.residual_tol);
  p.perturbation = read_modes(j, "perturbation", {});
  return p;
}

nlohmann::json MorseParams::to_json() const {
  return {{"eps", eps}, {"t", t}, {"steps", steps}, {"cap", cap},
          {"perturbation", modes_json(perturbation)}, {"window", window}, {"residual_tol", residual_tol}};
}

ActionProblem morse_problem(int cap, double t) {
  if (cap < 4) throw InputError("Morse demo needs cap >= 4");
  ActionProblem p;
  p.name = "morse";
  p.f = TruncatedSeries(1, cap, t);
  p.f.set(2, 1.0);
  p.solve = [](const TruncatedSeries&, const TruncatedSeries& r, std::size_t) {
    return divide_by_coordinate(r, 0, 0.0) * Complex(0.5, 0);
  };
  p.act = [](const TruncatedSeries& a) { return certify_vector_field(a); };
  p.in_M = [](const TruncatedSeries& r, std::size_t) { return order(r, 0.0) >= 3; };
  LieConstants c;
  c.pi = PositiveSequence::constant(1);
  c.j = PositiveSequence::constant(0.5);
  c.kappa = PositiveSequence::constant(1);
  c.kappa_zero = true;
  c.exponents.gamma = 1;
  c.tau0_norm = t * t;
  p.constants = c;
  p.description = {{"f", "z^2"}, {"M", "order >= 3"}, {"T", "{0}"}, {"j", "r -> r/(2z) d/dz"}, {"cap", cap}};
  return p;
}

DemoReport demo_morse(const MorseParams& prm) {
  if (!(prm.t > 0)) throw InputError("Morse demo needs t > 0");
  if (!(prm.eps >= 0)) throw InputError("Morse demo needs eps >= 0");
  DemoReport rep;
  rep.name = "morse";
  const ActionProblem p = morse_problem(prm.cap, prm.t);
  const std::map<int, double> terms = prm.perturbation.empty() ? std::map<int, double>{{3, 1.0}} : prm.perturbation;
  for (const auto& [d, c] : terms)
    if (d < 3) throw InputError("Morse perturbations live in order >= 3; got degree " + std::to_string(d));
  const TruncatedSeries r0 = taylor_from(terms, prm.cap, prm.t, prm.eps);

  LieSchedule sch = rho_schedule(p, PositiveSequence::exp_power(-1, 1.5), prm.t, prm.window);
  LieRunOptions opt;
  opt.steps = prm.steps;
  LieRun run = run_lie(p, r0, sch.radii, opt);
  LieCertificate cert = certify(run, p, sch);

  fill_common(rep, run);
  nlohmann::json orders = nlohmann::json::array(), targets = nlohmann::json::array();
  bool doubling = true;
  for (const auto& s : run.states) {
    const int o = order(s.r, 0.0);
    const int need = min_order(s.n, 2, prm.cap);
    orders.push_back(o);
    targets.push_back(need);
    if (s.r_norm > 0 && o < need) doubling = false;
  }
  rep.summary["orders"] = orders;
  rep.summary["order_targets"] = targets;
  rep.summary["order_doubling"] = doubling;
  rep.summary["epsilon"] = json_number(sch.epsilon);
  rep.summary["m"] = sch.m;
  rep.summary["threshold"] = json_number(sch.threshold);
  rep.summary["params"] = prm.to_json();
  rep.trace = run.trace;
  const bool res = residual_ok(rep, run, prm.residual_tol);
  if (!doubling) rep.trace.messages.push_back("order doubling violated");
  finish(rep, res && doubling);
  rep.run = std::move(run);
  rep.schedule = std::move(sch);
  rep.certificate = std::move(cert);
  return rep;
}

// ---------------------------------------------------------------------------

MatherParams MatherParams::from_json(const nlohmann::json& j) {
  require_keys(j, {"f", "perturbation", "t", "steps", "cap", "q", "residual_tol"}, "mather");
  MatherParams p;
  read(j, "f", p.f);
  p.perturbation = read_modes(j, "perturbation", p.perturbation);
  read(j, "t", p.t);
  read(j, "steps", p.steps);
  read(j, "cap", p.cap);
  read(j, "q", p.q);
  read(j, "residual_tol", p.residual_tol);
  return p;
}

nlohmann::json MatherParams::to_json() const {
  return {{"f", f}, {"perturbation", modes_json(perturbation)}, {"t", t}, {"steps", steps},
          {"cap", cap}, {"q", q}, {"residual_tol", residual_tol}};
}

ActionProblem mather_problem(const TruncatedSeries& f) {
  if (f.basis() != Basis::taylor || f.dim() != 1) throw InputError("Mather demo needs a univariate Taylor f");
  const int k = order(f, 0.0);
  if (k < 2 || k > f.cap()) throw InputError("Mather demo needs f = c z^k + ... with k >= 2 and c != 0");
  const int cap = f.cap();
  // f' / z^{k-1} is a unit.
  TruncatedSeries unit = derivative(f.polynomial_part());
  for (int i = 0; i < k - 1; ++i) unit = divide_by_coordinate(unit, 0, 0.0);
  if (unit.coeff(0) == Complex(0, 0)) throw InputError("f' has a vanishing leading coefficient");

  ActionProblem p;
  p.name = "mather";
  p.f = f;
  p.solve = [k, unit](const TruncatedSeries&, const TruncatedSeries& r, std::size_t n) {
    TruncatedSeries b = r.polynomial_part();
    for (int i = 0; i < k - 1; ++i) b = divide_by_coordinate(b, 0, 0.0);
    const TruncatedSeries q = formal_quotient(b, unit.rebased(b.ref_radius()));
    const int e = static_cast<int>(std::min<std::size_t>(n, 28));
    return cutoff(q, (1 << (e + 1)) + 1, (1 << (e + 2)) + 1);
  };
  p.act = [](const TruncatedSeries& a) { return certify_vector_field(a); };
  p.kappa_order = [k, cap](std::size_t n) { return min_order(n + 2, k, cap); };
  p.in_M = [k, cap](const TruncatedSeries& r, std::size_t n) { return order(r, 0.0) >= min_order(n + 1, k, cap); };
  p.description = {{"f", f.to_json()},
                   {"k", k},
                   {"M_n", "order >= k + 2^(n+1)"},
                   {"T", "{0}"},
                   {"j_n", "b -> [b/f']_{2^(n+1)+1}^{2^(n+2)+1} d/dz"},
                   {"kappa_n", "[b]_{k+2^(n+2)}"}};
  return p;
}

DemoReport demo_mather(const MatherParams& prm) {
  if (prm.f.empty()) throw InputError("Mather demo needs coefficients of f");
  if (!(prm.t > 0)) throw InputError("Mather demo needs t > 0");
  if (static_cast<int>(prm.f.size()) > prm.cap + 1) throw InputError("f has degree above cap");
  DemoReport rep;
  rep.name = "mather";
  std::map<int, double> fterms;
  for (std::size_t i = 0; i < prm.f.size(); ++i)
    if (prm.f[i] != 0) fterms[static_cast<int>(i)] = prm.f[i];
  const TruncatedSeries f = taylor_from(fterms, prm.cap, prm.t);
  const ActionProblem p = mather_problem(f);
  const TruncatedSeries r0 = taylor_from(prm.perturbation, prm.cap, prm.t);
  const int k = order(f, 0.0);
  if (!p.in_M(r0, 0))
    throw InputError("perturbation must have order >= k + 2 = " + std::to_string(k + 2));

  const RadiusSchedule sched = RadiusSchedule::geometric(prm.q, prm.t, 0.5 * prm.t);
  LieRunOptions opt;
  opt.steps = prm.steps;
  LieRun run = run_lie(p, r0, sched, opt);
  LieCertificate cert = certify_structural(run, p);

  fill_common(rep, run);
  nlohmann::json orders = nlohmann::json::array(), targets = nlohmann::json::array();
  for (const auto& s : run.states) {
    orders.push_back(order(s.r, 0.0));
    targets.push_back(min_order(s.n + 1, k, prm.cap));
  }
  rep.summary["k"] = k;
  rep.summary["orders"] = orders;
  rep.summary["membership_targets"] = targets;
  rep.summary["membership"] = cert.membership;
  rep.summary["params"] = prm.to_json();
  rep.trace = run.trace;
  const bool res = residual_ok(rep, run, prm.residual_tol);
  finish(rep, res);
  rep.run = std::move(run);
  rep.certificate = std::move(cert);
  return rep;
}

// ---------------------------------------------------------------------------

CircleParams CircleParams::from_json(const nlohmann::json& j) {
  require_keys(j, {"omega", "modes", "eps", "s0", "s_inf", "q", "steps", "cap", "C", "nu", "residual_tol"},
               "circle");
  CircleParams p;
  read(j, "omega", p.omega);
  p.modes = read_modes(j, "modes", {});
  read(j, "eps", p.eps);
  read(j, "s0", p.s0);
  read(j, "s_inf", p.s_inf);
  read(j, "q", p.q);
  read(j, "steps", p.steps);
  read(j, "cap", p.cap);
  read(j, "C", p.C);
  read(j, "nu", p.nu);
  read(j, "residual_tol", p.residual_tol);
  return p;
}

nlohmann::json CircleParams::to_json() const {
  return {{"omega", omega}, {"modes", modes_json(modes)}, {"eps", eps}, {"s0", s0}, {"s_inf", s_inf},
          {"q", q}, {"steps", steps}, {"cap", cap}, {"C", C}, {"nu", nu}, {"residual_tol", residual_tol}};
}

ActionProblem circle_problem(double omega, int cap, double width) {
  if (!(omega != 0) || !std::isfinite(omega)) throw InputError("circle demo needs a finite nonzero omega");
  ActionProblem p;
  p.name = "circle";
  p.f = TruncatedSeries::fourier(cap, width);
  p.f.set(0, omega);
  p.solve = [](const TruncatedSeries& tau, const TruncatedSeries& r, std::size_t n) {
    const Complex c = tau.at(0);
    if (std::abs(c) == 0) throw DomainError("circle demo: the frequency vanished");
    const int N = static_cast<int>(std::min<double>(std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(n, 60))), r.cap()));
    TruncatedSeries v = TruncatedSeries::fourier(r.cap(), r.ref_radius());
    // -c v' = r on the kept modes.
    for (int k = -N; k <= N; ++k)
      if (k != 0) v.set(k, Complex(0, 1) * r.at(k) / (static_cast<double>(k) * c));
    return v;
  };
  p.act = [](const TruncatedSeries& v) { return certify_ad_vector_field(v); };
  p.project = [](const TruncatedSeries& m, std::size_t) {
    TruncatedSeries d = TruncatedSeries::fourier(m.cap(), m.ref_radius());
    d.set(0, m.at(0));
    if (m.tail() > 0) d.add_tail(m.tail(), 0);
    return d;
  };
  p.description = {{"f", "omega d/dx"}, {"omega", omega}, {"T", "constant fields"}, {"pi", "mean"},
                   {"j_n", "homological solve on 0 < |k| <= 2^n"}, {"kappa_n", "modes |k| > 2^n"}};
  return p;
}

double diophantine_gate(double omega, double C, double nu, int kmax) {
  if (!(C > 0)) throw InputError("Diophantine constant C must be positive");
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= kmax; ++k) {
    const double x = k * omega;
    const double dist = std::abs(x - std::round(x));
    const double need = C / std::pow(k, nu);
    if (dist < need * (1 - 1e-12))
      throw InputError("small divisor bound fails at k = " + std::to_string(k) + ": |k omega mod 1| = " +
                       format_double(dist) + " < " + format_double(need));
    worst = std::min(worst, dist / need);
  }
  return worst;
}

DemoReport demo_circle(const CircleParams& prm) {
  if (!(prm.s0 > prm.s_inf && prm.s_inf > 0)) throw InputError("circle demo needs s0 > s_inf > 0");
  DemoReport rep;
  rep.name = "circle";
  const std::map<int, double> modes =
      prm.modes.empty() ? std::map<int, double>{{-1, prm.eps}, {1, prm.eps}} : prm.modes;
  const int used = static_cast<int>(std::min<double>(
      std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(prm.steps == 0 ? 0 : prm.steps - 1, 60))), prm.cap));
  const double gate = diophantine_gate(prm.omega, prm.C, prm.nu, used);

  const ActionProblem p = circle_problem(prm.omega, prm.cap, prm.s0);
  TruncatedSeries r0 = TruncatedSeries::fourier(prm.cap, prm.s0);
  for (const auto& [k, c] : modes) {
    if (std::abs(k) > prm.cap) throw InputError("perturbation mode beyond cap");
    r0.set(k, c);
  }
  const RadiusSchedule sched = RadiusSchedule::geometric(prm.q, prm.s0, prm.s_inf);
  LieRunOptions opt;
  opt.steps = prm.steps;
  LieRun run = run_lie(p, r0, sched, opt);
  LieCertificate cert = certify_structural(run, p);

  fill_common(rep, run);
  rep.summary["small_divisor_modes"] = used;
  rep.summary["small_divisor_margin"] = json_number(gate);
  const Complex lam = run.states.back().tau.at(0) - Complex(prm.omega, 0);
  rep.summary["frequency_shift"] = {json_number(lam.real()), json_number(lam.imag())};
  rep.summary["params"] = prm.to_json();
  rep.trace = run.trace;
  const bool res = residual_ok(rep, run, prm.residual_tol);
  finish(rep, res);
  rep.run = std::move(run);
  rep.certificate = std::move(cert);
  return rep;
}

// ---------------------------------------------------------------------------

NashMoserQuadraticParams NashMoserQuadraticParams::from_json(const nlohmann::json& j) {
  require_keys(j, {"y", "cap", "M", "q", "s0", "s_inf", "steps", "residual_tol"}, "nashmoser_quadratic");
  NashMoserQuadraticParams p;
  read(j, "y", p.y);
  read(j, "cap", p.cap);
  read(j, "M", p.M);
  read(j, "q", p.q);
  read(j, "s0", p.s0);
  read(j, "s_inf", p.s_inf);
  read(j, "steps", p.steps);
  read(j, "residual_tol", p.residual_tol);
  return p;
}

nlohmann::json NashMoserQuadraticParams::to_json() const {
  return {{"y", y}, {"cap", cap}, {"M", M}, {"q", q}, {"s0", s0},
          {"s_inf", s_inf}, {"steps", steps}, {"residual_tol", residual_tol}};
}

NashMoserProblem quadratic_problem(double M) {
  NashMoserProblem p;
  p.f = [](const TruncatedSeries& u) { return u + multiply(u, u); };
  p.j = [](const TruncatedSeries& u) {
    TruncatedSeries one(u.dim(), u.cap(), u.ref_radius(), u.basis());
    one.set(0, 1.0);
    return certify_multiplication(reciprocal(one + u * Complex(2, 0)));
  };
  p.M = M;
  p.description = {{"f", "u + u^2"}, {"j", "multiplication by 1/(1+2u)"}};
  return p;
}

DemoReport demo_nashmoser_quadratic(const NashMoserQuadraticParams& prm) {
  if (prm.y.empty() || static_cast<int>(prm.y.size()) > prm.cap + 1) throw InputError("y must fit under cap");
  DemoReport rep;
  rep.name = "nashmoser_quadratic";
  std::vector<Complex> yc(prm.y.begin(), prm.y.end());
  const TruncatedSeries y = TruncatedSeries::from_coefficients(yc, prm.s0, prm.cap);
  const TruncatedSeries x0(1, prm.cap, prm.s0);
  NashMoserOptions opt;
  opt.schedule = RadiusSchedule::geometric(prm.q, prm.s0, prm.s_inf);
  opt.steps = prm.steps;
  rep.trace = nash_moser(quadratic_problem(prm.M), x0, y, opt);
  const auto& fr = rep.trace.provenance["final_residual"];
  const double residual = fr.is_number() ? fr.get<double>() : std::numeric_limits<double>::infinity();
  rep.summary["final_residual"] = json_number(residual);
  rep.summary["y_norm"] = json_number(norm(y, prm.s0));
  rep.summary["params"] = prm.to_json();
  const bool ok = residual <= prm.residual_tol;
  rep.summary["residual_ok"] = ok;
  if (!ok) rep.trace.messages.push_back("final residual " + format_double(residual) + " above tolerance");
  finish(rep, ok);
  return rep;
}

DemoReport run_demo(const std::string& name, const nlohmann::json& config) {
  const nlohmann::json cfg = config.is_null() ? nlohmann::json::object() : config;
  if (name == "morse") return demo_morse(MorseParams::from_json(cfg));
  if (name == "mather") return demo_mather(MatherParams::from_json(cfg));
  if (name == "circle") return demo_circle(CircleParams::from_json(cfg));
  if (name == "nashmoser_quadratic") return demo_nashmoser_quadratic(NashMoserQuadraticParams::from_json(cfg));
  throw InputError("unknown demo '" + name + "' (morse, mather, circle, nashmoser_quadratic)");
}

}  // namespace kolmo
