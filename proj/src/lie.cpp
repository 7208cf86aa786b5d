#include "kolmo/lie.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "kolmo/error.hpp"

namespace kolmo {

namespace {

constexpr double kE = std::numbers::e;

TruncatedSeries zero_like(const TruncatedSeries& g, double radius) {
  return TruncatedSeries(g.dim(), g.cap(), radius, g.basis());
}

double max_coeff(const TruncatedSeries& g) {
  double m = 0;
  for (std::size_t p = 0; p < g.size(); ++p) m = std::max(m, std::abs(g.coeff(p)));
  return m;
}

// g viewed at radius s <= its reference radius.
TruncatedSeries at_radius(const TruncatedSeries& g, double s) {
  return g.ref_radius() == s ? g : g.restricted(s);
}

TruncatedSeries borel_term(const BorelKernel& k, const LocalOperator& u, double t, double s,
                           const TruncatedSeries& g, const char* what, std::size_t n) {
  try {
    return borel_apply(k, u, t, s, g);
  } catch (const DomainError& e) {
    throw DomainError("Lie step " + std::to_string(n) + ", " + what + ": " + e.what());
  }
}

}  // namespace

nlohmann::json LieExponents::to_json() const {
  return {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}, {"nu", nu}, {"xi", xi}, {"k", k()}, {"l", l()}};
}

nlohmann::json LieConstants::to_json() const {
  return {{"pi", pi.describe()},       {"j", j.describe()},
          {"kappa", kappa.describe()}, {"kappa_zero", kappa_zero},
          {"exponents", exponents.to_json()}, {"tau0_norm", tau0_norm}};
}

LieState initial_state(const ActionProblem& p, const TruncatedSeries& r0, double t) {
  if (r0.cap() != p.f.cap() || r0.basis() != p.f.basis() || r0.dim() != p.f.dim())
    throw InputError("remainder and f must share cap, basis and dimension");
  if (t > std::min(r0.ref_radius(), p.f.ref_radius()) * (1 + 1e-12))
    throw DomainError("initial radius exceeds the radius of the data");
  LieState st;
  st.n = 0;
  st.radius = t;
  st.tau = at_radius(p.f, t);
  st.r = at_radius(r0, t);
  st.delta = zero_like(r0, t);
  st.field = zero_like(r0, t);
  st.r_norm = norm(st.r, t);
  st.in_M = !p.in_M || p.in_M(st.r, 0);
  return st;
}

LieState lie_step(LieState& st, const ActionProblem& p, const RadiusSchedule& schedule) {
  const std::size_t n = st.n;
  const double s = st.radius;
  const double s1 = schedule.at(n + 1);
  if (!(s1 > 0 && s1 < s)) throw DomainError("Lie step needs a falling radius schedule");
  const double h = 0.25 * (s - s1);
  const double q1 = s - h;

  st.field = p.solve(st.tau, st.r, n);
  const LocalOperator u = p.act(st.field);
  st.u_norm = u.norm_bound();

  TruncatedSeries w;
  try {
    w = u.apply(st.tau, s, q1);
  } catch (const DomainError& e) {
    throw DomainError("Lie step " + std::to_string(n) + ", u_n(tau_n): " + e.what());
  }
  const TruncatedSeries m = st.r.restricted(q1) - w;
  TruncatedSeries dplus = p.project ? at_radius(p.project(m, n), q1) : zero_like(m, q1);
  TruncatedSeries kappa = m - dplus;
  if (p.kappa_order) {
    const int lo = p.kappa_order(n);
    const double scale = std::max(max_coeff(st.r), max_coeff(w));
    double noise = 0;
    for (std::size_t i = 0; i < kappa.size(); ++i) {
      if (kappa.degree(i) >= lo) continue;
      noise = std::max(noise, std::abs(kappa.coeff(i)));
      kappa.coeff(i) = 0;
    }
    if (noise > 1e-12 * scale)
      throw DomainError("Lie step " + std::to_string(n) + ": kappa_n has coefficients below degree " +
                        std::to_string(lo) + " of size " + std::to_string(noise));
    st.kappa_noise = noise;
  }

  const auto* wf = std::get_if<WeightFunction>(&u.weight());
  if (!wf) throw DomainError("Lie step needs a submultiplicative field weight");
  st.borel_ratio = u.borel_constant() / (*wf)(q1, s1);

  TruncatedSeries next = borel_term(BorelKernel::phi(), u, q1, s1, st.tau.restricted(q1), "phi(u_n) tau_n", n);
  if (!dplus.is_zero() || dplus.tail() > 0)
    next += borel_term(BorelKernel::psi(), u, q1, s1, dplus, "psi(u_n) delta_{n+1}", n);
  next += borel_term(BorelKernel::exponential(-1), u, q1, s1, kappa, "e^{-u_n} kappa_n", n);

  LieState out;
  out.n = n + 1;
  out.radius = s1;
  out.delta = dplus.restricted(s1);
  out.tau = st.tau.restricted(s1) + out.delta;
  out.r = next;
  out.field = zero_like(next, s1);
  out.r_norm = norm(out.r, s1);
  out.delta_norm = norm(out.delta, s1);
  out.in_M = !p.in_M || p.in_M(out.r, n + 1);

  // tau_{n+1} + r_{n+1} against e^{-u_n}(tau_n + r_n).
  const TruncatedSeries x = (st.tau + st.r).restricted(q1);
  const TruncatedSeries direct = borel_term(BorelKernel::exponential(-1), u, q1, s1, x, "e^{-u_n} x_n", n);
  st.consistency = max_coeff(direct.rebased(s1) - (out.tau + out.r).rebased(s1));
  return out;
}

// ---------------------------------------------------------------------------

DerivedSequences derived_sequences(const LieConstants& c) {
  const double t0 = c.tau0_norm;
  const PositiveSequence one = PositiveSequence::constant(1);
  DerivedSequences d;
  d.a1 = c.pi * one.plus(c.j).scaled((2 + t0) * (1 + t0));
  d.a2 = c.j.pow(2).scaled(4 * kE * kE * (1 + t0) * (1 + t0));
  d.a3 = (c.j * d.a1).scaled(4 * kE * (1 + t0));
  d.a4 = c.kappa_zero ? one : c.kappa.scaled(4).at_least(1);
  d.k = c.exponents.k();
  d.l = c.exponents.l();
  return d;
}

double LieSchedule::log_sigma_at(std::size_t n) const {
  if (n < log_sigma.size()) return log_sigma[n];
  return log1m_exp(std::ldexp(rho.log_at(n), -static_cast<int>(std::min<std::size_t>(n, 1070))));
}

double LieSchedule::log_rho_at(std::size_t n) const {
  return n < log_rho.size() ? log_rho[n] : rho.log_at(n);
}

nlohmann::json LieSchedule::to_json() const {
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : conditions) {
    conds.push_back({{"id", c.id},
                     {"name", c.name},
                     {"holds", c.holds},
                     {"vacuous", c.vacuous},
                     {"first_failure", c.first_failure ? nlohmann::json(*c.first_failure) : nlohmann::json(nullptr)}});
  }
  nlohmann::json ls = nlohmann::json::array(), lr = nlohmann::json::array();
  for (double v : log_sigma) ls.push_back(json_number(v));
  for (double v : log_rho) lr.push_back(json_number(v));
  return {{"b", b.describe()},
          {"rho", rho.describe()},
          {"K", json_number(K)},
          {"halvings", halvings},
          {"window", window},
          {"k", derived.k},
          {"l", derived.l},
          {"conditions", conds},
          {"passed", passed},
          {"threshold", json_number(threshold)},
          {"epsilon", json_number(epsilon)},
          {"m", m},
          {"radii", radii.to_json()},
          {"log_rho", lr},
          {"log_sigma", ls}};
}

namespace {

struct ConditionEval {
  std::vector<ConditionReport> reports;
  bool ok = true;
};

// Conditions 2-5 of the convergence proof on the window, in log space. Tame
// pairs need a >= 1, so the a-sides are clipped at 1 (taming max(a, 1) tames a).
ConditionEval extra_conditions(const DerivedSequences& d, const LieConstants& c,
                               const std::vector<double>& lr, const std::vector<double>& ls, std::size_t W) {
  ConditionEval ev;
  auto pair = [&](int id, const std::string& name, auto log_a, double rho_power) {
    std::vector<double> A(W), B(W + 1);
    for (std::size_t n = 0; n < W; ++n) A[n] = std::max(0.0, log_a(n));
    for (std::size_t n = 0; n <= W; ++n) B[n] = rho_power * lr[n];
    const TamePairReport rep = tame_check_logs(A, B);
    ConditionReport r;
    r.id = id;
    r.name = name;
    r.holds = rep.tame();
    r.first_failure = rep.first_violation;
    ev.reports.push_back(r);
    ev.ok = ev.ok && r.holds;
  };

  if (c.kappa_zero) {
    ConditionReport r;
    r.id = 2;
    r.name = "(a'''' sigma^-l, rho^1/2) tame";
    r.holds = true;
    r.vacuous = true;
    ev.reports.push_back(r);
  } else {
    pair(2, "(a'''' sigma^-l, rho^1/2) tame", [&](std::size_t n) { return d.a4.log_at(n) - d.l * ls[n]; }, 0.5);
  }
  pair(3, "(4e|j| sigma^-1, rho^1/4) tame",
       [&](std::size_t n) { return std::log(4 * kE) + c.j.log_at(n) - ls[n]; }, 0.25);
  pair(4, "(sigma^-k/2 a', rho^1/4) tame", [&](std::size_t n) { return d.a1.log_at(n) - 0.5 * d.k * ls[n]; },
       0.25);

  ConditionReport r5;
  r5.id = 5;
  r5.name = "rho_n^1/4 < 2^-n";
  r5.holds = true;
  for (std::size_t n = 0; n <= W; ++n) {
    if (!(0.25 * lr[n] < -static_cast<double>(n) * std::numbers::ln2)) {
      r5.holds = false;
      r5.first_failure = n;
      break;
    }
  }
  ev.ok = ev.ok && r5.holds;
  ev.reports.push_back(r5);
  return ev;
}

}  // namespace

LieSchedule rho_schedule(const ActionProblem& p, const PositiveSequence& b, double t, std::size_t window) {
  if (!p.constants) throw InputError("rho_schedule needs the norm sequences |pi|, |j|, |kappa|");
  if (!(t > 0)) throw InputError("initial radius must be positive");
  const LieConstants& c = *p.constants;
  const std::size_t W = window;
  for (const auto* seq : {&c.pi, &c.j, &c.kappa}) {
    if (seq == &c.kappa && c.kappa_zero) continue;
    if (seq->diverges() || bruno_check(*seq, W).verdict == BrunoVerdict::not_bruno)
      throw DomainError("scheduling failure: " + seq->describe() + " is not a Bruno sequence");
  }

  LieSchedule out;
  out.b = b;
  out.window = W;
  out.derived = derived_sequences(c);
  const DerivedSequences& d = out.derived;
  const PositiveSequence A = d.a2.plus(d.a3).scaled(2);
  const PositiveSequence Ap = d.a4.scaled(2);

  LemmaRhoOptions opt;
  opt.window = W;
  LemmaRhoResult first = lemma_rho(A, Ap, b, d.k, d.l, opt);
  std::string binding = "condition 1 (rho lemma)";
  bool found = false;
  for (int h = first.halvings; h <= opt.max_halvings && !found; ++h) {
    LemmaRhoResult res = first;
    if (h != first.halvings) {
      LemmaRhoOptions o = opt;
      o.K = std::ldexp(opt.K, -h);
      o.auto_tune = false;
      res = lemma_rho(A, Ap, b, d.k, d.l, o);
    }
    ConditionReport c1;
    c1.id = 1;
    c1.name = "(2(a''+a''') sigma^-k, 2 rho a'''' sigma^-l) tame";
    c1.holds = res.passed;
    if (!res.conclusion1_failures.empty()) c1.first_failure = res.conclusion1_failures.front();
    else if (!res.conclusion2_failures.empty()) c1.first_failure = res.conclusion2_failures.front();
    ConditionEval ev = extra_conditions(d, c, res.log_rho, res.log_sigma, W);
    out.conditions.clear();
    out.conditions.push_back(c1);
    for (auto& r : ev.reports) out.conditions.push_back(r);
    out.rho = res.rho;
    out.log_rho = res.log_rho;
    out.log_sigma = res.log_sigma;
    out.sigma = res.sigma;
    out.K = res.K;
    out.halvings = h;
    found = c1.holds && ev.ok;
    if (!found) {
      for (const auto& r : out.conditions) {
        if (!r.holds) {
          binding = "condition " + std::to_string(r.id) + " (" + r.name + ")";
          break;
        }
      }
    }
  }
  out.passed = found;
  if (!found) throw DomainError("scheduling failure within 64 halvings; binding " + binding);

  out.radii = RadiusSchedule::rho_driven(out.rho, t);
  // |r_0| <= 2 rho_0 a''''_0 sigma_0^-l makes the model iteration start below
  // its bound; |r_0| <= sigma_0 / (4e|j_0|) is N2 at n = 0.
  const double log_model = std::log(2.0) + out.log_rho[0] + d.a4.log_at(0) - d.l * out.log_sigma[0];
  const double log_n2 = out.log_sigma[0] - std::log(4 * kE) - c.j.log_at(0);
  out.threshold = std::exp(std::min(log_model, log_n2));
  out.m = d.k + d.l;
  out.epsilon = out.threshold / std::pow(t, out.m);
  return out;
}

// ---------------------------------------------------------------------------

double LieRun::residual() const { return states.empty() ? 0 : states.back().r_norm; }

LieRun run_lie(const ActionProblem& p, const TruncatedSeries& r0, const RadiusSchedule& schedule,
               const LieRunOptions& options) {
  LieRun run;
  run.trace.engine = "lie";
  run.trace.provenance["problem"] = p.name;
  run.trace.provenance["description"] = p.description;
  run.trace.provenance["schedule"] = schedule.to_json();
  run.trace.provenance["steps"] = options.steps;
  if (p.constants) run.trace.provenance["constants"] = p.constants->to_json();

  LieState st = initial_state(p, r0, schedule.at(0));
  run.states.push_back(st);
  try {
    for (std::size_t n = 0; n < options.steps; ++n) {
      LieState next = lie_step(run.states.back(), p, schedule);
      run.states.push_back(std::move(next));
    }
    run.trace.status = "completed";
  } catch (const DomainError& e) {
    run.trace.status = "domain-error";
    run.trace.messages.push_back(e.what());
    run.trace.provenance["failing_step"] = run.states.back().n;
  }

  if (options.assemble && run.states.size() > 1) {
    const std::size_t N = run.states.size() - 1;
    std::vector<LocalOperator> us;
    std::vector<double> radii;
    for (std::size_t i = 0; i < N; ++i) {
      us.push_back(p.act(-run.states[i].field));
      radii.push_back(run.states[i].radius);
    }
    radii.push_back(run.states[N].radius);
    try {
      const ExponentialProduct prod = product_of_exponentials(us, radii);
      run.product_sigma = prod.sigma;
      run.product_bound = prod.bound;
      TruncatedSeries G = run.states[0].tau + run.states[0].r;
      TruncatedSeries sum_delta = run.states[0].tau;
      run.versality_defect.push_back(norm(G - sum_delta, radii[0]));
      for (std::size_t i = 0; i < N; ++i) {
        G = exp_apply(prod.us[i], radii[i], radii[i + 1], G);
        sum_delta = sum_delta.restricted(radii[i + 1]) + run.states[i + 1].delta;
        run.versality_defect.push_back(norm(G - sum_delta, radii[i + 1]));
      }
      const TruncatedSeries x0 = run.states[0].tau + run.states[0].r;
      run.product_observed = norm(G - x0.restricted(radii[N]), radii[N]) / norm(x0, radii[0]);
      const LieState& last = run.states.back();
      run.identity_error = max_coeff(G.polynomial_part() - (last.tau + last.r).polynomial_part().rebased(radii[N]));
    } catch (const DomainError& e) {
      run.trace.messages.push_back(std::string("conjugacy assembly: ") + e.what());
    }
  }

  for (std::size_t i = 0; i < run.states.size(); ++i) {
    const LieState& s = run.states[i];
    StepRecord rec;
    rec.n = s.n;
    rec.radius = s.radius;
    rec.remainder = s.r_norm;
    rec.increment = s.delta_norm;
    if (i + 1 < run.states.size()) {
      rec.field = s.u_norm;
      rec.sigma = (s.radius - run.states[i + 1].radius) / s.radius;
    }
    run.trace.steps.push_back(rec);
  }
  nlohmann::json cons = nlohmann::json::array(), defects = nlohmann::json::array();
  for (std::size_t i = 0; i + 1 < run.states.size(); ++i) cons.push_back(json_number(run.states[i].consistency));
  for (double v : run.versality_defect) defects.push_back(json_number(v));
  run.trace.provenance["consistency"] = cons;
  run.trace.provenance["versality_defect"] = defects;
  run.trace.provenance["identity_error"] = json_number(run.identity_error);
  if (run.product_sigma) run.trace.provenance["product_sigma"] = json_number(*run.product_sigma);
  if (run.product_bound) run.trace.provenance["product_bound"] = json_number(*run.product_bound);
  if (run.product_observed) run.trace.provenance["product_observed"] = json_number(*run.product_observed);
  run.trace.provenance["residual"] = json_number(run.residual());
  return run;
}

namespace {

void apply_certificate(LieRun& run, LieCertificate& cert) {
  for (auto& rec : run.trace.steps) rec.checks_passed = true;
  for (const auto& c : cert.checks) {
    if (c.holds) continue;
    for (auto& rec : run.trace.steps) {
      if (rec.n == c.n) {
        rec.checks_passed = false;
        if (!rec.note.empty()) rec.note += "; ";
        rec.note += c.name + " fails";
      }
    }
  }
  const bool ok = cert.all() && run.trace.status == "completed";
  run.trace.certified = ok;
  run.trace.status = run.trace.status == "completed" ? (ok ? "certified" : "uncertified") : run.trace.status;
  run.trace.provenance["certificate"] = cert.to_json();
}

bool holds_le(double lhs, double rhs) { return lhs <= rhs * (1 + 1e-9) || lhs == 0; }

void add_membership(LieCertificate& cert, const LieRun& run) {
  for (const auto& s : run.states) {
    cert.checks.push_back({s.n, "r_n in M_n", s.in_M ? 1.0 : 0.0, 1.0, s.in_M});
    cert.membership = cert.membership && s.in_M;
  }
}

void add_n1(LieCertificate& cert, const LieRun& run) {
  for (std::size_t i = 1; i < run.states.size(); ++i) {
    const double rhs = std::ldexp(1.0, -static_cast<int>(i + 1));
    const bool ok = holds_le(run.states[i].delta_norm, rhs);
    cert.checks.push_back({i, "N1", run.states[i].delta_norm, rhs, ok});
    cert.n1 = cert.n1 && ok;
  }
}

}  // namespace

nlohmann::json LieCertificate::to_json() const {
  nlohmann::json failed = nlohmann::json::array();
  for (const auto& c : checks) {
    if (c.holds) continue;
    failed.push_back({{"n", c.n}, {"check", c.name}, {"lhs", json_number(c.lhs)}, {"rhs", json_number(c.rhs)}});
  }
  return {{"N1", n1},
          {"N2", n2},
          {"master", master},
          {"r_bound", r_bound},
          {"delta_bound", delta_bound},
          {"membership", membership},
          {"hypothesis", hypothesis},
          {"checks", checks.size()},
          {"failed", failed},
          {"all", all()}};
}

LieCertificate certify(LieRun& run, const ActionProblem& p, const LieSchedule& sch) {
  if (!p.constants) throw InputError("certify needs the problem's norm sequences");
  const LieConstants& c = *p.constants;
  const DerivedSequences& d = sch.derived;
  LieCertificate cert;
  const auto& S = run.states;
  cert.hypothesis = S.empty() ? false : S[0].r_norm < sch.threshold;

  add_n1(cert, run);
  add_membership(cert, run);
  for (std::size_t i = 0; i + 1 < S.size(); ++i) {
    const double ls = sch.log_sigma_at(i);
    const double rhs2 = std::exp(ls - std::log(4 * kE) - c.j.log_at(i));
    const bool n2 = holds_le(S[i].r_norm, rhs2);
    cert.checks.push_back({i, "N2", S[i].r_norm, rhs2, n2});
    cert.n2 = cert.n2 && n2;

    const double r = S[i].r_norm;
    double rhs = 0;
    if (r > 0) {
      const double lr = std::log(r);
      const double quad = std::log(d.a2(i) + d.a3(i)) - d.k * ls + 2 * lr;
      const double lin = sch.log_rho_at(i) + d.a4.log_at(i) - d.l * ls + lr;
      rhs = std::exp(log_add_exp(quad, lin));
    }
    const bool mo = holds_le(S[i + 1].r_norm, rhs);
    cert.checks.push_back({i + 1, "master inequality", S[i + 1].r_norm, rhs, mo});
    cert.master = cert.master && mo;
  }
  for (const auto& s : S) {
    const double bn = sch.b(s.n);
    const bool rb = holds_le(s.r_norm, bn);
    const bool db = holds_le(s.delta_norm, bn);
    cert.checks.push_back({s.n, "|r_n| <= b_n", s.r_norm, bn, rb});
    cert.checks.push_back({s.n, "|delta_n| <= b_n", s.delta_norm, bn, db});
    cert.r_bound = cert.r_bound && rb;
    cert.delta_bound = cert.delta_bound && db;
  }
  for (auto& rec : run.trace.steps) rec.bound = sch.b(rec.n);
  run.trace.provenance["rho_schedule"] = sch.to_json();
  if (!cert.hypothesis)
    run.trace.messages.push_back("|r_0| is above the a priori threshold epsilon t^m; the checks are a posteriori");
  apply_certificate(run, cert);
  return cert;
}

LieCertificate certify_structural(LieRun& run, const ActionProblem&) {
  LieCertificate cert;
  add_n1(cert, run);
  add_membership(cert, run);
  const auto& S = run.states;
  for (std::size_t i = 0; i + 1 < S.size(); ++i) {
    // Subnormal norms are below the resolution of the bound arithmetic.
    const bool ok = holds_le(S[i + 1].r_norm, S[i].r_norm) ||
                    S[i + 1].r_norm < std::numeric_limits<double>::min();
    cert.checks.push_back({i + 1, "|r_n+1| <= |r_n|", S[i + 1].r_norm, S[i].r_norm, ok});
    cert.master = cert.master && ok;
  }
  apply_certificate(run, cert);
  return cert;
}

// ---------------------------------------------------------------------------

namespace {

TruncatedSeries random_like(const TruncatedSeries& x, int max_degree, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  TruncatedSeries g = zero_like(x, x.ref_radius());
  for (std::size_t p = 0; p < g.size(); ++p)
    if (g.degree(p) <= max_degree) g.coeff(p) = Complex(U(rng), 0);
  return g;
}

}  // namespace

InvolutiveInverse involutive_quasi_inverse(const LocalOperator& L, const LocalOperator& pi, FieldAction act,
                                           const TruncatedSeries& x, int samples, unsigned seed) {
  std::mt19937_64 rng(seed);
  const int deg = std::min(x.cap(), 8);
  for (int i = 0; i < samples; ++i) {
    const TruncatedSeries y = random_like(x, deg, rng);
    const TruncatedSeries delta = pi.image(random_like(x, deg, rng)).with_cap(x.cap());
    const TruncatedSeries img = act(L.image(y), delta).with_cap(x.cap()).polynomial_part();
    const TruncatedSeries off = img - pi.image(img).with_cap(x.cap()).polynomial_part();
    if (max_coeff(off) > 1e-12 * std::max(1.0, max_coeff(img)))
      throw DomainError("L(y) does not preserve the transversal; witness y = " + y.to_json().dump() +
                        ", delta = " + delta.to_json().dump());
  }
  InvolutiveInverse inv;
  inv.j = [L, act, x](const TruncatedSeries& tau, const TruncatedSeries& r) {
    const TruncatedSeries delta = (tau - x).polynomial_part();
    const TruncatedSeries Lr = L.image(r).with_cap(r.cap());
    return L.image((r - act(Lr, delta).with_cap(r.cap())).polynomial_part()).with_cap(r.cap());
  };
  inv.kappa0 = [L, pi, act, x](const TruncatedSeries& y) {
    const TruncatedSeries d = (y - act(L.image(y).with_cap(y.cap()), x).with_cap(y.cap())).polynomial_part();
    return (d - pi.image(d).with_cap(y.cap())).polynomial_part();
  };
  return inv;
}

IdentityCheck check_involutive_identity(const InvolutiveInverse& inv, const LocalOperator& L,
                                        const LocalOperator& pi, const FieldAction& act,
                                        const TruncatedSeries& x, int samples, int max_degree,
                                        unsigned seed, double tol) {
  std::mt19937_64 rng(seed);
  IdentityCheck out;
  out.holds = true;
  const int D = x.cap();
  for (int i = 0; i < samples; ++i) {
    const TruncatedSeries r = random_like(x, max_degree, rng);
    const TruncatedSeries delta = pi.image(random_like(x, max_degree, rng)).with_cap(D).polynomial_part();
    const TruncatedSeries tau = x.polynomial_part() + delta;
    const TruncatedSeries field = inv.j(tau, r);
    const TruncatedSeries lhs_full = (act(field, tau).with_cap(D) - r).polynomial_part();
    const TruncatedSeries lhs = lhs_full - pi.image(lhs_full).with_cap(D).polynomial_part();
    const TruncatedSeries Lr_delta = act(L.image(r).with_cap(D), delta).with_cap(D).polynomial_part();
    const TruncatedSeries rhs = -inv.kappa0((r - Lr_delta).polynomial_part());
    const double defect = max_coeff(lhs - rhs);
    out.max_defect = std::max(out.max_defect, defect);
    ++out.samples;
  }
  out.holds = out.max_defect <= tol;
  return out;
}

}  // namespace kolmo
