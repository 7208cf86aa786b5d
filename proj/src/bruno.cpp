// Bruno sums and transforms, tame pairs, the model iteration and the rho/sigma
// construction. Companion of sequences.cpp, which holds the sequence families.

#include <algorithm>
#include <cmath>
#include <limits>

#include "kolmo/error.hpp"
#include "kolmo/sequences.hpp"

namespace kolmo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 2^{-e} as a multiplier, exact for the exponents used here.
double half_pow(std::size_t e) { return std::ldexp(1.0, -static_cast<int>(e)); }

void require_evaluable(const PositiveSequence& a, std::size_t last, const char* what) {
  if (auto len = a.length(); len && last >= *len) {
    throw InputError(std::string(what) + ": sequence has " + std::to_string(*len) +
                     " terms, needs index " + std::to_string(last));
  }
}

TransformValue finish_transform(double L, std::optional<double> width, bool hyp,
                                std::size_t depth) {
  TransformValue tv;
  tv.log_value = L;
  tv.depth = depth;
  tv.hypotheses_ok = hyp;
  tv.tail_known = width.has_value();
  if (width) {
    tv.log_lower = L - *width;
    tv.log_upper = hyp ? L : L + *width;
  } else {
    tv.log_lower = -kInf;
    tv.log_upper = hyp ? L : kInf;
  }
  tv.value = std::exp(tv.log_value);
  tv.lower = std::exp(tv.log_lower);
  tv.upper = std::exp(tv.log_upper);
  return tv;
}

}  // namespace

BrunoCertificate bruno_check(const PositiveSequence& a, std::size_t depth) {
  if (depth < 1) throw InputError("bruno_check: depth must be at least 1");
  require_evaluable(a, depth, "bruno_check");
  BrunoCertificate cert;
  cert.depth = depth;
  for (std::size_t k = 0; k <= depth; ++k) {
    const double la = a.log_at(k);
    if (std::isnan(la) || la == -kInf) {
      throw InputError("bruno_check: term " + std::to_string(k) + " is not positive");
    }
    cert.partial_sum += std::abs(la) * half_pow(k + 1);
  }
  cert.tail_bound = a.log_tail(depth);
  cert.monotonicity = monotonicity(a, depth);
  if (a.diverges()) {
    cert.verdict = BrunoVerdict::not_bruno;
  } else if (cert.tail_bound && std::isfinite(cert.partial_sum + *cert.tail_bound)) {
    cert.verdict = BrunoVerdict::bruno;
  } else {
    cert.verdict = BrunoVerdict::inconclusive;
  }
  return cert;
}

TransformValue bruno_transform(const PositiveSequence& a, std::size_t n, std::size_t depth) {
  if (depth < 1) throw InputError("bruno_transform: depth must be at least 1");
  require_evaluable(a, n + depth - 1, "bruno_transform");
  double L = 0;
  bool hyp = true;
  double prev = -kInf;
  for (std::size_t k = 0; k < depth; ++k) {
    const double la = a.log_at(n + k);
    if (!(la >= 0) || !(la >= prev)) hyp = false;
    prev = la;
    L -= la * half_pow(k + 1);
  }
  std::optional<double> width;
  if (auto t = a.log_tail(n + depth - 1)) width = std::ldexp(*t, static_cast<int>(n));
  return finish_transform(L, width, hyp, depth);
}

TransformValue bruno_transform_tight(const PositiveSequence& a, std::size_t n) {
  constexpr std::size_t kMaxDepth = 4096;
  constexpr std::size_t kUntailedDepth = 64;
  std::size_t cap = kMaxDepth;
  if (auto len = a.length()) {
    if (n >= *len) {
      throw InputError("bruno_transform: index " + std::to_string(n) + " beyond table");
    }
    cap = std::min(cap, *len - n);
  } else if (!a.log_tail(n)) {
    cap = kUntailedDepth;
  }
  double L = 0;
  bool hyp = true;
  double prev = -kInf;
  std::size_t depth = 0;
  std::optional<double> width;
  while (depth < cap) {
    const double la = a.log_at(n + depth);
    if (!std::isfinite(la)) break;
    if (!(la >= 0) || !(la >= prev)) hyp = false;
    prev = la;
    L -= la * half_pow(depth + 1);
    ++depth;
    if (auto t = a.log_tail(n + depth - 1)) {
      width = std::ldexp(*t, static_cast<int>(n));
      if (*width <= 1e-16 * std::max(1.0, std::abs(L))) break;
    }
  }
  if (depth == 0) throw InputError("bruno_transform: first term is not finite");
  if (auto t = a.log_tail(n + depth - 1)) {
    width = std::ldexp(*t, static_cast<int>(n));
  } else {
    width.reset();
  }
  return finish_transform(L, width, hyp, depth);
}

TamePairReport tame_check_logs(const std::vector<double>& log_a, const std::vector<double>& log_b) {
  if (log_b.size() != log_a.size() + 1) {
    throw InputError("tame_check: b needs exactly one more term than a");
  }
  TamePairReport rep;
  rep.window = log_a.size();
  rep.star_holds.resize(rep.window);
  for (std::size_t n = 0; n < rep.window; ++n) {
    const bool ok = log_a[n] + 2 * log_b[n] <= log_b[n + 1];
    rep.star_holds[n] = ok;
    if (!ok && !rep.first_violation) rep.first_violation = n;
    if (!(log_a[n] >= 0)) rep.a_at_least_one = false;
  }
  for (double lb : log_b) {
    if (!(lb <= 0)) rep.b_at_most_one = false;
  }
  // Vanishing is only a heuristic on a finite window: the last term is three
  // orders of magnitude below the first and the second half does not increase.
  const std::size_t W = log_b.size() - 1;
  bool tail_falls = true;
  for (std::size_t n = W / 2; n < W; ++n) {
    if (!(log_b[n + 1] <= log_b[n])) tail_falls = false;
  }
  rep.b_vanishing = tail_falls && log_b[W] <= log_b[0] - std::log(1e3);
  rep.bounds_hold = rep.a_at_least_one && rep.b_at_most_one;
  return rep;
}

TamePairReport tame_check(const PositiveSequence& a, const PositiveSequence& b, std::size_t window) {
  if (window < 1) throw InputError("tame_check: window must be at least 1");
  require_evaluable(a, window - 1, "tame_check");
  require_evaluable(b, window, "tame_check");
  std::vector<double> la(window), lb(window + 1);
  for (std::size_t n = 0; n < window; ++n) la[n] = a.log_at(n);
  for (std::size_t n = 0; n <= window; ++n) lb[n] = b.log_at(n);
  return tame_check_logs(la, lb);
}

TameBrunoCertificate tame_implies_bruno(const PositiveSequence& a, const PositiveSequence& b,
                                        std::size_t window) {
  TameBrunoCertificate cert;
  cert.tame = tame_check(a, b, window).tame();
  const double lb0 = b.log_at(0);
  const double scaled_last = std::abs(b.log_at(window)) * half_pow(window);
  cert.log_b_scaled_vanishes = scaled_last <= 1e-6;
  double lhs = 0;
  for (std::size_t M = 1; M <= window; ++M) {
    lhs += a.log_at(M - 1) * half_pow(M);
    const double rhs = b.log_at(M) * half_pow(M) - lb0;
    // The inequality telescopes from (star); the allowance only absorbs the
    // rounding of the running sum.
    const double slack = 1e-12 * (1 + std::abs(lhs) + std::abs(rhs));
    const bool ok = lhs <= rhs + slack;
    cert.lhs.push_back(lhs);
    cert.rhs.push_back(rhs);
    cert.holds.push_back(ok);
    if (!ok && !cert.first_failure) cert.first_failure = M;
  }
  cert.verdict = (cert.tame && cert.log_b_scaled_vanishes && !cert.first_failure)
                     ? BrunoVerdict::bruno
                     : BrunoVerdict::inconclusive;
  return cert;
}

TamingEpsilon taming_epsilon(const PositiveSequence& a, std::size_t depth) {
  const BrunoCertificate cert = bruno_check(a, depth);
  if (cert.verdict != BrunoVerdict::bruno) {
    throw DomainError("taming_epsilon: sequence is not certified Bruno (" +
                      to_string(cert.verdict) + ")");
  }
  TamingEpsilon out;
  out.log_epsilon = kInf;
  for (std::size_t n = 0; n <= depth; ++n) {
    const double lo = 2 * bruno_transform_tight(a, n).log_lower;
    if (lo < out.log_epsilon) {
      out.log_epsilon = lo;
      out.argmin = n;
    }
  }
  out.epsilon = std::exp(out.log_epsilon);
  return out;
}

IterationTrace model_iteration(const PositiveSequence& a, const PositiveSequence& b, double x0,
                               std::size_t steps) {
  if (!(x0 >= 0) || !std::isfinite(x0)) throw InputError("model_iteration: x0 must be >= 0");
  IterationTrace tr;
  tr.engine = "model";
  const std::size_t window = std::max<std::size_t>(steps, 1);
  const TamePairReport tame = tame_check(a, b, window);
  const bool certifiable = tame.tame() && std::log(x0) <= b.log_at(0);
  tr.provenance = {{"a", a.to_json()},
                   {"b", b.to_json()},
                   {"x0", x0},
                   {"steps", steps},
                   {"tame", tame.tame()},
                   {"b_vanishing", tame.b_vanishing},
                   {"x0_le_b0", std::log(x0) <= b.log_at(0)}};
  if (tame.first_violation) {
    tr.provenance["first_star_violation"] = *tame.first_violation;
  }
  constexpr double kLogOverflow = 700;
  double lx = x0 > 0 ? std::log(x0) : -kInf;
  bool violated = false;
  bool diverged = false;
  for (std::size_t n = 0; n <= steps; ++n) {
    const double la = a.log_at(n);
    const double lb = b.log_at(n);
    StepRecord rec;
    rec.n = n;
    rec.remainder = std::exp(lx);
    rec.bound = std::exp(lb);
    rec.quad_const = std::exp(la);
    rec.checks_passed = lx <= lb;
    if (!rec.checks_passed) {
      if (certifiable) {
        violated = true;
        rec.note = "x_n > b_n under a tame pair";
      } else {
        rec.note = "x_n > b_n";
      }
    }
    tr.steps.push_back(rec);
    if (n == steps) break;
    lx = std::log(0.5) + log_add_exp(la + 2 * lx, lb + lx);
    if (lx > kLogOverflow || std::isnan(lx)) {
      diverged = true;
      tr.steps.push_back({.n = n + 1, .remainder = kInf, .note = "overflow"});
      break;
    }
  }
  if (diverged) {
    tr.status = "diverged";
  } else if (!certifiable) {
    tr.status = "uncertified";
  } else if (violated) {
    tr.status = "internal-consistency-failure";
    tr.messages.push_back("x_n exceeded b_n although (a,b) is tame and x0 <= b0");
  } else {
    tr.status = "certified";
    tr.certified = true;
  }
  return tr;
}

LemmaRhoResult lemma_rho(const PositiveSequence& a, const PositiveSequence& aprime,
                         const PositiveSequence& b, double k, double l,
                         const LemmaRhoOptions& opt) {
  if (!(opt.alpha > 1 && opt.alpha < 2)) throw InputError("lemma_rho: alpha must lie in (1,2)");
  if (!(opt.K > 0 && opt.K < 1)) throw InputError("lemma_rho: K must lie in (0,1)");
  if (!(k >= 0 && l >= 0)) throw InputError("lemma_rho: exponents must be nonnegative");
  const std::size_t W = opt.window;
  if (W < 1) throw InputError("lemma_rho: window must be at least 1");
  for (const auto* s : {&a, &aprime}) {
    if (bruno_check(*s, W).verdict == BrunoVerdict::not_bruno) {
      throw InputError("lemma_rho: " + s->describe() + " is not a Bruno sequence");
    }
  }
  if (!tame_check(PositiveSequence::constant(1.0), b, W).tame()) {
    throw InputError("lemma_rho: b is not strict on the window");
  }

  LemmaRhoResult res;
  res.c = PositiveSequence::bruno_transform_of(a * aprime.pow(2));
  std::vector<double> la(W + 1), lap(W + 1), lb(W + 1), lc(W + 1);
  for (std::size_t n = 0; n <= W; ++n) {
    la[n] = a.log_at(n);
    lap[n] = aprime.log_at(n);
    lb[n] = b.log_at(n);
    lc[n] = res.c.log_at(n);
  }

  const int rounds = opt.auto_tune ? opt.max_halvings + 1 : 1;
  for (int h = 0; h < rounds; ++h) {
    const double K = std::ldexp(opt.K, -h);
    std::vector<double> lrho(W + 1), lsig(W + 1), sig(W + 1);
    for (std::size_t n = 0; n <= W; ++n) {
      lrho[n] = std::log(K) + lb[n] + lc[n] - std::pow(opt.alpha, static_cast<double>(n));
      lsig[n] = log1m_exp(lrho[n] * half_pow(n));
      sig[n] = std::exp(lsig[n]);
    }
    std::vector<double> LA(W), LB(W + 1);
    for (std::size_t n = 0; n < W; ++n) LA[n] = la[n] - k * lsig[n];
    for (std::size_t n = 0; n <= W; ++n) LB[n] = lrho[n] + lap[n] - l * lsig[n];
    const TamePairReport tp = tame_check_logs(LA, LB);

    std::vector<std::size_t> f1, f2;
    for (std::size_t n = 0; n < W; ++n) {
      if (!tp.star_holds[n] || !(LA[n] >= 0)) f1.push_back(n);
    }
    for (std::size_t n = 0; n <= W; ++n) {
      if (!(LB[n] <= 0) && (f1.empty() || f1.back() != n)) f1.push_back(n);
      if (!(LB[n] < lb[n])) f2.push_back(n);
    }
    res.K = K;
    res.halvings = h;
    res.log_rho = std::move(lrho);
    res.log_sigma = std::move(lsig);
    res.sigma = std::move(sig);
    res.conclusion1_failures = std::move(f1);
    res.conclusion2_failures = std::move(f2);
    res.passed = res.conclusion1_failures.empty() && res.conclusion2_failures.empty();
    if (res.passed) break;
  }
  res.rho = (b * res.c * PositiveSequence::exp_power(-1, opt.alpha)).scaled(res.K);
  return res;
}

}  // namespace kolmo
