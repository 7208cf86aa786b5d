#pragma once

// Worked examples run end to end: the Morse lemma, finite determinacy for
// z^k + ..., constant vector fields on the circle, and a quadratic
// Nash-Moser problem with an exact inverse.

#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <string>

#include <json.hpp>

#include "kolmo/iterate.hpp"
#include "kolmo/lie.hpp"

namespace kolmo {

struct DemoReport {
  std::string name;
  IterationTrace trace;
  bool certified = false;
  nlohmann::json summary = nlohmann::json::object();
  std::optional<LieRun> run;
  std::optional<LieSchedule> schedule;
  std::optional<LieCertificate> certificate;
};

struct MorseParams {
  double eps = 1e-3;
  double t = 1;
  std::size_t steps = 8;
  int cap = 64;
  /// degree -> coefficient in units of eps; empty means eps z^3.
  std::map<int, double> perturbation;
  std::size_t window = 40;
  double residual_tol = 1e-8;

  static MorseParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// (E, z^2 + M, g) with M = order >= 3, T = {0}, j(r) = r/(2z) d/dz.
ActionProblem morse_problem(int cap, double t);
DemoReport demo_morse(const MorseParams& p);

struct MatherParams {
  /// Coefficients of f, lowest degree first; default z^3.
  std::vector<double> f = {0, 0, 0, 1};
  /// degree -> coefficient; default 1e-4 z^7.
  std::map<int, double> perturbation = {{7, 1e-4}};
  double t = 0.8;
  std::size_t steps = 6;
  int cap = 64;
  double q = 0.5;
  double residual_tol = 1e-8;

  static MatherParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Per-step spaces M_n = order >= k + 2^{n+1} and
/// j_n(b) = [b / f']_{2^{n+1}+1}^{2^{n+2}+1} d/dz, so kappa_n has order >= k + 2^{n+2}.
ActionProblem mather_problem(const TruncatedSeries& f);
DemoReport demo_mather(const MatherParams& p);

struct CircleParams {
  double omega = std::numbers::phi;
  /// mode -> coefficient of the perturbation; empty means eps (e^{ix} + e^{-ix}).
  std::map<int, double> modes;
  double eps = 1e-3;
  double s0 = 0.5;
  double s_inf = 0.2;
  double q = 0.5;
  std::size_t steps = 8;
  int cap = 32;
  /// Diophantine witness |k omega mod 1| >= C / |k|^nu.
  double C = 1 / (1 + std::numbers::phi);
  double nu = 1;
  double residual_tol = 1e-8;

  static CircleParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Vector fields X(x) d/dx on the circle as Fourier series, f = omega d/dx,
/// T = constant fields with pi = mean, j_n solving the homological equation
/// on modes 0 < |k| <= 2^n.
ActionProblem circle_problem(double omega, int cap, double width);

/// Smallest |k omega mod 1| |k|^nu / C over 0 < |k| <= kmax. Input error
/// naming the offending k when the witness fails (1e-12 relative slack).
double diophantine_gate(double omega, double C, double nu, int kmax);
DemoReport demo_circle(const CircleParams& p);

struct NashMoserQuadraticParams {
  /// Coefficients of y, lowest degree first.
  std::vector<double> y = {0.005, 0.005};
  int cap = 24;
  double M = 1.1;
  double q = 0.5;
  double s0 = 1;
  double s_inf = 0.5;
  std::size_t steps = 6;
  double residual_tol = 1e-10;

  static NashMoserQuadraticParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// f(u) = u + u^2, j(u) = multiplication by 1/(1 + 2u), all exponents zero.
NashMoserProblem quadratic_problem(double M);
DemoReport demo_nashmoser_quadratic(const NashMoserQuadraticParams& p);

/// Dispatch by name: morse, mather, circle, nashmoser_quadratic.
DemoReport run_demo(const std::string& name, const nlohmann::json& config = nlohmann::json::object());

}  // namespace kolmo
