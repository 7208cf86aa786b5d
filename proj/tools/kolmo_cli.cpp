// kolmo: command-line front end.
//
// Exit codes: 0 certified, 2 ran but not certified, 1 input or domain error
// (with a JSON diagnostic on stderr).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kolmo/acceptance.hpp"
#include "kolmo/demos.hpp"
#include "kolmo/error.hpp"
#include "kolmo/iterate.hpp"
#include "kolmo/lie.hpp"
#include "kolmo/sequences.hpp"

using nlohmann::json;
using namespace kolmo;

namespace {

constexpr int kCertified = 0;
constexpr int kFailed = 1;
constexpr int kUncertified = 2;

struct Output {
  std::string csv;
  std::string json_path;
};

void add_output(CLI::App* cmd, Output& out) {
  cmd->add_option("--csv", out.csv, "write the trace as CSV");
  cmd->add_option("--json", out.json_path, "write the full result as JSON");
}

void write_file(const std::string& path, const std::string& text) {
  const auto dir = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!dir.empty()) std::filesystem::create_directories(dir, ec);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path + "'");
  f << text;
}

void line(const std::string& key, const std::string& value) { std::cout << key << " " << value << "\n"; }
void line(const std::string& key, double value) { line(key, format_double(value)); }
void line(const std::string& key, bool value) { line(key, std::string(value ? "true" : "false")); }

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(what + " is not valid JSON: " + e.what());
  }
}

PositiveSequence sequence(const std::string& spec, double scale) {
  PositiveSequence s = PositiveSequence::parse(spec);
  return scale == 1 ? s : s.scaled(scale);
}

// Emits the trace as CSV on stdout (or to --csv) and the JSON document to --json.
int finish_trace(const IterationTrace& tr, const Output& out, json doc = json::object()) {
  if (out.csv.empty()) {
    std::cout << tr.to_csv();
  } else {
    write_file(out.csv, tr.to_csv());
  }
  doc["trace"] = tr.to_json();
  if (!out.json_path.empty()) write_file(out.json_path, doc.dump(1) + "\n");
  for (const auto& m : tr.messages) std::cerr << json{{"message", m}}.dump() << "\n";
  std::cout << "status " << tr.status << "\n";
  return tr.certified ? kCertified : kUncertified;
}

// ---------------------------------------------------------------------------

struct BrunoArgs {
  std::string family = "geometric";
  double q = 2;
  std::string seq;
  std::size_t depth = 40;
  std::size_t n = 0;
  std::optional<std::size_t> tdepth;
  Output out;
};

int bruno_check_cmd(const BrunoArgs& a) {
  const PositiveSequence s = a.seq.empty() ? PositiveSequence::parse(a.family + ":" + format_double(a.q))
                                           : PositiveSequence::parse(a.seq);
  const BrunoCertificate c = bruno_check(s, a.depth);
  line("sequence", s.describe());
  line("depth", std::to_string(c.depth));
  line("partial_sum", c.partial_sum);
  line("tail_bound", c.tail_bound ? format_double(*c.tail_bound) : std::string("unknown"));
  line("monotonicity", to_string(c.monotonicity));
  line("verdict", to_string(c.verdict));
  if (!a.out.json_path.empty()) {
    json doc = {{"sequence", s.to_json()},
                {"depth", c.depth},
                {"partial_sum", json_number(c.partial_sum)},
                {"tail_bound", c.tail_bound ? json_number(*c.tail_bound) : json(nullptr)},
                {"monotonicity", to_string(c.monotonicity)},
                {"verdict", to_string(c.verdict)}};
    write_file(a.out.json_path, doc.dump(1) + "\n");
  }
  return c.verdict == BrunoVerdict::bruno ? kCertified : kUncertified;
}

int bruno_transform_cmd(const BrunoArgs& a) {
  const PositiveSequence s = a.seq.empty() ? PositiveSequence::parse(a.family + ":" + format_double(a.q))
                                           : PositiveSequence::parse(a.seq);
  const TransformValue v = a.tdepth ? bruno_transform(s, a.n, *a.tdepth) : bruno_transform_tight(s, a.n);
  line("sequence", s.describe());
  line("n", std::to_string(a.n));
  line("depth", std::to_string(v.depth));
  line("value", v.value);
  line("lower", v.lower);
  line("upper", v.upper);
  line("log_value", v.log_value);
  line("tail_known", v.tail_known);
  line("hypotheses_ok", v.hypotheses_ok);
  if (!a.out.json_path.empty()) {
    json doc = {{"sequence", s.to_json()},       {"n", a.n},
                {"depth", v.depth},              {"value", json_number(v.value)},
                {"lower", json_number(v.lower)}, {"upper", json_number(v.upper)},
                {"log_value", json_number(v.log_value)},
                {"tail_known", v.tail_known},    {"hypotheses_ok", v.hypotheses_ok}};
    write_file(a.out.json_path, doc.dump(1) + "\n");
  }
  return v.tail_known && v.hypotheses_ok ? kCertified : kUncertified;
}

struct PairArgs {
  std::string a, b;
  double scale_a = 1, scale_b = 1;
  std::size_t window = 40;
  double x0 = 0;
  std::size_t steps = 40;
  Output out;
};

int tame_cmd(const PairArgs& p) {
  const PositiveSequence a = sequence(p.a, p.scale_a), b = sequence(p.b, p.scale_b);
  const TamePairReport r = tame_check(a, b, p.window);
  const TameBrunoCertificate tb = tame_implies_bruno(a, b, p.window);
  line("a", a.describe());
  line("b", b.describe());
  line("window", std::to_string(r.window));
  line("a_at_least_one", r.a_at_least_one);
  line("b_at_most_one", r.b_at_most_one);
  line("b_vanishing", r.b_vanishing);
  line("first_violation", r.first_violation ? std::to_string(*r.first_violation) : std::string("none"));
  line("tame", r.tame());
  line("a_bruno_verdict", to_string(tb.verdict));
  if (!p.out.json_path.empty()) {
    json stars = json::array();
    for (bool s : r.star_holds) stars.push_back(s);
    json doc = {{"a", a.to_json()},
                {"b", b.to_json()},
                {"window", r.window},
                {"star_holds", stars},
                {"a_at_least_one", r.a_at_least_one},
                {"b_at_most_one", r.b_at_most_one},
                {"b_vanishing", r.b_vanishing},
                {"first_violation", r.first_violation ? json(*r.first_violation) : json(nullptr)},
                {"tame", r.tame()},
                {"a_bruno_verdict", to_string(tb.verdict)}};
    write_file(p.out.json_path, doc.dump(1) + "\n");
  }
  return r.tame() ? kCertified : kUncertified;
}

int model_cmd(const PairArgs& p) {
  const PositiveSequence a = sequence(p.a, p.scale_a), b = sequence(p.b, p.scale_b);
  return finish_trace(model_iteration(a, b, p.x0, p.steps), p.out);
}

struct RhoArgs {
  double t = 1;
  std::size_t window = 40;
  std::string b = "exp_power:-1.5";
  int cap = 64;
  Output out;
};

int rho_cmd(const RhoArgs& r) {
  const ActionProblem p = morse_problem(r.cap, r.t);
  const LieSchedule s = rho_schedule(p, PositiveSequence::parse(r.b), r.t, r.window);
  line("K", s.K);
  line("halvings", std::to_string(s.halvings));
  line("window", std::to_string(s.window));
  for (const auto& c : s.conditions)
    line("condition_" + std::to_string(c.id), std::string(c.vacuous ? "vacuous" : c.holds ? "holds" : "fails") +
                                                  " " + c.name);
  line("s_inf", s.radii.limit());
  line("threshold", s.threshold);
  line("passed", s.passed);
  if (!r.out.json_path.empty()) write_file(r.out.json_path, s.to_json().dump(1) + "\n");
  return s.passed ? kCertified : kUncertified;
}

struct NewtonArgs {
  int power = 2;
  double y = 2;
  double x0 = 1.5;
  std::optional<double> m, M;
  std::size_t steps = 8;
  Output out;
};

int newton_cmd(const NewtonArgs& a) {
  if (a.power < 1) throw InputError("--power must be at least 1");
  if (!(a.y > 0)) throw InputError("--y must be positive");
  const int p = a.power;
  const double root = std::pow(a.y, 1.0 / p);
  // Default bounds hold on [root, x0] for x0 >= root, where the iterates stay.
  if ((!a.m || !a.M) && a.x0 < root)
    throw InputError("default m and M need x0 above the root; pass --m and --M");
  const double m = a.m ? *a.m : 1 / (p * std::pow(root, p - 1));
  const double M = a.M ? *a.M : (p < 2 ? 0.0 : p * (p - 1) * std::pow(a.x0, p - 2));
  const IterationTrace tr = newton([p](double x) { return std::pow(x, p); },
                                   [p](double x) { return 1 / (p * std::pow(x, p - 1)); }, a.x0, a.y, m, M, a.steps);
  return finish_trace(tr, a.out);
}

// Demo config: --config FILE, then --set JSON, then the shortcut options.
struct DemoArgs {
  std::string demo;
  std::string config;
  std::string set;
  std::optional<double> eps, t;
  std::optional<std::size_t> steps;
  std::string out_dir = ".";
  Output out;
};

json demo_config(const DemoArgs& a) {
  json cfg = json::object();
  if (!a.config.empty()) cfg = parse_json(read_file(a.config), "config '" + a.config + "'");
  if (!a.set.empty()) {
    const json extra = parse_json(a.set, "--set");
    if (!extra.is_object()) throw InputError("--set must be a JSON object");
    cfg.update(extra);
  }
  if (!cfg.is_object()) throw InputError("config must be a JSON object");
  if (a.eps) cfg["eps"] = *a.eps;
  if (a.t) cfg["t"] = *a.t;
  if (a.steps) cfg["steps"] = *a.steps;
  return cfg;
}

int report_demo(const DemoReport& rep, const Output& out) {
  const std::string csv = rep.trace.to_csv();
  json doc = {{"demo", rep.name}, {"certified", rep.certified}, {"summary", rep.summary}, {"trace", rep.trace.to_json()}};
  if (rep.schedule) doc["schedule"] = rep.schedule->to_json();
  if (rep.certificate) doc["certificate"] = rep.certificate->to_json();
  write_file(out.csv, csv);
  write_file(out.json_path, doc.dump(1) + "\n");
  for (const auto& m : rep.trace.messages) std::cerr << json{{"message", m}}.dump() << "\n";
  line("demo", rep.name);
  line("status", rep.trace.status);
  line("certified", rep.certified);
  for (const char* key : {"residual", "final_residual", "conjugacy_defect"})
    if (rep.summary.contains(key) && rep.summary[key].is_number()) line(key, rep.summary[key].get<double>());
  line("csv", out.csv);
  line("json", out.json_path);
  if (rep.trace.status == "domain-error")
    throw DomainError("run stopped: " + (rep.trace.messages.empty() ? rep.trace.status : rep.trace.messages.front()));
  return rep.certified ? kCertified : kUncertified;
}

int demo_cmd(DemoArgs a) {
  const DemoReport rep = run_demo(a.demo, demo_config(a));
  if (a.out.csv.empty()) a.out.csv = a.out_dir + "/" + a.demo + ".csv";
  if (a.out.json_path.empty()) a.out.json_path = a.out_dir + "/" + a.demo + ".json";
  return report_demo(rep, a.out);
}

struct SweepArgs {
  std::string demo;
  std::string configs;
  int jobs = 1;
};

int sweep_cmd(const SweepArgs& a) {
  const json list = parse_json(read_file(a.configs), "configs '" + a.configs + "'");
  if (!list.is_array()) throw InputError("sweep configs must be a JSON array of objects");
  std::vector<json> rows(list.size());
  const int jobs = std::max(1, a.jobs);
  auto one = [&](std::size_t i) {
    json row = {{"index", i}, {"config", list[i]}};
    try {
      const DemoReport rep = run_demo(a.demo, list[i]);
      row["status"] = rep.trace.status;
      row["certified"] = rep.certified;
      row["summary"] = rep.summary;
    } catch (const std::exception& e) {
      row["status"] = "error";
      row["certified"] = false;
      row["error"] = e.what();
    }
    return row;
  };
  for (std::size_t start = 0; start < list.size(); start += jobs) {
    std::vector<std::future<json>> batch;
    for (std::size_t i = start; i < std::min(list.size(), start + jobs); ++i)
      batch.push_back(std::async(std::launch::async, one, i));
    for (std::size_t k = 0; k < batch.size(); ++k) rows[start + k] = batch[k].get();
  }
  bool all = true, error = false;
  for (const auto& r : rows) {
    std::cout << r.dump() << "\n";
    all = all && r["certified"].get<bool>();
    error = error || r["status"] == "error";
  }
  if (error) return kFailed;
  return all ? kCertified : kUncertified;
}

struct VerifyArgs {
  std::uint64_t seed = kDefaultSeed;
  int jobs = 1;
  std::vector<int> only;
  Output out;
};

int verify_cmd(const VerifyArgs& v) {
  for (int id : v.only)
    if (id < 1 || id > kCriteria) throw InputError("criterion ids are 1..12");
  const auto results = run_acceptance(v.seed, v.jobs, v.only);
  bool all = true;
  json doc = json::array();
  for (const auto& r : results) {
    std::cout << format_result(r) << "\n";
    all = all && r.passed;
    doc.push_back(r.to_json());
  }
  if (!v.out.json_path.empty()) write_file(v.out.json_path, doc.dump(1) + "\n");
  return all ? kCertified : kUncertified;
}

void diagnostic(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified quadratic iterations, Kolmogorov spaces and Lie normal forms"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "kolmo 1.0.0");

  BrunoArgs bruno;
  auto* bruno_cmd = app.add_subcommand("bruno", "Bruno condition and Bruno transform");
  bruno_cmd->require_subcommand(1);
  auto* bcheck = bruno_cmd->add_subcommand("check", "weighted log-sum with a tail bound and a verdict");
  auto* btrans = bruno_cmd->add_subcommand("transform", "value of the Bruno transform at index n");
  for (auto* c : {bcheck, btrans}) {
    c->add_option("--family", bruno.family, "geometric, exp_power or constant")->capture_default_str();
    c->add_option("--q", bruno.q, "family parameter")->capture_default_str();
    c->add_option("--seq", bruno.seq, "family:value, overrides --family/--q");
    add_output(c, bruno.out);
  }
  bcheck->add_option("--depth", bruno.depth, "number of terms")->capture_default_str()->check(CLI::PositiveNumber);
  btrans->add_option("--n", bruno.n, "index")->capture_default_str();
  btrans->add_option("--depth", bruno.tdepth, "fixed depth (default: until the tail is negligible)");

  PairArgs pair;
  auto* tame = app.add_subcommand("tame", "check a_n b_n^2 <= b_{n+1} on a window");
  auto* model = app.add_subcommand("model", "iterate x_{n+1} = a_n x_n^2 against b_n");
  for (auto* c : {tame, model}) {
    c->add_option("--a", pair.a, "sequence a, family:value")->required();
    c->add_option("--b", pair.b, "sequence b, family:value")->required();
    c->add_option("--scale-a", pair.scale_a, "multiply a by this constant")->capture_default_str();
    c->add_option("--scale-b", pair.scale_b, "multiply b by this constant")->capture_default_str();
    add_output(c, pair.out);
  }
  tame->add_option("--window", pair.window)->capture_default_str();
  model->add_option("--x0", pair.x0, "initial value")->required();
  model->add_option("--steps", pair.steps)->capture_default_str();

  RhoArgs rho;
  auto* rho_c = app.add_subcommand("rho", "radius schedule for the Morse constants");
  rho_c->add_option("--t", rho.t, "initial radius")->capture_default_str();
  rho_c->add_option("--window", rho.window)->capture_default_str();
  rho_c->add_option("--b", rho.b, "target sequence b")->capture_default_str();
  rho_c->add_option("--cap", rho.cap, "degree cap")->capture_default_str();
  add_output(rho_c, rho.out);

  NewtonArgs nw;
  auto* newton_c = app.add_subcommand("newton", "Newton iteration for x^p = y");
  newton_c->add_option("--power", nw.power)->capture_default_str();
  newton_c->add_option("--y", nw.y)->capture_default_str();
  newton_c->add_option("--x0", nw.x0)->capture_default_str();
  newton_c->add_option("--m", nw.m, "bound on |1/f'| (default from the root)");
  newton_c->add_option("--M", nw.M, "bound on |f''| (default at x0)");
  newton_c->add_option("--steps", nw.steps)->capture_default_str();
  add_output(newton_c, nw.out);

  DemoArgs nm;
  nm.demo = "nashmoser_quadratic";
  auto* nm_c = app.add_subcommand("nashmoser", "quadratic Nash-Moser demo u + u^2 = y");
  nm_c->add_option("--config", nm.config, "JSON config file");
  nm_c->add_option("--set", nm.set, "inline JSON object merged over the config");
  nm_c->add_option("--steps", nm.steps);
  nm_c->add_option("--out-dir", nm.out_dir)->capture_default_str();
  add_output(nm_c, nm.out);

  DemoArgs lie;
  auto* lie_c = app.add_subcommand("lie", "Lie iteration demos");
  lie_c->add_option("--demo", lie.demo)->required()->check(CLI::IsMember({"morse", "mather", "circle"}));
  lie_c->add_option("--config", lie.config, "JSON config file");
  lie_c->add_option("--set", lie.set, "inline JSON object merged over the config");
  lie_c->add_option("--eps", lie.eps, "perturbation size (morse, circle)");
  lie_c->add_option("--t", lie.t, "initial radius (morse, mather)");
  lie_c->add_option("--steps", lie.steps);
  lie_c->add_option("--out-dir", lie.out_dir)->capture_default_str();
  add_output(lie_c, lie.out);

  SweepArgs sweep;
  auto* sweep_c = app.add_subcommand("sweep", "run one demo over a list of configs");
  sweep_c->add_option("--demo", sweep.demo)
      ->required()
      ->check(CLI::IsMember({"morse", "mather", "circle", "nashmoser_quadratic"}));
  sweep_c->add_option("--configs", sweep.configs, "JSON array of config objects")->required();
  sweep_c->add_option("--jobs", sweep.jobs)->capture_default_str()->check(CLI::PositiveNumber);

  VerifyArgs verify;
  auto* verify_c = app.add_subcommand("verify", "run the acceptance property suite");
  verify_c->add_option("--seed", verify.seed)->capture_default_str();
  verify_c->add_option("--jobs", verify.jobs)->capture_default_str()->check(CLI::PositiveNumber);
  verify_c->add_option("--only", verify.only, "criterion ids")->delimiter(',');
  add_output(verify_c, verify.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    diagnostic("usage", e.what());
    return kFailed;
  }

  try {
    if (bcheck->parsed()) return bruno_check_cmd(bruno);
    if (btrans->parsed()) return bruno_transform_cmd(bruno);
    if (tame->parsed()) return tame_cmd(pair);
    if (model->parsed()) return model_cmd(pair);
    if (rho_c->parsed()) return rho_cmd(rho);
    if (newton_c->parsed()) return newton_cmd(nw);
    if (nm_c->parsed()) return demo_cmd(nm);
    if (lie_c->parsed()) return demo_cmd(lie);
    if (sweep_c->parsed()) return sweep_cmd(sweep);
    if (verify_c->parsed()) return verify_cmd(verify);
  } catch (const InputError& e) {
    diagnostic("input", e.what());
    return kFailed;
  } catch (const DomainError& e) {
    diagnostic("domain", e.what());
    return kFailed;
  } catch (const json::exception& e) {
    diagnostic("input", e.what());
    return kFailed;
  } catch (const std::exception& e) {
    diagnostic("internal", e.what());
    return kFailed;
  }
  return kFailed;
}
