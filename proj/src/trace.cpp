#include "kolmo/trace.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace kolmo {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::json json_number(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

std::string IterationTrace::to_csv() const {
  std::ostringstream out;
  out << "n,s_n,|r_n|,|delta_n|,|u_n|,b_n,sigma_n,checks_passed\n";
  for (const StepRecord& r : steps) {
    out << r.n << ',' << format_double(r.radius) << ',' << format_double(r.remainder) << ','
        << format_double(r.increment) << ',' << format_double(r.field) << ','
        << format_double(r.bound) << ',' << format_double(r.sigma) << ','
        << (r.checks_passed ? "true" : "false") << '\n';
  }
  return out.str();
}

nlohmann::json IterationTrace::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const StepRecord& r : steps) {
    nlohmann::json row = {
        {"n", r.n},
        {"s_n", json_number(r.radius)},
        {"remainder", json_number(r.remainder)},
        {"increment", json_number(r.increment)},
        {"field", json_number(r.field)},
        {"bound", json_number(r.bound)},
        {"sigma", json_number(r.sigma)},
        {"quad_const", json_number(r.quad_const)},
        {"checks_passed", r.checks_passed},
    };
    if (!r.note.empty()) row["note"] = r.note;
    rows.push_back(std::move(row));
  }
  return {
      {"engine", engine},       {"status", status},         {"certified", certified},
      {"messages", messages},   {"provenance", provenance}, {"steps", std::move(rows)},
  };
}

}  // namespace kolmo
