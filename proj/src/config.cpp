// SPDX-License-Identifier: Apache-2.0
#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace mimoep {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
    ++b;
  }
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
    --e;
  }
  return s.substr(b, e - b);
}

double parse_double(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad value for " + key + ": " + text);
  }
  if (used != text.size() || !std::isfinite(v)) {
    throw std::invalid_argument("bad value for " + key + ": " + text);
  }
  return v;
}

long parse_long(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad value for " + key + ": " + text);
  }
  if (used != text.size()) {
    throw std::invalid_argument("bad value for " + key + ": " + text);
  }
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad value for " + key + ": " + text);
  }
  if (used != text.size()) {
    throw std::invalid_argument("bad value for " + key + ": " + text);
  }
  return v;
}

bool parse_on_off(const std::string& text, const std::string& key) {
  if (text == "on" || text == "true" || text == "1") {
    return true;
  }
  if (text == "off" || text == "false" || text == "0") {
    return false;
  }
  throw std::invalid_argument("bad value for " + key + ": " + text +
                              " (expected on|off)");
}

}  // namespace

const char* experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kRreTrace:
      return "rre_trace";
    case ExperimentKind::kSerSweep:
      return "ser_sweep";
    case ExperimentKind::kStepCount:
      return "step_count";
    case ExperimentKind::kCalibrate:
      return "calibrate";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  if (name == "rre_trace" || name == "rre-trace") {
    return ExperimentKind::kRreTrace;
  }
  if (name == "ser_sweep" || name == "ser-sweep") {
    return ExperimentKind::kSerSweep;
  }
  if (name == "step_count" || name == "step-count") {
    return ExperimentKind::kStepCount;
  }
  if (name == "calibrate") {
    return ExperimentKind::kCalibrate;
  }
  throw std::invalid_argument("unknown experiment kind: " + name);
}

ExperimentSpec make_default_spec(ExperimentKind kind) {
  ExperimentSpec spec;
  spec.kind = kind;
  switch (kind) {
    case ExperimentKind::kRreTrace:
      spec.detectors = {"exact", "epa", "gauss_seidel", "cg", "pcg"};
      spec.snr_grid = {19.0};
      spec.scenario.nt = 128;
      spec.scenario.nr = 128;
      spec.n_channels = 1000;
      break;
    case ExperimentKind::kSerSweep:
      spec.detectors = {"lmmse", "ep", "epicg", "epicg-sigma0", "epa"};
      spec.snr_grid = parse_snr_grid("8:1:20");
      spec.n_channels = 5000;
      break;
    case ExperimentKind::kStepCount:
      spec.detectors = {"epicg", "epicg-sigma0"};
      spec.snr_grid = parse_snr_grid("8:1:20");
      spec.n_channels = 5000;
      break;
    case ExperimentKind::kCalibrate:
      spec.detectors = {"epicg"};
      spec.n_channels = 100;  // trajectory count D
      break;
  }
  return spec;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item =
        trim(comma == std::string::npos ? text.substr(start)
                                        : text.substr(start, comma - start));
    if (!item.empty()) {
      items.push_back(item);
    }
    if (comma == std::string::npos) {
      break;
    }
    start = comma + 1;
  }
  return items;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  for (const std::string& item : split_list(text)) {
    values.push_back(parse_double(item, "list entry"));
  }
  return values;
}

std::vector<double> parse_snr_grid(const std::string& text) {
  const std::size_t c1 = text.find(':');
  if (c1 == std::string::npos) {
    return parse_double_list(text);
  }
  const std::size_t c2 = text.find(':', c1 + 1);
  if (c2 == std::string::npos) {
    throw std::invalid_argument("snr grid must be lo:step:hi, got: " + text);
  }
  const double lo = parse_double(trim(text.substr(0, c1)), "snr");
  const double step = parse_double(trim(text.substr(c1 + 1, c2 - c1 - 1)), "snr");
  const double hi = parse_double(trim(text.substr(c2 + 1)), "snr");
  if (!(step > 0.0) || hi < lo) {
    throw std::invalid_argument("snr grid must satisfy lo <= hi, step > 0");
  }
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    const double v = lo + step * i;
    if (v > hi + 1e-9) {
      break;
    }
    grid.push_back(v);
  }
  return grid;
}

void apply_key(ExperimentSpec& spec, const std::string& raw_key,
               const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "kind") {
    spec.kind = parse_experiment_kind(value);
  } else if (key == "nt") {
    spec.scenario.nt = static_cast<int>(parse_long(value, key));
  } else if (key == "nr") {
    spec.scenario.nr = static_cast<int>(parse_long(value, key));
  } else if (key == "mod") {
    spec.scenario.mod_order = static_cast<int>(parse_long(value, key));
  } else if (key == "channel") {
    spec.scenario.channel_kind = parse_channel_kind(value);
  } else if (key == "rho") {
    spec.scenario.rho = parse_double(value, key);
  } else if (key == "snr") {
    spec.snr_grid = parse_snr_grid(value);
  } else if (key == "detectors") {
    spec.detectors = split_list(value);
  } else if (key == "channels") {
    spec.n_channels = parse_long(value, key);
  } else if (key == "seed") {
    spec.scenario.seed = parse_u64(value, key);
  } else if (key == "beta") {
    spec.beta = parse_double(value, key);
  } else if (key == "iters") {
    spec.iters = static_cast<int>(parse_long(value, key));
  } else if (key == "tol-schedule") {
    spec.tol_schedule = parse_double_list(value);
  } else if (key == "calib") {
    spec.calib_path = value;
  } else if (key == "warm-start") {
    spec.warm_start = parse_on_off(value, key);
  } else if (key == "out") {
    spec.out_path = value;
  } else if (key == "jobs") {
    spec.jobs = static_cast<int>(parse_long(value, key));
  } else {
    throw std::invalid_argument("unknown configuration key: " + key);
  }
}

void load_config_file(ExperimentSpec& spec, const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + path);
  }
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') {
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key=value");
    }
    apply_key(spec, stripped.substr(0, eq), stripped.substr(eq + 1));
  }
}

void validate_spec(const ExperimentSpec& spec) {
  const ScenarioConfig& sc = spec.scenario;
  if (sc.nt < 1 || sc.nr < 1) {
    throw std::invalid_argument("nt and nr must be positive");
  }
  if (!(sc.rho >= 0.0 && sc.rho < 1.0)) {
    throw std::invalid_argument("rho must lie in [0, 1)");
  }
  if (spec.n_channels < 1) {
    throw std::invalid_argument("channels must be at least 1");
  }
  if (spec.jobs < 1) {
    throw std::invalid_argument("jobs must be at least 1");
  }
  if (spec.iters < 1) {
    throw std::invalid_argument("iters must be at least 1");
  }
  if (!(spec.beta > 0.0 && spec.beta <= 1.0)) {
    throw std::invalid_argument("beta must lie in (0, 1]");
  }
  for (double tol : spec.tol_schedule) {
    if (!(tol >= 0.0)) {
      throw std::invalid_argument("tolerances must be nonnegative");
    }
  }
  if (spec.kind != ExperimentKind::kCalibrate) {
    if (spec.snr_grid.empty()) {
      throw std::invalid_argument("snr grid must be nonempty");
    }
    for (std::size_t i = 1; i < spec.snr_grid.size(); ++i) {
      if (!(spec.snr_grid[i] > spec.snr_grid[i - 1])) {
        throw std::invalid_argument("snr grid must be strictly increasing");
      }
    }
    if (spec.detectors.empty()) {
      throw std::invalid_argument("detector list must be nonempty");
    }
  }
  if (spec.kind == ExperimentKind::kRreTrace) {
    const std::set<std::string> allowed = {"exact", "epa", "gauss_seidel",
                                           "cg", "pcg"};
    for (const std::string& d : spec.detectors) {
      if (allowed.find(d) == allowed.end()) {
        throw std::invalid_argument("rre_trace solver must be one of "
                                    "exact|epa|gauss_seidel|cg|pcg, got: " +
                                    d);
      }
    }
  }
  if (spec.kind == ExperimentKind::kStepCount) {
    for (const std::string& d : spec.detectors) {
      if (d != "epicg" && d != "epicg-sigma0") {
        throw std::invalid_argument(
            "step_count detectors must be epicg or epicg-sigma0, got: " + d);
      }
    }
  }
  if (spec.kind == ExperimentKind::kCalibrate && spec.n_channels < 2) {
    throw std::invalid_argument("calibrate needs at least 2 trajectories");
  }
}

}  // namespace mimoep
