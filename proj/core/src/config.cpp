#include "twistlab/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace twistlab {

namespace {

using StrMem = std::string ExperimentConfig::*;
using DblMem = double ExperimentConfig::*;
using IntMem = int ExperimentConfig::*;
using BoolMem = bool ExperimentConfig::*;
using SeedMem = std::uint64_t ExperimentConfig::*;
using VecMem = std::vector<double> ExperimentConfig::*;

struct FieldDef {
  const char* key;
  std::variant<StrMem, DblMem, IntMem, BoolMem, SeedMem, VecMem> mem;
};

const std::vector<FieldDef>& fields() {
  static const std::vector<FieldDef> defs = {
      {"experiment", &ExperimentConfig::experiment},
      {"seed", &ExperimentConfig::seed},
      {"threads", &ExperimentConfig::threads},
      {"out", &ExperimentConfig::out},
      {"grid.section", &ExperimentConfig::grid_section},
      {"grid.radius", &ExperimentConfig::grid_radius},
      {"grid.wx", &ExperimentConfig::grid_wx},
      {"grid.wy", &ExperimentConfig::grid_wy},
      {"grid.nx", &ExperimentConfig::grid_nx},
      {"grid.ny", &ExperimentConfig::grid_ny},
      {"grid.nz", &ExperimentConfig::grid_nz},
      {"grid.Lambda", &ExperimentConfig::grid_Lambda},
      {"profile.kind", &ExperimentConfig::profile_kind},
      {"profile.params", &ExperimentConfig::profile_params},
      {"profile.ell", &ExperimentConfig::profile_ell},
      {"profile.eps", &ExperimentConfig::profile_eps},
      {"perturb.kind", &ExperimentConfig::perturb_kind},
      {"perturb.params", &ExperimentConfig::perturb_params},
      {"time.T", &ExperimentConfig::time_T},
      {"time.dt", &ExperimentConfig::time_dt},
      {"weight.mode", &ExperimentConfig::weight_mode},
      {"weight.L", &ExperimentConfig::weight_L},
      {"weight.d3", &ExperimentConfig::weight_d3},
      {"weight.gamma", &ExperimentConfig::weight_gamma},
      {"weight.dtau", &ExperimentConfig::weight_dtau},
      {"weight.enlarge", &ExperimentConfig::weight_enlarge},
      {"sgrid.min", &ExperimentConfig::sgrid_min},
      {"sgrid.max", &ExperimentConfig::sgrid_max},
      {"sgrid.count", &ExperimentConfig::sgrid_count},
      {"cutoff.cx", &ExperimentConfig::cutoff_cx},
      {"cutoff.cy", &ExperimentConfig::cutoff_cy},
      {"cutoff.r_one", &ExperimentConfig::cutoff_r_one},
      {"cutoff.r_zero", &ExperimentConfig::cutoff_r_zero},
      {"cutoff.complement", &ExperimentConfig::cutoff_complement},
      {"init.kind", &ExperimentConfig::init_kind},
      {"init.params", &ExperimentConfig::init_params},
      {"window.cx", &ExperimentConfig::window_cx},
      {"window.cy", &ExperimentConfig::window_cy},
      {"window.r", &ExperimentConfig::window_r},
      {"inverse.segments", &ExperimentConfig::inverse_segments},
      {"inverse.lambda", &ExperimentConfig::inverse_lambda},
      {"inverse.floor", &ExperimentConfig::inverse_floor},
      {"inverse.max_iter", &ExperimentConfig::inverse_max_iter},
      {"inverse.fd_step", &ExperimentConfig::inverse_fd_step},
      {"stability.scales", &ExperimentConfig::stability_scales},
      {"stability.shape", &ExperimentConfig::stability_shape},
      {"stability.ensemble", &ExperimentConfig::stability_ensemble},
      {"refine", &ExperimentConfig::refine},
  };
  return defs;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw std::invalid_argument("bad numeric value for '" + key + "': " + v);
  return x;
}

long long parse_ll(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw std::invalid_argument("bad integer value for '" + key + "': " + v);
  return x;
}

std::vector<double> parse_vec(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string cur;
  std::istringstream ss(v);
  while (std::getline(ss, cur, ',')) {
    cur = trim(cur);
    if (cur.empty())
      throw std::invalid_argument("empty element in list for '" + key + "'");
    out.push_back(parse_double(key, cur));
  }
  if (out.empty()) throw std::invalid_argument("empty list for '" + key + "'");
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void set_field(ExperimentConfig& c, const FieldDef& f, const std::string& key,
               const std::string& value) {
  std::visit(
      [&](auto mem) {
        using M = std::decay_t<decltype(mem)>;
        if constexpr (std::is_same_v<M, StrMem>) {
          c.*mem = value;
        } else if constexpr (std::is_same_v<M, DblMem>) {
          c.*mem = parse_double(key, value);
        } else if constexpr (std::is_same_v<M, IntMem>) {
          c.*mem = int(parse_ll(key, value));
        } else if constexpr (std::is_same_v<M, BoolMem>) {
          if (value == "true" || value == "1")
            c.*mem = true;
          else if (value == "false" || value == "0")
            c.*mem = false;
          else
            throw std::invalid_argument("bad boolean value for '" + key + "': " + value);
        } else if constexpr (std::is_same_v<M, SeedMem>) {
          c.*mem = std::uint64_t(std::strtoull(value.c_str(), nullptr, 10));
        } else {
          c.*mem = parse_vec(key, value);
        }
      },
      f.mem);
}

std::string get_field(const ExperimentConfig& c, const FieldDef& f) {
  return std::visit(
      [&](auto mem) -> std::string {
        using M = std::decay_t<decltype(mem)>;
        if constexpr (std::is_same_v<M, StrMem>) {
          return c.*mem;
        } else if constexpr (std::is_same_v<M, DblMem>) {
          return fmt(c.*mem);
        } else if constexpr (std::is_same_v<M, IntMem>) {
          return std::to_string(c.*mem);
        } else if constexpr (std::is_same_v<M, BoolMem>) {
          return (c.*mem) ? "true" : "false";
        } else if constexpr (std::is_same_v<M, SeedMem>) {
          return std::to_string(c.*mem);
        } else {
          std::string out;
          for (std::size_t i = 0; i < (c.*mem).size(); ++i) {
            if (i) out += ",";
            out += fmt((c.*mem)[i]);
          }
          return out;
        }
      },
      f.mem);
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("line " + std::to_string(ln) +
                                  " is not a key = value pair: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool found = false;
    for (const auto& f : fields()) {
      if (key == f.key) {
        set_field(c, f, key, value);
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("unknown configuration key '" + key + "'");
  }
  return c;
}

ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream ss(text);
  return parse_config(ss);
}

void set_config_value(ExperimentConfig& c, const std::string& key,
                      const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      set_field(c, f, key, value);
      return;
    }
  }
  throw std::invalid_argument("unknown configuration key '" + key + "'");
}

std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += " = ";
    out += get_field(c, f);
    out += "\n";
  }
  return out;
}

std::vector<std::string> validate_config(const ExperimentConfig& c) {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) bad.push_back(msg);
  };

  check(c.experiment == "forward" || c.experiment == "carleman" ||
            c.experiment == "lemmas" || c.experiment == "inverse_interior" ||
            c.experiment == "inverse_boundary" || c.experiment == "stability",
        "experiment must be one of forward, carleman, lemmas, inverse_interior, "
        "inverse_boundary, stability");
  check(c.threads >= 1, "threads must be at least 1");

  const bool disk = c.grid_section == "disk";
  check(disk || c.grid_section == "rectangle",
        "grid.section must be disk or rectangle");
  if (disk)
    check(c.grid_radius > 0.0, "grid.radius must be positive");
  else
    check(c.grid_wx > 0.0 && c.grid_wy > 0.0, "grid.wx and grid.wy must be positive");
  check(c.grid_nx >= 4 && c.grid_ny >= 4, "grid.nx and grid.ny must be at least 4");
  check(c.grid_nz >= 4, "grid.nz must be at least 4");
  check(c.grid_Lambda > 0.0, "grid.Lambda must be positive");

  auto profile_ok = [](const std::string& k) {
    return k == "zero" || k == "bump" || k == "fourier";
  };
  check(profile_ok(c.profile_kind), "profile.kind must be zero, bump or fourier");
  check(profile_ok(c.perturb_kind), "perturb.kind must be zero, bump or fourier");
  check(!c.profile_params.empty(), "profile.params must not be empty");
  check(!c.perturb_params.empty(), "perturb.params must not be empty");
  check(c.profile_eps > 0.0, "profile.eps must be positive");

  check(c.profile_ell > 0.0, "profile.ell must be positive");
  check(c.profile_ell < c.weight_L, "profile.ell must be smaller than weight.L");
  check(c.weight_L < c.grid_Lambda, "weight.L must be smaller than grid.Lambda");

  check(c.time_T > 0.0, "time.T must be positive");
  check(c.time_dt > 0.0, "time.dt must be positive");
  check(c.time_dt <= c.time_T / 64.0 * (1.0 + 1e-12),
        "time.dt must satisfy dt <= T/64");

  check(c.weight_mode == "interior" || c.weight_mode == "boundary",
        "weight.mode must be interior or boundary");
  check(c.weight_d3 > 0.0, "weight.d3 must be positive");
  check(c.weight_gamma > 0.0, "weight.gamma must be positive");
  check(c.weight_dtau >= 0.0, "weight.dtau must be nonnegative");
  check(c.weight_enlarge >= 0.0, "weight.enlarge must be nonnegative");

  check(c.sgrid_min >= 1.0, "sgrid.min must be at least 1");
  check(c.sgrid_max > c.sgrid_min, "sgrid.max must exceed sgrid.min");
  check(c.sgrid_count >= 4, "sgrid.count must be at least 4");

  if (c.cutoff_complement)
    check(0.0 < c.cutoff_r_zero && c.cutoff_r_zero < c.cutoff_r_one,
          "complement cutoff needs 0 < cutoff.r_zero < cutoff.r_one");
  else
    check(0.0 < c.cutoff_r_one && c.cutoff_r_one < c.cutoff_r_zero,
          "cutoff needs 0 < cutoff.r_one < cutoff.r_zero");

  if (c.init_kind == "plateau" || c.init_kind == "angular_plateau")
    check(c.init_params.size() == 5,
          "init.params needs R_in, R_out, z_in, z_out, amplitude");
  else if (c.init_kind == "eigenmode")
    check(c.init_params.size() == 3, "init.params needs the three mode numbers");
  else
    bad.push_back("init.kind must be plateau, angular_plateau or eigenmode");

  check(c.window_r > 0.0, "window.r must be positive");

  check(c.inverse_segments >= 2, "inverse.segments must be at least 2");
  check(c.inverse_lambda >= 0.0, "inverse.lambda must be nonnegative");
  check(c.inverse_floor >= 0.0, "inverse.floor must be nonnegative");
  check(c.inverse_max_iter >= 1, "inverse.max_iter must be at least 1");
  check(c.inverse_fd_step > 0.0, "inverse.fd_step must be positive");

  check(!c.stability_scales.empty(), "stability.scales must not be empty");
  for (const double s : c.stability_scales)
    if (!(s > 0.0)) {
      bad.push_back("stability.scales must be positive");
      break;
    }
  check(!c.stability_shape.empty(), "stability.shape must not be empty");
  check(c.stability_ensemble >= 0, "stability.ensemble must be nonnegative");

  return bad;
}

void require_valid(const ExperimentConfig& c) {
  const auto bad = validate_config(c);
  if (bad.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& b : bad) msg += "\n  " + b;
  throw std::invalid_argument(msg);
}

ExperimentConfig default_config(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  if (experiment == "forward") {
    return c;  // unit disk defaults
  }
  if (experiment == "carleman") {
    c.grid_radius = 0.4;
    c.grid_nx = c.grid_ny = 16;
    c.grid_nz = 48;
    c.grid_Lambda = 0.8;
    c.profile_ell = 0.2;
    c.profile_params = {0.03};
    c.perturb_params = {0.02, -0.01};
    c.weight_L = 0.4;
    c.weight_d3 = 0.1;
    c.cutoff_r_one = 0.08;
    c.cutoff_r_zero = 0.26;
    c.init_params = {0.28, 0.36, 0.45, 0.7, 1.0};
    c.window_cx = 0.0;
    c.window_cy = 0.0;
    c.window_r = 0.25;
    return c;
  }
  if (experiment == "lemmas") {
    c.weight_mode = "boundary";
    c.weight_dtau = 4.5;
    c.weight_gamma = 0.2;
    c.cutoff_r_one = 0.2;
    c.cutoff_r_zero = 0.6;
    return c;
  }
  if (experiment == "inverse_interior") {
    c.perturb_kind = "bump";
    c.perturb_params = {0.03};
    return c;  // unit disk defaults carry the interior window
  }
  if (experiment == "stability") {
    return c;  // unit disk defaults carry the interior window
  }
  if (experiment == "inverse_boundary") {
    c.grid_nx = c.grid_ny = 17;
    c.grid_nz = 32;
    c.weight_mode = "boundary";
    c.weight_dtau = 4.5;
    c.init_kind = "angular_plateau";
    c.inverse_segments = 8;
    c.inverse_lambda = 1e-6;
    c.inverse_max_iter = 8;
    return c;
  }
  throw std::invalid_argument("unknown experiment '" + experiment + "'");
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

}  // namespace twistlab
