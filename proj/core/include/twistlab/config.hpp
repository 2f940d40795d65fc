#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace twistlab {

// Flat key = value configuration for the experiment driver. Keys use dotted
// prefixes instead of sections so a file round-trips through a plain map.
struct ExperimentConfig {
  std::string experiment = "forward";
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;  // output directory; empty defers to the caller

  // grid
  std::string grid_section = "disk";
  double grid_radius = 1.0;
  double grid_wx = 1.0, grid_wy = 1.0;
  int grid_nx = 16, grid_ny = 16, grid_nz = 64;
  double grid_Lambda = 2.0;

  // reference profile and the twin partner offset
  std::string profile_kind = "bump";
  std::vector<double> profile_params{0.05};
  double profile_ell = 0.5;
  double profile_eps = 1.0;
  std::string perturb_kind = "fourier";
  std::vector<double> perturb_params{0.02, -0.01};

  // time stepping
  double time_T = 1.0;
  double time_dt = 1.0 / 64.0;

  // weights
  std::string weight_mode = "interior";
  double weight_L = 1.0;
  double weight_d3 = 1.0;
  double weight_gamma = 1.0;
  double weight_dtau = 0.0;
  double weight_enlarge = 0.0;

  // s grid
  double sgrid_min = 1.0;
  double sgrid_max = 50.0;
  int sgrid_count = 20;

  // transverse cutoff pair
  double cutoff_cx = 0.0, cutoff_cy = 0.0;
  double cutoff_r_one = 0.1, cutoff_r_zero = 0.25;
  bool cutoff_complement = false;

  // initial state
  std::string init_kind = "plateau";
  std::vector<double> init_params{0.82, 0.95, 0.6, 0.9, 1.0};

  // interior observation window
  double window_cx = 0.0, window_cy = 0.45;
  double window_r = 0.35;

  // reconstruction
  int inverse_segments = 8;
  double inverse_lambda = 1e-8;
  double inverse_floor = 0.01;
  int inverse_max_iter = 20;
  double inverse_fd_step = 1e-5;

  // stability sampling
  std::vector<double> stability_scales{1.0, 0.5, 0.25, 0.125};
  std::vector<double> stability_shape{0.02, -0.01};
  int stability_ensemble = 20;

  bool refine = false;
};

// Parse "key = value" lines; '#' and ';' start comments. Unknown keys and
// malformed values throw with the key named.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_string(const std::string& text);

// Assign one field by its configuration key; throws like parse_config.
void set_config_value(ExperimentConfig& c, const std::string& key,
                      const std::string& value);

// Deterministic serialization (fixed key order, full double precision).
// parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& c);

// Field-level invariants; returns every violation, empty when valid.
std::vector<std::string> validate_config(const ExperimentConfig& c);

// Throws listing all violations.
void require_valid(const ExperimentConfig& c);

// Frozen per-experiment defaults ("forward", "carleman", "lemmas",
// "inverse_interior", "inverse_boundary", "stability").
ExperimentConfig default_config(const std::string& experiment);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace twistlab
