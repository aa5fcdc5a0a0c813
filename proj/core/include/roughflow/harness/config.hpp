#pragma once

// Flat `key = value` experiment configuration. '#' starts a comment; unknown
// or repeated keys are errors.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace roughflow::harness {

struct ExperimentConfig {
  std::uint64_t seed = 42;
  int d = 1;            // driver dimension, 1..8
  int p = 1;            // state dimension, 1..8
  double T = 1.0;       // horizon, (0, 100]
  double alpha = 0.4;   // (1/3, 1/2)
  int m_lo = 6;         // Wong-Zakai levels m_lo..m_hi
  int m_hi = 12;
  int level = 10;       // dyadic level of the driver for lift/solve/flow/foliated-demo
  int brownian_level = 14;  // sampling level M of the Brownian path, >= m_hi and level
  std::vector<double> epsilons{0.4, 0.2, 0.1};  // strictly decreasing, positive
  double delta = 0.5;
  int samples = 400;    // Monte-Carlo seeds, 1..100000
  std::string field = "exponential";
  std::string leaf_field = "bump";
  std::string transversal = "circle";
  std::vector<double> x0;   // empty: ones(p)
  std::vector<double> y0;   // empty: 0.25 e_1
  std::string z0;  // empty: the transversal's base point (bits 0)
  int subdiv = 8;
  bool refine = true;
  int experiment_subdiv = 4;  // fixed subdivision for sweeps (wongzakai, support, ldp)
  int grid_points = 16;
  bool jacobians = false;
  std::string path_file;  // optional driver path CSV (lift, solve, flow)
  std::string h_file;     // optional Cameron-Martin path CSV (support, ldp)
  std::string out_dir = "out";

  /// Throws ValidationError when a value is out of range or inconsistent.
  void validate() const;
  /// Canonical `key = value` listing (out_dir excluded), used in manifests.
  std::map<std::string, std::string> to_map() const;
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig parse_config_file(const std::string& filename);
/// Applies one assignment; used by the parser and by command-line overrides.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
/// Documented keys with their default values, one `key = value` per line.
std::string config_schema();

}  // namespace roughflow::harness
