#include "roughflow/harness/config.hpp"

#include "roughflow/errors.hpp"
#include "roughflow/tensor_algebra.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace roughflow::harness {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& want) {
  throw ValidationError("config: " + key + " = '" + value + "' is not " + want);
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || *end != '\0' || errno != 0 || !std::isfinite(v)) bad_value(key, value, "a finite number");
  return v;
}

long long parse_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || *end != '\0' || errno != 0) bad_value(key, value, "an integer");
  return v;
}

int parse_small_int(const std::string& key, const std::string& value) {
  const long long v = parse_int(key, value);
  if (v < -1000000000LL || v > 1000000000LL) bad_value(key, value, "a small integer");
  return static_cast<int>(v);
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
  if (value.empty() || value.front() == '-') bad_value(key, value, "a non-negative integer");
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (*end != '\0' || errno != 0) bad_value(key, value, "a non-negative integer");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "a boolean");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  if (trim(value).empty()) return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + fmt(v[k]);
  return s;
}

struct Key {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::map<std::string, Key>& keys() {
  using C = ExperimentConfig;
  using S = std::string;
  static const std::map<std::string, Key> table = {
      {"seed", {[](C& c, const S& k, const S& v) { c.seed = parse_seed(k, v); },
                [](const C& c) { return std::to_string(c.seed); }}},
      {"d", {[](C& c, const S& k, const S& v) { c.d = parse_small_int(k, v); },
             [](const C& c) { return std::to_string(c.d); }}},
      {"p", {[](C& c, const S& k, const S& v) { c.p = parse_small_int(k, v); },
             [](const C& c) { return std::to_string(c.p); }}},
      {"T", {[](C& c, const S& k, const S& v) { c.T = parse_double(k, v); }, [](const C& c) { return fmt(c.T); }}},
      {"alpha", {[](C& c, const S& k, const S& v) { c.alpha = parse_double(k, v); },
                 [](const C& c) { return fmt(c.alpha); }}},
      {"m_lo", {[](C& c, const S& k, const S& v) { c.m_lo = parse_small_int(k, v); },
                [](const C& c) { return std::to_string(c.m_lo); }}},
      {"m_hi", {[](C& c, const S& k, const S& v) { c.m_hi = parse_small_int(k, v); },
                [](const C& c) { return std::to_string(c.m_hi); }}},
      {"level", {[](C& c, const S& k, const S& v) { c.level = parse_small_int(k, v); },
                 [](const C& c) { return std::to_string(c.level); }}},
      {"brownian_level", {[](C& c, const S& k, const S& v) { c.brownian_level = parse_small_int(k, v); },
                          [](const C& c) { return std::to_string(c.brownian_level); }}},
      {"epsilons", {[](C& c, const S& k, const S& v) { c.epsilons = parse_list(k, v); },
                    [](const C& c) { return fmt_list(c.epsilons); }}},
      {"delta", {[](C& c, const S& k, const S& v) { c.delta = parse_double(k, v); },
                 [](const C& c) { return fmt(c.delta); }}},
      {"samples", {[](C& c, const S& k, const S& v) { c.samples = parse_small_int(k, v); },
                   [](const C& c) { return std::to_string(c.samples); }}},
      {"field", {[](C& c, const S&, const S& v) { c.field = v; }, [](const C& c) { return c.field; }}},
      {"leaf_field", {[](C& c, const S&, const S& v) { c.leaf_field = v; }, [](const C& c) { return c.leaf_field; }}},
      {"transversal",
       {[](C& c, const S&, const S& v) { c.transversal = v; }, [](const C& c) { return c.transversal; }}},
      {"x0", {[](C& c, const S& k, const S& v) { c.x0 = parse_list(k, v); }, [](const C& c) { return fmt_list(c.x0); }}},
      {"y0", {[](C& c, const S& k, const S& v) { c.y0 = parse_list(k, v); }, [](const C& c) { return fmt_list(c.y0); }}},
      {"z0", {[](C& c, const S&, const S& v) { c.z0 = v; }, [](const C& c) { return c.z0; }}},
      {"subdiv", {[](C& c, const S& k, const S& v) { c.subdiv = parse_small_int(k, v); },
                  [](const C& c) { return std::to_string(c.subdiv); }}},
      {"refine", {[](C& c, const S& k, const S& v) { c.refine = parse_bool(k, v); },
                  [](const C& c) { return S(c.refine ? "true" : "false"); }}},
      {"experiment_subdiv", {[](C& c, const S& k, const S& v) { c.experiment_subdiv = parse_small_int(k, v); },
                             [](const C& c) { return std::to_string(c.experiment_subdiv); }}},
      {"grid_points", {[](C& c, const S& k, const S& v) { c.grid_points = parse_small_int(k, v); },
                       [](const C& c) { return std::to_string(c.grid_points); }}},
      {"jacobians", {[](C& c, const S& k, const S& v) { c.jacobians = parse_bool(k, v); },
                     [](const C& c) { return S(c.jacobians ? "true" : "false"); }}},
      {"path_file", {[](C& c, const S&, const S& v) { c.path_file = v; }, [](const C& c) { return c.path_file; }}},
      {"h_file", {[](C& c, const S&, const S& v) { c.h_file = v; }, [](const C& c) { return c.h_file; }}},
      {"out_dir", {[](C& c, const S&, const S& v) { c.out_dir = v; }, [](const C& c) { return c.out_dir; }}},
  };
  return table;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("config: " + what);
}

}  // namespace

void ExperimentConfig::validate() const {
  require(d >= 1 && d <= 8, "d must lie in [1, 8]");
  require(p >= 1 && p <= 8, "p must lie in [1, 8]");
  require(T > 0.0 && T <= 100.0, "T must lie in (0, 100]");
  validate_alpha(alpha);
  require(m_lo >= 0 && m_lo <= m_hi, "need 0 <= m_lo <= m_hi");
  require(m_hi <= 20, "m_hi must be <= 20");
  require(level >= 0 && level <= 20, "level must lie in [0, 20]");
  require(brownian_level <= 24, "brownian_level must be <= 24");
  require(brownian_level >= m_hi + 1 && brownian_level >= level,
          "brownian_level must be >= m_hi + 1 and >= level");
  require(!epsilons.empty(), "epsilons must not be empty");
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    require(epsilons[k] > 0.0, "epsilons must be positive");
    require(k == 0 || epsilons[k] < epsilons[k - 1], "epsilons must be strictly decreasing");
  }
  require(delta > 0.0, "delta must be positive");
  require(samples >= 1 && samples <= 100000, "samples must lie in [1, 100000]");
  require(!field.empty() && !leaf_field.empty(), "field names must not be empty");
  require(transversal == "circle" || transversal == "cantor" || transversal == "finite",
          "transversal must be circle, cantor or finite");
  require(x0.empty() || static_cast<int>(x0.size()) == p, "x0 must have p entries");
  require(y0.empty() || static_cast<int>(y0.size()) == p, "y0 must have p entries");
  require(subdiv >= 1 && subdiv <= (1 << 14), "subdiv must lie in [1, 16384]");
  require(experiment_subdiv >= 1 && experiment_subdiv <= 1024, "experiment_subdiv must lie in [1, 1024]");
  require(grid_points >= 1 && grid_points <= 4096, "grid_points must lie in [1, 4096]");
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  std::map<std::string, std::string> out;
  for (const auto& [name, key] : keys()) {
    if (name != "out_dir") out[name] = key.get(*this);
  }
  return out;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = keys().find(key);
  if (it == keys().end()) throw ValidationError("config: unknown key '" + key + "'");
  it->second.set(cfg, key, value);
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ValidationError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    set_config_value(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw ValidationError("cannot open config file " + filename);
  return parse_config(in);
}

std::string config_schema() {
  const ExperimentConfig defaults;
  std::ostringstream os;
  for (const auto& [name, key] : keys()) os << name << " = " << key.get(defaults) << '\n';
  return os.str();
}

}  // namespace roughflow::harness
