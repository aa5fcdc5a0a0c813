#pragma once

// File formats: rough-path JSON, trajectory CSVs and JSON manifests. Every
// JSON document carries "schema_version"; the schemas live in docs/schemas.

#include "roughflow/rde_solver.hpp"
#include "roughflow/tensor_algebra.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace roughflow::harness {

inline constexpr const char* kSchemaVersion = "1.0.0";

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);
/// 16 lowercase hex digits.
std::string hex64(std::uint64_t v);
/// FNV-1a over alpha, the grid, the cell kinds and the raw bytes of every increment.
std::uint64_t driver_hash(const GridRoughPath& path);

void write_rough_path_json(std::ostream& os, const GridRoughPath& path);
GridRoughPath read_rough_path_json(std::istream& is);

/// CSV `t,x1..xp` followed by `J11..Jpp` (row-major) when the trajectory carries Jacobians.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// JSON object assembled key by key; nested objects via set_object. Output is
/// pretty-printed with sorted keys, so equal content gives equal bytes.
class Manifest {
 public:
  explicit Manifest(const std::string& kind);
  Manifest();  // nested object without kind/schema_version
  ~Manifest();
  Manifest(const Manifest& other);
  Manifest& operator=(const Manifest& other);

  Manifest& set(const std::string& key, const std::string& value);
  Manifest& set(const std::string& key, const char* value);
  Manifest& set(const std::string& key, double value);
  Manifest& set(const std::string& key, std::int64_t value);
  Manifest& set(const std::string& key, int value) { return set(key, static_cast<std::int64_t>(value)); }
  Manifest& set(const std::string& key, std::uint64_t value);
  Manifest& set(const std::string& key, bool value);
  Manifest& set(const std::string& key, const std::vector<double>& values);
  Manifest& set(const std::string& key, const std::vector<std::string>& values);
  Manifest& set(const std::string& key, const std::map<std::string, std::string>& values);
  Manifest& set_object(const std::string& key, const Manifest& value);
  Manifest& append(const std::string& key, const Manifest& value);

  std::string dump() const;
  void write(std::ostream& os) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace roughflow::harness
