#include "roughflow/harness/serialization.hpp"

#include "roughflow/errors.hpp"

#include <cmath>
#include <cstring>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace roughflow::harness {

using json = nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

namespace {

std::uint64_t hash_double(double v, std::uint64_t h) {
  char buf[sizeof(double)];
  std::memcpy(buf, &v, sizeof v);
  return fnv1a64(std::string_view(buf, sizeof buf), h);
}

// non-finite doubles have no JSON form
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::uint64_t driver_hash(const GridRoughPath& path) {
  std::uint64_t h = fnv1a64("roughflow-driver");
  h = hash_double(path.alpha(), h);
  h = fnv1a64(path.geometric() ? "g" : "n", h);
  for (double t : path.times()) h = hash_double(t, h);
  for (std::size_t k = 0; k < path.num_cells(); ++k) {
    const Increment& c = path.cells()[k];
    h = fnv1a64(path.kinds()[k] == CellKind::linear ? "L" : "A", h);
    for (Eigen::Index i = 0; i < c.level1.size(); ++i) h = hash_double(c.level1[i], h);
    for (Eigen::Index i = 0; i < c.level2.rows(); ++i)
      for (Eigen::Index j = 0; j < c.level2.cols(); ++j) h = hash_double(c.level2(i, j), h);
  }
  return h;
}

void write_rough_path_json(std::ostream& os, const GridRoughPath& path) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "rough_path";
  doc["d"] = path.dim();
  doc["alpha"] = path.alpha();
  doc["geometric"] = path.geometric();
  doc["times"] = path.times();
  json cells = json::array();
  for (std::size_t k = 0; k < path.num_cells(); ++k) {
    const Increment& c = path.cells()[k];
    json cell;
    cell["kind"] = path.kinds()[k] == CellKind::linear ? "linear" : "atomic";
    cell["level1"] = std::vector<double>(c.level1.data(), c.level1.data() + c.level1.size());
    json rows = json::array();
    for (Eigen::Index i = 0; i < c.level2.rows(); ++i) {
      std::vector<double> row;
      for (Eigen::Index j = 0; j < c.level2.cols(); ++j) row.push_back(c.level2(i, j));
      rows.push_back(row);
    }
    cell["level2"] = rows;
    cells.push_back(cell);
  }
  doc["cells"] = cells;
  doc["hash"] = hex64(driver_hash(path));
  os << doc.dump(1) << '\n';
}

GridRoughPath read_rough_path_json(std::istream& is) {
  json doc;
  try {
    is >> doc;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("rough path JSON: ") + e.what());
  }
  try {
    if (doc.at("schema_version").get<std::string>() != kSchemaVersion) {
      throw ValidationError("rough path JSON: unsupported schema_version");
    }
    const auto d = doc.at("d").get<Eigen::Index>();
    const auto times = doc.at("times").get<std::vector<double>>();
    std::vector<Increment> cells;
    std::vector<CellKind> kinds;
    const auto& jcells = doc.at("cells");
    if (jcells.size() + 1 != times.size()) throw ValidationError("rough path JSON: need one cell per grid interval");
    for (std::size_t k = 0; k < jcells.size(); ++k) {
      const auto& jc = jcells[k];
      const auto kind = jc.at("kind").get<std::string>();
      if (kind != "linear" && kind != "atomic") throw ValidationError("rough path JSON: bad cell kind");
      kinds.push_back(kind == "linear" ? CellKind::linear : CellKind::atomic);
      const auto l1 = jc.at("level1").get<std::vector<double>>();
      const auto l2 = jc.at("level2").get<std::vector<std::vector<double>>>();
      if (static_cast<Eigen::Index>(l1.size()) != d || static_cast<Eigen::Index>(l2.size()) != d) {
        throw ValidationError("rough path JSON: cell has the wrong dimension");
      }
      Increment inc = Increment::zero(d, times[k + 1] - times[k]);
      for (Eigen::Index i = 0; i < d; ++i) {
        inc.level1[i] = l1[static_cast<std::size_t>(i)];
        const auto& row = l2[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != d) throw ValidationError("rough path JSON: bad level2 row");
        for (Eigen::Index j = 0; j < d; ++j) inc.level2(i, j) = row[static_cast<std::size_t>(j)];
      }
      cells.push_back(std::move(inc));
    }
    return GridRoughPath(times, std::move(cells), std::move(kinds), doc.at("alpha").get<double>(),
                         doc.at("geometric").get<bool>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("rough path JSON: ") + e.what());
  }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  if (traj.states.empty()) throw ValidationError("write_trajectory_csv: empty trajectory");
  const Eigen::Index p = traj.states.front().size();
  const bool jac = !traj.j1.empty();
  os << 't';
  for (Eigen::Index i = 0; i < p; ++i) os << ",x" << (i + 1);
  if (jac) {
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = 0; b < p; ++b) os << ",J" << (a + 1) << (b + 1);
  }
  os << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << traj.times[k];
    for (Eigen::Index i = 0; i < p; ++i) os << ',' << traj.states[k][i];
    if (jac) {
      for (Eigen::Index a = 0; a < p; ++a)
        for (Eigen::Index b = 0; b < p; ++b) os << ',' << traj.j1[k](a, b);
    }
    os << '\n';
  }
}

// ---- manifest -----------------------------------------------------------------

struct Manifest::Impl {
  json doc = json::object();
};

Manifest::Manifest() : impl_(std::make_unique<Impl>()) {}

Manifest::Manifest(const std::string& kind) : Manifest() {
  impl_->doc["schema_version"] = kSchemaVersion;
  impl_->doc["kind"] = kind;
}

Manifest::~Manifest() = default;
Manifest::Manifest(const Manifest& other) : impl_(std::make_unique<Impl>(*other.impl_)) {}
Manifest& Manifest::operator=(const Manifest& other) {
  if (this != &other) *impl_ = *other.impl_;
  return *this;
}

Manifest& Manifest::set(const std::string& key, const std::string& value) {
  impl_->doc[key] = value;
  return *this;
}
Manifest& Manifest::set(const std::string& key, const char* value) { return set(key, std::string(value)); }
Manifest& Manifest::set(const std::string& key, double value) {
  impl_->doc[key] = number(value);
  return *this;
}
Manifest& Manifest::set(const std::string& key, std::int64_t value) {
  impl_->doc[key] = value;
  return *this;
}
Manifest& Manifest::set(const std::string& key, std::uint64_t value) {
  impl_->doc[key] = value;
  return *this;
}
Manifest& Manifest::set(const std::string& key, bool value) {
  impl_->doc[key] = value;
  return *this;
}
Manifest& Manifest::set(const std::string& key, const std::vector<double>& values) {
  json arr = json::array();
  for (double v : values) arr.push_back(number(v));
  impl_->doc[key] = arr;
  return *this;
}
Manifest& Manifest::set(const std::string& key, const std::vector<std::string>& values) {
  impl_->doc[key] = values;
  return *this;
}
Manifest& Manifest::set(const std::string& key, const std::map<std::string, std::string>& values) {
  impl_->doc[key] = values;
  return *this;
}
Manifest& Manifest::set_object(const std::string& key, const Manifest& value) {
  impl_->doc[key] = value.impl_->doc;
  return *this;
}
Manifest& Manifest::append(const std::string& key, const Manifest& value) {
  auto& arr = impl_->doc[key];
  if (arr.is_null()) arr = json::array();
  arr.push_back(value.impl_->doc);
  return *this;
}

std::string Manifest::dump() const { return impl_->doc.dump(2) + "\n"; }

void Manifest::write(std::ostream& os) const { os << dump(); }

}  // namespace roughflow::harness
