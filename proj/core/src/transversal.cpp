#include "roughflow/transversal.hpp"

#include "roughflow/errors.hpp"
#include "roughflow/rough_lift.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cerrno>
#include <cstdlib>
#include <iomanip>
#include <sstream>

namespace roughflow {

ZPoint Transversal::power(ZPoint z, std::int64_t n) const {
  for (; n > 0; --n) z = forward(z);
  for (; n < 0; ++n) z = backward(z);
  return z;
}

// ---- circle -------------------------------------------------------------------

ZPoint Circle::from_angle(double angle) {
  if (!std::isfinite(angle)) throw ValidationError("Circle: angle must be finite");
  double frac = angle - std::floor(angle);
  if (frac >= 1.0) frac = 0.0;
  // frac has at most 53 significant bits, so the scaling is exact
  return ZPoint{static_cast<std::uint64_t>(std::ldexp(frac, 64))};
}

Circle::Circle(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw ValidationError("Circle: rotation must lie in [0, 1)");
  rho_ = from_angle(rho).bits;
}

double Circle::rho() const { return std::ldexp(static_cast<double>(rho_), -64); }

std::string Circle::description() const {
  std::ostringstream os;
  os << std::setprecision(17) << "circle(rho=" << rho() << ")";
  return os.str();
}

double Circle::distance(ZPoint a, ZPoint b) const {
  const std::uint64_t diff = a.bits - b.bits;
  const std::uint64_t arc = std::min(diff, std::uint64_t{0} - diff);
  return std::ldexp(static_cast<double>(arc), -64);
}

double Circle::coordinate(ZPoint z) const { return std::ldexp(static_cast<double>(z.bits), -64); }

std::string Circle::repr(ZPoint z) const {
  std::ostringstream os;
  os << std::setprecision(17) << coordinate(z);
  return os.str();
}

ZPoint Circle::parse(const std::string& text) const {
  if (!text.empty() && text.front() == '#') {
    const std::string digits = text.substr(1);
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(digits.c_str(), &end, 10);
    if (digits.empty() || *end != '\0' || errno != 0) throw ValidationError("Circle: bad point '" + text + "'");
    return ZPoint{v};
  }
  char* end = nullptr;
  const double angle = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0') throw ValidationError("Circle: bad point '" + text + "'");
  return from_angle(angle);
}

ZPoint Circle::sample(std::uint64_t seed, std::uint64_t index) const {
  return ZPoint{counter_bits(seed, index)};
}

// ---- Cantor set ---------------------------------------------------------------

CantorSet::CantorSet(int depth) : depth_(depth) {
  if (depth < 1 || depth > 64) throw ValidationError("CantorSet: depth must lie in [1, 64]");
  mask_ = depth == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << depth) - 1;
}

std::string CantorSet::description() const { return "cantor(depth=" + std::to_string(depth_) + ")"; }

double CantorSet::distance(ZPoint a, ZPoint b) const {
  const std::uint64_t diff = (a.bits ^ b.bits) & mask_;
  if (diff == 0) return 0.0;
  return std::ldexp(1.0, -std::countr_zero(diff));
}

double CantorSet::coordinate(ZPoint z) const {
  double out = 0.0;
  double scale = 2.0 / 3.0;
  for (int k = 0; k < depth_; ++k) {
    if ((z.bits >> k) & 1U) out += scale;
    scale /= 3.0;
  }
  return out;
}

std::string CantorSet::repr(ZPoint z) const {
  std::string s(static_cast<std::size_t>(depth_), '0');
  for (int k = 0; k < depth_; ++k) {
    if ((z.bits >> k) & 1U) s[static_cast<std::size_t>(k)] = '1';
  }
  return s;
}

ZPoint CantorSet::parse(const std::string& text) const {
  if (text.size() != static_cast<std::size_t>(depth_)) {
    throw ValidationError("CantorSet: expected a bit string of length " + std::to_string(depth_));
  }
  std::uint64_t bits = 0;
  for (int k = 0; k < depth_; ++k) {
    const char c = text[static_cast<std::size_t>(k)];
    if (c != '0' && c != '1') throw ValidationError("CantorSet: bad symbol in '" + text + "'");
    if (c == '1') bits |= std::uint64_t{1} << k;
  }
  return ZPoint{bits};
}

ZPoint CantorSet::sample(std::uint64_t seed, std::uint64_t index) const {
  return ZPoint{counter_bits(seed, index) & mask_};
}

// ---- finite set ---------------------------------------------------------------

namespace {

std::vector<int> cyclic_shift(int n) {
  std::vector<int> p(static_cast<std::size_t>(std::max(n, 0)));
  for (int k = 0; k < n; ++k) p[static_cast<std::size_t>(k)] = (k + 1) % n;
  return p;
}

}  // namespace

FiniteSet::FiniteSet(int n) : FiniteSet(n, cyclic_shift(n)) {}

FiniteSet::FiniteSet(int n, std::vector<int> permutation) : n_(n), perm_(std::move(permutation)) {
  if (n < 1) throw ValidationError("FiniteSet: need at least one point");
  if (perm_.size() != static_cast<std::size_t>(n)) throw ValidationError("FiniteSet: permutation has the wrong size");
  inverse_.assign(perm_.size(), -1);
  for (int k = 0; k < n; ++k) {
    const int image = perm_[static_cast<std::size_t>(k)];
    if (image < 0 || image >= n || inverse_[static_cast<std::size_t>(image)] != -1) {
      throw ValidationError("FiniteSet: map is not a permutation");
    }
    inverse_[static_cast<std::size_t>(image)] = k;
  }
}

std::string FiniteSet::description() const {
  std::ostringstream os;
  os << "finite(n=" << n_ << ", perm=[";
  for (std::size_t k = 0; k < perm_.size(); ++k) os << (k ? " " : "") << perm_[k];
  os << "])";
  return os.str();
}

double FiniteSet::coordinate(ZPoint z) const {
  return n_ == 1 ? 0.0 : static_cast<double>(z.bits) / static_cast<double>(n_ - 1);
}

ZPoint FiniteSet::forward(ZPoint z) const {
  if (!contains(z)) throw ValidationError("FiniteSet: label out of range");
  return ZPoint{static_cast<std::uint64_t>(perm_[z.bits])};
}

ZPoint FiniteSet::backward(ZPoint z) const {
  if (!contains(z)) throw ValidationError("FiniteSet: label out of range");
  return ZPoint{static_cast<std::uint64_t>(inverse_[z.bits])};
}

std::string FiniteSet::repr(ZPoint z) const { return std::to_string(z.bits); }

ZPoint FiniteSet::parse(const std::string& text) const {
  char* end = nullptr;
  const long v = std::strtol(text.c_str(), &end, 10);
  if (text.empty() || *end != '\0' || v < 0 || v >= n_) {
    throw ValidationError("FiniteSet: bad label '" + text + "'");
  }
  return ZPoint{static_cast<std::uint64_t>(v)};
}

ZPoint FiniteSet::sample(std::uint64_t seed, std::uint64_t index) const {
  return ZPoint{counter_bits(seed, index) % static_cast<std::uint64_t>(n_)};
}

std::shared_ptr<const Transversal> make_transversal(const std::string& kind) {
  if (kind == "circle") return std::make_shared<Circle>();
  if (kind == "cantor") return std::make_shared<CantorSet>();
  if (kind == "finite") return std::make_shared<FiniteSet>(5);
  throw ValidationError("unknown transversal kind '" + kind + "' (circle, cantor, finite)");
}

}  // namespace roughflow
