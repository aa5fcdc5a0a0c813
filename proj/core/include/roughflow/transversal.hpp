#pragma once

// Transversal spaces Z for mapping tori, each paired with an exactly invertible
// homeomorphism F. Points are stored as 64-bit words so that F and F^-1 are
// integer operations and never drift.

#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace roughflow {

/// A point of a transversal. Its meaning depends on the space: a fixed-point
/// angle for the circle, a bit string for the Cantor set, a label for a finite set.
struct ZPoint {
  std::uint64_t bits = 0;
  friend auto operator<=>(const ZPoint&, const ZPoint&) = default;
};

class Transversal {
 public:
  virtual ~Transversal() = default;

  /// "circle", "cantor" or "finite".
  virtual std::string kind() const = 0;
  /// Human-readable parameters, e.g. "circle(rho=0.618...)".
  virtual std::string description() const = 0;

  virtual double distance(ZPoint a, ZPoint b) const = 0;
  /// Continuous embedding of Z into [0, 1]; field families depend on z through it.
  virtual double coordinate(ZPoint z) const = 0;

  virtual ZPoint forward(ZPoint z) const = 0;   // F
  virtual ZPoint backward(ZPoint z) const = 0;  // F^-1
  /// F^n for any integer n.
  ZPoint power(ZPoint z, std::int64_t n) const;

  /// Text form used in CSV exports, and its inverse. parse throws ValidationError.
  /// Circle::repr is the angle (17 digits); Circle::parse also takes "#<64-bit integer>" for exact input.
  virtual std::string repr(ZPoint z) const = 0;
  virtual ZPoint parse(const std::string& text) const = 0;

  /// Deterministic random point, a pure function of (seed, index).
  virtual ZPoint sample(std::uint64_t seed, std::uint64_t index) const = 0;
  /// True when z is a valid point of this space.
  virtual bool contains(ZPoint z) const = 0;
};

/// R/Z with the arc-length metric. z.bits / 2^64 is the angle; F is rotation by rho.
class Circle final : public Transversal {
 public:
  /// rho in [0, 1); the default is the fractional part of the golden ratio.
  explicit Circle(double rho = 0.6180339887498949);

  std::string kind() const override { return "circle"; }
  std::string description() const override;
  double distance(ZPoint a, ZPoint b) const override;
  double coordinate(ZPoint z) const override;
  ZPoint forward(ZPoint z) const override { return ZPoint{z.bits + rho_}; }
  ZPoint backward(ZPoint z) const override { return ZPoint{z.bits - rho_}; }
  std::string repr(ZPoint z) const override;
  ZPoint parse(const std::string& text) const override;
  ZPoint sample(std::uint64_t seed, std::uint64_t index) const override;
  bool contains(ZPoint) const override { return true; }

  static ZPoint from_angle(double angle);
  double rho() const;

 private:
  std::uint64_t rho_;
};

/// {0,1}^D truncated to depth D <= 64. Bit k of z is the symbol at position k.
/// d(z, z') = 2^-(length of common prefix), F is the odometer (add one with carry).
class CantorSet final : public Transversal {
 public:
  explicit CantorSet(int depth = 24);

  std::string kind() const override { return "cantor"; }
  std::string description() const override;
  double distance(ZPoint a, ZPoint b) const override;
  /// sum_k 2 s_k 3^-(k+1), the middle-thirds embedding.
  double coordinate(ZPoint z) const override;
  ZPoint forward(ZPoint z) const override { return ZPoint{(z.bits + 1) & mask_}; }
  ZPoint backward(ZPoint z) const override { return ZPoint{(z.bits - 1) & mask_}; }
  std::string repr(ZPoint z) const override;
  ZPoint parse(const std::string& text) const override;
  ZPoint sample(std::uint64_t seed, std::uint64_t index) const override;
  bool contains(ZPoint z) const override { return (z.bits & ~mask_) == 0; }

  int depth() const { return depth_; }

 private:
  int depth_;
  std::uint64_t mask_;
};

/// {0, ..., n-1} with the discrete metric; F is a permutation.
class FiniteSet final : public Transversal {
 public:
  /// Cyclic shift k -> k + 1 mod n.
  explicit FiniteSet(int n);
  FiniteSet(int n, std::vector<int> permutation);

  std::string kind() const override { return "finite"; }
  std::string description() const override;
  double distance(ZPoint a, ZPoint b) const override { return a == b ? 0.0 : 1.0; }
  double coordinate(ZPoint z) const override;
  ZPoint forward(ZPoint z) const override;
  ZPoint backward(ZPoint z) const override;
  std::string repr(ZPoint z) const override;
  ZPoint parse(const std::string& text) const override;
  ZPoint sample(std::uint64_t seed, std::uint64_t index) const override;
  bool contains(ZPoint z) const override { return z.bits < static_cast<std::uint64_t>(n_); }

  int size() const { return n_; }

 private:
  int n_;
  std::vector<int> perm_;
  std::vector<int> inverse_;
};

/// "circle", "cantor" or "finite" with default parameters.
std::shared_ptr<const Transversal> make_transversal(const std::string& kind);

}  // namespace roughflow
