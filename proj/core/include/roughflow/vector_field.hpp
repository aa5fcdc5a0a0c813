#pragma once

#include "roughflow/tensor_algebra.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace roughflow {

/// Dense n x n x n array; T(a, b, c) = d^2 V^a / dx^b dx^c for Hessians.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Eigen::Index n) : n_(n), data_(static_cast<std::size_t>(n * n * n), 0.0) {}

  Eigen::Index size() const { return n_; }
  double& operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c) { return data_[index(a, b, c)]; }
  double operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c) const { return data_[index(a, b, c)]; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  /// out_a = sum_{b,c} T(a,b,c) u_b v_c.
  Vector contract(const Vector& u, const Vector& v) const;
  /// M(a,b) = sum_c T(a,b,c) u_c.
  Matrix contract_last(const Vector& u) const;
  /// (T<A, B>)(a,b,c) = sum_{e,f} T(a,e,f) A(e,b) B(f,c).
  Tensor3 bilinear(const Matrix& A, const Matrix& B) const;
  /// (G * T)(a,b,c) = sum_e G(a,e) T(e,b,c).
  Tensor3 left_multiply(const Matrix& G) const;

  Tensor3& operator+=(const Tensor3& other);
  Tensor3& operator-=(const Tensor3& other);
  Tensor3& operator*=(double s);
  double max_abs() const;

 private:
  std::size_t index(Eigen::Index a, Eigen::Index b, Eigen::Index c) const {
    return static_cast<std::size_t>((a * n_ + b) * n_ + c);
  }

  Eigen::Index n_ = 0;
  std::vector<double> data_;
};

/// Dense n^4 array for third derivatives, T(a, b, c, e) = d^3 V^a / dx^b dx^c dx^e.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Eigen::Index n) : n_(n), data_(static_cast<std::size_t>(n * n * n * n), 0.0) {}

  Eigen::Index size() const { return n_; }
  double& operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c, Eigen::Index e) {
    return data_[static_cast<std::size_t>(((a * n_ + b) * n_ + c) * n_ + e)];
  }
  double operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c, Eigen::Index e) const {
    return data_[static_cast<std::size_t>(((a * n_ + b) * n_ + c) * n_ + e)];
  }
  /// (T[u])(a,b,c) = sum_e T(a,b,c,e) u_e.
  Tensor3 contract_last(const Vector& u) const;

 private:
  Eigen::Index n_ = 0;
  std::vector<double> data_;
};

/// Driving fields V_0 (drift) and V_1..V_d on R^p with derivative oracles.
/// Index 0 is always the drift.
class VectorFieldFamily {
 public:
  virtual ~VectorFieldFamily() = default;

  virtual Eigen::Index state_dim() const = 0;
  virtual Eigen::Index driver_dim() const = 0;
  /// Highest derivative order the oracles provide.
  virtual int order() const = 0;

  virtual Vector eval(int i, const Vector& x) const = 0;
  /// Jacobian, (a, b) = d V^a / d x^b.
  virtual Matrix grad(int i, const Vector& x) const = 0;
  virtual Tensor3 hess(int i, const Vector& x) const;
  virtual Tensor4 third(int i, const Vector& x) const;

  /// grad(i, x) * v; overridden where a matrix-free product is cheaper.
  virtual Vector jvp(int i, const Vector& x, const Vector& v) const { return grad(i, x) * v; }
};

/// Family assembled from callables. Missing higher derivatives lower `order()`.
class FieldFamily final : public VectorFieldFamily {
 public:
  struct Component {
    std::function<Vector(const Vector&)> eval;
    std::function<Matrix(const Vector&)> grad;
    std::function<Tensor3(const Vector&)> hess;
    std::function<Tensor4(const Vector&)> third;
  };

  /// components[0] is the drift. With `self_check`, the derivative oracles are
  /// compared with centred finite differences on random probes and a
  /// ValidationError is thrown when they disagree by more than 1e-5 relative.
  FieldFamily(std::string name, Eigen::Index p, std::vector<Component> components, bool self_check = true);

  const std::string& name() const { return name_; }
  Eigen::Index state_dim() const override { return p_; }
  Eigen::Index driver_dim() const override { return static_cast<Eigen::Index>(components_.size()) - 1; }
  int order() const override { return order_; }
  Vector eval(int i, const Vector& x) const override;
  Matrix grad(int i, const Vector& x) const override;
  Tensor3 hess(int i, const Vector& x) const override;
  Tensor4 third(int i, const Vector& x) const override;

 private:
  const Component& component(int i) const;

  std::string name_;
  Eigen::Index p_;
  std::vector<Component> components_;
  int order_ = 1;
};

/// [V_1, ..., V_d; -V_0]: the family that runs a flow backwards along a reversed driver.
class DriftFlipped final : public VectorFieldFamily {
 public:
  explicit DriftFlipped(const VectorFieldFamily& base) : base_(base) {}

  Eigen::Index state_dim() const override { return base_.state_dim(); }
  Eigen::Index driver_dim() const override { return base_.driver_dim(); }
  int order() const override { return base_.order(); }
  Vector eval(int i, const Vector& x) const override;
  Matrix grad(int i, const Vector& x) const override;
  Tensor3 hess(int i, const Vector& x) const override;
  Tensor4 third(int i, const Vector& x) const override;
  Vector jvp(int i, const Vector& x, const Vector& v) const override;

 private:
  const VectorFieldFamily& base_;
};

/// Largest relative mismatch between the derivative oracles (up to order())
/// and centred finite differences, over `probes` random points in [-radius, radius]^p.
double derivative_mismatch(const VectorFieldFamily& V, int probes = 8, std::uint64_t seed = 1,
                           double radius = 1.5);

/// Scalar test function with derivatives up to second order.
struct TestFunction {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;
  std::function<Matrix(const Vector&)> hess;
};

TestFunction constant_function(double c, Eigen::Index p);
TestFunction coordinate_function(Eigen::Index k, Eigen::Index p);
/// f(x) = sum_k sin(x_k) + 1/2 (sum_k x_k)^2.
TestFunction smooth_test_function(Eigen::Index p);

// ---- named test fields --------------------------------------------------------

/// All fields identically zero.
std::shared_ptr<FieldFamily> zero_fields(Eigen::Index p, Eigen::Index d);
/// V_i = e_i (p = d), no drift: x_t = xi + w^1_{0,t}.
std::shared_ptr<FieldFamily> constant_fields(Eigen::Index d);
/// Only a constant drift c; V_1..V_d = 0.
std::shared_ptr<FieldFamily> drift_fields(const Vector& c, Eigen::Index d);
/// p = d = 1, V_1(x) = x: x_t = xi exp(w_t - w_a).
std::shared_ptr<FieldFamily> exponential_field();
/// p = 2, d = 1, V_1(x) = (-x2, x1): rotation by the driver increment.
std::shared_ptr<FieldFamily> rotation_field();
/// p = 2, d = 2, bounded non-commuting trigonometric fields; drift optional.
std::shared_ptr<FieldFamily> nonlinear_fields(bool with_drift);

/// Look up a field by name: zero, constant, drift, exponential, rotation,
/// nonlinear, nonlinear_drift. `d` and `p` are only used by zero/constant/drift.
std::shared_ptr<FieldFamily> make_named_field(const std::string& name, Eigen::Index p, Eigen::Index d);

}  // namespace roughflow
