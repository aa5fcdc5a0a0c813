#include "roughflow/vector_field.hpp"

#include "roughflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace roughflow {

Vector Tensor3::contract(const Vector& u, const Vector& v) const {
  Vector out = Vector::Zero(n_);
  for (Eigen::Index a = 0; a < n_; ++a) {
    double acc = 0.0;
    for (Eigen::Index b = 0; b < n_; ++b) {
      for (Eigen::Index c = 0; c < n_; ++c) acc += (*this)(a, b, c) * u[b] * v[c];
    }
    out[a] = acc;
  }
  return out;
}

Matrix Tensor3::contract_last(const Vector& u) const {
  Matrix out = Matrix::Zero(n_, n_);
  for (Eigen::Index a = 0; a < n_; ++a) {
    for (Eigen::Index b = 0; b < n_; ++b) {
      double acc = 0.0;
      for (Eigen::Index c = 0; c < n_; ++c) acc += (*this)(a, b, c) * u[c];
      out(a, b) = acc;
    }
  }
  return out;
}

Tensor3 Tensor3::bilinear(const Matrix& A, const Matrix& B) const {
  Tensor3 out(n_);
  for (Eigen::Index a = 0; a < n_; ++a) {
    for (Eigen::Index e = 0; e < n_; ++e) {
      for (Eigen::Index f = 0; f < n_; ++f) {
        const double t = (*this)(a, e, f);
        if (t == 0.0) continue;
        for (Eigen::Index b = 0; b < n_; ++b) {
          const double ta = t * A(e, b);
          for (Eigen::Index c = 0; c < n_; ++c) out(a, b, c) += ta * B(f, c);
        }
      }
    }
  }
  return out;
}

Tensor3 Tensor3::left_multiply(const Matrix& G) const {
  Tensor3 out(n_);
  for (Eigen::Index a = 0; a < n_; ++a) {
    for (Eigen::Index e = 0; e < n_; ++e) {
      const double g = G(a, e);
      if (g == 0.0) continue;
      for (Eigen::Index b = 0; b < n_; ++b) {
        for (Eigen::Index c = 0; c < n_; ++c) out(a, b, c) += g * (*this)(e, b, c);
      }
    }
  }
  return out;
}

Tensor3& Tensor3::operator+=(const Tensor3& other) {
  std::transform(data_.begin(), data_.end(), other.data_.begin(), data_.begin(), std::plus<>());
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& other) {
  std::transform(data_.begin(), data_.end(), other.data_.begin(), data_.begin(), std::minus<>());
  return *this;
}

Tensor3& Tensor3::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Tensor3 Tensor4::contract_last(const Vector& u) const {
  Tensor3 out(n_);
  for (Eigen::Index a = 0; a < n_; ++a) {
    for (Eigen::Index b = 0; b < n_; ++b) {
      for (Eigen::Index c = 0; c < n_; ++c) {
        double acc = 0.0;
        for (Eigen::Index e = 0; e < n_; ++e) acc += (*this)(a, b, c, e) * u[e];
        out(a, b, c) = acc;
      }
    }
  }
  return out;
}

Tensor3 VectorFieldFamily::hess(int, const Vector&) const {
  throw ValidationError("vector field family does not provide second derivatives");
}

Tensor4 VectorFieldFamily::third(int, const Vector&) const {
  throw ValidationError("vector field family does not provide third derivatives");
}

FieldFamily::FieldFamily(std::string name, Eigen::Index p, std::vector<Component> components, bool self_check)
    : name_(std::move(name)), p_(p), components_(std::move(components)) {
  if (p_ < 1 || components_.size() < 2) {
    throw ValidationError("FieldFamily: need p >= 1 and at least a drift and one driving field");
  }
  bool has_hess = true;
  bool has_third = true;
  for (const Component& c : components_) {
    if (!c.eval || !c.grad) {
      throw ValidationError("FieldFamily: every component needs eval and grad");
    }
    has_hess = has_hess && static_cast<bool>(c.hess);
    has_third = has_third && static_cast<bool>(c.third);
  }
  order_ = has_hess ? (has_third ? 3 : 2) : 1;
  if (self_check) {
    const double mismatch = derivative_mismatch(*this);
    if (mismatch > 1e-5) {
      throw ValidationError("FieldFamily '" + name_ + "': derivative oracles disagree with finite differences");
    }
  }
}

const FieldFamily::Component& FieldFamily::component(int i) const {
  if (i < 0 || static_cast<std::size_t>(i) >= components_.size()) {
    throw ValidationError("FieldFamily: field index out of range");
  }
  return components_[static_cast<std::size_t>(i)];
}

Vector FieldFamily::eval(int i, const Vector& x) const { return component(i).eval(x); }
Matrix FieldFamily::grad(int i, const Vector& x) const { return component(i).grad(x); }

Tensor3 FieldFamily::hess(int i, const Vector& x) const {
  if (order_ < 2) return VectorFieldFamily::hess(i, x);
  return component(i).hess(x);
}

Tensor4 FieldFamily::third(int i, const Vector& x) const {
  if (order_ < 3) return VectorFieldFamily::third(i, x);
  return component(i).third(x);
}

Vector DriftFlipped::eval(int i, const Vector& x) const {
  return i == 0 ? Vector(-base_.eval(0, x)) : base_.eval(i, x);
}

Matrix DriftFlipped::grad(int i, const Vector& x) const {
  return i == 0 ? Matrix(-base_.grad(0, x)) : base_.grad(i, x);
}

Tensor3 DriftFlipped::hess(int i, const Vector& x) const {
  Tensor3 h = base_.hess(i, x);
  if (i == 0) h *= -1.0;
  return h;
}

Tensor4 DriftFlipped::third(int i, const Vector& x) const {
  Tensor4 t = base_.third(i, x);
  if (i == 0) {
    const Eigen::Index n = t.size();
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b)
        for (Eigen::Index c = 0; c < n; ++c)
          for (Eigen::Index e = 0; e < n; ++e) t(a, b, c, e) = -t(a, b, c, e);
  }
  return t;
}

Vector DriftFlipped::jvp(int i, const Vector& x, const Vector& v) const {
  return i == 0 ? Vector(-base_.jvp(0, x, v)) : base_.jvp(i, x, v);
}

double derivative_mismatch(const VectorFieldFamily& V, int probes, std::uint64_t seed, double radius) {
  const Eigen::Index p = V.state_dim();
  const double h = 1e-5;
  std::mt19937_64 gen(seed);
  auto uniform = [&] { return (static_cast<double>(gen() >> 11) * 0x1.0p-53 * 2.0 - 1.0) * radius; };
  auto rel = [](double fd, double exact) { return std::abs(fd - exact) / (1.0 + std::abs(exact)); };

  double worst = 0.0;
  for (int probe = 0; probe < probes; ++probe) {
    Vector x(p);
    for (Eigen::Index k = 0; k < p; ++k) x[k] = uniform();
    for (int i = 0; i <= static_cast<int>(V.driver_dim()); ++i) {
      const Matrix g = V.grad(i, x);
      Tensor3 hx;
      if (V.order() >= 2) hx = V.hess(i, x);
      Tensor4 tx;
      if (V.order() >= 3) tx = V.third(i, x);
      for (Eigen::Index b = 0; b < p; ++b) {
        Vector xp = x;
        Vector xm = x;
        xp[b] += h;
        xm[b] -= h;
        const Vector dv = (V.eval(i, xp) - V.eval(i, xm)) / (2.0 * h);
        for (Eigen::Index a = 0; a < p; ++a) worst = std::max(worst, rel(dv[a], g(a, b)));
        if (V.order() >= 2) {
          const Matrix dg = (V.grad(i, xp) - V.grad(i, xm)) / (2.0 * h);
          for (Eigen::Index a = 0; a < p; ++a)
            for (Eigen::Index c = 0; c < p; ++c) worst = std::max(worst, rel(dg(a, c), hx(a, c, b)));
        }
        if (V.order() >= 3) {
          Tensor3 dh = V.hess(i, xp);
          dh -= V.hess(i, xm);
          dh *= 1.0 / (2.0 * h);
          for (Eigen::Index a = 0; a < p; ++a)
            for (Eigen::Index c = 0; c < p; ++c)
              for (Eigen::Index e = 0; e < p; ++e) worst = std::max(worst, rel(dh(a, c, e), tx(a, c, e, b)));
        }
      }
    }
  }
  return worst;
}

TestFunction constant_function(double c, Eigen::Index p) {
  return TestFunction{[c](const Vector&) { return c; }, [p](const Vector&) { return Vector(Vector::Zero(p)); },
                      [p](const Vector&) { return Matrix(Matrix::Zero(p, p)); }};
}

TestFunction coordinate_function(Eigen::Index k, Eigen::Index p) {
  if (k < 0 || k >= p) {
    throw ValidationError("coordinate_function: index out of range");
  }
  return TestFunction{[k](const Vector& x) { return x[k]; },
                      [k, p](const Vector&) { return Vector(Vector::Unit(p, k)); },
                      [p](const Vector&) { return Matrix(Matrix::Zero(p, p)); }};
}

TestFunction smooth_test_function(Eigen::Index p) {
  return TestFunction{
      [](const Vector& x) { return x.array().sin().sum() + 0.5 * x.sum() * x.sum(); },
      [](const Vector& x) { return Vector(x.array().cos() + x.sum()); },
      [p](const Vector& x) {
        Matrix h = Matrix::Ones(p, p);
        h.diagonal() -= x.array().sin().matrix();
        return h;
      }};
}

}  // namespace roughflow
