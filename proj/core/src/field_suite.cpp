#include "roughflow/errors.hpp"
#include "roughflow/vector_field.hpp"

#include <cmath>

namespace roughflow {

namespace {

using Component = FieldFamily::Component;

Component constant_component(const Vector& value) {
  const Eigen::Index p = value.size();
  return Component{[value](const Vector&) { return value; },
                   [p](const Vector&) { return Matrix(Matrix::Zero(p, p)); },
                   [p](const Vector&) { return Tensor3(p); }, [p](const Vector&) { return Tensor4(p); }};
}

Component linear_component(const Matrix& A) {
  const Eigen::Index p = A.rows();
  return Component{[A](const Vector& x) { return Vector(A * x); }, [A](const Vector&) { return A; },
                   [p](const Vector&) { return Tensor3(p); }, [p](const Vector&) { return Tensor4(p); }};
}

}  // namespace

std::shared_ptr<FieldFamily> zero_fields(Eigen::Index p, Eigen::Index d) {
  std::vector<Component> comps(static_cast<std::size_t>(d + 1), constant_component(Vector::Zero(p)));
  return std::make_shared<FieldFamily>("zero", p, std::move(comps));
}

std::shared_ptr<FieldFamily> constant_fields(Eigen::Index d) {
  std::vector<Component> comps{constant_component(Vector::Zero(d))};
  for (Eigen::Index i = 0; i < d; ++i) comps.push_back(constant_component(Vector::Unit(d, i)));
  return std::make_shared<FieldFamily>("constant", d, std::move(comps));
}

std::shared_ptr<FieldFamily> drift_fields(const Vector& c, Eigen::Index d) {
  std::vector<Component> comps{constant_component(c)};
  for (Eigen::Index i = 0; i < d; ++i) comps.push_back(constant_component(Vector::Zero(c.size())));
  return std::make_shared<FieldFamily>("drift", c.size(), std::move(comps));
}

std::shared_ptr<FieldFamily> exponential_field() {
  std::vector<Component> comps{constant_component(Vector::Zero(1)), linear_component(Matrix::Identity(1, 1))};
  return std::make_shared<FieldFamily>("exponential", 1, std::move(comps));
}

std::shared_ptr<FieldFamily> rotation_field() {
  Matrix A(2, 2);
  A << 0.0, -1.0, 1.0, 0.0;
  std::vector<Component> comps{constant_component(Vector::Zero(2)), linear_component(A)};
  return std::make_shared<FieldFamily>("rotation", 2, std::move(comps));
}

std::shared_ptr<FieldFamily> nonlinear_fields(bool with_drift) {
  using std::cos;
  using std::sin;
  // V_1 = (cos x2, 0.5 sin x1)
  Component v1{
      [](const Vector& x) { return Vector((Vector(2) << cos(x[1]), 0.5 * sin(x[0])).finished()); },
      [](const Vector& x) { return Matrix((Matrix(2, 2) << 0.0, -sin(x[1]), 0.5 * cos(x[0]), 0.0).finished()); },
      [](const Vector& x) {
        Tensor3 h(2);
        h(0, 1, 1) = -cos(x[1]);
        h(1, 0, 0) = -0.5 * sin(x[0]);
        return h;
      },
      [](const Vector& x) {
        Tensor4 t(2);
        t(0, 1, 1, 1) = sin(x[1]);
        t(1, 0, 0, 0) = -0.5 * cos(x[0]);
        return t;
      }};
  // V_2 = (0.5 sin x2, 1 + 0.5 cos x1)
  Component v2{
      [](const Vector& x) { return Vector((Vector(2) << 0.5 * sin(x[1]), 1.0 + 0.5 * cos(x[0])).finished()); },
      [](const Vector& x) {
        return Matrix((Matrix(2, 2) << 0.0, 0.5 * cos(x[1]), -0.5 * sin(x[0]), 0.0).finished());
      },
      [](const Vector& x) {
        Tensor3 h(2);
        h(0, 1, 1) = -0.5 * sin(x[1]);
        h(1, 0, 0) = -0.5 * cos(x[0]);
        return h;
      },
      [](const Vector& x) {
        Tensor4 t(2);
        t(0, 1, 1, 1) = -0.5 * cos(x[1]);
        t(1, 0, 0, 0) = 0.5 * sin(x[0]);
        return t;
      }};
  Component v0 = constant_component(Vector::Zero(2));
  if (with_drift) {
    // V_0 = (-0.5 sin x1, 0.3 cos x2)
    v0 = Component{
        [](const Vector& x) { return Vector((Vector(2) << -0.5 * sin(x[0]), 0.3 * cos(x[1])).finished()); },
        [](const Vector& x) {
          return Matrix((Matrix(2, 2) << -0.5 * cos(x[0]), 0.0, 0.0, -0.3 * sin(x[1])).finished());
        },
        [](const Vector& x) {
          Tensor3 h(2);
          h(0, 0, 0) = 0.5 * sin(x[0]);
          h(1, 1, 1) = -0.3 * cos(x[1]);
          return h;
        },
        [](const Vector& x) {
          Tensor4 t(2);
          t(0, 0, 0, 0) = 0.5 * cos(x[0]);
          t(1, 1, 1, 1) = 0.3 * sin(x[1]);
          return t;
        }};
  }
  return std::make_shared<FieldFamily>(with_drift ? "nonlinear_drift" : "nonlinear", 2,
                                       std::vector<Component>{v0, v1, v2});
}

std::shared_ptr<FieldFamily> make_named_field(const std::string& name, Eigen::Index p, Eigen::Index d) {
  if (name == "zero") return zero_fields(p, d);
  if (name == "constant") return constant_fields(d);
  if (name == "drift") return drift_fields(Vector::Ones(p), d);
  if (name == "exponential") return exponential_field();
  if (name == "rotation") return rotation_field();
  if (name == "nonlinear") return nonlinear_fields(false);
  if (name == "nonlinear_drift") return nonlinear_fields(true);
  throw ValidationError("unknown field suite name '" + name + "'");
}

}  // namespace roughflow
