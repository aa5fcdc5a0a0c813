#include "roughflow/errors.hpp"
#include "roughflow/rde_solver.hpp"

namespace roughflow {

namespace {

using MatrixMap = Eigen::Map<const Matrix>;

Tensor3 tensor_from(const Vector& X, Eigen::Index offset, Eigen::Index p) {
  Tensor3 t(p);
  std::copy(X.data() + offset, X.data() + offset + p * p * p, t.data().begin());
  return t;
}

void write_tensor(Vector& X, Eigen::Index offset, const Tensor3& t) {
  std::copy(t.data().begin(), t.data().end(), X.data() + offset);
}

}  // namespace

JacobianSystem::JacobianSystem(const VectorFieldFamily& base, int order)
    : base_(base), order_(order), p_(base.state_dim()) {
  if (order_ != 1 && order_ != 2) throw ValidationError("JacobianSystem: order must be 1 or 2");
  if (base_.order() < order_ + 1) {
    throw ValidationError("JacobianSystem: base fields lack the derivatives this order needs");
  }
  dim_ = p_ + 2 * p_ * p_ + (order_ == 2 ? p_ * p_ * p_ : 0);
  cache_.resize(static_cast<std::size_t>(base_.driver_dim() + 1));
}

const JacobianSystem::Derivatives& JacobianSystem::derivatives(int i, const Vector& x) const {
  Derivatives& c = cache_.at(static_cast<std::size_t>(i));
  if (c.valid && c.x == x) return c;
  c.x = x;
  c.grad = base_.grad(i, x);
  c.hess = base_.hess(i, x);
  if (order_ == 2) c.third = base_.third(i, x);
  c.valid = true;
  return c;
}

Matrix JacobianSystem::j1_part(const Vector& X) const { return MatrixMap(X.data() + p_, p_, p_); }

Matrix JacobianSystem::jinv_part(const Vector& X) const { return MatrixMap(X.data() + p_ + p_ * p_, p_, p_); }

Tensor3 JacobianSystem::j2_part(const Vector& X) const {
  if (order_ < 2) return Tensor3(p_);
  return tensor_from(X, p_ + 2 * p_ * p_, p_);
}

Vector JacobianSystem::pack(const Vector& x, const Matrix& j1, const Matrix& jinv, const Tensor3* j2) const {
  Vector X = Vector::Zero(dim_);
  X.head(p_) = x;
  Eigen::Map<Matrix>(X.data() + p_, p_, p_) = j1;
  Eigen::Map<Matrix>(X.data() + p_ + p_ * p_, p_, p_) = jinv;
  if (order_ == 2 && j2 != nullptr) write_tensor(X, p_ + 2 * p_ * p_, *j2);
  return X;
}

Vector JacobianSystem::initial_state(const Vector& xi) const {
  const Matrix id = Matrix::Identity(p_, p_);
  return pack(xi, id, id, nullptr);
}

Vector JacobianSystem::eval(int i, const Vector& X) const {
  const Vector x = X.head(p_);
  const Derivatives& D = derivatives(i, x);
  const Matrix& G = D.grad;
  const MatrixMap J1(X.data() + p_, p_, p_);
  const MatrixMap Jinv(X.data() + p_ + p_ * p_, p_, p_);
  Vector out(dim_);
  out.head(p_) = base_.eval(i, x);
  Eigen::Map<Matrix>(out.data() + p_, p_, p_).noalias() = G.lazyProduct(J1);
  Eigen::Map<Matrix>(out.data() + p_ + p_ * p_, p_, p_).noalias() = -Jinv.lazyProduct(G);
  if (order_ == 2) {
    // grad V_i . J2 + hess V_i <J1, J1>
    Tensor3 dj2 = j2_part(X).left_multiply(G);
    dj2 += D.hess.bilinear(J1, J1);
    write_tensor(out, p_ + 2 * p_ * p_, dj2);
  }
  return out;
}

Vector JacobianSystem::jvp(int i, const Vector& X, const Vector& Y) const {
  const Vector x = X.head(p_);
  const auto y = Y.head(p_);
  const Derivatives& D = derivatives(i, x);
  const Matrix& G = D.grad;
  const Matrix Hy = D.hess.contract_last(y);
  const MatrixMap J1(X.data() + p_, p_, p_);
  const MatrixMap Jinv(X.data() + p_ + p_ * p_, p_, p_);
  const MatrixMap Y1(Y.data() + p_, p_, p_);
  const MatrixMap Yinv(Y.data() + p_ + p_ * p_, p_, p_);

  Vector out(dim_);
  out.head(p_).noalias() = G.lazyProduct(y);
  Eigen::Map<Matrix> O1(out.data() + p_, p_, p_);
  O1.noalias() = Hy.lazyProduct(J1);
  O1.noalias() += G.lazyProduct(Y1);
  Eigen::Map<Matrix> Oinv(out.data() + p_ + p_ * p_, p_, p_);
  Oinv.noalias() = -Jinv.lazyProduct(Hy);
  Oinv.noalias() -= Yinv.lazyProduct(G);
  if (order_ == 2) {
    const Matrix j1 = J1;
    const Matrix y1 = Y1;
    Tensor3 dj2 = j2_part(X).left_multiply(Hy);
    dj2 += j2_part(Y).left_multiply(G);
    dj2 += D.third.contract_last(y).bilinear(j1, j1);
    dj2 += D.hess.bilinear(y1, j1);
    dj2 += D.hess.bilinear(j1, y1);
    write_tensor(out, p_ + 2 * p_ * p_, dj2);
  }
  return out;
}

Matrix JacobianSystem::grad(int i, const Vector& X) const {
  Matrix out(dim_, dim_);
  for (Eigen::Index c = 0; c < dim_; ++c) out.col(c) = jvp(i, X, Vector::Unit(dim_, c));
  return out;
}

}  // namespace roughflow
