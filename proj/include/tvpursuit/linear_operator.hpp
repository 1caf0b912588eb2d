#pragma once

#include "tvpursuit/common.hpp"

namespace tvp {

/// Matrix-free linear map used by the first-order solvers.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;
  virtual Vector apply(const Eigen::Ref<const Vector>& x) const = 0;
  virtual Vector adjoint(const Eigen::Ref<const Vector>& r) const = 0;
  /// Dense M M^T (rows x rows).
  virtual Matrix gram() const = 0;
  virtual Matrix dense() const = 0;
};

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Matrix a) : a_(std::move(a)) {}

  Eigen::Index rows() const override { return a_.rows(); }
  Eigen::Index cols() const override { return a_.cols(); }
  Vector apply(const Eigen::Ref<const Vector>& x) const override { return a_ * x; }
  Vector adjoint(const Eigen::Ref<const Vector>& r) const override { return a_.transpose() * r; }
  Matrix gram() const override { return a_ * a_.transpose(); }
  Matrix dense() const override { return a_; }

  const Matrix& matrix() const noexcept { return a_; }

 private:
  Matrix a_;
};

}  // namespace tvp
