#pragma once

#include <Eigen/Dense>

#include "recon/ndarray.hpp"

namespace recon {

/// Linear forward/adjoint pair between two array spaces.
template <typename T>
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Shape domain_shape() const = 0;
  virtual Shape range_shape() const = 0;
  virtual NdArray<T> forward(const NdArray<T>& x) const = 0;
  virtual NdArray<T> adjoint(const NdArray<T>& y) const = 0;

  /// A^H A x. Implementations may override with a faster exact route.
  virtual NdArray<T> normal(const NdArray<T>& x) const { return adjoint(forward(x)); }
};

using RealOperator = LinearOperator<double>;
using ComplexOperator = LinearOperator<Complex>;

template <typename T>
using DenseMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using DenseVector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Explicit matrix acting on 1-D arrays.
template <typename T>
class DenseOperator final : public LinearOperator<T> {
 public:
  explicit DenseOperator(DenseMatrix<T> matrix) : matrix_(std::move(matrix)) {}

  Shape domain_shape() const override { return {static_cast<Index>(matrix_.cols())}; }
  Shape range_shape() const override { return {static_cast<Index>(matrix_.rows())}; }

  NdArray<T> forward(const NdArray<T>& x) const override {
    check(x, domain_shape(), "forward");
    DenseVector<T> out = matrix_ * Eigen::Map<const DenseVector<T>>(x.data().data(), matrix_.cols());
    return NdArray<T>(range_shape(), std::vector<T>(out.data(), out.data() + out.size()));
  }

  NdArray<T> adjoint(const NdArray<T>& y) const override {
    check(y, range_shape(), "adjoint");
    DenseVector<T> out =
        matrix_.adjoint() * Eigen::Map<const DenseVector<T>>(y.data().data(), matrix_.rows());
    return NdArray<T>(domain_shape(), std::vector<T>(out.data(), out.data() + out.size()));
  }

  const DenseMatrix<T>& matrix() const { return matrix_; }

 private:
  static void check(const NdArray<T>& a, const Shape& expected, const char* what) {
    if (a.shape() != expected) {
      throw ShapeError(std::string("DenseOperator::") + what + ": expected " +
                       shape_string(expected) + ", got " + shape_string(a.shape()));
    }
  }

  DenseMatrix<T> matrix_;
};

template <typename T>
class IdentityOperator final : public LinearOperator<T> {
 public:
  explicit IdentityOperator(Shape shape) : shape_(std::move(shape)) {}
  Shape domain_shape() const override { return shape_; }
  Shape range_shape() const override { return shape_; }
  NdArray<T> forward(const NdArray<T>& x) const override { return checked(x); }
  NdArray<T> adjoint(const NdArray<T>& y) const override { return checked(y); }

 private:
  NdArray<T> checked(const NdArray<T>& a) const {
    if (a.shape() != shape_) throw ShapeError("IdentityOperator: shape mismatch");
    return a;
  }
  Shape shape_;
};

}  // namespace recon
