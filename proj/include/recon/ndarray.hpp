#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "recon/error.hpp"

namespace recon {

using Index = std::size_t;
using Shape = std::vector<Index>;
using Complex = std::complex<double>;

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (Index i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

/// Row-major strides of a shape, in elements.
inline Shape row_major_strides(const Shape& shape) {
  Shape strides(shape.size(), 1);
  for (Index i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

template <typename T>
inline constexpr bool is_complex_v = false;
template <typename T>
inline constexpr bool is_complex_v<std::complex<T>> = true;

template <typename T>
class NdArray;

template <typename A, typename B>
void require_same_shape(const NdArray<A>& a, const NdArray<B>& b, const char* what);

/// Dense n-dimensional array with an explicit shape, row-major.
///
/// Shapes are never broadcast: every binary operation requires identical
/// shapes and throws ShapeError otherwise.
template <typename T>
class NdArray {
 public:
  using value_type = T;

  NdArray() : shape_{1}, data_(1) {}

  explicit NdArray(Shape shape, T fill = T{}) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_size(shape_), fill);
  }

  NdArray(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_size(shape_)) {
      throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return shape_.size(); }
  Index size() const { return data_.size(); }
  Index dim(Index axis) const { return shape_.at(axis); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](Index flat) { return data_[flat]; }
  const T& operator[](Index flat) const { return data_[flat]; }

  T& operator()(Index i, Index j) { return data_[i * shape_[1] + j]; }
  const T& operator()(Index i, Index j) const { return data_[i * shape_[1] + j]; }
  T& operator()(Index i, Index j, Index k) { return data_[(i * shape_[1] + j) * shape_[2] + k]; }
  const T& operator()(Index i, Index j, Index k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  Index offset(std::span<const Index> index) const {
    Index off = 0;
    for (Index a = 0; a < shape_.size(); ++a) off = off * shape_[a] + index[a];
    return off;
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  NdArray reshaped(Shape shape) const {
    if (shape_size(shape) != size()) {
      throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    return NdArray(std::move(shape), data_);
  }

  NdArray& operator+=(const NdArray& other) {
    require_same_shape(*this, other, "+=");
    for (Index i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }
  NdArray& operator-=(const NdArray& other) {
    require_same_shape(*this, other, "-=");
    for (Index i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
  }
  NdArray& operator*=(T scale) {
    for (auto& v : data_) v *= scale;
    return *this;
  }

  friend NdArray operator+(NdArray a, const NdArray& b) { return a += b; }
  friend NdArray operator-(NdArray a, const NdArray& b) { return a -= b; }
  friend NdArray operator*(NdArray a, T s) { return a *= s; }
  friend NdArray operator*(T s, NdArray a) { return a *= s; }

  friend bool operator==(const NdArray& a, const NdArray& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  static void check_shape(const Shape& shape) {
    if (shape.empty()) throw ShapeError("array shape must have at least one axis");
    for (Index d : shape) {
      if (d == 0) throw ShapeError("array shape entries must be >= 1, got " + shape_string(shape));
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

using NdArrayF = NdArray<double>;
using NdArrayC = NdArray<Complex>;

template <typename A, typename B>
void require_same_shape(const NdArray<A>& a, const NdArray<B>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

/// Sum of conj(a_i) * b_i.
template <typename T>
T inner_product(const NdArray<T>& a, const NdArray<T>& b) {
  require_same_shape(a, b, "inner_product");
  T sum{};
  for (Index i = 0; i < a.size(); ++i) {
    if constexpr (is_complex_v<T>) {
      sum += std::conj(a[i]) * b[i];
    } else {
      sum += a[i] * b[i];
    }
  }
  return sum;
}

template <typename T>
double squared_norm(const NdArray<T>& a) {
  double sum = 0.0;
  for (const auto& v : a.data()) sum += std::norm(v);
  return sum;
}

template <typename T>
double norm2(const NdArray<T>& a) {
  return std::sqrt(squared_norm(a));
}

/// y += alpha * x
template <typename T>
void axpy(T alpha, const NdArray<T>& x, NdArray<T>& y) {
  require_same_shape(x, y, "axpy");
  for (Index i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// Elementwise product.
template <typename T>
NdArray<T> hadamard(const NdArray<T>& a, const NdArray<T>& b) {
  require_same_shape(a, b, "hadamard");
  NdArray<T> out = a;
  for (Index i = 0; i < a.size(); ++i) out[i] *= b[i];
  return out;
}

template <typename T>
bool all_finite(const NdArray<T>& a) {
  for (const auto& v : a.data()) {
    if constexpr (is_complex_v<T>) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    } else {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

inline NdArrayF real_part(const NdArrayC& a) {
  NdArrayF out(a.shape());
  for (Index i = 0; i < a.size(); ++i) out[i] = a[i].real();
  return out;
}

inline NdArrayF imag_part(const NdArrayC& a) {
  NdArrayF out(a.shape());
  for (Index i = 0; i < a.size(); ++i) out[i] = a[i].imag();
  return out;
}

inline NdArrayF magnitude(const NdArrayC& a) {
  NdArrayF out(a.shape());
  for (Index i = 0; i < a.size(); ++i) out[i] = std::abs(a[i]);
  return out;
}

inline NdArrayC make_complex(const NdArrayF& re, const NdArrayF& im) {
  require_same_shape(re, im, "make_complex");
  NdArrayC out(re.shape());
  for (Index i = 0; i < re.size(); ++i) out[i] = Complex(re[i], im[i]);
  return out;
}

inline NdArrayC to_complex(const NdArrayF& re) {
  NdArrayC out(re.shape());
  for (Index i = 0; i < re.size(); ++i) out[i] = re[i];
  return out;
}

}  // namespace recon
