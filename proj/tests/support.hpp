#pragma once

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "recon/ndarray.hpp"
#include "recon/rng.hpp"

namespace testing {

using recon::Complex;
using recon::Index;
using recon::NdArrayC;
using recon::NdArrayF;
using recon::Shape;

inline NdArrayF random_real(const Shape& shape, recon::Rng& rng) {
  NdArrayF a(shape);
  for (double& v : a.data()) v = rng.normal();
  return a;
}

inline NdArrayC random_complex(const Shape& shape, recon::Rng& rng) {
  NdArrayC a(shape);
  for (Complex& v : a.data()) v = {rng.normal(), rng.normal()};
  return a;
}

template <typename T>
double max_abs_diff(const recon::NdArray<T>& a, const recon::NdArray<T>& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (Index i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template <typename T>
double rel_diff(const recon::NdArray<T>& a, const recon::NdArray<T>& b) {
  REQUIRE(a.shape() == b.shape());
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

// Fresh directory under the system temp path, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("recon-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
