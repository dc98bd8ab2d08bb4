#pragma once

#include <cmath>
#include <vector>

#include "recon/ndarray.hpp"

// Independent transcriptions of the image quality formulas, shared by the unit
// and acceptance tests.
namespace oracle {

using recon::Index;
using recon::NdArrayF;

// SSIM evaluated window by window with the full 2-D Gaussian weight table.
inline double ssim_oracle(const NdArrayF& x, const NdArrayF& y, double L) {
  double w[11][11], total = 0.0;
  for (int u = 0; u < 11; ++u)
    for (int v = 0; v < 11; ++v) {
      w[u][v] = std::exp(-((u - 5) * (u - 5) + (v - 5) * (v - 5)) / (2.0 * 1.5 * 1.5));
      total += w[u][v];
    }
  const double c1 = 0.01 * L * 0.01 * L, c2 = 0.03 * L * 0.03 * L;
  double acc = 0.0;
  Index count = 0;
  for (Index i = 0; i + 11 <= x.dim(0); ++i)
    for (Index j = 0; j + 11 <= x.dim(1); ++j) {
      double mx = 0, my = 0;
      for (int u = 0; u < 11; ++u)
        for (int v = 0; v < 11; ++v) {
          mx += w[u][v] / total * x(i + u, j + v);
          my += w[u][v] / total * y(i + u, j + v);
        }
      double vx = 0, vy = 0, cxy = 0;
      for (int u = 0; u < 11; ++u)
        for (int v = 0; v < 11; ++v) {
          const double dx = x(i + u, j + v) - mx, dy = y(i + u, j + v) - my;
          vx += w[u][v] / total * dx * dx;
          vy += w[u][v] / total * dy * dy;
          cxy += w[u][v] / total * dx * dy;
        }
      acc += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return acc / static_cast<double>(count);
}

// Zero-padded full 2-D convolution cropped to the centre (MATLAB 'same').
inline std::vector<std::vector<double>> conv_same(const std::vector<std::vector<double>>& a,
                                           const std::vector<std::vector<double>>& k) {
  const int H = static_cast<int>(a.size()), W = static_cast<int>(a[0].size());
  const int kh = static_cast<int>(k.size()), kw = static_cast<int>(k[0].size());
  std::vector<std::vector<double>> full(H + kh - 1, std::vector<double>(W + kw - 1, 0.0));
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j)
      for (int u = 0; u < kh; ++u)
        for (int v = 0; v < kw; ++v) full[i + u][j + v] += a[i][j] * k[u][v];
  std::vector<std::vector<double>> out(H, std::vector<double>(W));
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) out[i][j] = full[i + kh / 2][j + kw / 2];
  return out;
}

// HaarPSI transcribed from its defining equations (grayscale, C = 30, alpha = 4.2).
inline double hpsi_oracle(const NdArrayF& x, const NdArrayF& y, double range) {
  auto prep = [&](const NdArrayF& img) {
    std::vector<std::vector<double>> m(img.dim(0), std::vector<double>(img.dim(1)));
    for (Index i = 0; i < img.dim(0); ++i)
      for (Index j = 0; j < img.dim(1); ++j) m[i][j] = img(i, j) * 255.0 / range;
    const auto avg = conv_same(m, {{0.25, 0.25}, {0.25, 0.25}});
    std::vector<std::vector<double>> s;
    for (std::size_t i = 0; i < avg.size(); i += 2) {
      s.emplace_back();
      for (std::size_t j = 0; j < avg[0].size(); j += 2) s.back().push_back(avg[i][j]);
    }
    return s;
  };
  const auto a = prep(x), b = prep(y);
  auto haar = [](int scale, bool vertical) {
    const int m = 1 << scale;
    std::vector<std::vector<double>> f(m, std::vector<double>(m));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const int row = vertical ? j : i;
        f[i][j] = (row < m / 2 ? -1.0 : 1.0) / m;
      }
    return f;
  };
  const double C = 30.0, alpha = 4.2;
  double num = 0.0, den = 0.0;
  for (bool vertical : {false, true}) {
    std::vector<std::vector<double>> ra[4], rb[4];
    for (int s = 1; s <= 3; ++s) {
      ra[s] = conv_same(a, haar(s, vertical));
      rb[s] = conv_same(b, haar(s, vertical));
    }
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < a[0].size(); ++j) {
        double local = 0.0;
        for (int s = 1; s <= 2; ++s) {
          const double p = std::abs(ra[s][i][j]), q = std::abs(rb[s][i][j]);
          local += 0.5 * (2 * p * q + C) / (p * p + q * q + C);
        }
        const double weight = std::max(std::abs(ra[3][i][j]), std::abs(rb[3][i][j]));
        num += weight / (1.0 + std::exp(-alpha * local));
        den += weight;
      }
  }
  const double r = num / den;
  const double s = std::log(r / (1.0 - r)) / alpha;
  return s * s;
}

}  // namespace oracle
