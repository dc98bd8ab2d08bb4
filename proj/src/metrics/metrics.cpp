#include "recon/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace recon::metrics {
namespace {

void require_2d(const NdArrayF& a, const char* who) {
  if (a.rank() != 2) {
    throw ShapeError(std::string(who) + ": expected a 2-D image, got " + shape_string(a.shape()));
  }
}

// Valid-mode separable correlation with a symmetric 1-D window.
NdArrayF filter_valid(const NdArrayF& img, const std::vector<double>& w) {
  const Index k = w.size();
  const Index h = img.dim(0), wd = img.dim(1);
  const Index oh = h - k + 1, ow = wd - k + 1;
  NdArrayF rows({h, ow});
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (Index t = 0; t < k; ++t) acc += w[t] * img(i, j + t);
      rows(i, j) = acc;
    }
  NdArrayF out({oh, ow});
  for (Index i = 0; i < oh; ++i)
    for (Index j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (Index t = 0; t < k; ++t) acc += w[t] * rows(i + t, j);
      out(i, j) = acc;
    }
  return out;
}

// MATLAB conv2(img, kernel, 'same'): true convolution, output aligned at
// offset floor(m / 2) into the full result.
NdArrayF conv2_same(const NdArrayF& img, const NdArrayF& kernel) {
  const auto H = static_cast<std::ptrdiff_t>(img.dim(0)), W = static_cast<std::ptrdiff_t>(img.dim(1));
  const auto kh = static_cast<std::ptrdiff_t>(kernel.dim(0)), kw = static_cast<std::ptrdiff_t>(kernel.dim(1));
  const std::ptrdiff_t oi = kh / 2, oj = kw / 2;
  NdArrayF out(img.shape(), 0.0);
  for (std::ptrdiff_t i = 0; i < H; ++i)
    for (std::ptrdiff_t j = 0; j < W; ++j) {
      double acc = 0.0;
      for (std::ptrdiff_t u = 0; u < kh; ++u) {
        const std::ptrdiff_t si = i + oi - u;
        if (si < 0 || si >= H) continue;
        for (std::ptrdiff_t v = 0; v < kw; ++v) {
          const std::ptrdiff_t sj = j + oj - v;
          if (sj < 0 || sj >= W) continue;
          acc += img(static_cast<Index>(si), static_cast<Index>(sj)) *
                 kernel(static_cast<Index>(u), static_cast<Index>(v));
        }
      }
      out(static_cast<Index>(i), static_cast<Index>(j)) = acc;
    }
  return out;
}

NdArrayF haar_subsample(const NdArrayF& img) {
  const NdArrayF avg = conv2_same(img, NdArrayF({2, 2}, 0.25));
  const Index h = (img.dim(0) + 1) / 2, w = (img.dim(1) + 1) / 2;
  NdArrayF out({h, w});
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) out(i, j) = avg(2 * i, 2 * j);
  return out;
}

// Scale k in 1..3, horizontal (false) or vertical (true) Haar response.
NdArrayF haar_response(const NdArrayF& img, Index scale, bool transpose) {
  const Index m = Index{1} << scale;
  const double v = std::ldexp(1.0, -static_cast<int>(scale));
  NdArrayF filt({m, m}, v);
  for (Index i = 0; i < m / 2; ++i)
    for (Index j = 0; j < m; ++j) filt(i, j) = -v;
  if (transpose) {
    NdArrayF t({m, m});
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) t(i, j) = filt(j, i);
    filt = std::move(t);
  }
  return conv2_same(img, filt);
}

double logistic(double v, double alpha) { return 1.0 / (1.0 + std::exp(-alpha * v)); }
double logit(double v, double alpha) { return std::log(v / (1.0 - v)) / alpha; }

SliceMetrics slice_metrics(const NdArrayF& x, const NdArrayF& ref, const MetricOptions& opts) {
  double peak = opts.peak;
  if (peak <= 0.0) {
    peak = *std::max_element(ref.data().begin(), ref.data().end());
    if (!(peak > 0.0)) throw DomainError("evaluate: reference maximum must be > 0 for the default peak");
  }
  const double range = opts.range > 0.0 ? opts.range : peak;
  return {psnr(x, ref, peak), nrmse(x, ref), ssim(x, ref, range), hpsi(x, ref, range)};
}

}  // namespace

double psnr(const NdArrayF& x, const NdArrayF& ref, double peak) {
  require_same_shape(x, ref, "psnr");
  if (peak <= 0.0) peak = *std::max_element(ref.data().begin(), ref.data().end());
  if (!(peak > 0.0)) throw DomainError("psnr: peak must be > 0");
  const double mse = squared_norm(x - ref) / static_cast<double>(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double nrmse(const NdArrayF& x, const NdArrayF& ref) {
  require_same_shape(x, ref, "nrmse");
  const double denom = norm2(ref);
  if (!(denom > 0.0)) throw DomainError("nrmse: reference has zero norm");
  return norm2(x - ref) / denom;
}

double ssim(const NdArrayF& x, const NdArrayF& ref, double range) {
  require_same_shape(x, ref, "ssim");
  require_2d(x, "ssim");
  constexpr Index kWin = 11;
  if (x.dim(0) < kWin || x.dim(1) < kWin) {
    throw ShapeError("ssim: image " + shape_string(x.shape()) + " smaller than the 11x11 window");
  }
  if (!(range > 0.0)) throw DomainError("ssim: dynamic range must be > 0");
  std::vector<double> w(kWin);
  double sum = 0.0;
  for (Index t = 0; t < kWin; ++t) {
    const double d = static_cast<double>(t) - 5.0;
    w[t] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    sum += w[t];
  }
  for (double& v : w) v /= sum;

  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  const NdArrayF mx = filter_valid(x, w), my = filter_valid(ref, w);
  const NdArrayF sxx = filter_valid(hadamard(x, x), w);
  const NdArrayF syy = filter_valid(hadamard(ref, ref), w);
  const NdArrayF sxy = filter_valid(hadamard(x, ref), w);
  double total = 0.0;
  for (Index i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

double hpsi(const NdArrayF& x, const NdArrayF& ref, double range) {
  require_same_shape(x, ref, "hpsi");
  require_2d(x, "hpsi");
  if (x.dim(0) < 8 || x.dim(1) < 8) throw ShapeError("hpsi: both sides must be >= 8");
  if (!(range > 0.0)) throw DomainError("hpsi: dynamic range must be > 0");
  constexpr double C = 30.0;
  constexpr double alpha = 4.2;
  constexpr Index kScales = 3;

  const double to255 = 255.0 / range;
  const NdArrayF a = haar_subsample(x * to255);
  const NdArrayF b = haar_subsample(ref * to255);

  double num = 0.0, den = 0.0;
  for (bool vertical : {false, true}) {
    const NdArrayF wa = haar_response(a, kScales, vertical);
    const NdArrayF wb = haar_response(b, kScales, vertical);
    const NdArrayF a1 = haar_response(a, 1, vertical), b1 = haar_response(b, 1, vertical);
    const NdArrayF a2 = haar_response(a, 2, vertical), b2 = haar_response(b, 2, vertical);
    for (Index i = 0; i < a.size(); ++i) {
      const double weight = std::max(std::abs(wa[i]), std::abs(wb[i]));
      auto sim = [&](double p, double q) {
        p = std::abs(p);
        q = std::abs(q);
        return (2.0 * p * q + C) / (p * p + q * q + C);
      };
      const double local = 0.5 * (sim(a1[i], b1[i]) + sim(a2[i], b2[i]));
      num += logistic(local, alpha) * weight;
      den += weight;
    }
  }
  // Two flat images carry no weight; treat them as identical.
  if (den == 0.0) return 1.0;
  const double s = logit(num / den, alpha);
  return s * s;
}

NdArrayF xy_slice(const NdArrayF& volume, Index t) {
  if (volume.rank() != 3) throw ShapeError("xy_slice: expected (Nx, Ny, Nt)");
  if (t >= volume.dim(2)) throw DomainError("xy_slice: slice index out of range");
  NdArrayF out({volume.dim(0), volume.dim(1)});
  for (Index i = 0; i < volume.dim(0); ++i)
    for (Index j = 0; j < volume.dim(1); ++j) out(i, j) = volume(i, j, t);
  return out;
}

MetricReport evaluate(const NdArrayF& x, const NdArrayF& ref, const MetricOptions& opts) {
  require_same_shape(x, ref, "evaluate");
  MetricReport report;
  if (x.rank() == 2) {
    report.slices.push_back(slice_metrics(x, ref, opts));
  } else if (x.rank() == 3) {
    for (Index t = 0; t < x.dim(2); ++t) {
      report.slices.push_back(slice_metrics(xy_slice(x, t), xy_slice(ref, t), opts));
    }
  } else {
    throw ShapeError("evaluate: expected 2-D or (Nx, Ny, Nt) input, got " + shape_string(x.shape()));
  }
  const double n = static_cast<double>(report.slices.size());
  for (const auto& s : report.slices) {
    report.mean.psnr += s.psnr / n;
    report.mean.nrmse += s.nrmse / n;
    report.mean.ssim += s.ssim / n;
    report.mean.hpsi += s.hpsi / n;
  }
  return report;
}

MetricReport evaluate(const NdArrayC& x, const NdArrayC& ref, const MetricOptions& opts) {
  return evaluate(magnitude(x), magnitude(ref), opts);
}

void MetricReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << "slice,psnr,nrmse,ssim,hpsi\n" << std::setprecision(17);
  auto row = [&](const std::string& label, const SliceMetrics& m) {
    f << label << ',' << m.psnr << ',' << m.nrmse << ',' << m.ssim << ',' << m.hpsi << '\n';
  };
  for (Index i = 0; i < slices.size(); ++i) row(std::to_string(i), slices[i]);
  row("mean", mean);
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace recon::metrics
