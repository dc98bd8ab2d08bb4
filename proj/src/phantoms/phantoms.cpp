#include "recon/phantoms.hpp"

#include <cmath>
#include <numbers>

namespace recon::phantom {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double coord_x(Index j, Index n, double sub) {
  return 2.0 * (static_cast<double>(j) + sub) / static_cast<double>(n) - 1.0;
}
double coord_y(Index i, Index n, double sub) {
  return 1.0 - 2.0 * (static_cast<double>(i) + sub) / static_cast<double>(n);
}

bool inside(const EllipseSpec& e, double x, double y) {
  const double c = std::cos(e.theta), s = std::sin(e.theta);
  const double dx = x - e.cx, dy = y - e.cy;
  const double u = (dx * c + dy * s) / e.a;
  const double v = (-dx * s + dy * c) / e.b;
  return u * u + v * v <= 1.0;
}

}  // namespace

NdArrayF render_ellipses(const std::vector<EllipseSpec>& ellipses, Index n, Index supersample) {
  if (n < 1 || supersample < 1) throw DomainError("render_ellipses: sizes must be >= 1");
  for (const auto& e : ellipses) {
    if (!(e.a > 0.0 && e.b > 0.0)) throw DomainError("render_ellipses: semi-axes must be > 0");
  }
  NdArrayF img({n, n}, 0.0);
  const double inv = 1.0 / static_cast<double>(supersample * supersample);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Index si = 0; si < supersample; ++si)
        for (Index sj = 0; sj < supersample; ++sj) {
          const double y = coord_y(i, n, (static_cast<double>(si) + 0.5) / static_cast<double>(supersample));
          const double x = coord_x(j, n, (static_cast<double>(sj) + 0.5) / static_cast<double>(supersample));
          for (const auto& e : ellipses) {
            if (inside(e, x, y)) acc += e.value;
          }
        }
      img(i, j) = acc * inv;
    }
  return img;
}

std::vector<EllipseSpec> shepp_logan_ellipses() {
  // cx, cy, a, b, theta, value; the classic intensities halved so the skull is 1
  return {
      {0.0, 0.0, 0.69, 0.92, 0.0, 1.0},
      {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.49},
      {0.22, 0.0, 0.11, 0.31, -18.0 * kDeg, -0.01},
      {-0.22, 0.0, 0.16, 0.41, 18.0 * kDeg, -0.01},
      {0.0, 0.35, 0.21, 0.25, 0.0, 0.005},
      {0.0, 0.1, 0.046, 0.046, 0.0, 0.005},
      {0.0, -0.1, 0.046, 0.046, 0.0, 0.005},
      {-0.08, -0.605, 0.046, 0.023, 0.0, 0.005},
      {0.0, -0.606, 0.023, 0.023, 0.0, 0.005},
      {0.06, -0.605, 0.023, 0.046, 0.0, 0.005},
  };
}

NdArrayF shepp_logan(Index n) {
  if (n < 16) throw DomainError("shepp_logan: N must be >= 16");
  NdArrayF img = render_ellipses(shepp_logan_ellipses(), n);
  for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

std::vector<EllipseSpec> random_head_ellipses(Rng& rng) {
  std::vector<EllipseSpec> e = shepp_logan_ellipses();
  const double sx = rng.uniform(0.85, 1.05), sy = rng.uniform(0.85, 1.05);
  e[0].a *= sx;
  e[0].b *= sy;
  e[1].a *= sx;
  e[1].b *= sy;
  e[0].theta = e[1].theta = rng.uniform(-0.15, 0.15);
  for (Index k = 2; k < e.size(); ++k) {
    e[k].cx = e[k].cx * sx + rng.uniform(-0.06, 0.06);
    e[k].cy = e[k].cy * sy + rng.uniform(-0.06, 0.06);
    e[k].a *= rng.uniform(0.7, 1.3);
    e[k].b *= rng.uniform(0.7, 1.3);
    e[k].theta += rng.uniform(-0.3, 0.3);
    e[k].value *= rng.uniform(0.5, 1.5);
  }
  const auto extra = 2 + rng.below(5);
  for (std::uint64_t k = 0; k < extra; ++k) {
    const double r = rng.uniform(0.0, 0.5), phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    EllipseSpec s;
    s.cx = r * std::cos(phi) * sx;
    s.cy = r * std::sin(phi) * sy;
    s.a = rng.uniform(0.02, 0.12);
    s.b = rng.uniform(0.02, 0.12);
    s.theta = rng.uniform(0.0, std::numbers::pi);
    s.value = rng.uniform(-0.01, 0.015);
    e.push_back(s);
  }
  return e;
}

NdArrayF random_head_phantom(Index n, std::uint64_t seed) {
  Rng rng = Rng::substream(seed, "head-phantom");
  NdArrayF img = render_ellipses(random_head_ellipses(rng), n);
  for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

void DynamicPhantomSpec::validate() const {
  if (!(amplitude >= 0.0 && amplitude < 1.0)) {
    throw DomainError("dynamic phantom: pulse amplitude must lie in [0, 1)");
  }
  for (Index k : pulsing) {
    if (k >= base.size()) throw DomainError("dynamic phantom: pulsing index out of range");
  }
  for (const auto& e : base) {
    if (!(e.a > 0.0 && e.b > 0.0)) throw DomainError("dynamic phantom: semi-axes must be > 0");
  }
}

DynamicPhantomSpec DynamicPhantomSpec::cardiac() {
  DynamicPhantomSpec spec;
  spec.base = {
      {0.0, 0.0, 0.85, 0.65, 0.0, 0.35},           // torso
      {-0.45, 0.05, 0.28, 0.42, 0.15, -0.25},      // right lung
      {0.48, 0.05, 0.25, 0.40, -0.15, -0.25},      // left lung
      {0.08, 0.02, 0.26, 0.22, 0.5, 0.25},         // myocardium
      {0.08, 0.02, 0.17, 0.14, 0.5, 0.35},         // blood pool
      {-0.12, 0.18, 0.08, 0.07, 0.0, 0.2},         // vessel
      {0.0, -0.48, 0.09, 0.09, 0.0, 0.3},          // spine
      {-0.3, -0.38, 0.05, 0.12, 0.6, 0.15},
  };
  spec.pulsing = {3, 4};
  return spec;
}

DynamicPhantomSpec DynamicPhantomSpec::random_cardiac(Rng& rng) {
  DynamicPhantomSpec spec = cardiac();
  const double sx = rng.uniform(0.85, 1.1), sy = rng.uniform(0.85, 1.1);
  spec.base[0].a *= sx;
  spec.base[0].b *= sy;
  spec.base[0].theta = rng.uniform(-0.2, 0.2);
  for (Index k = 1; k < spec.base.size(); ++k) {
    auto& e = spec.base[k];
    e.cx = e.cx * sx + rng.uniform(-0.07, 0.07);
    e.cy = e.cy * sy + rng.uniform(-0.07, 0.07);
    e.a *= rng.uniform(0.75, 1.25);
    e.b *= rng.uniform(0.75, 1.25);
    e.theta += rng.uniform(-0.4, 0.4);
    e.value *= rng.uniform(0.7, 1.3);
  }
  // Keep the blood pool concentric with the myocardium and inside it.
  spec.base[4].cx = spec.base[3].cx;
  spec.base[4].cy = spec.base[3].cy;
  spec.base[4].theta = spec.base[3].theta;
  spec.base[4].a = std::min(spec.base[4].a, 0.8 * spec.base[3].a);
  spec.base[4].b = std::min(spec.base[4].b, 0.8 * spec.base[3].b);
  spec.amplitude = rng.uniform(0.06, 0.18);
  spec.cycle_offset = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (double& c : spec.phase) c += rng.uniform(-0.3, 0.3);
  return spec;
}

NdArrayC dynamic_phantom(const DynamicPhantomSpec& spec, Index n, Index n_frames) {
  spec.validate();
  if (n < 8 || n_frames < 1) throw DomainError("dynamic_phantom: need N >= 8 and n_frames >= 1");
  NdArrayF phase({n, n});
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double x = coord_x(j, n, 0.5), y = coord_y(i, n, 0.5);
      const auto& c = spec.phase;
      phase(i, j) = c[0] + c[1] * x + c[2] * y + c[3] * x * y + c[4] * x * x + c[5] * y * y;
    }
  NdArrayC out({n, n, n_frames});
  for (Index t = 0; t < n_frames; ++t) {
    const double cycle =
        2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n_frames) + spec.cycle_offset;
    std::vector<EllipseSpec> frame = spec.base;
    const double scale = 1.0 + spec.amplitude * std::sin(cycle);
    for (Index k : spec.pulsing) {
      frame[k].a *= scale;
      frame[k].b *= scale;
    }
    const NdArrayF mag = render_ellipses(frame, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        const double m = std::clamp(mag(i, j), 0.0, 1.0);
        out(i, j, t) = std::polar(m, phase(i, j));
      }
  }
  return out;
}

mri::CoilProfile synth_coils(Index n, Index n_coils) {
  if (n_coils < 1 || n < 1) throw DomainError("synth_coils: need N >= 1 and n_c >= 1");
  constexpr double kRing = 1.2;
  constexpr double kWidth = 0.8;
  NdArrayC maps({n_coils, n, n});
  for (Index c = 0; c < n_coils; ++c) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(n_coils);
    const double px = kRing * std::cos(angle), py = kRing * std::sin(angle);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        const double x = coord_x(j, n, 0.5), y = coord_y(i, n, 0.5);
        const double d2 = (x - px) * (x - px) + (y - py) * (y - py);
        const double mag = std::exp(-d2 / (2.0 * kWidth * kWidth));
        const double ph = angle + 0.8 * (x * std::sin(angle) - y * std::cos(angle));
        maps(c, i, j) = std::polar(mag, ph);
      }
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      double sos = 0.0;
      for (Index c = 0; c < n_coils; ++c) sos += std::norm(maps(c, i, j));
      const double inv = 1.0 / std::sqrt(sos);
      for (Index c = 0; c < n_coils; ++c) maps(c, i, j) *= inv;
    }
  mri::CoilProfile profile{std::move(maps)};
  profile.validate();
  return profile;
}

}  // namespace recon::phantom
