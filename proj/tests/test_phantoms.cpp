#include <numbers>

#include "recon/phantoms.hpp"
#include "support.hpp"

using namespace recon;
using namespace recon::phantom;

namespace {

// True when pixel (i, j) lies inside the bounding circle of ellipse e, grown by two pixels.
bool near_ellipse(const EllipseSpec& e, Index n, Index i, Index j) {
  const double h = 2.0 / static_cast<double>(n);
  const double x = -1.0 + h * (static_cast<double>(j) + 0.5);
  const double y = 1.0 - h * (static_cast<double>(i) + 0.5);
  const double r = std::max(e.a, e.b) + 2.0 * h;
  return (x - e.cx) * (x - e.cx) + (y - e.cy) * (y - e.cy) <= r * r;
}

}  // namespace

TEST_CASE("Shepp-Logan support, range and symmetry") {
  const Index n = 128;
  const NdArrayF img = shepp_logan(n);
  CHECK(img(n / 2, n / 2) > 0.0);
  CHECK(img(0, 0) == 0.0);
  CHECK(img(n - 1, n - 1) == 0.0);
  CHECK(img(n / 2, 0) == 0.0);
  CHECK(*std::max_element(img.data().begin(), img.data().end()) == doctest::Approx(1.0));
  for (double v : img.data()) CHECK((v >= 0.0 && v <= 1.0));

  // Mirror symmetry x -> -x outside the lateral and bottom ellipses, which are not mirror pairs.
  const auto table = shepp_logan_ellipses();
  Index compared = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      bool masked = false;
      for (Index k : {Index{2}, Index{3}, Index{7}, Index{9}}) {
        masked = masked || near_ellipse(table[k], n, i, j) || near_ellipse(table[k], n, i, n - 1 - j);
      }
      if (masked) continue;
      CHECK(std::abs(img(i, j) - img(i, n - 1 - j)) <= 1e-12);
      ++compared;
    }
  CHECK(compared > n * n / 2);

  const NdArrayF small = shepp_logan(16);
  for (double v : small.data()) CHECK((std::isfinite(v) && v >= 0.0 && v <= 1.0));
  CHECK_THROWS_AS(shepp_logan(8), DomainError);
}

TEST_CASE("Shepp-Logan is consistent across resolutions") {
  const NdArrayF fine = shepp_logan(128), coarse = shepp_logan(64);
  NdArrayF pooled({64, 64});
  for (Index i = 0; i < 64; ++i)
    for (Index j = 0; j < 64; ++j)
      pooled(i, j) = 0.25 * (fine(2 * i, 2 * j) + fine(2 * i + 1, 2 * j) + fine(2 * i, 2 * j + 1) + fine(2 * i + 1, 2 * j + 1));
  CHECK(testing::rel_diff(pooled, coarse) <= 0.05);
}

TEST_CASE("random head phantoms differ from the evaluation phantom") {
  const NdArrayF a = random_head_phantom(64, 1), b = random_head_phantom(64, 1), c = random_head_phantom(64, 2);
  CHECK(a == b);
  CHECK(!(a == c));
  CHECK(testing::rel_diff(a, shepp_logan(64)) > 0.01);
  for (double v : c.data()) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("dynamic phantom") {
  DynamicPhantomSpec still = DynamicPhantomSpec::cardiac();
  still.amplitude = 0.0;
  const NdArrayC s = dynamic_phantom(still, 32, 5);
  for (Index t = 1; t < 5; ++t)
    for (Index i = 0; i < 32; ++i)
      for (Index j = 0; j < 32; ++j) CHECK(s(i, j, t) == s(i, j, 0));

  const NdArrayC cine = dynamic_phantom(DynamicPhantomSpec::cardiac(), 48, 30);
  CHECK(cine.shape() == Shape{48, 48, 30});
  bool moves = false;
  for (Index i = 0; i < 48 * 48; ++i) moves = moves || std::abs(cine(i / 48, i % 48, 7) - cine(i / 48, i % 48, 0)) > 1e-3;
  CHECK(moves);
  // Phase is a fixed smooth map: identical across frames wherever the magnitude is positive.
  for (Index i = 0; i < 48; ++i)
    for (Index j = 0; j < 48; ++j)
      if (std::abs(cine(i, j, 0)) > 0.0 && std::abs(cine(i, j, 11)) > 0.0)
        CHECK(std::abs(std::arg(cine(i, j, 11) / cine(i, j, 0))) <= 1e-12);
  double max_mag = 0.0;
  for (const Complex& v : cine.data()) max_mag = std::max(max_mag, std::abs(v));
  CHECK(max_mag <= 1.0);

  DynamicPhantomSpec bad = DynamicPhantomSpec::cardiac();
  bad.amplitude = 1.0;
  CHECK_THROWS_AS(dynamic_phantom(bad, 32, 4), DomainError);
  bad = DynamicPhantomSpec::cardiac();
  bad.pulsing.push_back(99);
  CHECK_THROWS_AS(dynamic_phantom(bad, 32, 4), DomainError);
}

TEST_CASE("pulsing area averages to the base area") {
  DynamicPhantomSpec spec;
  spec.base = {{0.0, 0.0, 0.85, 0.85, 0.0, 0.3}, {0.1, -0.1, 0.3, 0.2, 0.4, 0.5}};
  spec.pulsing = {1};
  spec.amplitude = 0.12;
  spec.phase = {0, 0, 0, 0, 0, 0};
  const Index n = 96, nt = 30;
  const NdArrayC seq = dynamic_phantom(spec, n, nt);
  const double pixel = 4.0 / static_cast<double>(n * n);
  double mean_area = 0.0;
  for (Index t = 0; t < nt; ++t) {
    double area = 0.0;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) area += std::clamp((std::abs(seq(i, j, t)) - 0.3) / 0.5, 0.0, 1.0) * pixel;
    mean_area += area / static_cast<double>(nt);
  }
  const double base = std::numbers::pi * 0.3 * 0.2;
  CHECK(std::abs(mean_area - base) <= 0.02 * base);
}

TEST_CASE("synthetic coil sensitivities") {
  for (Index nc : {Index{1}, Index{4}, Index{8}, Index{12}}) {
    const auto coils = synth_coils(64, nc);
    CHECK(coils.maps.shape() == Shape{nc, 64, 64});
    for (Index i = 0; i < 64; ++i)
      for (Index j = 0; j < 64; ++j) {
        double sos = 0.0;
        for (Index c = 0; c < nc; ++c) sos += std::norm(coils.maps(c, i, j));
        CHECK(std::abs(sos - 1.0) <= 1e-12);
        if (nc == 1) CHECK(std::abs(std::abs(coils.maps(0, i, j)) - 1.0) <= 1e-12);
      }
  }
  const auto twelve = synth_coils(64, 12);
  Index worst = 12;
  for (Index i = 0; i < 64; ++i)
    for (Index j = 0; j < 64; ++j) {
      Index covered = 0;
      for (Index c = 0; c < 12; ++c) covered += std::abs(twelve.maps(c, i, j)) > 0.05 ? 1 : 0;
      worst = std::min(worst, covered);
    }
  CHECK(worst >= 2);
  CHECK_THROWS_AS(synth_coils(64, 0), DomainError);

  mri::CoilProfile dead{NdArrayC({2, 4, 4}, Complex(0, 0))};
  CHECK_THROWS_AS(dead.validate(), DomainError);
}
