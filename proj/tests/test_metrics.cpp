#include <fstream>
#include <sstream>

#include "recon/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace recon;
using namespace recon::metrics;
using testing::random_real;
using oracle::hpsi_oracle;
using oracle::ssim_oracle;

TEST_CASE("psnr and nrmse") {
  Rng rng(1);
  NdArrayF ref = random_real({16, 16}, rng);
  for (double& v : ref.data()) v = 0.5 + 0.5 * v;
  CHECK(std::isinf(psnr(ref, ref, 1.0)));
  CHECK(psnr(ref, ref, 1.0) > 0.0);
  const NdArrayF shifted = ref + NdArrayF({16, 16}, 0.1);
  CHECK(psnr(shifted, ref, 1.0) == doctest::Approx(20.0).epsilon(1e-12));
  const NdArrayF noisy = shifted + random_real({16, 16}, rng) * 0.05;
  CHECK(psnr(noisy, ref, 1.0) < psnr(shifted, ref, 1.0));
  const double mse = squared_norm(noisy - ref) / 256.0;
  CHECK(psnr(noisy, ref, 2.0) == doctest::Approx(10.0 * std::log10(4.0 / mse)).epsilon(1e-13));
  const double peak = *std::max_element(ref.data().begin(), ref.data().end());
  CHECK(psnr(noisy, ref) == psnr(noisy, ref, peak));

  CHECK(nrmse(ref, ref) == 0.0);
  CHECK(nrmse(NdArrayF({16, 16}, 0.0), ref) == 1.0);
  CHECK(nrmse(ref * 2.0, ref) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(nrmse(noisy, ref) >= 0.0);
  CHECK_THROWS_AS(nrmse(ref, NdArrayF({16, 16}, 0.0)), DomainError);
  CHECK_THROWS_AS(psnr(ref, NdArrayF({4, 4}), 1.0), ShapeError);
}

TEST_CASE("ssim") {
  Rng rng(2);
  for (int trial = 0; trial < 4; ++trial) {
    const NdArrayF a = random_real({32, 32}, rng), b = random_real({32, 32}, rng);
    const NdArrayF c = a + b * 0.3;
    CHECK(std::abs(ssim(a, c, 2.0) - ssim_oracle(a, c, 2.0)) <= 1e-10);
    CHECK(std::abs(ssim(a, b, 2.0) - ssim_oracle(a, b, 2.0)) <= 1e-10);
    CHECK(ssim(a, c, 2.0) == doctest::Approx(ssim(c, a, 2.0)).epsilon(1e-14));
    CHECK(ssim(a, c, 2.0) <= 1.0);
    CHECK(ssim(a, a, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
  }
  // Constant images: only the luminance term differs from 1.
  const double lum = (2 * 0.5 * 0.6 + 1e-4) / (0.25 + 0.36 + 1e-4);
  CHECK(lum == doctest::Approx(0.98361).epsilon(1e-5));
  CHECK(ssim(NdArrayF({16, 16}, 0.5), NdArrayF({16, 16}, 0.6), 1.0) == doctest::Approx(lum).epsilon(1e-12));
  CHECK_THROWS_AS(ssim(NdArrayF({8, 8}), NdArrayF({8, 8})), ShapeError);
}

TEST_CASE("HaarPSI") {
  Rng rng(3);
  for (int trial = 0; trial < 4; ++trial) {
    NdArrayF a = random_real({32, 32}, rng);
    for (double& v : a.data()) v = 0.5 + 0.5 * v;
    const NdArrayF b = a + random_real({32, 32}, rng) * 0.1;
    const double h = hpsi(a, b, 1.0);
    CHECK(std::abs(h - hpsi_oracle(a, b, 1.0)) <= 1e-10);
    CHECK(h > 0.0);
    CHECK(h <= 1.0);
    CHECK(h == doctest::Approx(hpsi(b, a, 1.0)).epsilon(1e-13));
    CHECK(hpsi(a, a, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  const NdArrayF a = random_real({33, 30}, rng), b = random_real({33, 30}, rng);
  CHECK(std::abs(hpsi(a, b, 2.0) - hpsi_oracle(a, b, 2.0)) <= 1e-10);
  CHECK(hpsi(a, b, 2.0) > 0.0);
}

TEST_CASE("evaluate report and CSV") {
  Rng rng(4);
  NdArrayF ref({16, 16, 3});
  for (double& v : ref.data()) v = rng.uniform(0.1, 1.0);
  const NdArrayF x = ref + random_real({16, 16, 3}, rng) * 0.05;
  const MetricReport r = evaluate(x, ref, {1.0, 1.0});
  REQUIRE(r.slices.size() == 3);
  double mean_psnr = 0.0;
  for (Index t = 0; t < 3; ++t) {
    const NdArrayF xs = xy_slice(x, t), rs = xy_slice(ref, t);
    CHECK(r.slices[t].psnr == psnr(xs, rs, 1.0));
    CHECK(r.slices[t].ssim == ssim(xs, rs, 1.0));
    CHECK(r.slices[t].hpsi == hpsi(xs, rs, 1.0));
    mean_psnr += r.slices[t].psnr / 3.0;
  }
  CHECK(r.mean.psnr == doctest::Approx(mean_psnr).epsilon(1e-14));

  const MetricReport same = evaluate(ref, ref, {1.0, 1.0});
  CHECK(std::isinf(same.mean.psnr));
  CHECK(same.mean.nrmse == 0.0);
  CHECK(same.mean.ssim == doctest::Approx(1.0).epsilon(1e-12));

  testing::TempDir dir("metrics");
  r.write_csv(dir / "m.csv");
  std::ifstream f(dir / "m.csv");
  std::vector<std::string> lines;
  for (std::string line; std::getline(f, line);) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "slice,psnr,nrmse,ssim,hpsi");
  CHECK(lines[1].rfind("0,", 0) == 0);
  CHECK(lines[4].rfind("mean,", 0) == 0);
  std::istringstream row(lines[4].substr(5));
  std::string field;
  std::getline(row, field, ',');
  CHECK(std::stod(field) == doctest::Approx(r.mean.psnr).epsilon(1e-15));

  // Complex inputs are compared by magnitude.
  NdArrayC zc({16, 16, 3}), rc({16, 16, 3});
  for (Index i = 0; i < ref.size(); ++i) {
    zc[i] = std::polar(x[i], rng.uniform(0.0, 6.0));
    rc[i] = std::polar(ref[i], rng.uniform(0.0, 6.0));
  }
  CHECK(evaluate(zc, rc, {1.0, 1.0}).mean.ssim == doctest::Approx(r.mean.ssim).epsilon(1e-12));
  CHECK_THROWS_AS(evaluate(NdArrayF({4}), NdArrayF({4})), ShapeError);
  CHECK_THROWS_AS(xy_slice(ref, 3), DomainError);
}
