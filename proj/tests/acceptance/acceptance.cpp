// Acceptance criteria runner: `acceptance [--criterion N]` prints one
// PASS/FAIL line per criterion and exits non-zero if any fails.
#include <CLI11.hpp>

#include <chrono>
#include <complex>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "../oracles.hpp"
#include "recon/convnet.hpp"
#include "recon/dictionary.hpp"
#include "recon/metrics.hpp"
#include "recon/ndf.hpp"
#include "recon/patchwork.hpp"
#include "recon/phantoms.hpp"
#include "recon/pipeline.hpp"
#include "recon/radial.hpp"
#include "recon/rng.hpp"
#include "recon/solvers.hpp"

using namespace recon;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a named sub-check; every failure is listed in the detail text.
  void require(bool ok, const std::string& what) {
    if (!ok) detail << "failed: " << what << "; ";
    pass = pass && ok;
  }
};

NdArrayF random_real(const Shape& shape, Rng& rng) {
  NdArrayF a(shape);
  for (double& v : a.data()) v = rng.normal();
  return a;
}

NdArrayC random_complex(const Shape& shape, Rng& rng) {
  NdArrayC a(shape);
  for (Complex& v : a.data()) v = {rng.normal(), rng.normal()};
  return a;
}

Eigen::MatrixXd random_matrix(Index rows, Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

Eigen::MatrixXd random_orthonormal(Index d, Rng& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(d, d, rng));
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
}

// Dot products accumulated in extended precision, so the measured adjoint gap
// reflects the operators rather than cancellation in the final sum.
template <typename T>
std::complex<long double> precise_dot(const NdArray<T>& a, const NdArray<T>& b) {
  std::complex<long double> sum = 0.0L;
  for (Index i = 0; i < a.size(); ++i) {
    const std::complex<long double> u(std::real(a[i]), std::imag(a[i])), v(std::real(b[i]), std::imag(b[i]));
    sum += std::conj(u) * v;
  }
  return sum;
}

template <typename T>
double adjoint_gap(const NdArray<T>& ax, const NdArray<T>& y, const NdArray<T>& x, const NdArray<T>& aty) {
  const auto a = precise_dot(ax, y), b = precise_dot(x, aty);
  return static_cast<double>(std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
}

template <typename T>
double rel_diff(const NdArray<T>& a, const NdArray<T>& b) {
  return norm2(a - b) / std::max(norm2(b), 1e-300);
}

class WorkDir {
 public:
  explicit WorkDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("recon-accept-" + tag + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~WorkDir() { fs::remove_all(path_); }
  WorkDir(const WorkDir&) = delete;
  WorkDir& operator=(const WorkDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// 1 -----------------------------------------------------------------------

Outcome adjoint_exactness() {
  Outcome o;
  Rng rng(101);
  const ct::RayTransform R(ct::ParallelBeamGeometry::make(64, 90));
  double worst_ct = 0.0;
  for (int k = 0; k < 50; ++k) {
    const NdArrayF x = random_real(R.domain_shape(), rng), y = random_real(R.range_shape(), rng);
    worst_ct = std::max(worst_ct, adjoint_gap(R.forward(x), y, x, R.adjoint(y)));
  }
  const Index n = 32;
  const auto coils = phantom::synth_coils(n, 4);
  const auto frames = mri::golden_angle_frames(3, 5, 64);
  const mri::RadialEncoder E({n, n, 3}, coils, frames);
  double worst_mri = 0.0;
  for (int k = 0; k < 50; ++k) {
    const NdArrayC x = random_complex({n, n, 3}, rng), y = random_complex(E.range_shape(), rng);
    worst_mri = std::max(worst_mri, adjoint_gap(mri::radial_encode(x, coils, frames), y, x,
                                                mri::radial_encode_adjoint(y, coils, frames)));
  }
  o.require(worst_ct <= 1e-12, "ray transform");
  o.require(worst_mri <= 1e-10, "radial encoder");
  o.detail << "worst relative error ct=" << worst_ct << " mri=" << worst_mri;
  return o;
}

// 2 -----------------------------------------------------------------------

Outcome patch_identity() {
  Outcome o;
  using patch::Boundary;
  const std::vector<patch::PatchScheme> schemes = {
      {{16, 16}, {4, 4}, {4, 4}},
      {{16, 16}, {4, 4}, {2, 2}},
      {{16, 16}, {4, 4}, {1, 1}},
      {{17, 13}, {5, 4}, {3, 3}, Boundary::ClampLast},
      {{32, 32}, {16, 16}, {8, 8}},
      {{12, 20}, {12, 4}, {1, 4}},
      {{9}, {3}, {2}, Boundary::ClampLast},
      {{32, 32, 12}, {16, 16, 4}, {2, 2, 2}},  // p/s = (8, 8, 2) as in the large example below
      {{64, 64, 8}, {16, 16, 2}, {2, 2, 1}},
      {{10, 11, 7}, {4, 3, 3}, {3, 2, 2}, Boundary::ClampLast},
      {{8, 8, 4}, {8, 8, 4}, {1, 1, 1}},
      {{6, 6, 6, 4}, {2, 3, 2, 2}, {2, 3, 1, 2}},
  };
  Rng rng(202);
  const patch::PatchDenoiser identity = [](const NdArrayF& p) { return p; };
  double worst = 0.0;
  for (const auto& s : schemes) {
    const NdArrayF x = random_real(s.volume, rng);
    worst = std::max(worst, rel_diff(patch::apply_prior_patchwise(x, s, identity), x));
  }
  o.require(worst <= 1e-12, "identity reproduction");
  const Index count = patch::enumerate_patches({{512, 512, 128}, {128, 128, 16}, {16, 16, 8}}).size();
  o.require(count == 9375, "patch count");
  o.detail << schemes.size() << " schemes, worst relative error " << worst << ", N_ps=" << count;
  return o;
}

// 3 -----------------------------------------------------------------------

Outcome convergence() {
  Outcome o;
  Rng rng(303);
  const Eigen::MatrixXd A = random_matrix(8, 12, rng);
  const Eigen::VectorXd x_true = Eigen::VectorXd::NullaryExpr(12, [&] { return rng.normal(); });
  const Eigen::VectorXd x_prior = Eigen::VectorXd::NullaryExpr(12, [&] { return rng.normal(); });
  const std::vector<double> deltas{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  const auto rows = solve::convergence_experiment(A, x_true, x_prior, deltas, [](double d) { return d; }, 7);
  bool monotone = rows.size() == deltas.size();
  double gap = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k > 0) monotone = monotone && rows[k].error < rows[k - 1].error;
    gap = std::max(gap, rows[k].shift_gap);
  }
  const double reduction = rows.front().error / rows.back().error;
  o.require(monotone, "monotone errors");
  o.require(reduction >= 10.0, "10x reduction");
  o.require(gap <= 1e-12, "shifted formulation");
  o.detail << "errors " << rows.front().error << " -> " << rows.back().error << " (x" << reduction
           << "), max shift gap " << gap;
  return o;
}

// 4 -----------------------------------------------------------------------

Outcome solver_cross_validation() {
  Outcome o;
  Rng rng(404);
  double worst_pcg = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Index m = 10 + static_cast<Index>(rng.below(30)), n = 5 + static_cast<Index>(rng.below(30));
    const double lambda = std::pow(10.0, rng.uniform(-2.0, 1.0));
    const Eigen::MatrixXd A = random_matrix(m, n, rng);
    const Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(m, [&] { return rng.normal(); });
    const Eigen::VectorXd p = Eigen::VectorXd::NullaryExpr(n, [&] { return rng.normal(); });
    const Eigen::VectorXd ref = solve::tikhonov_dense_oracle<double>(A, y, lambda, p);
    const DenseOperator<double> op(A);
    const NdArrayF ya({m}, std::vector<double>(y.data(), y.data() + m));
    const NdArrayF pa({n}, std::vector<double>(p.data(), p.data() + n));
    const auto res = solve::pcg_normal_solve<double>(op, ya, lambda, pa, 10 * n, 1e-15);
    const Eigen::VectorXd got = Eigen::Map<const Eigen::VectorXd>(res.x.data().data(), n);
    worst_pcg = std::max(worst_pcg, (got - ref).norm() / ref.norm());
  }
  o.require(worst_pcg <= 1e-8, "pcg vs dense oracle");

  ct::LowDoseModel model;
  model.geometry = ct::ParallelBeamGeometry::make(16, 24);
  const NdArrayF truth = phantom::shepp_logan(16);
  const NdArrayF consistent = ct::lowdose_forward(truth, model);
  const auto still = solve::landweber_kl(model, consistent, truth, truth, {1.0, 4, 0.0, 20});
  o.require(still.x == truth, "landweber stationary");

  NdArrayF x = random_real({16, 16}, rng);
  for (double& v : x.data()) v = 0.5 + 0.2 * v;
  const NdArrayF y = ct::lowdose_simulate(x * 0.9, model, 5);
  const NdArrayF g = ct::kl_gradient(x, y, model);
  const double h = 1e-5;
  double worst_fd = 0.0;
  for (int k = 0; k < 10; ++k) {
    const NdArrayF v = random_real({16, 16}, rng);
    const double fd = (ct::kl_divergence(ct::lowdose_forward(x + v * h, model), y) -
                       ct::kl_divergence(ct::lowdose_forward(x - v * h, model), y)) / (2.0 * h);
    worst_fd = std::max(worst_fd, std::abs(inner_product(g, v) - fd) / std::abs(fd));
  }
  o.require(worst_fd <= 1e-5, "KL gradient");
  o.detail << "pcg vs oracle " << worst_pcg << ", KL directional derivative " << worst_fd;
  return o;
}

// 5 -----------------------------------------------------------------------

Outcome trainer_gradient() {
  Outcome o;
  using namespace prior;
  Rng rng(505);
  ConvNetSpec spec;
  spec.layers = {{3, 1, 3, true, Activation::ReLU}, {3, 3, 1, true, Activation::None}};
  std::vector<double> w = ConvNet::glorot(spec, 9).weights();
  for (double& v : w) v += 0.1 * rng.normal();
  const NdArrayF x = random_real({6, 6}, rng), t = random_real({6, 6}, rng);
  std::vector<double> grad(w.size(), 0.0);
  ConvNet(spec, w).accumulate_gradient(x, t, 1.0, grad);
  auto loss = [&](const std::vector<double>& ww) {
    const NdArrayF r = ConvNet(spec, ww).forward(x) - t;
    return inner_product(r, r);
  };
  double worst = 0.0;
  const double h = 1e-6;
  for (std::size_t k = 0; k < w.size(); ++k) {
    auto wp = w, wm = w;
    wp[k] += h;
    wm[k] -= h;
    const double fd = (loss(wp) - loss(wm)) / (2.0 * h);
    worst = std::max(worst, std::abs(grad[k] - fd) / std::max(std::abs(fd), 1e-3));
  }
  o.require(worst <= 1e-4, "gradient");

  std::vector<NdArrayF> inputs;
  for (int k = 0; k < 32; ++k) inputs.push_back(random_real({8, 8}, rng));
  ConvNet init = ConvNet::glorot(ConvNetSpec::residual_net(4, 3, 3), 21);
  for (double& v : init.weights()) v *= 0.3;
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 8;
  cfg.seed = 3;
  TrainLog log;
  train_convnet(init, inputs, inputs, cfg, &log);
  o.require(log.final_loss <= 1e-4, "identity training");
  o.detail << "worst gradient error " << worst << ", identity loss " << log.initial_loss << " -> "
           << log.final_loss;
  return o;
}

// 6 -----------------------------------------------------------------------

Outcome sparse_coding() {
  Outcome o;
  Rng rng(606);
  double worst_omp = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd q = random_orthonormal(16, rng);
    const Index s = 1 + trial % 3;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(16);
    Index placed = 0;
    while (placed < s) {
      const auto k = static_cast<Index>(rng.below(16));
      if (g(k) != 0.0) continue;
      g(k) = rng.normal() + (rng.uniform() < 0.5 ? -2.0 : 2.0);
      ++placed;
    }
    const auto res = prior::omp(q, q * g, s);
    worst_omp = std::max(worst_omp, (res.coefficients - g).cwiseAbs().maxCoeff());
  }
  o.require(worst_omp <= 1e-10, "omp recovery");

  const Eigen::MatrixXd q = random_orthonormal(16, rng);
  Eigen::MatrixXd data(16, 800);
  for (Index n = 0; n < 800; ++n) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(16);
    const auto a = static_cast<Index>(rng.below(16));
    auto b = static_cast<Index>(rng.below(15));
    if (b >= a) ++b;
    g(a) = rng.normal() + (rng.uniform() < 0.5 ? -3.0 : 3.0);
    g(b) = rng.normal();
    data.col(n) = q * g;
  }
  const auto d = prior::itkrm_train(data, {16}, {16, 2, 3, 11}, q);
  const double drift = (d.atoms - q).cwiseAbs().maxCoeff();
  o.require(drift <= 1e-10, "itkrm fixed point");
  o.detail << "worst omp coefficient error " << worst_omp << ", itkrm atom drift " << drift;
  return o;
}

// 7 -----------------------------------------------------------------------

Outcome metric_oracles() {
  Outcome o;
  Rng rng(707);
  double worst_ssim = 0.0, worst_hpsi = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    NdArrayF a = random_real({32, 32}, rng);
    for (double& v : a.data()) v = 0.5 + 0.2 * v;
    const NdArrayF b = a + random_real({32, 32}, rng) * (0.02 * (trial + 1));
    worst_ssim = std::max(worst_ssim, std::abs(metrics::ssim(b, a, 1.0) - oracle::ssim_oracle(b, a, 1.0)));
    worst_hpsi = std::max(worst_hpsi, std::abs(metrics::hpsi(b, a, 1.0) - oracle::hpsi_oracle(b, a, 1.0)));
  }
  o.require(worst_ssim <= 1e-10, "ssim");
  o.require(worst_hpsi <= 1e-10, "hpsi");

  NdArrayF ref = random_real({16, 16}, rng);
  for (double& v : ref.data()) v = 0.5 + 0.1 * v;
  const double shift = metrics::psnr(ref + NdArrayF({16, 16}, 0.1), ref, 1.0);
  const double zero = metrics::nrmse(NdArrayF({16, 16}, 0.0), ref);
  o.require(std::abs(shift - 20.0) <= 1e-12, "psnr shift case");
  o.require(zero == 1.0, "nrmse of zero");
  o.detail << "ssim " << worst_ssim << ", hpsi " << worst_hpsi << ", shift psnr " << shift
           << ", nrmse(0, ref) " << zero;
  return o;
}

// 8 and 10 ----------------------------------------------------------------

struct CtStages {
  metrics::SliceMetrics fbp, prior, rec;
};

metrics::SliceMetrics measure(const pipeline::Config& c, const NdArrayF& x, const NdArrayF& ref) {
  return metrics::evaluate(x, ref, {c.real("psnr_peak"), c.real("metric_range")}).mean;
}

// Full CT pipeline with default settings apart from the listed overrides.
CtStages run_ct(const fs::path& dir, const std::map<std::string, std::string>& overrides) {
  using namespace pipeline;
  Config c = Config::defaults(Mode::Ct);
  c.set("work_dir", dir.string());
  for (const auto& [k, v] : overrides) c.set(k, v);
  run_phantom(c);
  run_simulate(c);
  if (c.text("method") == "prior") run_train(c);
  run_reconstruct(c);
  const NdArrayF truth = ndf_read_real(dir / kGroundTruth);
  CtStages s;
  s.fbp = measure(c, ndf_read_real(dir / kXIni), truth);
  if (fs::exists(dir / kXPrior)) s.prior = measure(c, ndf_read_real(dir / kXPrior), truth);
  s.rec = measure(c, ndf_read_real(dir / kXRec), truth);
  return s;
}

Outcome ct_ordering() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  WorkDir dir("ct");
  const CtStages s = run_ct(dir.path(), {});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(s.prior.psnr >= s.fbp.psnr + 3.0, "CNN gain over FBP");
  o.require(std::abs(s.rec.psnr - s.prior.psnr) <= 1.5, "REC within 1.5 dB of CNN");
  o.require(s.rec.ssim >= s.prior.ssim - 0.02, "REC SSIM");
  o.require(seconds <= 300.0, "runtime");
  o.detail << "psnr fbp=" << s.fbp.psnr << " cnn=" << s.prior.psnr << " rec=" << s.rec.psnr << ", ssim cnn="
           << s.prior.ssim << " rec=" << s.rec.ssim << ", " << seconds << " s";
  return o;
}

Outcome baseline_ordering() {
  Outcome o;
  WorkDir cnn("cnn"), dic("dic"), tv("tv");
  const CtStages a = run_ct(cnn.path(), {});
  const CtStages d = run_ct(dic.path(), {{"prior", "dictionary"}});
  const CtStages t = run_ct(tv.path(), {{"method", "tv"}});
  o.require(t.rec.psnr > t.fbp.psnr, "TV over FBP");
  o.require(a.rec.psnr > d.rec.psnr, "REC over DIC");
  o.require(d.rec.psnr > t.rec.psnr, "DIC over TV");
  o.detail << "psnr fbp=" << t.fbp.psnr << " tv=" << t.rec.psnr << " dic=" << d.rec.psnr << " rec=" << a.rec.psnr;
  return o;
}

// 9 -----------------------------------------------------------------------

Outcome mri_ordering() {
  using namespace pipeline;
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  WorkDir dir("mri");
  Config c = Config::defaults(Mode::Mri);
  c.set("work_dir", dir.path().string());
  run_phantom(c);
  run_simulate(c);
  run_train(c);
  run_reconstruct(c);
  const metrics::MetricOptions opts{c.real("psnr_peak"), c.real("metric_range")};
  const NdArrayC truth = ndf_read_complex(dir.path() / kGroundTruth);
  const auto ini = metrics::evaluate(ndf_read_complex(dir.path() / kXIni), truth, opts).mean;
  const auto cnn = metrics::evaluate(ndf_read_complex(dir.path() / kXPrior), truth, opts).mean;
  const auto rec = metrics::evaluate(ndf_read_complex(dir.path() / kXRec), truth, opts).mean;
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(rec.psnr > cnn.psnr && cnn.psnr > ini.psnr, "psnr ordering");
  o.require(rec.nrmse < cnn.nrmse && cnn.nrmse < ini.nrmse, "nrmse ordering");
  o.require(c.integer("spokes_full") == 3 * c.integer("spokes_per_frame"), "3:1 spoke ratio");
  o.require(seconds <= 300.0, "runtime");
  o.detail << "psnr nufft=" << ini.psnr << " cnn=" << cnn.psnr << " rec=" << rec.psnr << ", nrmse " << ini.nrmse
           << " " << cnn.nrmse << " " << rec.nrmse << ", " << seconds << " s";
  return o;
}

// 11 ----------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream f(e.path(), std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    files[fs::relative(e.path(), dir).string()] = s.str();
  }
  return files;
}

int run_cli(const fs::path& config, const std::string& args) {
  const std::string cmd = std::string("\"") + RECON_CLI + "\" " + args + " --config \"" + config.string() +
                          "\" > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome reproducibility() {
  Outcome o;
  WorkDir dir("cli");
  std::ofstream(dir.path() / "ct.cfg") << "mode = ct\nwork_dir = " << (dir.path() / "ct").string()
                                       << "\nseed = 5\n";
  std::ofstream(dir.path() / "mri.cfg") << "mode = mri\nwork_dir = " << (dir.path() / "mri").string()
                                        << "\nseed = 5\nimage_size = 32\nn_frames = 8\nn_coils = 4\n"
                                           "spokes_per_frame = 5\nspokes_full = 15\nsamples_per_spoke = 32\n"
                                           "epochs = 3\n";
  const std::vector<std::string> sequence = {"phantom", "simulate", "train", "prior", "reconstruct",
                                             "evaluate", "render", "convergence"};
  Index runs = 0, compared = 0;
  for (const char* cfg : {"ct.cfg", "mri.cfg"}) {
    const fs::path config = dir.path() / cfg;
    const fs::path work = dir.path() / fs::path(cfg).stem();
    for (const auto& sub : sequence) {
      o.require(run_cli(config, sub) == 0, std::string(cfg) + " " + sub + " exit status");
      const auto first = snapshot(work);
      o.require(run_cli(config, sub) == 0, std::string(cfg) + " " + sub + " exit status");
      o.require(snapshot(work) == first, std::string(cfg) + " " + sub + " output bytes");
      runs += 2;
      compared += first.size();
    }
  }
  o.detail << runs << " CLI runs, " << compared << " file comparisons";
  return o;
}

struct Criterion {
  const char* name;
  Outcome (*run)();
};

const std::map<int, Criterion> kCriteria = {
    {1, {"adjoint exactness", adjoint_exactness}},
    {2, {"patch identity", patch_identity}},
    {3, {"Tikhonov convergence", convergence}},
    {4, {"solver cross-validation", solver_cross_validation}},
    {5, {"trainer gradient check", trainer_gradient}},
    {6, {"sparse coding oracle", sparse_coding}},
    {7, {"metric oracles", metric_oracles}},
    {8, {"CT pipeline ordering", ct_ordering}},
    {9, {"MRI pipeline ordering", mri_ordering}},
    {10, {"baseline ordering", baseline_ordering}},
    {11, {"reproducibility", reproducibility}},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Criterion number (repeatable); all when omitted")
      ->check(CLI::Range(1, static_cast<int>(kCriteria.size())));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty())
    for (const auto& [id, c] : kCriteria) selected.push_back(id);

  bool all = true;
  for (int id : selected) {
    const Criterion& c = kCriteria.at(id);
    bool pass = false;
    std::string detail;
    try {
      const Outcome o = c.run();
      pass = o.pass;
      detail = o.detail.str();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::cout << "criterion " << id << " " << (pass ? "PASS" : "FAIL") << " " << c.name << ": " << detail
              << std::endl;
    all = all && pass;
  }
  return all ? 0 : 1;
}
