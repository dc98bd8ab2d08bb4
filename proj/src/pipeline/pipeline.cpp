#include "recon/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <span>

#include "recon/metrics.hpp"
#include "recon/ndf.hpp"
#include "recon/phantoms.hpp"

namespace recon::pipeline {
namespace {

// Runs one named stage; errors keep their category (numerical or not) and
// gain the stage name.
template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("stage ") + name + ": " + e.what());
  } catch (const Error& e) {
    throw Error(std::string("stage ") + name + ": " + e.what());
  }
}

patch::Boundary boundary(const Config& cfg) {
  return cfg.text("boundary") == "clamp" ? patch::Boundary::ClampLast : patch::Boundary::ExactFit;
}

bool is(const Config& cfg, const char* key, const char* value) { return cfg.text(key) == value; }

patch::PatchScheme dictionary_scheme(const Config& cfg, const Shape& volume) {
  patch::PatchScheme s{volume, cfg.shape("dict_patch"), cfg.shape("dict_stride")};
  if (cfg.mode() == Mode::Ct) s.boundary = boundary(cfg);
  s.validate();
  return s;
}

patch::PatchScheme ct_scheme(const Config& cfg, const Shape& volume, const char* stride_key) {
  patch::PatchScheme s{volume, cfg.shape("patch"), cfg.shape(stride_key), boundary(cfg)};
  s.validate();
  return s;
}

template <typename T>
NdArray<T> stack(const std::vector<NdArray<T>>& items) {
  if (items.empty()) throw DomainError("cannot stack an empty list");
  Shape shape{items.size()};
  for (Index d : items.front().shape()) shape.push_back(d);
  std::vector<T> data;
  data.reserve(shape_size(shape));
  for (const auto& a : items) {
    require_same_shape(a, items.front(), "stack");
    data.insert(data.end(), a.data().begin(), a.data().end());
  }
  return NdArray<T>(shape, std::move(data));
}

std::vector<NdArrayF> unstack(const NdArrayF& a) {
  if (a.rank() < 2) throw ShapeError("expected a stack (n, ...), got " + shape_string(a.shape()));
  const Shape item(a.shape().begin() + 1, a.shape().end());
  const Index n = shape_size(item);
  std::vector<NdArrayF> out;
  for (Index k = 0; k < a.dim(0); ++k) {
    out.emplace_back(item, std::vector<double>(a.data().begin() + k * n, a.data().begin() + (k + 1) * n));
  }
  return out;
}

void require_file(const std::filesystem::path& p, const char* what) {
  if (!std::filesystem::exists(p)) {
    throw IoError(std::string("missing ") + what + " '" + p.string() + "'");
  }
}

void ensure_work_dir(const Config& cfg) {
  std::filesystem::create_directories(cfg.text("work_dir"));
}

double dictionary_loss(const prior::DictionaryModel& dict, const Eigen::MatrixXd& patches) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < patches.cols(); ++j) {
    const Eigen::VectorXd v = patches.col(j);
    acc += (v - dict.atoms * prior::omp(dict.atoms, v, dict.sparsity).coefficients).squaredNorm();
  }
  return acc / static_cast<double>(patches.size());
}

// Shuffled subset of size `budget` (0 = everything), fixed by the label.
std::vector<Index> sample_indices(Index total, Index budget, const Config& cfg, std::string_view label) {
  std::vector<Index> idx(total);
  std::iota(idx.begin(), idx.end(), Index{0});
  Rng rng = Rng::substream(cfg.seed(), label);
  rng.shuffle(idx.begin(), idx.end());
  if (budget > 0 && budget < total) idx.resize(budget);
  return idx;
}

template <typename Arr>
void write_stage(const Config& cfg, const char* name, const Arr& a) {
  ndf_write(a, cfg.work_file(name));
}

}  // namespace

std::uint64_t derived_seed(const Config& cfg, std::string_view label) {
  return Rng::substream(cfg.seed(), label).next_u64();
}

// CT ---------------------------------------------------------------------

ct::LowDoseModel ct_model(const Config& cfg) {
  ct::LowDoseModel m;
  m.photons = cfg.real("photons");
  m.mu = cfg.real("mu");
  m.geometry = ct::ParallelBeamGeometry::make(cfg.integer("image_size"), cfg.integer("n_angles"),
                                              cfg.integer("n_bins"));
  m.validate();
  return m;
}

NdArrayF ct_phantom(const Config& cfg) { return phantom::shepp_logan(cfg.integer("image_size")); }

NdArrayF ct_simulate(const Config& cfg, const NdArrayF& x) {
  return ct::lowdose_simulate(x, ct_model(cfg), derived_seed(cfg, "simulate"));
}

// MRI --------------------------------------------------------------------

mri::CoilProfile mri_coils(const Config& cfg) {
  const std::string& file = cfg.text("coils_file");
  const Index n = cfg.integer("image_size");
  if (file.empty()) return phantom::synth_coils(n, cfg.integer("n_coils"));
  mri::CoilProfile coils{ndf_read_complex(cfg.path("coils_file"))};
  if (coils.maps.rank() != 3 || coils.nx() != n || coils.ny() != n) {
    throw ShapeError("coils_file: expected (n_c, " + std::to_string(n) + ", " + std::to_string(n) +
                     "), got " + shape_string(coils.maps.shape()));
  }
  coils.validate();
  return coils;
}

std::vector<mri::RadialTrajectory> mri_frames(const Config& cfg, bool full) {
  return mri::golden_angle_frames(cfg.integer("n_frames"),
                                  cfg.integer(full ? "spokes_full" : "spokes_per_frame"),
                                  cfg.integer("samples_per_spoke"));
}

NdArrayC mri_phantom(const Config& cfg) {
  auto spec = phantom::DynamicPhantomSpec::cardiac();
  spec.amplitude = cfg.real("pulse_amplitude");
  return phantom::dynamic_phantom(spec, cfg.integer("image_size"), cfg.integer("n_frames"));
}

NdArrayC mri_simulate(const Config& cfg, const NdArrayC& x, bool full) {
  return mri::radial_encode(x, mri_coils(cfg), mri_frames(cfg, full));
}

// Training ---------------------------------------------------------------

TrainingSet generate_training_set(const Config& cfg) {
  TrainingSet set;
  const Index n = cfg.integer("image_size");
  const Index count = cfg.integer("train_samples");
  if (count == 0) throw ConfigError("train_samples must be >= 1");
  Rng phantoms = Rng::substream(cfg.seed(), "train-phantoms");
  if (cfg.mode() == Mode::Ct) {
    const auto model = ct_model(cfg);
    Rng noise = Rng::substream(cfg.seed(), "train-noise");
    for (Index k = 0; k < count; ++k) {
      NdArrayF gt = phantom::random_head_phantom(n, phantoms.next_u64());
      const NdArrayF counts = ct::lowdose_simulate(gt, model, noise.next_u64());
      set.inputs.push_back(ct::fbp_from_counts(counts, model));
      set.targets.push_back(std::move(gt));
    }
  } else {
    const auto coils = mri_coils(cfg);
    const auto frames = mri_frames(cfg);
    const mri::RadialEncoder enc({n, n, cfg.integer("n_frames")}, coils, frames);
    for (Index k = 0; k < count; ++k) {
      const auto spec = phantom::DynamicPhantomSpec::random_cardiac(phantoms);
      const NdArrayC gt = phantom::dynamic_phantom(spec, n, cfg.integer("n_frames"));
      const NdArrayC ini = mri::nufft_recon(enc.forward(gt), coils, frames);
      set.inputs.push_back(real_part(ini));
      set.targets.push_back(real_part(gt));
      set.inputs.push_back(imag_part(ini));
      set.targets.push_back(imag_part(gt));
    }
  }
  return set;
}

TrainingSet load_training_set(const Config& cfg) {
  const bool has_in = !cfg.text("train_inputs").empty();
  const bool has_tg = !cfg.text("train_targets").empty();
  if (has_in != has_tg) throw ConfigError("train_inputs and train_targets must be set together");
  if (!has_in) return generate_training_set(cfg);
  TrainingSet set;
  set.inputs = unstack(ndf_read_real(cfg.path("train_inputs")));
  set.targets = unstack(ndf_read_real(cfg.path("train_targets")));
  if (set.inputs.size() != set.targets.size() || set.inputs.front().shape() != set.targets.front().shape()) {
    throw ShapeError("training inputs and targets do not pair up");
  }
  return set;
}

void save_training_set(const TrainingSet& set, const std::filesystem::path& inputs,
                       const std::filesystem::path& targets) {
  ndf_write(stack(set.inputs), inputs);
  ndf_write(stack(set.targets), targets);
}

void TrainOutcome::write_csv(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << "epoch,loss\n" << std::setprecision(17);
  f << "0," << initial_loss << '\n';
  for (Index e = 0; e < epoch_loss.size(); ++e) f << e + 1 << ',' << epoch_loss[e] << '\n';
  f << "final," << final_loss << '\n';
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

TrainOutcome train_prior(const Config& cfg, const TrainingSet& set) {
  if (set.inputs.empty() || set.inputs.size() != set.targets.size()) {
    throw DomainError("training set is empty or unpaired");
  }
  for (Index k = 0; k < set.inputs.size(); ++k) require_same_shape(set.inputs[k], set.targets[k], "training pair");
  TrainOutcome out;
  const std::string& kind = cfg.text("prior");

  if (kind == "convnet") {
    std::vector<NdArrayF> inputs, targets;
    if (cfg.mode() == Mode::Ct) {
      const auto scheme = ct_scheme(cfg, set.inputs.front().shape(), "stride");
      const auto origins = patch::enumerate_patches(scheme);
      for (Index k = 0; k < set.inputs.size(); ++k) {
        require_same_shape(set.inputs[k], set.inputs.front(), "training image");
        for (const auto& o : origins) {
          inputs.push_back(patch::extract_patch(set.inputs[k], o, scheme.patch));
          targets.push_back(patch::extract_patch(set.targets[k], o, scheme.patch));
        }
      }
    } else {
      for (Index k = 0; k < set.inputs.size(); ++k) {
        const auto& in = set.inputs[k];
        const auto& tg = set.targets[k];
        if (in.rank() != 3) throw ShapeError("MRI training entries must be (Nx, Ny, Nt)");
        for (Index j = 0; j < in.dim(1); ++j) {
          inputs.push_back(patch::xt_slice(in, j));
          targets.push_back(patch::xt_slice(tg, j));
        }
        for (Index i = 0; i < in.dim(0); ++i) {
          inputs.push_back(patch::yt_slice(in, i));
          targets.push_back(patch::yt_slice(tg, i));
        }
      }
    }
    const auto pick = sample_indices(inputs.size(), cfg.integer("train_patches"), cfg, "train-patches");
    std::vector<NdArrayF> in2, tg2;
    for (Index i : pick) {
      in2.push_back(std::move(inputs[i]));
      tg2.push_back(std::move(targets[i]));
    }
    const auto spec = prior::ConvNetSpec::residual_net(cfg.integer("net_width"), cfg.integer("net_depth"),
                                                       cfg.integer("net_kernel"));
    prior::TrainConfig tc;
    tc.learning_rate = cfg.real("learning_rate");
    tc.epochs = cfg.integer("epochs");
    tc.batch_size = cfg.integer("batch_size");
    tc.seed = cfg.seed();
    prior::TrainLog log;
    auto net = prior::train_convnet(prior::ConvNet::glorot(spec, derived_seed(cfg, "init")), in2, tg2, tc, &log);
    out.model = std::move(net);
    out.initial_loss = log.initial_loss;
    out.final_loss = log.final_loss;
    out.epoch_loss = log.epoch_loss;
    return out;
  }

  if (kind == "dictionary") {
    const auto scheme = dictionary_scheme(cfg, set.targets.front().shape());
    const auto origins = patch::enumerate_patches(scheme);
    const Index d = shape_size(scheme.patch);
    for (const auto& img : set.targets) require_same_shape(img, set.targets.front(), "training image");
    // Columns from flat indices into (target, origin) pairs.
    auto gather = [&](Index target0, std::span<const Index> flat) {
      Eigen::MatrixXd m(d, flat.size());
      for (Index c = 0; c < flat.size(); ++c) {
        const auto& img = set.targets[target0 + flat[c] / origins.size()];
        const NdArrayF p = patch::extract_patch(img, origins[flat[c] % origins.size()], scheme.patch);
        m.col(c) = Eigen::Map<const Eigen::VectorXd>(p.data().data(), d);
      }
      return m;
    };
    const Index total = origins.size() * set.targets.size();
    const Eigen::MatrixXd patches = gather(0, sample_indices(total, cfg.integer("dict_patches"), cfg, "dict-patches"));

    prior::ItkrmConfig ic;
    ic.n_atoms = cfg.integer("dict_atoms");
    ic.sparsity = cfg.integer("dict_sparsity");
    ic.seed = cfg.seed();
    ic.n_iter = 0;
    const auto initial = prior::itkrm_train(patches, scheme.patch, ic);
    ic.n_iter = cfg.integer("dict_iters");
    prior::DictionaryModel dict;
    if (is(cfg, "dict_refresh", "on")) {
      // Every iteration after the first draws its patches from one randomly chosen training image.
      Eigen::MatrixXd fresh;
      Rng pick_target = Rng::substream(cfg.seed(), "dict-refresh");
      const prior::PatchSource source = [&](Index it) -> const Eigen::MatrixXd& {
        if (it == 0) return patches;
        const auto t = static_cast<Index>(pick_target.below(set.targets.size()));
        const auto label = "dict-refresh-" + std::to_string(it);
        fresh = gather(t, sample_indices(origins.size(), cfg.integer("dict_patches"), cfg, label));
        return fresh;
      };
      dict = prior::itkrm_train(source, scheme.patch, ic, initial.atoms);
    } else {
      dict = prior::itkrm_train(patches, scheme.patch, ic, initial.atoms);
    }
    out.initial_loss = dictionary_loss(initial, patches);
    out.final_loss = dictionary_loss(dict, patches);
    out.model = std::move(dict);
    return out;
  }
  throw ConfigError("prior '" + kind + "' has nothing to train");
}

void save_prior(const Config& cfg, const prior::PriorModel& model) {
  if (const auto* net = std::get_if<prior::ConvNet>(&model)) {
    prior::write_convnet(*net, cfg.path("weights_file"));
  } else if (const auto* dict = std::get_if<prior::DictionaryModel>(&model)) {
    prior::write_dictionary(*dict, cfg.path("dictionary_file"));
  }
}

prior::PriorModel load_prior(const Config& cfg) {
  const std::string& kind = cfg.text("prior");
  if (kind == "identity") return prior::IdentityPrior{};
  if (kind == "gaussian") return prior::GaussianSmooth{cfg.real("prior_sigma")};
  if (kind == "convnet") {
    require_file(cfg.path("weights_file"), "network weights");
    return prior::read_convnet(cfg.path("weights_file"));
  }
  require_file(cfg.path("dictionary_file"), "dictionary");
  return prior::read_dictionary(cfg.path("dictionary_file"), cfg.shape("dict_patch"));
}

// Stages -----------------------------------------------------------------

NdArrayF apply_prior(const Config& cfg, const prior::PriorModel& model, const NdArrayF& x_ini) {
  if (std::holds_alternative<prior::DictionaryModel>(model)) {
    return patch::apply_prior_patchwise(x_ini, dictionary_scheme(cfg, x_ini.shape()), prior::make_denoiser(model));
  }
  if (cfg.mode() == Mode::Mri) return patch::apply_prior_xtyt(x_ini, prior::make_denoiser(model));
  return patch::apply_prior_patchwise(x_ini, ct_scheme(cfg, x_ini.shape(), "infer_stride"),
                                      prior::make_denoiser(model));
}

NdArrayC apply_prior(const Config& cfg, const prior::PriorModel& model, const NdArrayC& x_ini) {
  if (cfg.mode() != Mode::Mri) throw ConfigError("complex images need mode = mri");
  if (std::holds_alternative<prior::DictionaryModel>(model)) {
    return patch::apply_prior_patchwise(x_ini, dictionary_scheme(cfg, x_ini.shape()), prior::make_denoiser(model));
  }
  return patch::apply_prior_xtyt(x_ini, prior::make_denoiser(model));
}

Stages<double> ct_reconstruct(const Config& cfg, const NdArrayF& counts, const prior::PriorModel& model,
                              bool solve) {
  const auto m = ct_model(cfg);
  Stages<double> st;
  st.x_ini = stage("fbp", [&] { return ct::fbp_from_counts(counts, m); });
  if (is(cfg, "method", "tv")) {
    solve::TvSettings s;
    s.lambda = cfg.real("tv_lambda");
    s.rho = cfg.real("tv_rho");
    s.n_outer = cfg.integer("tv_outer");
    s.n_inner = cfg.integer("tv_inner");
    auto res = stage("tv", [&] { return solve::tv_reconstruct_kl(m, counts, s, &st.x_ini); });
    st.x_rec = std::move(res.x);
    st.report = std::move(res.report);
    return st;
  }
  st.x_prior = stage("prior", [&] { return apply_prior(cfg, model, st.x_ini); });
  if (!solve) {
    st.x_rec = *st.x_prior;
    return st;
  }
  solve::LandweberSettings s;
  s.lambda = cfg.real("lambda");
  s.n_iter = cfg.integer("n_iter");
  s.tau = cfg.real("tau");
  const NdArrayF& x0 = is(cfg, "x0", "prior") ? *st.x_prior : st.x_ini;
  auto res = stage("landweber", [&] { return solve::landweber_kl(m, counts, *st.x_prior, x0, s); });
  st.x_rec = std::move(res.x);
  st.report = std::move(res.report);
  return st;
}

Stages<Complex> mri_reconstruct(const Config& cfg, const NdArrayC& kspace, const prior::PriorModel& model,
                                bool solve) {
  const Index n = cfg.integer("image_size");
  const auto coils = mri_coils(cfg);
  const auto frames = mri_frames(cfg);
  const mri::RadialEncoder enc({n, n, cfg.integer("n_frames")}, coils, frames);
  if (kspace.shape() != enc.range_shape()) {
    throw ShapeError("k-space data " + shape_string(kspace.shape()) + " does not match the configured " +
                     shape_string(enc.range_shape()));
  }
  Stages<Complex> st;
  st.x_ini = stage("nufft", [&] { return mri::nufft_recon(kspace, coils, frames); });
  if (is(cfg, "method", "tv")) {
    solve::TvSettings s;
    s.lambda = cfg.real("tv_lambda");
    s.rho = cfg.real("tv_rho");
    s.n_outer = cfg.integer("tv_outer");
    s.n_inner = cfg.integer("tv_inner");
    auto res = stage("tv", [&] { return solve::tv_reconstruct<Complex>(enc, kspace, s, &st.x_ini); });
    st.x_rec = std::move(res.x);
    st.report = std::move(res.report);
    return st;
  }
  st.x_prior = stage("prior", [&] { return apply_prior(cfg, model, st.x_ini); });
  if (!solve) {
    st.x_rec = *st.x_prior;
    return st;
  }
  auto res = stage("pcg", [&] {
    return solve::pcg_normal_solve<Complex>(enc, kspace, cfg.real("lambda"), *st.x_prior,
                                            cfg.integer("n_iter"), cfg.real("tol"));
  });
  st.x_rec = std::move(res.x);
  st.report = std::move(res.report);
  return st;
}

// Rendering and the convergence sweep -----------------------------------

std::vector<unsigned char> window_pixels(const NdArrayF& slice, double center, double width) {
  if (!(width > 0.0)) throw DomainError("render: window width must be > 0");
  std::vector<unsigned char> px(slice.size());
  const double lo = center - width / 2.0;
  for (Index i = 0; i < slice.size(); ++i) {
    const double v = std::clamp((slice[i] - lo) / width, 0.0, 1.0);
    px[i] = static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
  }
  return px;
}

void write_pgm(const NdArrayF& slice, double center, double width, const std::filesystem::path& path) {
  if (slice.rank() != 2) throw ShapeError("render: expected a 2-D slice");
  const auto px = window_pixels(slice, center, width);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << "P5\n" << slice.dim(1) << ' ' << slice.dim(0) << "\n255\n";
  f.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<solve::ConvergenceRow> convergence_sweep(const Config& cfg) {
  const auto rows = static_cast<Eigen::Index>(cfg.integer("conv_rows"));
  const auto cols = static_cast<Eigen::Index>(cfg.integer("conv_cols"));
  const Index decades = cfg.integer("conv_decades");
  if (rows == 0 || cols == 0 || decades == 0) throw ConfigError("convergence sweep sizes must be >= 1");
  Rng rng = Rng::substream(cfg.seed(), "convergence");
  Eigen::MatrixXd A(rows, cols);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = rng.normal();
  Eigen::VectorXd x_true(cols), x_prior(cols);
  for (Eigen::Index i = 0; i < cols; ++i) x_true(i) = rng.normal();
  for (Eigen::Index i = 0; i < cols; ++i) x_prior(i) = rng.normal();
  std::vector<double> deltas;
  for (Index k = 1; k <= decades; ++k) deltas.push_back(std::pow(10.0, -static_cast<double>(k)));
  return solve::convergence_experiment(A, x_true, x_prior, deltas, [](double d) { return d; },
                                       derived_seed(cfg, "convergence-noise"));
}

// Subcommands ------------------------------------------------------------

void run_phantom(const Config& cfg) {
  ensure_work_dir(cfg);
  if (cfg.mode() == Mode::Ct) {
    ndf_write(ct_phantom(cfg), cfg.work_file(kGroundTruth));
  } else {
    ndf_write(mri_phantom(cfg), cfg.work_file(kGroundTruth));
  }
}

void run_simulate(const Config& cfg) {
  ensure_work_dir(cfg);
  const auto gt_path = cfg.work_file(kGroundTruth);
  require_file(gt_path, "ground truth (run 'phantom' first)");
  if (cfg.mode() == Mode::Ct) {
    ndf_write(ct_simulate(cfg, ndf_read_real(gt_path)), cfg.work_file(kData));
  } else {
    const NdArrayC x = ndf_read_complex(gt_path);
    ndf_write(mri_simulate(cfg, x, false), cfg.work_file(kData));
    ndf_write(mri_simulate(cfg, x, true), cfg.work_file(kDataFull));
  }
}

void run_train(const Config& cfg) {
  ensure_work_dir(cfg);
  const TrainingSet set = stage("training data", [&] { return load_training_set(cfg); });
  if (cfg.text("train_inputs").empty()) {
    save_training_set(set, cfg.work_file(kTrainInputs), cfg.work_file(kTrainTargets));
  }
  const TrainOutcome out = stage("train", [&] { return train_prior(cfg, set); });
  save_prior(cfg, out.model);
  out.write_csv(cfg.work_file(kTrainLog));
}

namespace {

void run_stages(const Config& cfg, bool solve) {
  ensure_work_dir(cfg);
  const auto data_path = cfg.work_file(kData);
  require_file(data_path, "measurement data (run 'simulate' first)");
  const prior::PriorModel model =
      is(cfg, "method", "tv") ? prior::PriorModel{prior::IdentityPrior{}} : stage("load prior", [&] { return load_prior(cfg); });
  auto write = [&](const auto& st) {
    write_stage(cfg, kXIni, st.x_ini);
    if (st.x_prior) write_stage(cfg, kXPrior, *st.x_prior);
    if (solve) {
      write_stage(cfg, kXRec, st.x_rec);
      st.report.write_csv(cfg.work_file(kSolveReport));
    }
  };
  if (cfg.mode() == Mode::Ct) {
    write(ct_reconstruct(cfg, ndf_read_real(data_path), model, solve));
  } else {
    write(mri_reconstruct(cfg, ndf_read_complex(data_path), model, solve));
  }
}

}  // namespace

void run_prior(const Config& cfg) {
  if (is(cfg, "method", "tv")) throw ConfigError("'prior' needs method = prior");
  run_stages(cfg, false);
}

void run_reconstruct(const Config& cfg) { run_stages(cfg, true); }

void run_evaluate(const Config& cfg) {
  const auto in = cfg.path("eval_input");
  const auto ref = cfg.path("eval_reference");
  require_file(in, "evaluation input");
  require_file(ref, "evaluation reference");
  metrics::MetricOptions opts;
  opts.peak = cfg.real("psnr_peak");
  opts.range = cfg.real("metric_range");
  const AnyArray a = ndf_read(in), b = ndf_read(ref);
  metrics::MetricReport report;
  if (std::holds_alternative<NdArrayF>(a) && std::holds_alternative<NdArrayF>(b)) {
    report = metrics::evaluate(std::get<NdArrayF>(a), std::get<NdArrayF>(b), opts);
  } else {
    report = metrics::evaluate(ndf_read_complex(in), ndf_read_complex(ref), opts);
  }
  report.write_csv(cfg.path("eval_output"));
}

void run_render(const Config& cfg) {
  const auto in = cfg.path("render_input");
  require_file(in, "render input");
  const AnyArray a = ndf_read(in);
  NdArrayF img = std::holds_alternative<NdArrayF>(a) ? std::get<NdArrayF>(a) : magnitude(std::get<NdArrayC>(a));
  const Index t = cfg.integer("render_slice");
  if (img.rank() == 3) {
    img = metrics::xy_slice(img, t);
  } else if (img.rank() != 2 || t != 0) {
    throw DomainError("render: slice " + std::to_string(t) + " does not exist in an array of shape " +
                      shape_string(img.shape()));
  }
  write_pgm(img, cfg.real("window_center"), cfg.real("window_width"), cfg.path("render_output"));
}

void run_convergence(const Config& cfg) {
  ensure_work_dir(cfg);
  const auto rows = convergence_sweep(cfg);
  const auto path = cfg.work_file(kConvergence);
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << "delta,lambda,error,shift_gap\n" << std::setprecision(17);
  for (const auto& r : rows) f << r.delta << ',' << r.lambda << ',' << r.error << ',' << r.shift_gap << '\n';
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace recon::pipeline
