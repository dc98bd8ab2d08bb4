#pragma once

#include <optional>
#include <vector>

#include "recon/config.hpp"
#include "recon/lowdose.hpp"
#include "recon/priors.hpp"
#include "recon/radial.hpp"
#include "recon/solvers.hpp"

namespace recon::pipeline {

// Work-directory file names shared by the subcommands.
inline constexpr const char* kGroundTruth = "ground_truth.ndf";
inline constexpr const char* kData = "data.ndf";
inline constexpr const char* kDataFull = "data_full.ndf";
inline constexpr const char* kXIni = "x_ini.ndf";
inline constexpr const char* kXPrior = "x_prior.ndf";
inline constexpr const char* kXRec = "x_rec.ndf";
inline constexpr const char* kTrainInputs = "train_inputs.ndf";
inline constexpr const char* kTrainTargets = "train_targets.ndf";
inline constexpr const char* kTrainLog = "train_log.csv";
inline constexpr const char* kSolveReport = "solve_report.csv";
inline constexpr const char* kConvergence = "convergence.csv";

/// Seed for one labelled random stream, derived from the config seed.
std::uint64_t derived_seed(const Config& cfg, std::string_view label);

ct::LowDoseModel ct_model(const Config& cfg);
NdArrayF ct_phantom(const Config& cfg);
NdArrayF ct_simulate(const Config& cfg, const NdArrayF& x);

mri::CoilProfile mri_coils(const Config& cfg);
/// Undersampled (spokes_per_frame) or fully sampled (spokes_full) frames.
std::vector<mri::RadialTrajectory> mri_frames(const Config& cfg, bool full = false);
NdArrayC mri_phantom(const Config& cfg);
NdArrayC mri_simulate(const Config& cfg, const NdArrayC& x, bool full = false);

/// Paired initial reconstructions and ground truths, whole images. CT
/// entries are (N, N); MRI sequences contribute their real and imaginary
/// parts as separate (N, N, Nt) entries.
struct TrainingSet {
  std::vector<NdArrayF> inputs;
  std::vector<NdArrayF> targets;
};

/// Simulated from randomised phantoms (never the evaluation phantom).
TrainingSet generate_training_set(const Config& cfg);
/// From train_inputs / train_targets when set, otherwise generated.
TrainingSet load_training_set(const Config& cfg);
void save_training_set(const TrainingSet& set, const std::filesystem::path& inputs,
                       const std::filesystem::path& targets);

struct TrainOutcome {
  prior::PriorModel model;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_loss;
  void write_csv(const std::filesystem::path& path) const;
};

/// Network: patches (CT) or xt/yt slices (MRI) of the pairs. Dictionary:
/// ITKRM on clean dict_patch patches of the targets.
TrainOutcome train_prior(const Config& cfg, const TrainingSet& set);
void save_prior(const Config& cfg, const prior::PriorModel& model);
/// Identity and Gaussian priors need no file.
prior::PriorModel load_prior(const Config& cfg);

/// Stage 2 alone.
NdArrayF apply_prior(const Config& cfg, const prior::PriorModel& model, const NdArrayF& x_ini);
NdArrayC apply_prior(const Config& cfg, const prior::PriorModel& model, const NdArrayC& x_ini);

template <typename T>
struct Stages {
  NdArray<T> x_ini;
  std::optional<NdArray<T>> x_prior;  // absent for the TV baseline
  NdArray<T> x_rec;
  solve::SolveReport report;
};

/// Stage 1 FBP, stage 2 prior, stage 3 Landweber on the KL functional
/// (method = prior), or FBP followed by the TV baseline (method = tv).
/// With solve = false stage 3 is skipped and x_rec equals x_prior.
Stages<double> ct_reconstruct(const Config& cfg, const NdArrayF& counts,
                              const prior::PriorModel& model, bool solve = true);
/// Stage 1 density-compensated adjoint, stage 2 xt/yt (network, identity,
/// Gaussian) or 3-D patch (dictionary) prior, stage 3 PCG started at x_prior.
Stages<Complex> mri_reconstruct(const Config& cfg, const NdArrayC& kspace,
                                const prior::PriorModel& model, bool solve = true);

/// Linear window clamp((v - (C - W/2)) / W, 0, 1) * 255, rounded half up.
std::vector<unsigned char> window_pixels(const NdArrayF& slice, double center, double width);
void write_pgm(const NdArrayF& slice, double center, double width,
               const std::filesystem::path& path);

std::vector<solve::ConvergenceRow> convergence_sweep(const Config& cfg);

// Subcommands. Each reads and writes files under work_dir only.
void run_phantom(const Config& cfg);
void run_simulate(const Config& cfg);
void run_train(const Config& cfg);
void run_prior(const Config& cfg);
void run_reconstruct(const Config& cfg);
void run_evaluate(const Config& cfg);
void run_render(const Config& cfg);
void run_convergence(const Config& cfg);

}  // namespace recon::pipeline
