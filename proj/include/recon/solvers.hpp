#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "recon/lowdose.hpp"
#include "recon/operator.hpp"

namespace recon::solve {

/// Per-iteration history; entry 0 describes the starting point.
struct SolveReport {
  std::vector<double> objective;
  std::vector<double> residual;
  Index iterations = 0;
  bool converged = false;

  void record(double obj, double res) {
    objective.push_back(obj);
    residual.push_back(res);
  }

  /// CSV with header "iteration,objective,residual".
  void write_csv(const std::filesystem::path& path) const;
};

template <typename T>
struct SolveResult {
  NdArray<T> x;
  SolveReport report;
};

template <typename T>
using ApplyFn = std::function<NdArray<T>(const NdArray<T>&)>;

/// Preconditioned conjugate gradients for a Hermitian positive definite H.
///
/// Stops after n_iter steps or once ||b - H x|| <= tol * ||b||. The report
/// residual is that relative norm; its objective column is the quadratic
/// 0.5 Re<x, Hx> - Re<x, b>. inv_diag, if given, is the elementwise inverse
/// of a diagonal preconditioner. Throws NumericalError on NaN or breakdown.
template <typename T>
SolveResult<T> conjugate_gradient(const ApplyFn<T>& apply_h, const NdArray<T>& b, NdArray<T> x0,
                                  Index n_iter, double tol,
                                  const NdArrayF* inv_diag = nullptr);

/// Minimises ||E x - y||^2 + lambda ||x - x_prior||^2 by CG on
/// (E^H E + lambda I) x = E^H y + lambda x_prior. Starts from x0, or from
/// x_prior when x0 is not given. The report objective is the functional
/// itself.
template <typename T>
SolveResult<T> pcg_normal_solve(const LinearOperator<T>& E, const NdArray<T>& y, double lambda,
                                const NdArray<T>& x_prior, Index n_iter, double tol,
                                const NdArray<T>* x0 = nullptr,
                                const NdArrayF* inv_diag = nullptr);

/// KL(T x, y) + lambda ||x - x_prior||^2 for the low-dose model.
double kl_objective(const NdArrayF& x, const NdArrayF& y, const ct::LowDoseModel& model,
                    double lambda, const NdArrayF& x_prior);

/// Largest eigenvalue magnitude of v -> mu^2 fbp(T(x) * R v) + shift * v,
/// the FBP-preconditioned KL Hessian at x, by power iteration from a fixed
/// pseudo-random start.
double estimate_kl_lipschitz(const ct::RayTransform& ray, const ct::LowDoseModel& model,
                             const NdArrayF& x, double shift, Index n_power = 20);

struct LandweberSettings {
  double lambda = 1.0;
  Index n_iter = 4;
  double tau = 0.0;    // <= 0: 1 / estimate_kl_lipschitz at x0
  Index n_power = 20;
};

/// FBP-preconditioned Landweber on KL(T x, y) + lambda ||x - x_prior||^2:
/// x <- x - tau [-mu fbp(T(x) - y) + 2 lambda (x - x_prior)], exactly
/// n_iter times. The iteration count is the regulariser; there is no
/// convergence test.
SolveResult<double> landweber_kl(const ct::LowDoseModel& model, const NdArrayF& y,
                                 const NdArrayF& x_prior, const NdArrayF& x0,
                                 const LandweberSettings& settings);

/// sign(v) max(|v| - t, 0).
double soft_threshold(double v, double t);
NdArrayF soft_threshold(const NdArrayF& v, double t);

/// Forward differences with replicate (Neumann) boundary along every axis.
/// Output shape is (rank, shape...).
template <typename T>
NdArray<T> gradient(const NdArray<T>& x);
/// Exact adjoint of gradient().
template <typename T>
NdArray<T> gradient_adjoint(const NdArray<T>& g);

/// Shrinks each voxel's gradient vector by t in Euclidean length.
template <typename T>
NdArray<T> isotropic_shrink(const NdArray<T>& g, double t);

/// sum over voxels of the Euclidean length of the gradient vector.
template <typename T>
double total_variation(const NdArray<T>& x);

struct TvSettings {
  double lambda = 0.05;
  double rho = 1.0;
  Index n_outer = 16;
  Index n_inner = 8;
};

/// Total-variation baseline by variable splitting: z <- shrink(G x, lambda / rho),
/// then n_inner solver steps on D(A x, y) + rho / 2 ||G x - z||^2.
/// The report objective is D(A x, y) + lambda TV(x) after each outer step.
///
/// L2 discrepancy ||A x - y||^2, inner solver CG; x0 defaults to zero.
template <typename T>
SolveResult<T> tv_reconstruct(const LinearOperator<T>& A, const NdArray<T>& y,
                              const TvSettings& settings, const NdArray<T>* x0 = nullptr);

/// KL discrepancy through the low-dose model, inner solver FBP-preconditioned
/// Landweber; x0 defaults to the FBP of the counts.
SolveResult<double> tv_reconstruct_kl(const ct::LowDoseModel& model, const NdArrayF& y,
                                      const TvSettings& settings, const NdArrayF* x0 = nullptr);

template <typename T>
DenseVector<T> tikhonov_dense_oracle(const DenseMatrix<T>& A, const DenseVector<T>& y,
                                     double lambda, const DenseVector<T>& x_prior);

/// Same minimiser through h = x - x_prior and standard Tikhonov on
/// ||A h - (y - A x_prior)||^2 + lambda ||h||^2.
template <typename T>
DenseVector<T> tikhonov_shifted(const DenseMatrix<T>& A, const DenseVector<T>& y, double lambda,
                                const DenseVector<T>& x_prior);

struct ConvergenceRow {
  double delta = 0.0;
  double lambda = 0.0;
  double error = 0.0;       // ||x_{delta,lambda} - x_0||
  double shift_gap = 0.0;   // ||oracle - shifted form||
};

/// x_0 = x_prior + A^+ (A x_true - A x_prior); for each delta, noise of norm
/// exactly delta (seeded) is added to A x_true and the Tikhonov minimiser with
/// lambda = rule(delta) is compared to x_0.
std::vector<ConvergenceRow> convergence_experiment(const Eigen::MatrixXd& A,
                                                   const Eigen::VectorXd& x_true,
                                                   const Eigen::VectorXd& x_prior,
                                                   const std::vector<double>& deltas,
                                                   const std::function<double(double)>& rule,
                                                   std::uint64_t seed);

}  // namespace recon::solve
