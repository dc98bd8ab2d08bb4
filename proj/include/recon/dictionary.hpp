#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "recon/ndarray.hpp"
#include "recon/patchwork.hpp"

namespace recon::prior {

/// K unit-norm atoms of dimension d = prod(patch_shape), one per column.
struct DictionaryModel {
  Eigen::MatrixXd atoms;
  Index sparsity = 1;
  Shape patch_shape;

  Index dim() const { return static_cast<Index>(atoms.rows()); }
  Index size() const { return static_cast<Index>(atoms.cols()); }

  /// Throws DomainError on bad sizes or atoms that are not unit norm.
  void validate() const;
};

struct OmpResult {
  Eigen::VectorXd coefficients;       // length K, at most S nonzeros
  std::vector<Index> support;         // in selection order
  std::vector<double> residual_norms; // before the first step and after each step
};

/// Greedy S-term approximation with a least-squares refit after every
/// selection. Stops after S atoms, when the residual norm drops below 1e-12,
/// or when the next atom would make the support rank deficient.
OmpResult omp(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& signal, Index sparsity);
Eigen::VectorXd omp_sparse_code(const DictionaryModel& dict, const NdArrayF& patch);

/// D * omp(patch), same shape as the patch.
NdArrayF dictionary_denoise(const DictionaryModel& dict, const NdArrayF& patch);

struct ItkrmConfig {
  Index n_atoms = 256;
  Index sparsity = 16;
  Index n_iter = 15;
  std::uint64_t seed = 0;
};

/// Iterative thresholding and K residual means. `patches` holds one training
/// patch per column. Without an initial dictionary the atoms start as
/// randomly chosen normalised training patches. Atoms that no patch selects
/// in an iteration are redrawn the same way.
DictionaryModel itkrm_train(const Eigen::MatrixXd& patches, Shape patch_shape,
                            const ItkrmConfig& cfg,
                            const std::optional<Eigen::MatrixXd>& initial = std::nullopt);

/// Training patches for iteration `it`; the reference must stay valid until
/// the next call.
using PatchSource = std::function<const Eigen::MatrixXd&(Index it)>;

/// Same algorithm with a fresh training set drawn before every iteration.
/// Initial atoms and redrawn atoms come from the current draw.
DictionaryModel itkrm_train(const PatchSource& source, Shape patch_shape, const ItkrmConfig& cfg,
                            const std::optional<Eigen::MatrixXd>& initial = std::nullopt);

/// W sum_j R_j^T D gamma_j with gamma_j = omp(R_j x).
NdArrayF dictionary_prior(const NdArrayF& x, const patch::PatchScheme& scheme,
                          const DictionaryModel& dict);

/// Dictionary as an NDF matrix (d, K) plus a one-line sidecar "<path>.S"
/// holding "S=<count>". The patch shape is not stored; read_dictionary takes
/// it from the caller (empty means a flat (d) shape) and checks prod == d.
void write_dictionary(const DictionaryModel& dict, const std::filesystem::path& path);
DictionaryModel read_dictionary(const std::filesystem::path& path, Shape patch_shape = {});
std::filesystem::path dictionary_sidecar(const std::filesystem::path& path);

}  // namespace recon::prior
