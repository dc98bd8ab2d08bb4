#pragma once

#include <functional>
#include <span>
#include <vector>

#include "recon/ndarray.hpp"

namespace recon::patch {

enum class Boundary {
  ExactFit,   ///< every axis must satisfy (n - p) % s == 0
  ClampLast,  ///< one extra patch per axis flush with the far edge when the fit is inexact
};

/// Regular patch grid over a volume: patch sizes, strides and boundary policy.
struct PatchScheme {
  Shape volume;
  Shape patch;
  Shape stride;
  Boundary boundary = Boundary::ExactFit;

  /// Throws DomainError when the invariants do not hold.
  void validate() const;

  /// Patch origins along one axis, ascending.
  std::vector<Index> axis_origins(Index axis) const;

  /// Number of patches, N_{p,s}.
  Index count() const;
};

/// Patch origins in lexicographic (row-major) order.
std::vector<Shape> enumerate_patches(const PatchScheme& scheme);

/// Copy of the block of shape `size` starting at `origin`.
template <typename T>
NdArray<T> extract_patch(const NdArray<T>& x, std::span<const Index> origin, const Shape& size);

/// accumulator[origin + i] += patch[i]; overlapping insertions add up.
template <typename T>
void insert_patch_transpose(NdArray<T>& accumulator, const NdArray<T>& patch,
                            std::span<const Index> origin);

/// Per-voxel reciprocal coverage counts (the diagonal weighting W).
NdArrayF compute_weights(const PatchScheme& scheme);

/// Maps a patch to a patch of identical shape.
using PatchDenoiser = std::function<NdArrayF(const NdArrayF&)>;

/// W * sum_j R_j^T denoiser(R_j x), accumulated in lexicographic patch order.
NdArrayF apply_prior_patchwise(const NdArrayF& x, const PatchScheme& scheme,
                               const PatchDenoiser& denoiser);

/// Same as above with an explicit processing order (a permutation of the
/// patch indices). The result differs from the default order only by
/// floating-point reassociation.
NdArrayF apply_prior_patchwise(const NdArrayF& x, const PatchScheme& scheme,
                               const PatchDenoiser& denoiser, std::span<const Index> order);

/// Complex input: real and imaginary parts are processed separately with the
/// same real-valued denoiser.
NdArrayC apply_prior_patchwise(const NdArrayC& x, const PatchScheme& scheme,
                               const PatchDenoiser& denoiser);

/// Spatio-temporal slice prior for a (Nx, Ny, Nt) sequence.
///
/// The denoiser is applied to every xt slice x[:, j, :] and every yt slice
/// x[i, :, :] of the real and imaginary parts; the two reassembled stacks are
/// averaged.
NdArrayC apply_prior_xtyt(const NdArrayC& x, const PatchDenoiser& denoiser);
NdArrayF apply_prior_xtyt(const NdArrayF& x, const PatchDenoiser& denoiser);

/// xt slice j of a (Nx, Ny, Nt) array, shape (Nx, Nt).
NdArrayF xt_slice(const NdArrayF& x, Index j);
/// yt slice i of a (Nx, Ny, Nt) array, shape (Ny, Nt).
NdArrayF yt_slice(const NdArrayF& x, Index i);

}  // namespace recon::patch
