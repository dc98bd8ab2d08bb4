#include "recon/patchwork.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace recon::patch {
namespace {

void check_block(const Shape& volume, std::span<const Index> origin, const Shape& size,
                 const char* what) {
  if (origin.size() != volume.size() || size.size() != volume.size()) {
    throw ShapeError(std::string(what) + ": rank mismatch between volume " +
                     shape_string(volume) + " and patch " + shape_string(size));
  }
  for (Index a = 0; a < volume.size(); ++a) {
    if (size[a] == 0 || origin[a] + size[a] > volume[a]) {
      throw ShapeError(std::string(what) + ": patch " + shape_string(size) + " at axis " +
                       std::to_string(a) + " origin " + std::to_string(origin[a]) +
                       " exceeds volume " + shape_string(volume));
    }
  }
}

// Calls fn(src_offset, dst_offset, run) for every contiguous run of the last
// axis of a block of `size` located at `origin` inside `volume`.
template <typename Fn>
void for_each_row(const Shape& volume, std::span<const Index> origin, const Shape& size, Fn&& fn) {
  const Index rank = volume.size();
  const Index run = size[rank - 1];
  Shape counter(rank, 0);
  Index block_offset = 0;
  while (true) {
    Index vol_offset = 0;
    for (Index a = 0; a < rank; ++a) vol_offset = vol_offset * volume[a] + origin[a] + counter[a];
    fn(vol_offset, block_offset, run);
    block_offset += run;
    // Odometer over every axis but the last.
    Index a = rank - 1;
    while (a-- > 0) {
      if (++counter[a] < size[a]) break;
      counter[a] = 0;
    }
    if (a == static_cast<Index>(-1)) return;
  }
}

NdArrayF denoise_checked(const PatchDenoiser& denoiser, const NdArrayF& patch) {
  NdArrayF out = denoiser(patch);
  if (out.shape() != patch.shape()) {
    throw ShapeError("denoiser returned shape " + shape_string(out.shape()) + " for patch " +
                     shape_string(patch.shape()));
  }
  return out;
}

}  // namespace

void PatchScheme::validate() const {
  const Index rank = volume.size();
  if (rank == 0 || patch.size() != rank || stride.size() != rank) {
    throw DomainError("patch scheme: volume, patch and stride must share one rank");
  }
  for (Index a = 0; a < rank; ++a) {
    if (patch[a] < 1 || patch[a] > volume[a]) {
      throw DomainError("patch scheme: patch size " + std::to_string(patch[a]) + " on axis " +
                        std::to_string(a) + " outside [1, " + std::to_string(volume[a]) + "]");
    }
    if (stride[a] < 1 || stride[a] > patch[a]) {
      throw DomainError("patch scheme: stride " + std::to_string(stride[a]) + " on axis " +
                        std::to_string(a) + " outside [1, " + std::to_string(patch[a]) + "]");
    }
    if (boundary == Boundary::ExactFit && (volume[a] - patch[a]) % stride[a] != 0) {
      throw DomainError("patch scheme: (" + std::to_string(volume[a]) + " - " +
                        std::to_string(patch[a]) + ") is not a multiple of stride " +
                        std::to_string(stride[a]) + " on axis " + std::to_string(a) +
                        " (ExactFit)");
    }
  }
}

std::vector<Index> PatchScheme::axis_origins(Index axis) const {
  std::vector<Index> origins;
  const Index last = volume[axis] - patch[axis];
  for (Index o = 0; o <= last; o += stride[axis]) origins.push_back(o);
  if (boundary == Boundary::ClampLast && origins.back() != last) origins.push_back(last);
  return origins;
}

Index PatchScheme::count() const {
  validate();
  Index n = 1;
  for (Index a = 0; a < volume.size(); ++a) n *= axis_origins(a).size();
  return n;
}

std::vector<Shape> enumerate_patches(const PatchScheme& scheme) {
  scheme.validate();
  const Index rank = scheme.volume.size();
  std::vector<std::vector<Index>> axes(rank);
  for (Index a = 0; a < rank; ++a) axes[a] = scheme.axis_origins(a);

  std::vector<Shape> origins;
  origins.reserve(scheme.count());
  Shape counter(rank, 0);
  while (true) {
    Shape o(rank);
    for (Index a = 0; a < rank; ++a) o[a] = axes[a][counter[a]];
    origins.push_back(std::move(o));
    Index a = rank;
    while (a-- > 0) {
      if (++counter[a] < axes[a].size()) break;
      counter[a] = 0;
    }
    if (a == static_cast<Index>(-1)) break;
  }
  return origins;
}

template <typename T>
NdArray<T> extract_patch(const NdArray<T>& x, std::span<const Index> origin, const Shape& size) {
  check_block(x.shape(), origin, size, "extract_patch");
  NdArray<T> out(size);
  for_each_row(x.shape(), origin, size, [&](Index src, Index dst, Index run) {
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(src), run,
                out.data().begin() + static_cast<std::ptrdiff_t>(dst));
  });
  return out;
}

template <typename T>
void insert_patch_transpose(NdArray<T>& accumulator, const NdArray<T>& patch,
                            std::span<const Index> origin) {
  check_block(accumulator.shape(), origin, patch.shape(), "insert_patch_transpose");
  for_each_row(accumulator.shape(), origin, patch.shape(), [&](Index dst, Index src, Index run) {
    for (Index k = 0; k < run; ++k) accumulator[dst + k] += patch[src + k];
  });
}

template NdArrayF extract_patch(const NdArrayF&, std::span<const Index>, const Shape&);
template NdArrayC extract_patch(const NdArrayC&, std::span<const Index>, const Shape&);
template void insert_patch_transpose(NdArrayF&, const NdArrayF&, std::span<const Index>);
template void insert_patch_transpose(NdArrayC&, const NdArrayC&, std::span<const Index>);

NdArrayF compute_weights(const PatchScheme& scheme) {
  NdArrayF cover(scheme.volume, 0.0);
  const NdArrayF ones(scheme.patch, 1.0);
  for (const Shape& o : enumerate_patches(scheme)) insert_patch_transpose(cover, ones, o);
  for (Index i = 0; i < cover.size(); ++i) {
    if (cover[i] < 1.0) throw Error("compute_weights: voxel " + std::to_string(i) + " not covered");
    cover[i] = 1.0 / cover[i];
  }
  return cover;
}

NdArrayF apply_prior_patchwise(const NdArrayF& x, const PatchScheme& scheme,
                               const PatchDenoiser& denoiser, std::span<const Index> order) {
  if (x.shape() != scheme.volume) {
    throw ShapeError("apply_prior_patchwise: input " + shape_string(x.shape()) +
                     " does not match scheme volume " + shape_string(scheme.volume));
  }
  const std::vector<Shape> origins = enumerate_patches(scheme);
  if (order.size() != origins.size()) {
    throw DomainError("apply_prior_patchwise: order has " + std::to_string(order.size()) +
                      " entries for " + std::to_string(origins.size()) + " patches");
  }
  NdArrayF acc(x.shape(), 0.0);
  for (Index j : order) {
    const Shape& o = origins.at(j);
    insert_patch_transpose(acc, denoise_checked(denoiser, extract_patch(x, o, scheme.patch)), o);
  }
  const NdArrayF w = compute_weights(scheme);
  for (Index i = 0; i < acc.size(); ++i) acc[i] *= w[i];
  return acc;
}

NdArrayF apply_prior_patchwise(const NdArrayF& x, const PatchScheme& scheme,
                               const PatchDenoiser& denoiser) {
  std::vector<Index> order(scheme.count());
  std::iota(order.begin(), order.end(), Index{0});
  return apply_prior_patchwise(x, scheme, denoiser, order);
}

NdArrayC apply_prior_patchwise(const NdArrayC& x, const PatchScheme& scheme,
                               const PatchDenoiser& denoiser) {
  return make_complex(apply_prior_patchwise(real_part(x), scheme, denoiser),
                      apply_prior_patchwise(imag_part(x), scheme, denoiser));
}

NdArrayF xt_slice(const NdArrayF& x, Index j) {
  const Index nx = x.dim(0), nt = x.dim(2);
  NdArrayF s({nx, nt});
  for (Index i = 0; i < nx; ++i)
    for (Index t = 0; t < nt; ++t) s(i, t) = x(i, j, t);
  return s;
}

NdArrayF yt_slice(const NdArrayF& x, Index i) {
  const Index ny = x.dim(1), nt = x.dim(2);
  NdArrayF s({ny, nt});
  for (Index j = 0; j < ny; ++j)
    for (Index t = 0; t < nt; ++t) s(j, t) = x(i, j, t);
  return s;
}

NdArrayF apply_prior_xtyt(const NdArrayF& x, const PatchDenoiser& denoiser) {
  if (x.rank() != 3) {
    throw ShapeError("apply_prior_xtyt: expected (Nx, Ny, Nt), got " + shape_string(x.shape()));
  }
  const Index nx = x.dim(0), ny = x.dim(1), nt = x.dim(2);
  NdArrayF out(x.shape(), 0.0);
  for (Index j = 0; j < ny; ++j) {
    const NdArrayF d = denoise_checked(denoiser, xt_slice(x, j));
    for (Index i = 0; i < nx; ++i)
      for (Index t = 0; t < nt; ++t) out(i, j, t) += d(i, t);
  }
  for (Index i = 0; i < nx; ++i) {
    const NdArrayF d = denoise_checked(denoiser, yt_slice(x, i));
    for (Index j = 0; j < ny; ++j)
      for (Index t = 0; t < nt; ++t) out(i, j, t) += d(j, t);
  }
  out *= 0.5;
  return out;
}

NdArrayC apply_prior_xtyt(const NdArrayC& x, const PatchDenoiser& denoiser) {
  if (x.rank() != 3) {
    throw ShapeError("apply_prior_xtyt: expected (Nx, Ny, Nt), got " + shape_string(x.shape()));
  }
  return make_complex(apply_prior_xtyt(real_part(x), denoiser),
                      apply_prior_xtyt(imag_part(x), denoiser));
}

}  // namespace recon::patch
