#pragma once

#include <filesystem>
#include <variant>

#include "recon/ndarray.hpp"

namespace recon {

// NDF layout: "NDR1" | u32 dtype (1 = float64, 2 = complex128) | u32 ndim |
// ndim x u64 dims | row-major payload. All integers and scalars little-endian.
inline constexpr char kNdfMagic[4] = {'N', 'D', 'R', '1'};
inline constexpr std::uint32_t kNdfFloat64 = 1;
inline constexpr std::uint32_t kNdfComplex128 = 2;

using AnyArray = std::variant<NdArrayF, NdArrayC>;

void ndf_write(const NdArrayF& array, const std::filesystem::path& path);
void ndf_write(const NdArrayC& array, const std::filesystem::path& path);
void ndf_write(const AnyArray& array, const std::filesystem::path& path);

/// Throws BadMagicError, BadDtypeError or TruncatedError on malformed input.
AnyArray ndf_read(const std::filesystem::path& path);

/// Reads a float64 file; complex files are rejected with BadDtypeError.
NdArrayF ndf_read_real(const std::filesystem::path& path);

/// Reads a complex file; float64 files are promoted.
NdArrayC ndf_read_complex(const std::filesystem::path& path);

}  // namespace recon
