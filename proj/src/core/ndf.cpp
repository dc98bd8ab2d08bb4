#include "recon/ndf.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "common/bytes.hpp"

namespace recon {
namespace {

using namespace detail;

std::string header(std::uint32_t dtype, const Shape& shape) {
  std::string out(kNdfMagic, 4);
  put_u32(out, dtype);
  put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (Index d : shape) put_u64(out, d);
  return out;
}

void write_bytes(const std::string& bytes, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

void ndf_write(const NdArrayF& array, const std::filesystem::path& path) {
  std::string bytes = header(kNdfFloat64, array.shape());
  bytes.reserve(bytes.size() + 8 * array.size());
  for (double v : array.data()) put_f64(bytes, v);
  write_bytes(bytes, path);
}

void ndf_write(const NdArrayC& array, const std::filesystem::path& path) {
  std::string bytes = header(kNdfComplex128, array.shape());
  bytes.reserve(bytes.size() + 16 * array.size());
  for (const Complex& v : array.data()) {
    put_f64(bytes, v.real());
    put_f64(bytes, v.imag());
  }
  write_bytes(bytes, path);
}

void ndf_write(const AnyArray& array, const std::filesystem::path& path) {
  std::visit([&](const auto& a) { ndf_write(a, path); }, array);
}

AnyArray ndf_read(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
  const std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
  const std::string where = " in '" + path.string() + "'";

  if (raw.size() < 4 || std::memcmp(raw.data(), kNdfMagic, 4) != 0) {
    throw BadMagicError("bad NDF magic" + where);
  }
  if (raw.size() < 12) throw TruncatedError("truncated NDF header" + where);
  const auto dtype = static_cast<std::uint32_t>(get_u(bytes + 4, 4));
  if (dtype != kNdfFloat64 && dtype != kNdfComplex128) {
    throw BadDtypeError("unsupported NDF dtype " + std::to_string(dtype) + where);
  }
  const auto ndim = static_cast<std::uint32_t>(get_u(bytes + 8, 4));
  if (ndim == 0) throw FormatError("NDF file declares zero dimensions" + where);
  const std::size_t header_len = 12 + 8 * std::size_t{ndim};
  if (raw.size() < header_len) throw TruncatedError("truncated NDF header" + where);

  Shape shape(ndim);
  for (std::uint32_t a = 0; a < ndim; ++a) {
    shape[a] = static_cast<Index>(get_u(bytes + 12 + 8 * a, 8));
    if (shape[a] == 0) throw FormatError("NDF dimension of size zero" + where);
  }
  const std::size_t scalar = dtype == kNdfFloat64 ? 8 : 16;
  const std::size_t count = shape_size(shape);
  if (raw.size() - header_len < count * scalar) {
    throw TruncatedError("NDF payload truncated: expected " + std::to_string(count * scalar) +
                         " bytes, found " + std::to_string(raw.size() - header_len) + where);
  }

  const unsigned char* p = bytes + header_len;
  if (dtype == kNdfFloat64) {
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) data[i] = get_f64(p + 8 * i);
    return NdArrayF(std::move(shape), std::move(data));
  }
  std::vector<Complex> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = Complex(get_f64(p + 16 * i), get_f64(p + 16 * i + 8));
  }
  return NdArrayC(std::move(shape), std::move(data));
}

NdArrayF ndf_read_real(const std::filesystem::path& path) {
  AnyArray any = ndf_read(path);
  if (auto* real = std::get_if<NdArrayF>(&any)) return std::move(*real);
  throw BadDtypeError("expected a float64 array in '" + path.string() + "'");
}

NdArrayC ndf_read_complex(const std::filesystem::path& path) {
  AnyArray any = ndf_read(path);
  if (auto* c = std::get_if<NdArrayC>(&any)) return std::move(*c);
  return to_complex(std::get<NdArrayF>(any));
}

}  // namespace recon
