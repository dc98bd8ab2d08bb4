#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "recon/ndarray.hpp"

namespace recon::pipeline {

enum class Mode { Ct, Mri };

/// Flat `key = value` configuration. `#` starts a comment. Keys outside the
/// table for the selected mode are rejected; absent keys take mode defaults.
class Config {
 public:
  static Config defaults(Mode mode);
  static Config parse(std::string_view text, std::string_view origin = "<config>");
  static Config load(const std::filesystem::path& path);

  /// Sets a known key, checking the value's type. Throws ConfigError.
  void set(const std::string& key, const std::string& value);
  /// "key=value" as given on the command line.
  void apply_override(std::string_view assignment);

  /// Every key in sorted order, one `key = value` line each.
  std::string dump() const;

  Mode mode() const { return mode_; }
  const std::string& text(const std::string& key) const;
  double real(const std::string& key) const;
  Index integer(const std::string& key) const;
  std::uint64_t seed() const;
  Shape shape(const std::string& key) const;
  std::filesystem::path path(const std::string& key) const;

  /// File `name` inside work_dir.
  std::filesystem::path work_file(const std::string& name) const;

  friend bool operator==(const Config&, const Config&) = default;

 private:
  Mode mode_ = Mode::Ct;
  std::map<std::string, std::string> values_;
};

const char* mode_name(Mode mode);

}  // namespace recon::pipeline
