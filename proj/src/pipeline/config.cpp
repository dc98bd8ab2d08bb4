#include "recon/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace recon::pipeline {
namespace {

enum class Kind { Integer, Real, Text, ShapeList, Choice };

struct KeySpec {
  const char* name;
  Kind kind;
  const char* ct;   // nullptr: key not valid in CT mode
  const char* mri;  // nullptr: key not valid in MRI mode
  const char* choices = "";
};

// clang-format off
const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
    {"mode", Kind::Choice, "ct", "mri", "ct|mri"},
    {"seed", Kind::Integer, "1", "1"},
    {"work_dir", Kind::Text, "out", "out"},
    {"image_size", Kind::Integer, "128", "64"},
    // CT acquisition
    {"n_angles", Kind::Integer, "360", nullptr},
    {"n_bins", Kind::Integer, "0", nullptr},
    {"photons", Kind::Real, "10000", nullptr},
    {"mu", Kind::Real, "0.02", nullptr},
    // MRI acquisition
    {"n_frames", Kind::Integer, nullptr, "30"},
    {"n_coils", Kind::Integer, nullptr, "8"},
    {"coils_file", Kind::Text, nullptr, ""},
    {"spokes_per_frame", Kind::Integer, nullptr, "11"},
    {"spokes_full", Kind::Integer, nullptr, "33"},
    {"samples_per_spoke", Kind::Integer, nullptr, "64"},
    {"pulse_amplitude", Kind::Real, nullptr, "0.12"},
    // patch scheme for the CT network prior
    {"patch", Kind::ShapeList, "16,16", nullptr},
    {"stride", Kind::ShapeList, "8,8", nullptr},
    {"infer_stride", Kind::ShapeList, "8,8", nullptr},
    {"boundary", Kind::Choice, "exact", nullptr, "exact|clamp"},
    // prior
    {"prior", Kind::Choice, "convnet", "convnet", "convnet|dictionary|identity|gaussian"},
    {"prior_sigma", Kind::Real, "1", "1"},
    {"net_width", Kind::Integer, "8", "8"},
    {"net_depth", Kind::Integer, "3", "3"},
    {"net_kernel", Kind::Integer, "3", "3"},
    {"weights_file", Kind::Text, "weights.cnw", "weights.cnw"},
    {"dictionary_file", Kind::Text, "dictionary.ndf", "dictionary.ndf"},
    {"dict_patch", Kind::ShapeList, "8,8", "4,4,4"},
    {"dict_stride", Kind::ShapeList, "4,4", "2,2,2"},
    {"dict_atoms", Kind::Integer, "256", "256"},
    {"dict_sparsity", Kind::Integer, "16", "16"},
    {"dict_iters", Kind::Integer, "15", "15"},
    {"dict_patches", Kind::Integer, "2000", "2000"},
    {"dict_refresh", Kind::Choice, "off", "off", "off|on"},
    // training
    {"train_samples", Kind::Integer, "10", "2"},
    {"train_patches", Kind::Integer, "2000", "0"},
    {"train_inputs", Kind::Text, "", ""},
    {"train_targets", Kind::Text, "", ""},
    {"epochs", Kind::Integer, "20", "10"},
    {"batch_size", Kind::Integer, "16", "8"},
    {"learning_rate", Kind::Real, "0.001", "0.001"},
    // data-consistency solve
    {"method", Kind::Choice, "prior", "prior", "prior|tv"},
    {"lambda", Kind::Real, "1", "0.1"},
    {"n_iter", Kind::Integer, "4", "16"},
    {"tol", Kind::Real, nullptr, "0"},
    {"tau", Kind::Real, "0", nullptr},
    {"x0", Kind::Choice, "fbp", nullptr, "fbp|prior"},
    {"tv_lambda", Kind::Real, "0.04", "3"},
    {"tv_rho", Kind::Real, "1", "100"},
    {"tv_outer", Kind::Integer, "16", "16"},
    {"tv_inner", Kind::Integer, "8", "8"},
    // evaluation and rendering
    {"psnr_peak", Kind::Real, "0", "1"},
    {"metric_range", Kind::Real, "0", "0"},
    {"eval_input", Kind::Text, "x_rec.ndf", "x_rec.ndf"},
    {"eval_reference", Kind::Text, "ground_truth.ndf", "ground_truth.ndf"},
    {"eval_output", Kind::Text, "metrics.csv", "metrics.csv"},
    {"render_input", Kind::Text, "x_rec.ndf", "x_rec.ndf"},
    {"render_slice", Kind::Integer, "0", "0"},
    {"window_center", Kind::Real, "0.5", "0.5"},
    {"window_width", Kind::Real, "1", "1"},
    {"render_output", Kind::Text, "render.pgm", "render.pgm"},
    // Tikhonov convergence sweep
    {"conv_rows", Kind::Integer, "8", "8"},
    {"conv_cols", Kind::Integer, "12", "12"},
    {"conv_decades", Kind::Integer, "6", "6"},
  };
  return table;
}
// clang-format on

const KeySpec* find_key(const std::string& key) {
  for (const auto& k : key_table()) {
    if (key == k.name) return &k;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_index(std::string_view s, Index& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  is >> out;
  return !is.fail() && is.eof() && std::isfinite(out);
}

bool parse_shape(const std::string& s, Shape& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    const std::string item = trim(std::string_view(s).substr(start, comma - start));
    Index v = 0;
    if (!parse_index(item, v) || v == 0) return false;
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return !out.empty();
}

void check_value(const KeySpec& spec, const std::string& value) {
  const std::string where = "config key '" + std::string(spec.name) + "'";
  switch (spec.kind) {
    case Kind::Integer: {
      Index v = 0;
      if (!parse_index(value, v)) throw ConfigError(where + ": expected a nonnegative integer, got '" + value + "'");
      break;
    }
    case Kind::Real: {
      double v = 0.0;
      if (!parse_real(value, v)) throw ConfigError(where + ": expected a number, got '" + value + "'");
      break;
    }
    case Kind::ShapeList: {
      Shape v;
      if (!parse_shape(value, v)) throw ConfigError(where + ": expected positive integers like 16,16, got '" + value + "'");
      break;
    }
    case Kind::Choice: {
      const std::string choices = spec.choices;
      std::size_t start = 0;
      while (true) {
        const auto bar = choices.find('|', start);
        if (choices.substr(start, bar - start) == value) return;
        if (bar == std::string::npos) break;
        start = bar + 1;
      }
      throw ConfigError(where + ": '" + value + "' is not one of " + choices);
    }
    case Kind::Text:
      break;
  }
}

}  // namespace

const char* mode_name(Mode mode) { return mode == Mode::Ct ? "ct" : "mri"; }

Config Config::defaults(Mode mode) {
  Config c;
  c.mode_ = mode;
  for (const auto& k : key_table()) {
    const char* def = mode == Mode::Ct ? k.ct : k.mri;
    if (def) c.values_[k.name] = def;
  }
  c.values_["mode"] = mode_name(mode);
  return c;
}

void Config::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = find_key(key);
  const bool valid = spec && (mode_ == Mode::Ct ? spec->ct : spec->mri);
  if (!valid) {
    throw ConfigError("unknown config key '" + key + "' for mode " + mode_name(mode_));
  }
  if (key == "mode" && value != mode_name(mode_)) {
    throw ConfigError("config key 'mode' cannot be changed after parsing");
  }
  check_value(*spec, value);
  values_[key] = value;
}

Config Config::parse(std::string_view text, std::string_view origin) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  Index line_no = 0;
  std::string mode;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    for (const auto& e : entries) {
      if (e.first == key) throw ConfigError(where + ": duplicate key '" + key + "'");
    }
    if (key == "mode") mode = value;
    entries.emplace_back(std::move(key), std::move(value));
  }
  if (mode.empty()) throw ConfigError(std::string(origin) + ": required key 'mode' is missing");
  if (mode != "ct" && mode != "mri") {
    throw ConfigError(std::string(origin) + ": mode must be ct or mri, got '" + mode + "'");
  }
  Config c = defaults(mode == "ct" ? Mode::Ct : Mode::Mri);
  for (const auto& [key, value] : entries) {
    try {
      c.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(origin) + ": " + e.what());
    }
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << f.rdbuf();
  return parse(text.str(), path.string());
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' must look like key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string Config::dump() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

const std::string& Config::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError("config key '" + key + "' is not available in mode " + mode_name(mode_));
  }
  return it->second;
}

double Config::real(const std::string& key) const {
  double v = 0.0;
  if (!parse_real(text(key), v)) throw ConfigError("config key '" + key + "' is not a number");
  return v;
}

Index Config::integer(const std::string& key) const {
  Index v = 0;
  if (!parse_index(text(key), v)) throw ConfigError("config key '" + key + "' is not an integer");
  return v;
}

std::uint64_t Config::seed() const { return static_cast<std::uint64_t>(integer("seed")); }

Shape Config::shape(const std::string& key) const {
  Shape v;
  if (!parse_shape(text(key), v)) throw ConfigError("config key '" + key + "' is not a shape");
  return v;
}

std::filesystem::path Config::path(const std::string& key) const {
  const std::filesystem::path p = text(key);
  return p.is_absolute() ? p : std::filesystem::path(text("work_dir")) / p;
}

std::filesystem::path Config::work_file(const std::string& name) const {
  return std::filesystem::path(text("work_dir")) / name;
}

}  // namespace recon::pipeline
