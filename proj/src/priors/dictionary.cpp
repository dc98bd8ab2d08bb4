#include "recon/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "recon/ndf.hpp"
#include "recon/rng.hpp"

namespace recon::prior {
namespace {

constexpr double kResidualFloor = 1e-12;

Eigen::MatrixXd columns(const Eigen::MatrixXd& m, const std::vector<Index>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (Index i = 0; i < idx.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = m.col(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

// Random nonzero training patch, normalised.
Eigen::VectorXd random_patch_atom(const Eigen::MatrixXd& patches, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(patches.cols());
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const auto j = static_cast<Eigen::Index>(rng.below(n));
    const double nrm = patches.col(j).norm();
    if (nrm > 0.0) return patches.col(j) / nrm;
  }
  throw DomainError("itkrm_train: training patches are (almost) all zero");
}

}  // namespace

void DictionaryModel::validate() const {
  if (atoms.rows() == 0 || atoms.cols() == 0) throw DomainError("dictionary: d and K must be >= 1");
  if (sparsity < 1 || sparsity > size()) {
    throw DomainError("dictionary: sparsity " + std::to_string(sparsity) + " outside [1, K=" +
                      std::to_string(size()) + "]");
  }
  if (shape_size(patch_shape) != dim() || patch_shape.empty()) {
    throw ShapeError("dictionary: patch shape " + shape_string(patch_shape) +
                     " does not match atom dimension " + std::to_string(dim()));
  }
  for (Eigen::Index k = 0; k < atoms.cols(); ++k) {
    if (std::abs(atoms.col(k).norm() - 1.0) > 1e-10) {
      throw DomainError("dictionary: atom " + std::to_string(k) + " is not unit norm");
    }
  }
}

OmpResult omp(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& signal, Index sparsity) {
  if (atoms.rows() != signal.size()) {
    throw ShapeError("omp: signal length " + std::to_string(signal.size()) +
                     " does not match atom dimension " + std::to_string(atoms.rows()));
  }
  if (sparsity < 1 || sparsity > static_cast<Index>(atoms.cols())) {
    throw DomainError("omp: sparsity must lie in [1, K]");
  }
  OmpResult res;
  res.coefficients = Eigen::VectorXd::Zero(atoms.cols());
  Eigen::VectorXd residual = signal;
  Eigen::VectorXd coef;
  res.residual_norms.push_back(residual.norm());
  std::vector<bool> chosen(atoms.cols(), false);

  while (res.support.size() < sparsity && res.residual_norms.back() >= kResidualFloor) {
    const Eigen::VectorXd corr = atoms.transpose() * residual;
    Eigen::Index best = -1;
    double best_abs = -1.0;
    for (Eigen::Index k = 0; k < corr.size(); ++k) {
      if (!chosen[k] && std::abs(corr(k)) > best_abs) {
        best_abs = std::abs(corr(k));
        best = k;
      }
    }
    std::vector<Index> trial = res.support;
    trial.push_back(static_cast<Index>(best));
    const Eigen::MatrixXd sub = columns(atoms, trial);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
    if (qr.rank() < static_cast<Eigen::Index>(trial.size())) break;
    coef = qr.solve(signal);
    residual = signal - sub * coef;
    res.support = std::move(trial);
    chosen[best] = true;
    res.residual_norms.push_back(residual.norm());
  }
  for (Index i = 0; i < res.support.size(); ++i) {
    res.coefficients(static_cast<Eigen::Index>(res.support[i])) = coef(static_cast<Eigen::Index>(i));
  }
  return res;
}

Eigen::VectorXd omp_sparse_code(const DictionaryModel& dict, const NdArrayF& patch) {
  if (patch.shape() != dict.patch_shape) {
    throw ShapeError("omp_sparse_code: patch " + shape_string(patch.shape()) +
                     " but dictionary expects " + shape_string(dict.patch_shape));
  }
  const Eigen::Map<const Eigen::VectorXd> y(patch.data().data(),
                                            static_cast<Eigen::Index>(patch.size()));
  return omp(dict.atoms, y, dict.sparsity).coefficients;
}

NdArrayF dictionary_denoise(const DictionaryModel& dict, const NdArrayF& patch) {
  const Eigen::VectorXd approx = dict.atoms * omp_sparse_code(dict, patch);
  return NdArrayF(patch.shape(), std::vector<double>(approx.data(), approx.data() + approx.size()));
}

DictionaryModel itkrm_train(const Eigen::MatrixXd& patches, Shape patch_shape,
                            const ItkrmConfig& cfg, const std::optional<Eigen::MatrixXd>& initial) {
  return itkrm_train([&](Index) -> const Eigen::MatrixXd& { return patches; }, std::move(patch_shape), cfg,
                     initial);
}

DictionaryModel itkrm_train(const PatchSource& source, Shape patch_shape, const ItkrmConfig& cfg,
                            const std::optional<Eigen::MatrixXd>& initial) {
  const auto K = static_cast<Eigen::Index>(cfg.n_atoms);
  const Eigen::Index d = static_cast<Eigen::Index>(shape_size(patch_shape));
  if (d == 0 || K == 0) throw DomainError("itkrm_train: d and K must be >= 1");
  if (cfg.sparsity < 1 || cfg.sparsity > cfg.n_atoms) {
    throw DomainError("itkrm_train: need 1 <= S <= K");
  }
  // Fetches and checks the draw for iteration `it`.
  auto draw = [&](Index it) -> const Eigen::MatrixXd& {
    const Eigen::MatrixXd& p = source(it);
    if (p.rows() != d) {
      throw ShapeError("itkrm_train: patch shape " + shape_string(patch_shape) +
                       " does not match dimension " + std::to_string(p.rows()));
    }
    if (p.cols() < K) {
      throw DomainError("itkrm_train: need at least K=" + std::to_string(K) + " patches, got " +
                        std::to_string(p.cols()));
    }
    return p;
  };
  const Eigen::MatrixXd* current = &draw(0);
  const auto n = current->cols();

  Rng rng = Rng::substream(cfg.seed, "itkrm");
  Eigen::MatrixXd D(d, K);
  if (initial) {
    if (initial->rows() != d || initial->cols() != K) {
      throw ShapeError("itkrm_train: initial dictionary has the wrong size");
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      const double nrm = initial->col(k).norm();
      D.col(k) = nrm > 0.0 ? Eigen::VectorXd(initial->col(k) / nrm) : random_patch_atom(*current, rng);
    }
  } else {
    std::vector<Index> pick(static_cast<Index>(n));
    std::iota(pick.begin(), pick.end(), Index{0});
    rng.shuffle(pick.begin(), pick.end());
    Index next = 0;
    for (Eigen::Index k = 0; k < K; ++k) {
      double nrm = 0.0;
      while (next < pick.size() && nrm == 0.0) {
        nrm = current->col(static_cast<Eigen::Index>(pick[next])).norm();
        if (nrm > 0.0) D.col(k) = current->col(static_cast<Eigen::Index>(pick[next])) / nrm;
        ++next;
      }
      if (nrm == 0.0) D.col(k) = random_patch_atom(*current, rng);
    }
  }

  const auto S = static_cast<Eigen::Index>(cfg.sparsity);
  std::vector<Index> order(static_cast<Index>(K));
  for (Index it = 0; it < cfg.n_iter; ++it) {
    if (it > 0) current = &draw(it);
    const Eigen::MatrixXd& patches = *current;
    const Eigen::MatrixXd corr = D.transpose() * patches;  // K x n
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(d, K);
    std::vector<bool> used(static_cast<Index>(K), false);
    for (Eigen::Index j = 0; j < patches.cols(); ++j) {
      std::iota(order.begin(), order.end(), Index{0});
      std::partial_sort(order.begin(), order.begin() + S, order.end(), [&](Index a, Index b) {
        const double ca = std::abs(corr(static_cast<Eigen::Index>(a), j));
        const double cb = std::abs(corr(static_cast<Eigen::Index>(b), j));
        return ca != cb ? ca > cb : a < b;
      });
      const std::vector<Index> support(order.begin(), order.begin() + S);
      const Eigen::MatrixXd sub = columns(D, support);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(sub);
      const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, S);
      const Eigen::VectorXd y = patches.col(j);
      const Eigen::VectorXd residual = y - q * (q.transpose() * y);
      for (Index k : support) {
        const auto kk = static_cast<Eigen::Index>(k);
        const double c = corr(kk, j);
        const double sign = c >= 0.0 ? 1.0 : -1.0;
        next.col(kk) += sign * (residual + c * D.col(kk));
        used[k] = true;
      }
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      const double nrm = next.col(k).norm();
      if (!used[static_cast<Index>(k)] || !(nrm > 0.0)) {
        D.col(k) = random_patch_atom(*current, rng);
      } else {
        D.col(k) = next.col(k) / nrm;
      }
    }
  }

  DictionaryModel model{std::move(D), cfg.sparsity, std::move(patch_shape)};
  model.validate();
  return model;
}

NdArrayF dictionary_prior(const NdArrayF& x, const patch::PatchScheme& scheme,
                          const DictionaryModel& dict) {
  if (scheme.patch != dict.patch_shape) {
    throw ShapeError("dictionary_prior: scheme patch " + shape_string(scheme.patch) +
                     " but dictionary patch " + shape_string(dict.patch_shape));
  }
  return patch::apply_prior_patchwise(
      x, scheme, [&](const NdArrayF& p) { return dictionary_denoise(dict, p); });
}

std::filesystem::path dictionary_sidecar(const std::filesystem::path& path) {
  std::filesystem::path side = path;
  side += ".S";
  return side;
}

void write_dictionary(const DictionaryModel& dict, const std::filesystem::path& path) {
  dict.validate();
  NdArrayF m({dict.dim(), dict.size()});
  for (Index i = 0; i < dict.dim(); ++i)
    for (Index k = 0; k < dict.size(); ++k)
      m(i, k) = dict.atoms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  ndf_write(m, path);
  std::ofstream side(dictionary_sidecar(path), std::ios::trunc);
  if (!side) throw IoError("cannot write '" + dictionary_sidecar(path).string() + "'");
  side << "S=" << dict.sparsity << '\n';
}

DictionaryModel read_dictionary(const std::filesystem::path& path, Shape patch_shape) {
  const NdArrayF m = ndf_read_real(path);
  if (m.rank() != 2) {
    throw ShapeError("dictionary file '" + path.string() + "' must hold a (d, K) matrix");
  }
  std::ifstream side(dictionary_sidecar(path));
  if (!side) throw IoError("missing sidecar '" + dictionary_sidecar(path).string() + "'");
  std::string line;
  std::getline(side, line);
  Index sparsity = 0;
  try {
    std::size_t used = 0;
    if (line.rfind("S=", 0) != 0) throw FormatError("");
    sparsity = std::stoul(line.substr(2), &used);
    if (used + 2 != line.size()) throw FormatError("");
  } catch (const std::exception&) {
    throw FormatError("sidecar '" + dictionary_sidecar(path).string() +
                      "' must contain 'S=<count>', got '" + line + "'");
  }
  DictionaryModel dict;
  dict.atoms.resize(static_cast<Eigen::Index>(m.dim(0)), static_cast<Eigen::Index>(m.dim(1)));
  for (Index i = 0; i < m.dim(0); ++i)
    for (Index k = 0; k < m.dim(1); ++k)
      dict.atoms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = m(i, k);
  dict.sparsity = sparsity;
  dict.patch_shape = patch_shape.empty() ? Shape{m.dim(0)} : std::move(patch_shape);
  dict.validate();
  return dict;
}

}  // namespace recon::prior
