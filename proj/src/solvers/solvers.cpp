#include "recon/solvers.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>

#include "recon/rng.hpp"

namespace recon::solve {
namespace {

template <typename T>
double real_inner(const NdArray<T>& a, const NdArray<T>& b) {
  return std::real(inner_product(a, b));
}

template <typename T>
void require_finite(const NdArray<T>& a, const char* who, Index iter) {
  if (!all_finite(a)) {
    throw NumericalError(std::string(who) + ": non-finite iterate at iteration " +
                         std::to_string(iter));
  }
}

}  // namespace

void SolveReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << "iteration,objective,residual\n" << std::setprecision(17);
  for (Index i = 0; i < objective.size(); ++i) {
    f << i << ',' << objective[i] << ',' << residual[i] << '\n';
  }
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

template <typename T>
SolveResult<T> conjugate_gradient(const ApplyFn<T>& apply_h, const NdArray<T>& b, NdArray<T> x0,
                                  Index n_iter, double tol, const NdArrayF* inv_diag) {
  require_same_shape(b, x0, "conjugate_gradient");
  if (inv_diag) require_same_shape(*inv_diag, b, "conjugate_gradient preconditioner");
  auto precondition = [&](const NdArray<T>& r) {
    if (!inv_diag) return r;
    NdArray<T> z = r;
    for (Index i = 0; i < z.size(); ++i) z[i] *= (*inv_diag)[i];
    return z;
  };

  SolveResult<T> out{std::move(x0), {}};
  NdArray<T>& x = out.x;
  const double b_norm = norm2(b);
  NdArray<T> r = b - apply_h(x);
  require_finite(r, "conjugate_gradient", 0);
  auto quadratic = [&] { return -0.5 * real_inner(x, b + r); };
  auto rel = [&] { return b_norm > 0.0 ? norm2(r) / b_norm : norm2(r); };
  out.report.record(quadratic(), rel());
  if (rel() <= tol || norm2(r) == 0.0) {
    out.report.converged = true;
    return out;
  }

  NdArray<T> z = precondition(r);
  NdArray<T> p = z;
  double rz = real_inner(r, z);
  for (Index k = 1; k <= n_iter; ++k) {
    const NdArray<T> hp = apply_h(p);
    const double curv = real_inner(p, hp);
    if (!(curv > 0.0)) {
      throw NumericalError("conjugate_gradient: operator not positive definite (p^H H p = " +
                           std::to_string(curv) + ") at iteration " + std::to_string(k));
    }
    const T alpha = T(rz / curv);
    axpy(alpha, p, x);
    axpy(-alpha, hp, r);
    require_finite(x, "conjugate_gradient", k);
    out.report.iterations = k;
    out.report.record(quadratic(), rel());
    if (rel() <= tol) {
      out.report.converged = true;
      break;
    }
    z = precondition(r);
    const double rz_next = real_inner(r, z);
    const T beta = T(rz_next / rz);
    rz = rz_next;
    for (Index i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
  }
  return out;
}

template <typename T>
SolveResult<T> pcg_normal_solve(const LinearOperator<T>& E, const NdArray<T>& y, double lambda,
                                const NdArray<T>& x_prior, Index n_iter, double tol,
                                const NdArray<T>* x0, const NdArrayF* inv_diag) {
  if (lambda < 0.0) throw DomainError("pcg_normal_solve: lambda must be >= 0");
  if (x_prior.shape() != E.domain_shape()) {
    throw ShapeError("pcg_normal_solve: prior " + shape_string(x_prior.shape()) +
                     " but operator domain " + shape_string(E.domain_shape()));
  }
  NdArray<T> b = E.adjoint(y);
  axpy(T(lambda), x_prior, b);
  const ApplyFn<T> apply_h = [&](const NdArray<T>& v) {
    NdArray<T> hv = E.normal(v);
    axpy(T(lambda), v, hv);
    return hv;
  };
  SolveResult<T> res = conjugate_gradient(apply_h, b, x0 ? *x0 : x_prior, n_iter, tol, inv_diag);
  // ||E x - y||^2 + lambda ||x - x_prior||^2 = 2 q(x) + ||y||^2 + lambda ||x_prior||^2.
  const double offset = squared_norm(y) + lambda * squared_norm(x_prior);
  for (double& v : res.report.objective) v = 2.0 * v + offset;
  return res;
}

double kl_objective(const NdArrayF& x, const NdArrayF& y, const ct::LowDoseModel& model,
                    double lambda, const NdArrayF& x_prior) {
  const double data = ct::kl_divergence(ct::lowdose_forward(x, model), y);
  return data + lambda * squared_norm(x - x_prior);
}

double estimate_kl_lipschitz(const ct::RayTransform& ray, const ct::LowDoseModel& model,
                             const NdArrayF& x, double shift, Index n_power) {
  const NdArrayF u = ct::lowdose_forward(x, model, ray);
  const double mu2 = model.mu * model.mu;
  Rng rng(0x5eedULL);
  NdArrayF v(x.shape());
  for (double& e : v.data()) e = rng.uniform(-1.0, 1.0);
  v *= 1.0 / norm2(v);
  double estimate = 0.0;
  for (Index k = 0; k < n_power; ++k) {
    NdArrayF hv = hadamard(u, ray.forward(v));
    hv = ray.fbp(hv);
    hv *= mu2;
    axpy(shift, v, hv);
    estimate = norm2(hv);
    if (!(estimate > 0.0) || !std::isfinite(estimate)) {
      throw NumericalError("estimate_kl_lipschitz: power iteration broke down");
    }
    v = hv * (1.0 / estimate);
  }
  return estimate;
}

SolveResult<double> landweber_kl(const ct::LowDoseModel& model, const NdArrayF& y,
                                 const NdArrayF& x_prior, const NdArrayF& x0,
                                 const LandweberSettings& s) {
  model.validate();
  if (s.lambda < 0.0) throw DomainError("landweber_kl: lambda must be >= 0");
  const ct::RayTransform ray(model.geometry);
  require_same_shape(x_prior, x0, "landweber_kl");
  if (x0.shape() != ray.domain_shape()) throw ShapeError("landweber_kl: image/geometry mismatch");
  if (y.shape() != ray.range_shape()) throw ShapeError("landweber_kl: data/geometry mismatch");
  for (double v : y.data()) {
    if (v < 0.0) throw DomainError("landweber_kl: counts must be nonnegative");
  }

  SolveResult<double> out{x0, {}};
  if (s.n_iter == 0) {
    out.report.record(kl_objective(x0, y, model, s.lambda, x_prior), 0.0);
    return out;
  }
  const double tau = s.tau > 0.0 ? s.tau
                                 : 1.0 / estimate_kl_lipschitz(ray, model, x0, 2.0 * s.lambda,
                                                               s.n_power);
  const double y_norm = norm2(y);
  NdArrayF& x = out.x;
  for (Index k = 0; k <= s.n_iter; ++k) {
    NdArrayF residual = ct::lowdose_forward(x, model, ray);
    const double data = ct::kl_divergence(residual, y);
    residual -= y;
    out.report.record(data + s.lambda * squared_norm(x - x_prior),
                      y_norm > 0.0 ? norm2(residual) / y_norm : norm2(residual));
    if (k == s.n_iter) break;
    NdArrayF step = ray.fbp(residual);
    step *= -model.mu;
    NdArrayF pull = x - x_prior;
    axpy(2.0 * s.lambda, pull, step);
    axpy(-tau, step, x);
    require_finite(x, "landweber_kl", k + 1);
    out.report.iterations = k + 1;
  }
  return out;
}

double soft_threshold(double v, double t) {
  if (t < 0.0) throw DomainError("soft_threshold: threshold must be >= 0");
  const double m = std::abs(v) - t;
  return m > 0.0 ? std::copysign(m, v) : 0.0;
}

NdArrayF soft_threshold(const NdArrayF& v, double t) {
  NdArrayF out = v;
  for (double& e : out.data()) e = soft_threshold(e, t);
  return out;
}

template <typename T>
NdArray<T> gradient(const NdArray<T>& x) {
  const Index rank = x.rank(), n = x.size();
  Shape gshape{rank};
  gshape.insert(gshape.end(), x.shape().begin(), x.shape().end());
  NdArray<T> g(gshape, T{});
  const Shape strides = row_major_strides(x.shape());
  for (Index a = 0; a < rank; ++a) {
    const Index st = strides[a], len = x.dim(a);
    for (Index i = 0; i < n; ++i) {
      if ((i / st) % len + 1 < len) g[a * n + i] = x[i + st] - x[i];
    }
  }
  return g;
}

template <typename T>
NdArray<T> gradient_adjoint(const NdArray<T>& g) {
  if (g.rank() < 2 || g.dim(0) != g.rank() - 1) {
    throw ShapeError("gradient_adjoint: expected shape (rank, ...), got " + shape_string(g.shape()));
  }
  const Shape shape(g.shape().begin() + 1, g.shape().end());
  const Index rank = shape.size(), n = shape_size(shape);
  NdArray<T> x(shape, T{});
  const Shape strides = row_major_strides(shape);
  for (Index a = 0; a < rank; ++a) {
    const Index st = strides[a], len = shape[a];
    for (Index i = 0; i < n; ++i) {
      if ((i / st) % len + 1 < len) {
        const T v = g[a * n + i];
        x[i + st] += v;
        x[i] -= v;
      }
    }
  }
  return x;
}

template <typename T>
NdArray<T> isotropic_shrink(const NdArray<T>& g, double t) {
  if (t < 0.0) throw DomainError("isotropic_shrink: threshold must be >= 0");
  const Index rank = g.dim(0), n = g.size() / rank;
  NdArray<T> out = g;
  for (Index i = 0; i < n; ++i) {
    double m2 = 0.0;
    for (Index a = 0; a < rank; ++a) m2 += std::norm(g[a * n + i]);
    const double m = std::sqrt(m2);
    const double scale = m > t ? (m - t) / m : 0.0;
    for (Index a = 0; a < rank; ++a) out[a * n + i] *= scale;
  }
  return out;
}

template <typename T>
double total_variation(const NdArray<T>& x) {
  const NdArray<T> g = gradient(x);
  const Index rank = x.rank(), n = x.size();
  double tv = 0.0;
  for (Index i = 0; i < n; ++i) {
    double m2 = 0.0;
    for (Index a = 0; a < rank; ++a) m2 += std::norm(g[a * n + i]);
    tv += std::sqrt(m2);
  }
  return tv;
}

namespace {

void check_tv(const TvSettings& s) {
  if (!(s.lambda > 0.0)) throw DomainError("tv: lambda must be > 0");
  if (!(s.rho > 0.0)) throw DomainError("tv: rho must be > 0");
  if (s.n_outer < 1 || s.n_inner < 1) throw DomainError("tv: iteration counts must be >= 1");
}

}  // namespace

template <typename T>
SolveResult<T> tv_reconstruct(const LinearOperator<T>& A, const NdArray<T>& y,
                              const TvSettings& s, const NdArray<T>* x0) {
  check_tv(s);
  if (y.shape() != A.range_shape()) throw ShapeError("tv_reconstruct: data/operator mismatch");
  SolveResult<T> out{x0 ? *x0 : NdArray<T>(A.domain_shape(), T{}), {}};
  if (out.x.shape() != A.domain_shape()) throw ShapeError("tv_reconstruct: x0/operator mismatch");

  auto objective = [&](const NdArray<T>& x) {
    return squared_norm(A.forward(x) - y) + s.lambda * total_variation(x);
  };
  auto data_residual = [&](const NdArray<T>& x) {
    const double yn = norm2(y);
    const double r = norm2(A.forward(x) - y);
    return yn > 0.0 ? r / yn : r;
  };
  const NdArray<T> aty = A.adjoint(y);
  // Normal equations of ||A x - y||^2 + rho/2 ||G x - z||^2.
  const ApplyFn<T> apply_h = [&](const NdArray<T>& v) {
    NdArray<T> hv = A.normal(v);
    hv *= T(2.0);
    axpy(T(s.rho), gradient_adjoint(gradient(v)), hv);
    return hv;
  };
  out.report.record(objective(out.x), data_residual(out.x));
  for (Index outer = 1; outer <= s.n_outer; ++outer) {
    const NdArray<T> z = isotropic_shrink(gradient(out.x), s.lambda / s.rho);
    NdArray<T> b = aty;
    b *= T(2.0);
    axpy(T(s.rho), gradient_adjoint(z), b);
    out.x = conjugate_gradient(apply_h, b, out.x, s.n_inner, 0.0).x;
    require_finite(out.x, "tv_reconstruct", outer);
    out.report.iterations = outer;
    out.report.record(objective(out.x), data_residual(out.x));
  }
  return out;
}

SolveResult<double> tv_reconstruct_kl(const ct::LowDoseModel& model, const NdArrayF& y,
                                      const TvSettings& s, const NdArrayF* x0) {
  check_tv(s);
  model.validate();
  const ct::RayTransform ray(model.geometry);
  if (y.shape() != ray.range_shape()) throw ShapeError("tv_reconstruct_kl: data/geometry mismatch");
  SolveResult<double> out{x0 ? *x0 : ray.fbp(ct::log_transform(y, model)), {}};
  if (out.x.shape() != ray.domain_shape()) throw ShapeError("tv_reconstruct_kl: x0 mismatch");

  const double y_norm = norm2(y);
  auto record = [&](const NdArrayF& x) {
    NdArrayF u = ct::lowdose_forward(x, model, ray);
    const double obj = ct::kl_divergence(u, y) + s.lambda * total_variation(x);
    u -= y;
    out.report.record(obj, y_norm > 0.0 ? norm2(u) / y_norm : norm2(u));
  };
  // ||G^T G|| <= 4 * rank.
  const double gtg_bound = 4.0 * static_cast<double>(out.x.rank());
  const double tau = 1.0 / estimate_kl_lipschitz(ray, model, out.x, s.rho * gtg_bound);

  record(out.x);
  NdArrayF& x = out.x;
  for (Index outer = 1; outer <= s.n_outer; ++outer) {
    const NdArrayF z = isotropic_shrink(gradient(x), s.lambda / s.rho);
    for (Index inner = 0; inner < s.n_inner; ++inner) {
      NdArrayF residual = ct::lowdose_forward(x, model, ray);
      residual -= y;
      NdArrayF step = ray.fbp(residual);
      step *= -model.mu;
      axpy(s.rho, gradient_adjoint(gradient(x) - z), step);
      axpy(-tau, step, x);
    }
    require_finite(x, "tv_reconstruct_kl", outer);
    out.report.iterations = outer;
    record(x);
  }
  return out;
}

template <typename T>
DenseVector<T> tikhonov_dense_oracle(const DenseMatrix<T>& A, const DenseVector<T>& y,
                                     double lambda, const DenseVector<T>& x_prior) {
  if (A.rows() != y.size() || A.cols() != x_prior.size()) {
    throw ShapeError("tikhonov_dense_oracle: dimension mismatch");
  }
  if (!(lambda > 0.0)) {
    throw DomainError("tikhonov_dense_oracle: lambda must be > 0 (the system is singular otherwise)");
  }
  // Least squares on [A; sqrt(lambda) I] x = [y; sqrt(lambda) x_prior]: same minimiser as the
  // normal equations without squaring the condition number.
  const double r = std::sqrt(lambda);
  const auto n = A.cols();
  DenseMatrix<T> stacked(A.rows() + n, n);
  stacked << A, T(r) * DenseMatrix<T>::Identity(n, n);
  DenseVector<T> rhs(A.rows() + n);
  rhs << y, T(r) * x_prior;
  return stacked.householderQr().solve(rhs);
}

template <typename T>
DenseVector<T> tikhonov_shifted(const DenseMatrix<T>& A, const DenseVector<T>& y, double lambda,
                                const DenseVector<T>& x_prior) {
  const DenseVector<T> shifted = y - A * x_prior;
  const DenseVector<T> zero = DenseVector<T>::Zero(x_prior.size());
  return x_prior + tikhonov_dense_oracle<T>(A, shifted, lambda, zero);
}

std::vector<ConvergenceRow> convergence_experiment(const Eigen::MatrixXd& A,
                                                   const Eigen::VectorXd& x_true,
                                                   const Eigen::VectorXd& x_prior,
                                                   const std::vector<double>& deltas,
                                                   const std::function<double(double)>& rule,
                                                   std::uint64_t seed) {
  if (A.cols() != x_true.size() || A.cols() != x_prior.size()) {
    throw ShapeError("convergence_experiment: dimension mismatch");
  }
  const Eigen::VectorXd y0 = A * x_true;
  const Eigen::MatrixXd pinv = A.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::VectorXd x0 = x_prior + pinv * (y0 - A * x_prior);

  Rng rng = Rng::substream(seed, "noise");
  Eigen::VectorXd direction(A.rows());
  for (Eigen::Index i = 0; i < direction.size(); ++i) direction(i) = rng.normal();
  direction.normalize();

  std::vector<ConvergenceRow> rows;
  for (double delta : deltas) {
    const double lambda = rule(delta);
    const Eigen::VectorXd y = y0 + delta * direction;
    const Eigen::VectorXd x = tikhonov_dense_oracle<double>(A, y, lambda, x_prior);
    const Eigen::VectorXd xs = tikhonov_shifted<double>(A, y, lambda, x_prior);
    rows.push_back({delta, lambda, (x - x0).norm(), (x - xs).norm()});
  }
  return rows;
}

#define RECON_SOLVER_INSTANTIATE(T)                                                             \
  template SolveResult<T> conjugate_gradient<T>(const ApplyFn<T>&, const NdArray<T>&,          \
                                                NdArray<T>, Index, double, const NdArrayF*);   \
  template SolveResult<T> pcg_normal_solve<T>(const LinearOperator<T>&, const NdArray<T>&,     \
                                              double, const NdArray<T>&, Index, double,        \
                                              const NdArray<T>*, const NdArrayF*);             \
  template NdArray<T> gradient<T>(const NdArray<T>&);                                          \
  template NdArray<T> gradient_adjoint<T>(const NdArray<T>&);                                  \
  template NdArray<T> isotropic_shrink<T>(const NdArray<T>&, double);                          \
  template double total_variation<T>(const NdArray<T>&);                                       \
  template SolveResult<T> tv_reconstruct<T>(const LinearOperator<T>&, const NdArray<T>&,       \
                                            const TvSettings&, const NdArray<T>*);             \
  template DenseVector<T> tikhonov_dense_oracle<T>(const DenseMatrix<T>&, const DenseVector<T>&, \
                                                   double, const DenseVector<T>&);             \
  template DenseVector<T> tikhonov_shifted<T>(const DenseMatrix<T>&, const DenseVector<T>&,    \
                                              double, const DenseVector<T>&);

RECON_SOLVER_INSTANTIATE(double)
RECON_SOLVER_INSTANTIATE(Complex)

}  // namespace recon::solve
