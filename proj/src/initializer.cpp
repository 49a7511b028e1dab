#include "bhmds/initializer.hpp"

#include <cmath>
#include <limits>

#include "bhmds/error.hpp"
#include "bhmds/evaluation.hpp"
#include "bhmds/parallel.hpp"

namespace bhmds {

InitEmbedding make_embedding(PointMatrix X, const DissimMatrix& d, Curvature kappa) {
  if (static_cast<std::size_t>(X.rows()) != d.size()) throw InputError("embedding and dissimilarities differ in size");
  InitEmbedding e;
  e.delta = pairwise_distances(X, kappa);
  e.X = std::move(X);
  e.kappa = kappa.value();
  const auto& obs = d.values();
  double ssr = 0.0;
  for (Eigen::Index i = 0; i < obs.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < obs.cols(); ++j) {
      const double r = e.delta(i, j) - obs(i, j);
      ssr += r * r;
    }
  }
  e.ssr = ssr;
  e.stress = stress(d, e.delta);
  return e;
}

InitEmbedding spectral_init(const DissimMatrix& d, int p, Curvature kappa) {
  const auto n = static_cast<Eigen::Index>(d.size());
  if (p < 1) throw InputError("spectral_init: dimension must be >= 1");
  if (n < p + 1) throw InputError("spectral_init: need at least p+1 objects");

  Eigen::MatrixXd A = (kappa.sqrt() * d.values()).array().cosh().matrix();
  A.diagonal().setOnes();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  if (eig.info() != Eigen::Success) throw NumericalError("spectral_init: eigen-decomposition failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
  const Eigen::MatrixXd& U = eig.eigenvectors();
  const double top = lambda[n - 1];
  if (!(top > 0.0)) throw NumericalError("spectral_init: no positive eigenvalue");

  Eigen::VectorXd u0 = U.col(n - 1);
  if (u0.sum() < 0.0) u0 = -u0;
  Eigen::VectorXd x0 = (std::sqrt(top) * u0).cwiseMax(1.0);

  Eigen::MatrixXd Y(n, p);
  for (int k = 0; k < p; ++k) Y.col(k) = std::sqrt(std::max(0.0, -lambda[k])) * U.col(k);

  PointMatrix X(n, p + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = Y.row(i).norm();
    if (norm == 0.0 || !std::isfinite(norm)) {
      X.row(i).setZero();
      X(i, 0) = 1.0;
      continue;
    }
    const double radius = std::sqrt((x0[i] - 1.0) * (x0[i] + 1.0));
    X(i, 0) = x0[i];
    X.row(i).tail(p) = (radius / norm) * Y.row(i);
  }
  return make_embedding(std::move(X), d, kappa);
}

double tangent_ssr(const TangentMatrix& V, const DissimMatrix& d, Curvature kappa) {
  const PointMatrix X = exp_origin_rows(V);
  const int cols = static_cast<int>(X.cols());
  const auto& obs = d.values();
  double ssr = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) {
      const double r = distance(X.row(i).data(), X.row(j).data(), cols, kappa) - obs(i, j);
      ssr += r * r;
    }
  }
  return ssr;
}

double tangent_ssr_gradient(const TangentMatrix& V, const DissimMatrix& d, Curvature kappa, TangentMatrix& grad) {
  const Eigen::Index n = V.rows();
  const Eigen::Index p = V.cols();
  const PointMatrix X = exp_origin_rows(V);
  const auto& obs = d.values();
  RowMatrix gx = RowMatrix::Zero(n, p + 1);  // dSSR/dx in ambient coordinates
  double ssr = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* xi = X.row(i).data();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double* xj = X.row(j).data();
      double z = xi[0] * xj[0];
      for (Eigen::Index k = 1; k <= p; ++k) z -= xi[k] * xj[k];
      const double delta = stable_arccosh(z) / kappa.sqrt();
      const double res = delta - obs(i, j);
      ssr += res * res;
      if (z <= 1.0) continue;
      const double c = 2.0 * res / (kappa.sqrt() * std::sqrt((z - 1.0) * (z + 1.0)));
      // dz/dx_i = (x_j0, -x_j1, ..., -x_jp)
      gx(i, 0) += c * xj[0];
      gx(j, 0) += c * xi[0];
      for (Eigen::Index k = 1; k <= p; ++k) {
        gx(i, k) -= c * xj[k];
        gx(j, k) -= c * xi[k];
      }
    }
  }
  grad.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto v = V.row(i);
    const double r = v.norm();
    // x0 = cosh r, x_k = s(r) v_k with s = sinh(r)/r; q = s'(r)/r.
    double s, q;
    if (r < 1e-2) {
      const double r2 = r * r;
      s = 1.0 + r2 / 6.0 + r2 * r2 / 120.0;
      q = 1.0 / 3.0 + r2 / 30.0 + r2 * r2 / 840.0;
    } else {
      s = std::sinh(r) / r;
      q = (r * std::cosh(r) - std::sinh(r)) / (r * r * r);
    }
    double gv = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) gv += gx(i, k + 1) * v[k];
    for (Eigen::Index l = 0; l < p; ++l) grad(i, l) = gx(i, 0) * s * v[l] + s * gx(i, l + 1) + v[l] * q * gv;
  }
  return ssr;
}

namespace {

// Row SSR of object i placed at x, abandoned once it exceeds `bound`.
double row_ssr(const double* x, std::size_t i, const PointMatrix& X, const DissimMatrix& d, Curvature kappa,
               double bound) {
  const int cols = static_cast<int>(X.cols());
  double acc = 0.0;
  for (Eigen::Index j = 0; j < X.rows() && acc < bound; ++j) {
    if (static_cast<std::size_t>(j) == i) continue;
    const double r = distance(x, X.row(j).data(), cols, kappa) - d(i, static_cast<std::size_t>(j));
    acc += r * r;
  }
  return acc;
}

// Axis-aligned grid over [-R, R]^p with at most ~500 nodes.
std::vector<TangentVector> grid_candidates(int p, double R) {
  int per_axis = 2;
  while (std::pow(per_axis + 1, p) <= 500.0) ++per_axis;
  std::vector<TangentVector> out;
  std::vector<int> idx(p, 0);
  for (;;) {
    TangentVector v(p);
    for (int k = 0; k < p; ++k) v[k] = -R + 2.0 * R * idx[k] / (per_axis - 1);
    out.push_back(v);
    int k = 0;
    while (k < p && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == p) break;
  }
  return out;
}

}  // namespace

std::size_t relocate_points(TangentMatrix& V, const DissimMatrix& d, Curvature kappa) {
  const auto n = static_cast<std::size_t>(V.rows());
  const int p = static_cast<int>(V.cols());
  PointMatrix X = exp_origin_rows(V);
  const auto grid = grid_candidates(p, V.rowwise().norm().maxCoeff() + 1.0);
  Eigen::VectorXd x(p + 1);
  std::size_t moved = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double current = row_ssr(X.row(static_cast<Eigen::Index>(i)).data(), i, X, d, kappa,
                                   std::numeric_limits<double>::infinity());
    double best = current * (1.0 - 1e-9);
    TangentVector best_v;
    auto consider = [&](const TangentVector& v) {
      exp_origin({v.data(), static_cast<std::size_t>(p)}, {x.data(), static_cast<std::size_t>(p + 1)});
      const double s = row_ssr(x.data(), i, X, d, kappa, best);
      if (s < best) {
        best = s;
        best_v = v;
      }
    };
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const TangentVector vj = V.row(static_cast<Eigen::Index>(j)).transpose();
      consider(vj);
      consider(-vj);
    }
    for (const auto& v : grid) consider(v);
    if (best_v.size() == 0) continue;
    V.row(static_cast<Eigen::Index>(i)) = best_v.transpose();
    exp_origin({best_v.data(), static_cast<std::size_t>(p)},
               {X.row(static_cast<Eigen::Index>(i)).data(), static_cast<std::size_t>(p + 1)});
    ++moved;
  }
  return moved;
}

InitEmbedding refine_stress(const InitEmbedding& init, const DissimMatrix& d, Curvature kappa,
                            const RefineOptions& opts) {
  if (static_cast<std::size_t>(init.X.rows()) != d.size()) throw InputError("refine_stress: size mismatch");
  if (!(opts.tol < std::numeric_limits<double>::infinity()) || opts.max_iters <= 0) return init;

  TangentMatrix V = log_origin_rows(init.X);
  TangentMatrix grad, trial;
  double ssr = tangent_ssr_gradient(V, d, kappa, grad);
  bool changed = false;
  int it = 0;
  for (int round = 0;; ++round) {
    double step = opts.initial_step;
    for (; it < opts.max_iters; ++it) {
      bool accepted = false;
      double trial_ssr = ssr;
      for (int h = 0; h <= opts.max_halvings; ++h) {
        trial = V - step * grad;
        trial_ssr = tangent_ssr(trial, d, kappa);
        if (trial_ssr < ssr) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
      if (ssr == 0.0 || (ssr - trial_ssr) / ssr < opts.tol) break;
      V.swap(trial);
      ssr = tangent_ssr_gradient(V, d, kappa, grad);
      changed = true;
      step *= 2.0;
    }
    if (round >= opts.relocation_rounds || it >= opts.max_iters) break;
    if (relocate_points(V, d, kappa) == 0) break;
    ssr = tangent_ssr_gradient(V, d, kappa, grad);
    changed = true;
  }
  if (!changed) return init;
  return make_embedding(exp_origin_rows(V), d, kappa);
}

std::vector<double> default_curvature_grid() {
  std::vector<double> grid(16);
  for (int k = 0; k < 16; ++k) grid[k] = std::pow(10.0, -1.0 + 2.0 * k / 15.0);
  return grid;
}

CurvatureProfile estimate_curvature(const DissimMatrix& d, int p, const std::vector<double>& grid,
                                    const RefineOptions& budget, unsigned threads) {
  if (grid.empty()) throw InputError("estimate_curvature: empty curvature grid");
  for (double k : grid) {
    if (!(k > 0.0)) throw InputError("estimate_curvature: grid values must be positive");
  }
  CurvatureProfile prof;
  prof.grid = grid;
  prof.stress.assign(grid.size(), 0.0);
  prof.embeddings.resize(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    const Curvature kappa(grid[k]);
    prof.embeddings[k] = refine_stress(spectral_init(d, p, kappa), d, kappa, budget);
    prof.stress[k] = prof.embeddings[k].stress;
  });
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double cur = prof.stress[k], best = prof.stress[prof.best];
    if (cur < best || (cur == best && grid[k] < grid[prof.best])) prof.best = k;
  }
  prof.kappa_hat = grid[prof.best];
  return prof;
}

}  // namespace bhmds
