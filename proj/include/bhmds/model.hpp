#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>

#include "bhmds/dissimilarity.hpp"
#include "bhmds/initializer.hpp"
#include "bhmds/lorentz.hpp"

namespace bhmds {

/// Prior and proposal constants of the model. sigma2 ~ IG(a, b),
/// lambda_j ~ IG(alpha, beta_j), v_i ~ N_p(0, Diag(lambda)).
struct ModelConfig {
  int p = 2;
  double kappa = 1.0;
  double a = 5.0;
  double b = 1.0;
  double alpha = 0.5;
  Eigen::VectorXd beta = Eigen::VectorXd::Ones(2);
  double c = 1.0;

  /// Throws InputError when a constant is out of range.
  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

/// The sampler's state. X, delta and ssr are derived from V and kept in
/// sync by set_row / recompute.
struct ChainState {
  TangentMatrix V;        // n x p
  PointMatrix X;          // n x (p+1), X_i = exp_origin(V_i)
  Eigen::MatrixXd delta;  // n x n, symmetric, zero diagonal
  double sigma2 = 1.0;
  Eigen::VectorXd lambda;
  double ssr = 0.0;
  Curvature curvature{1.0};

  static ChainState from_tangent(TangentMatrix V, const DissimMatrix& d, Curvature kappa, double sigma2,
                                 Eigen::VectorXd lambda);

  std::size_t size() const noexcept { return static_cast<std::size_t>(V.rows()); }
  int dim() const noexcept { return static_cast<int>(V.cols()); }

  /// Rebuilds X, delta and ssr from V.
  void recompute(const DissimMatrix& d, Curvature kappa);

  /// Largest discrepancy between the stored and recomputed values: the
  /// maximum of the absolute delta error and the relative ssr error.
  double max_drift(const DissimMatrix& d, Curvature kappa) const;

  /// Moves object i to (v, x) with new distances row_i, updating ssr.
  void set_row(std::size_t i, const TangentVector& v, std::span<const double> x, const Eigen::VectorXd& row_i,
               const DissimMatrix& d);
};

/// -(delta - d)^2 / (2 sigma2) - log Phi(delta / sigma).
double pair_term(double delta, double d, double sigma2);

double loglik_pair_terms(std::size_t i, std::size_t j, const ChainState& s, const DissimMatrix& d);

/// Truncated-normal log-likelihood up to an additive constant:
/// -(m/2) log sigma2 - SSR / (2 sigma2) - sum_{i<j} log Phi(delta_ij / sigma).
double loglik_full(const ChainState& s, const DissimMatrix& d);

/// sum_{i<j} log Phi(delta_ij / sigma) for the given sigma2.
double sum_log_norm_cdf(const Eigen::MatrixXd& delta, double sigma2);

/// -1/2 sum_j v_j^2 / lambda_j.
double prior_quadratic(std::span<const double> v, const Eigen::VectorXd& lambda);

/// Log prior density up to a constant: the Gaussian on V (including its
/// -(n/2) sum log lambda normaliser) plus IG kernels for sigma2 and lambda.
double log_prior(const ChainState& s, const ModelConfig& cfg);

double log_posterior(const ChainState& s, const ModelConfig& cfg, const DissimMatrix& d);

/// b = (a-1) SSR0/m (floored at 1e-8) and, with S_v = V0'V0/n,
/// beta_j = (alpha+1) S_v[j][j] for alpha <= 1, else (alpha-1) S_v[j][j].
ModelConfig select_hyperparameters(const InitEmbedding& init, const TangentMatrix& V0, double a = 5.0,
                                   double alpha = 0.5, double c = 1.0);

}  // namespace bhmds
