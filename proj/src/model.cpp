#include "bhmds/model.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "bhmds/error.hpp"
#include "bhmds/stats.hpp"

namespace bhmds {

void ModelConfig::validate() const {
  if (p < 1) throw InputError("model: p must be >= 1");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InputError("model: kappa must be positive");
  if (!(a > 1.0)) throw InputError("model: a must exceed 1");
  if (!(b > 0.0)) throw InputError("model: b must be positive");
  if (!(alpha > 0.0)) throw InputError("model: alpha must be positive");
  if (beta.size() != p) throw InputError("model: beta must have p entries");
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (!(beta[j] > 0.0) || !std::isfinite(beta[j])) throw InputError("model: beta entries must be positive");
  }
  if (!(c > 0.0)) throw InputError("model: c must be positive");
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["p"] = p;
  j["kappa"] = kappa;
  j["a"] = a;
  j["b"] = b;
  j["alpha"] = alpha;
  j["beta"] = std::vector<double>(beta.data(), beta.data() + beta.size());
  j["c"] = c;
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("model config: ") + e.what());
  }
  ModelConfig cfg;
  try {
    cfg.p = j.at("p").get<int>();
    cfg.kappa = j.at("kappa").get<double>();
    cfg.a = j.at("a").get<double>();
    cfg.b = j.at("b").get<double>();
    cfg.alpha = j.at("alpha").get<double>();
    const auto beta = j.at("beta").get<std::vector<double>>();
    cfg.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    cfg.c = j.value("c", 1.0);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ChainState ChainState::from_tangent(TangentMatrix V, const DissimMatrix& d, Curvature kappa, double sigma2,
                                    Eigen::VectorXd lambda) {
  if (static_cast<std::size_t>(V.rows()) != d.size()) throw InputError("chain state: V and d differ in size");
  if (lambda.size() != V.cols()) throw InputError("chain state: lambda must have p entries");
  if (!(sigma2 > 0.0)) throw InputError("chain state: sigma2 must be positive");
  ChainState s;
  s.V = std::move(V);
  s.sigma2 = sigma2;
  s.lambda = std::move(lambda);
  s.curvature = kappa;
  s.recompute(d, kappa);
  return s;
}

namespace {

double ssr_of(const Eigen::MatrixXd& delta, const DissimMatrix& d) {
  const auto& obs = d.values();
  double ssr = 0.0;
  for (Eigen::Index i = 0; i < delta.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < delta.cols(); ++j) {
      const double r = delta(i, j) - obs(i, j);
      ssr += r * r;
    }
  }
  return ssr;
}

}  // namespace

void ChainState::recompute(const DissimMatrix& d, Curvature kappa) {
  curvature = kappa;
  X = exp_origin_rows(V);
  delta = pairwise_distances(X, kappa);
  ssr = ssr_of(delta, d);
}

double ChainState::max_drift(const DissimMatrix& d, Curvature kappa) const {
  const PointMatrix Xr = exp_origin_rows(V);
  const Eigen::MatrixXd dr = pairwise_distances(Xr, kappa);
  const double ssr_r = ssr_of(dr, d);
  const double ddelta = (dr - delta).cwiseAbs().maxCoeff();
  const double dx = (Xr - X).cwiseAbs().maxCoeff();
  const double dssr = std::abs(ssr_r - ssr) / std::max(1.0, std::abs(ssr_r));
  return std::max({ddelta, dx, dssr});
}

void ChainState::set_row(std::size_t i, const TangentVector& v, std::span<const double> x,
                         const Eigen::VectorXd& row_i, const DissimMatrix& d) {
  const auto ii = static_cast<Eigen::Index>(i);
  const auto& obs = d.values();
  double change = 0.0;
  for (Eigen::Index j = 0; j < delta.cols(); ++j) {
    if (j == ii) continue;
    const double r_old = delta(ii, j) - obs(ii, j);
    const double r_new = row_i[j] - obs(ii, j);
    change += r_new * r_new - r_old * r_old;
    delta(ii, j) = row_i[j];
    delta(j, ii) = row_i[j];
  }
  ssr += change;
  V.row(ii) = v.transpose();
  for (Eigen::Index k = 0; k < X.cols(); ++k) X(ii, k) = x[static_cast<std::size_t>(k)];
}

double pair_term(double delta, double d, double sigma2) {
  const double r = delta - d;
  return -r * r / (2.0 * sigma2) - log_norm_cdf(delta / std::sqrt(sigma2));
}

double loglik_pair_terms(std::size_t i, std::size_t j, const ChainState& s, const DissimMatrix& d) {
  if (i == j) throw InputError("loglik_pair_terms: i and j must differ");
  return pair_term(s.delta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), d(i, j), s.sigma2);
}

double sum_log_norm_cdf(const Eigen::MatrixXd& delta, double sigma2) {
  const double sigma = std::sqrt(sigma2);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < delta.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < delta.cols(); ++j) acc += log_norm_cdf(delta(i, j) / sigma);
  }
  return acc;
}

double loglik_full(const ChainState& s, const DissimMatrix& d) {
  const double m = static_cast<double>(d.pair_count());
  return -0.5 * m * std::log(s.sigma2) - s.ssr / (2.0 * s.sigma2) - sum_log_norm_cdf(s.delta, s.sigma2);
}

double prior_quadratic(std::span<const double> v, const Eigen::VectorXd& lambda) {
  double q = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) q += v[j] * v[j] / lambda[static_cast<Eigen::Index>(j)];
  return -0.5 * q;
}

double log_prior(const ChainState& s, const ModelConfig& cfg) {
  const double n = static_cast<double>(s.size());
  double lp = 0.0;
  for (Eigen::Index j = 0; j < s.lambda.size(); ++j) {
    const double lam = s.lambda[j];
    lp += -0.5 * s.V.col(j).squaredNorm() / lam - 0.5 * n * std::log(lam);
    lp += log_inverse_gamma_kernel(lam, cfg.alpha, cfg.beta[j]);
  }
  lp += log_inverse_gamma_kernel(s.sigma2, cfg.a, cfg.b);
  return lp;
}

double log_posterior(const ChainState& s, const ModelConfig& cfg, const DissimMatrix& d) {
  return loglik_full(s, d) + log_prior(s, cfg);
}

ModelConfig select_hyperparameters(const InitEmbedding& init, const TangentMatrix& V0, double a, double alpha,
                                   double c) {
  if (V0.rows() != init.X.rows() || V0.cols() != init.X.cols() - 1) {
    throw InputError("select_hyperparameters: V0 does not match the initial embedding");
  }
  const auto n = static_cast<double>(V0.rows());
  const double m = 0.5 * n * (n - 1.0);
  ModelConfig cfg;
  cfg.p = static_cast<int>(V0.cols());
  cfg.kappa = init.kappa;
  cfg.a = a;
  cfg.alpha = alpha;
  cfg.c = c;
  cfg.b = std::max((a - 1.0) * init.ssr / m, 1e-8);
  cfg.beta.resize(V0.cols());
  const double factor = alpha <= 1.0 ? alpha + 1.0 : alpha - 1.0;
  for (Eigen::Index j = 0; j < V0.cols(); ++j) {
    const double sv = V0.col(j).squaredNorm() / n;
    cfg.beta[j] = std::max(factor * sv, 1e-8);
  }
  cfg.validate();
  return cfg;
}

}  // namespace bhmds
