#include "bhmds/mcmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "bhmds/error.hpp"
#include "bhmds/evaluation.hpp"

namespace bhmds {

void McmcSettings::validate() const {
  if (iters < 1) throw InputError("mcmc: iters must be >= 1");
  if (burnin < 0 || burnin >= iters) throw InputError("mcmc: burnin must lie in [0, iters)");
  if (thin < 1) throw InputError("mcmc: thin must be >= 1");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw InputError("mcmc: ci level must lie in (0, 1)");
}

double ExactLikelihood::loglik_change(std::size_t i, std::span<const double> x_new, const ChainState& s,
                                      const DissimMatrix& d, ProposalScratch& scratch) {
  const auto n = static_cast<Eigen::Index>(s.size());
  const auto ii = static_cast<Eigen::Index>(i);
  const int cols = static_cast<int>(s.X.cols());
  scratch.row.resize(n);
  double change = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == ii) {
      scratch.row[j] = 0.0;
      continue;
    }
    const double nd = distance(x_new.data(), s.X.row(j).data(), cols, s.curvature);
    scratch.row[j] = nd;
    const double dij = d.values()(ii, j);
    change += pair_term(nd, dij, s.sigma2) - pair_term(s.delta(ii, j), dij, s.sigma2);
  }
  scratch.row_complete = true;
  return change;
}

void gibbs_lambda(ChainState& s, const ModelConfig& cfg, Rng& rng) {
  const double n = static_cast<double>(s.size());
  for (Eigen::Index j = 0; j < s.lambda.size(); ++j) {
    const double sj = s.V.col(j).squaredNorm();
    s.lambda[j] = sample_inverse_gamma(cfg.alpha + 0.5 * n, cfg.beta[j] + 0.5 * sj, rng);
  }
}

double log_accept_ratio_v(std::size_t i, const TangentVector& v_new, std::span<const double> x_new,
                          const ChainState& s, const DissimMatrix& d, LikelihoodEvaluator& lik,
                          ProposalScratch& scratch) {
  scratch.row_complete = false;
  const double dlik = lik.loglik_change(i, x_new, s, d, scratch);
  const auto row = s.V.row(static_cast<Eigen::Index>(i));
  const double old_q = prior_quadratic({row.data(), static_cast<std::size_t>(row.size())}, s.lambda);
  const double new_q = prior_quadratic({v_new.data(), static_cast<std::size_t>(v_new.size())}, s.lambda);
  return dlik + new_q - old_q;
}

bool mh_update_v(std::size_t i, ChainState& s, const ModelConfig& cfg, const DissimMatrix& d, Rng& rng,
                 LikelihoodEvaluator& lik, ProposalScratch& scratch) {
  const auto n = static_cast<double>(s.size());
  const int p = s.dim();
  const double sd = std::sqrt(cfg.c * s.sigma2 / (n - 1.0));
  std::normal_distribution<double> normal(0.0, 1.0);
  TangentVector v_new = s.V.row(static_cast<Eigen::Index>(i)).transpose();
  for (int k = 0; k < p; ++k) v_new[k] += sd * normal(rng);
  Eigen::VectorXd x_new(p + 1);
  exp_origin({v_new.data(), static_cast<std::size_t>(p)}, {x_new.data(), static_cast<std::size_t>(p + 1)});
  const std::span<const double> xs(x_new.data(), static_cast<std::size_t>(p + 1));

  const double log_ratio = log_accept_ratio_v(i, v_new, xs, s, d, lik, scratch);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (!(std::log(unif(rng)) < log_ratio)) return false;

  if (!scratch.row_complete) {
    const auto nn = static_cast<Eigen::Index>(s.size());
    const int cols = p + 1;
    scratch.row.resize(nn);
    for (Eigen::Index j = 0; j < nn; ++j) {
      scratch.row[j] = j == static_cast<Eigen::Index>(i) ? 0.0 : distance(x_new.data(), s.X.row(j).data(), cols, s.curvature);
    }
    scratch.row_complete = true;
  }
  s.set_row(i, v_new, xs, scratch.row, d);
  return true;
}

double sigma2_proposal_variance(const ChainState& s, const ModelConfig& cfg, const DissimMatrix& d) {
  const double omega = 0.5 * static_cast<double>(d.pair_count()) + cfg.a;
  const double scale = 0.5 * s.ssr + cfg.b;
  return cfg.c * scale * scale / ((omega - 1.0) * (omega - 1.0) * (omega - 2.0));
}

double log_accept_ratio_sigma2(double sigma2_new, const ChainState& s, const ModelConfig& cfg,
                               const DissimMatrix& d, bool exact) {
  if (!(sigma2_new > 0.0)) return -std::numeric_limits<double>::infinity();
  const double omega = 0.5 * static_cast<double>(d.pair_count()) + cfg.a;
  const double scale = 0.5 * s.ssr + cfg.b;
  double r = log_inverse_gamma_kernel(sigma2_new, omega, scale) - log_inverse_gamma_kernel(s.sigma2, omega, scale);
  if (exact) r += sum_log_norm_cdf(s.delta, s.sigma2) - sum_log_norm_cdf(s.delta, sigma2_new);
  return r;
}

bool mh_update_sigma2(ChainState& s, const ModelConfig& cfg, const DissimMatrix& d, Rng& rng, bool exact) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double proposal = s.sigma2 + std::sqrt(sigma2_proposal_variance(s, cfg, d)) * normal(rng);
  if (!(proposal > 0.0)) return false;
  const double log_ratio = log_accept_ratio_sigma2(proposal, s, cfg, d, exact);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (!(std::log(unif(rng)) < log_ratio)) return false;
  s.sigma2 = proposal;
  return true;
}

ChainState initial_state(const InitEmbedding& init, const DissimMatrix& d) {
  if (static_cast<std::size_t>(init.X.rows()) != d.size()) throw InputError("initial_state: size mismatch");
  TangentMatrix V = log_origin_rows(init.X);
  const double n = static_cast<double>(V.rows());
  Eigen::VectorXd lambda(V.cols());
  for (Eigen::Index j = 0; j < V.cols(); ++j) lambda[j] = std::max(V.col(j).squaredNorm() / n, 1e-8);
  const double sigma2 = std::max(init.ssr / static_cast<double>(d.pair_count()), 1e-8);
  return ChainState::from_tangent(std::move(V), d, Curvature(init.kappa), sigma2, std::move(lambda));
}

ChainResult run_chain(const DissimMatrix& d, const ModelConfig& cfg, const McmcSettings& settings,
                      const InitEmbedding& init, LikelihoodEvaluator& lik, const IterationCallback& on_iteration) {
  settings.validate();
  cfg.validate();
  if (init.dim() != cfg.p) throw InputError("run_chain: initial embedding dimension differs from the model");
  if (std::abs(init.kappa - cfg.kappa) > 1e-12 * cfg.kappa) {
    throw InputError("run_chain: initial embedding curvature differs from the model");
  }
  const Curvature kappa(cfg.kappa);
  const std::size_t n = d.size();
  const std::size_t m = d.pair_count();

  ChainResult out;
  ChainState& s = out.final_state;
  s = initial_state(init, d);
  Rng rng = make_rng(settings.seed, "chain");
  ProposalScratch scratch;

  DeltaRecording mode = settings.record_delta;
  if (mode == DeltaRecording::Auto) mode = n <= 500 ? DeltaRecording::Full : DeltaRecording::Streaming;
  const double tail = 0.5 * (1.0 - settings.ci_level);
  std::vector<P2Quantile> lo_sketch, hi_sketch;
  if (mode == DeltaRecording::Streaming) {
    lo_sketch.assign(m, P2Quantile(tail));
    hi_sketch.assign(m, P2Quantile(1.0 - tail));
  }

  Trace& trace = out.trace;
  PosteriorSummary& sum = out.summary;
  sum.ci_level = settings.ci_level;
  double best = std::numeric_limits<double>::infinity();
  std::size_t accepted_v = 0, accepted_s2 = 0;

  const auto start = std::chrono::steady_clock::now();
  for (int t = 1; t <= settings.iters; ++t) {
    if (settings.update_lambda) gibbs_lambda(s, cfg, rng);
    lik.begin_sweep(rng);
    for (std::size_t i = 0; i < n; ++i) accepted_v += mh_update_v(i, s, cfg, d, rng, lik, scratch);
    if (settings.update_sigma2) accepted_s2 += mh_update_sigma2(s, cfg, d, rng, settings.exact_sigma2);

    if (settings.drift_check_every > 0 && t % settings.drift_check_every == 0) s.recompute(d, kappa);

    if (t > settings.burnin && (t - settings.burnin - 1) % settings.thin == 0) {
      const double st = std::sqrt(s.ssr / d.sum_squares());
      trace.iter.push_back(t);
      trace.sigma2.push_back(s.sigma2);
      trace.lambda.push_back(s.lambda);
      trace.stress.push_back(st);
      if (settings.record_origin_dist) trace.origin_dist.push_back(origin_distances(s.X, kappa));
      if (st < best) {
        best = st;
        sum.delta_hat = s.delta;
        sum.X_hat = s.X;
        sum.best_iter = t;
      }
      if (mode == DeltaRecording::Full) {
        std::vector<double> packed;
        packed.reserve(m);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = i + 1; j < n; ++j) packed.push_back(s.delta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        trace.delta.push_back(std::move(packed));
      } else if (mode == DeltaRecording::Streaming) {
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = i + 1; j < n; ++j, ++k) {
            const double v = s.delta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            lo_sketch[k].add(v);
            hi_sketch[k].add(v);
          }
        }
      }
    }
    if (on_iteration) on_iteration(t, s);
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!std::isfinite(s.ssr) || !std::isfinite(s.sigma2)) throw NumericalError("run_chain: non-finite chain state");
  sum.stress_hat = best;
  sum.sigma2_hat = median(trace.sigma2);
  sum.acceptance_v = static_cast<double>(accepted_v) / (static_cast<double>(settings.iters) * static_cast<double>(n));
  sum.acceptance_sigma2 = static_cast<double>(accepted_s2) / static_cast<double>(settings.iters);
  sum.runtime_seconds = elapsed;
  sum.seconds_per_100 = 100.0 * elapsed / static_cast<double>(settings.iters);

  if (mode == DeltaRecording::Full || mode == DeltaRecording::Streaming) {
    const auto nn = static_cast<Eigen::Index>(n);
    sum.ci_lower = Eigen::MatrixXd::Zero(nn, nn);
    sum.ci_upper = Eigen::MatrixXd::Zero(nn, nn);
    std::vector<double> col(trace.delta.size());
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < nn; ++i) {
      for (Eigen::Index j = i + 1; j < nn; ++j, ++k) {
        double lo, hi;
        if (mode == DeltaRecording::Full) {
          for (std::size_t t = 0; t < trace.delta.size(); ++t) col[t] = trace.delta[t][k];
          std::sort(col.begin(), col.end());
          lo = quantile_sorted(col, tail);
          hi = quantile_sorted(col, 1.0 - tail);
        } else {
          lo = lo_sketch[k].value();
          hi = std::max(lo, hi_sketch[k].value());
        }
        sum.ci_lower(i, j) = sum.ci_lower(j, i) = lo;
        sum.ci_upper(i, j) = sum.ci_upper(j, i) = hi;
      }
    }
  }
  return out;
}

double coverage_rate(const std::vector<std::vector<double>>& delta_draws, const Eigen::MatrixXd& delta_true,
                     double level) {
  if (delta_draws.empty()) throw InputError("coverage_rate: no recorded delta draws");
  const auto n = static_cast<std::size_t>(delta_true.rows());
  const std::size_t m = n * (n - 1) / 2;
  for (const auto& draw : delta_draws) {
    if (draw.size() != m) throw InputError("coverage_rate: draw size does not match the truth");
  }
  const double tail = 0.5 * (1.0 - level);
  std::vector<double> col(delta_draws.size());
  std::size_t covered = 0, k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++k) {
      for (std::size_t t = 0; t < delta_draws.size(); ++t) col[t] = delta_draws[t][k];
      std::sort(col.begin(), col.end());
      const double truth = delta_true(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (quantile_sorted(col, tail) <= truth && truth <= quantile_sorted(col, 1.0 - tail)) ++covered;
    }
  }
  return static_cast<double>(covered) / static_cast<double>(m);
}

double coverage_rate(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& upper, const Eigen::MatrixXd& delta_true) {
  if (lower.size() == 0) throw InputError("coverage_rate: no credible intervals recorded");
  if (lower.rows() != delta_true.rows() || upper.rows() != delta_true.rows()) {
    throw InputError("coverage_rate: interval and truth sizes differ");
  }
  const Eigen::Index n = delta_true.rows();
  std::size_t covered = 0, m = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j, ++m) {
      if (lower(i, j) <= delta_true(i, j) && delta_true(i, j) <= upper(i, j)) ++covered;
    }
  }
  return static_cast<double>(covered) / static_cast<double>(m);
}

}  // namespace bhmds
