#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

#include "bhmds/dissimilarity.hpp"
#include "bhmds/initializer.hpp"
#include "bhmds/model.hpp"
#include "bhmds/rng.hpp"
#include "bhmds/stats.hpp"

namespace bhmds {

/// How posterior draws of delta are kept. Auto keeps every draw for n <= 500
/// and switches to per-pair streaming quantiles above that.
enum class DeltaRecording { Auto, Full, Streaming, None };

struct McmcSettings {
  int iters = 20000;
  int burnin = 3000;
  int thin = 5;
  std::uint64_t seed = 0;
  DeltaRecording record_delta = DeltaRecording::Auto;
  bool record_origin_dist = false;
  double ci_level = 0.95;
  /// Use the exact conditional of sigma2 as the MH target instead of the
  /// inverse-gamma approximation.
  bool exact_sigma2 = false;
  int drift_check_every = 1000;
  /// Holding a block fixed is only meant for diagnostics.
  bool update_lambda = true;
  bool update_sigma2 = true;

  void validate() const;
};

/// Scratch space shared between a likelihood evaluator and the sampler for
/// one proposal. When row_complete is set, row holds the proposed
/// distances from object i to every object.
struct ProposalScratch {
  Eigen::VectorXd row;
  bool row_complete = false;
};

/// Change of the log-likelihood when object i moves to x_new, with every
/// other object fixed. Implementations may approximate.
class LikelihoodEvaluator {
 public:
  virtual ~LikelihoodEvaluator() = default;
  virtual double loglik_change(std::size_t i, std::span<const double> x_new, const ChainState& s,
                               const DissimMatrix& d, ProposalScratch& scratch) = 0;
  /// Called once at the start of every sweep over objects.
  virtual void begin_sweep(Rng& /*rng*/) {}
};

/// Sum over all j != i of the change in pair_term.
class ExactLikelihood final : public LikelihoodEvaluator {
 public:
  double loglik_change(std::size_t i, std::span<const double> x_new, const ChainState& s, const DissimMatrix& d,
                       ProposalScratch& scratch) override;
};

/// Draws lambda_j ~ IG(alpha + n/2, beta_j + s_j/2), s_j = sum_i V_ij^2.
void gibbs_lambda(ChainState& s, const ModelConfig& cfg, Rng& rng);

/// Log MH ratio for moving object i to v_new: likelihood change plus the
/// change of the Gaussian prior quadratic. Fills scratch.
double log_accept_ratio_v(std::size_t i, const TangentVector& v_new, std::span<const double> x_new,
                          const ChainState& s, const DissimMatrix& d, LikelihoodEvaluator& lik,
                          ProposalScratch& scratch);

/// Random-walk step for object i with proposal covariance c sigma2/(n-1) I.
bool mh_update_v(std::size_t i, ChainState& s, const ModelConfig& cfg, const DissimMatrix& d, Rng& rng,
                 LikelihoodEvaluator& lik, ProposalScratch& scratch);

/// Proposal variance c gamma / ((omega-1)^2 (omega-2)) with
/// omega = m/2 + a and gamma = (SSR/2 + b)^2.
double sigma2_proposal_variance(const ChainState& s, const ModelConfig& cfg, const DissimMatrix& d);

/// Log MH ratio for sigma2 -> sigma2_new; -inf when sigma2_new <= 0.
double log_accept_ratio_sigma2(double sigma2_new, const ChainState& s, const ModelConfig& cfg,
                               const DissimMatrix& d, bool exact);

bool mh_update_sigma2(ChainState& s, const ModelConfig& cfg, const DissimMatrix& d, Rng& rng, bool exact = false);

/// Packed upper-triangle index of pair (i, j), i < j.
inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n) {
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

struct Trace {
  std::vector<int> iter;
  std::vector<double> sigma2;
  std::vector<Eigen::VectorXd> lambda;
  std::vector<double> stress;
  std::vector<Eigen::VectorXd> origin_dist;
  /// One packed upper triangle per recorded sample (Full recording only).
  std::vector<std::vector<double>> delta;

  std::size_t size() const noexcept { return iter.size(); }
};

struct PosteriorSummary {
  Eigen::MatrixXd delta_hat;
  PointMatrix X_hat;
  int best_iter = 0;
  double stress_hat = 0.0;
  double sigma2_hat = 0.0;
  double ci_level = 0.95;
  Eigen::MatrixXd ci_lower;  // empty when delta was not recorded
  Eigen::MatrixXd ci_upper;
  double acceptance_v = 0.0;
  double acceptance_sigma2 = 0.0;
  double runtime_seconds = 0.0;
  double seconds_per_100 = 0.0;
};

struct ChainResult {
  Trace trace;
  PosteriorSummary summary;
  ChainState final_state;
};

/// V = log_origin(X0), sigma2 = SSR0/m, lambda = diag(V'V/n).
ChainState initial_state(const InitEmbedding& init, const DissimMatrix& d);

/// Called after every iteration t (1-based) with the updated state.
using IterationCallback = std::function<void(int, const ChainState&)>;

/// Gibbs for lambda, a systematic scan of random-walk MH over objects, then
/// MH for sigma2; thinned post-burn-in draws are recorded.
ChainResult run_chain(const DissimMatrix& d, const ModelConfig& cfg, const McmcSettings& settings,
                      const InitEmbedding& init, LikelihoodEvaluator& lik, const IterationCallback& on_iteration = {});

/// Fraction of pairs whose true delta lies inside the per-pair equal-tailed
/// interval of the recorded draws. Throws on an empty trace.
double coverage_rate(const std::vector<std::vector<double>>& delta_draws, const Eigen::MatrixXd& delta_true,
                     double level = 0.95);
double coverage_rate(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& upper, const Eigen::MatrixXd& delta_true);

}  // namespace bhmds
