#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "bhmds/dissimilarity.hpp"
#include "bhmds/initializer.hpp"
#include "bhmds/mcmc.hpp"
#include "bhmds/model.hpp"
#include "bhmds/rng.hpp"

namespace bhmds {

enum class StrataMode { Integer, Quantile, Explicit };

/// How the other objects are banded by dissimilarity. Parsed from
/// "integer", "quantile:M" or "edges:e0,e1,..." (band lower bounds).
struct StrataSpec {
  StrataMode mode = StrataMode::Integer;
  int bands = 0;                   // quantile mode: M
  std::vector<double> lower;       // explicit mode: ascending band lower bounds
  int cases = 1;                   // C: the lowest C bands are cases

  static StrataSpec parse(const std::string& text, int cases);
};

using Index32 = std::uint32_t;

/// Per object i, a partition of {j != i} into M bands. Band k holds the j
/// with lower[k] <= d_ij < lower[k+1]; the last band is unbounded above.
struct StrataPlan {
  std::size_t n = 0;
  int bands = 0;
  int cases = 0;
  std::vector<double> lower;
  std::vector<std::vector<std::vector<Index32>>> members;  // [i][k]

  std::size_t stratum_size(std::size_t i, int k) const { return members[i][static_cast<std::size_t>(k)].size(); }
  std::size_t case_size(std::size_t i) const;
  std::size_t control_size(std::size_t i) const;
};

/// Integer mode requires integer dissimilarities and creates one band per
/// value 1..max. Quantile mode puts M bands at the global quantiles of the
/// off-diagonal dissimilarities. Empty bands are kept.
StrataPlan build_strata(const DissimMatrix& d, const StrataSpec& spec);

/// round(r * mean case size), capped at each object's control size.
std::vector<std::size_t> pilot_subsample_sizes(const StrataPlan& plan, double r);

/// Integer split of total over strata proportional to weights (largest
/// remainder), capped at sizes with the excess redistributed; every
/// nonempty stratum gets at least one draw when total allows. All-zero
/// weights fall back to allocation proportional to size.
std::vector<std::size_t> allocate_subsample(std::size_t total, const std::vector<double>& weights,
                                            const std::vector<std::size_t>& sizes);

struct CaseControlPlan {
  StrataPlan strata;
  double rate = 5.0;
  std::vector<std::size_t> n_i;
  std::vector<std::vector<double>> weights;       // [i][k], 0 for case bands
  std::vector<std::vector<std::size_t>> n_ik;     // [i][k], 0 for case bands
  std::vector<std::vector<std::vector<Index32>>> samples;  // [i][k] frozen subsample

  /// Sets n_ik from the weights and draws every subsample.
  void allocate(Rng& rng);
  /// Redraws the subsample of every control band of object i.
  void resample(std::size_t i, Rng& rng);
  void resample_all(Rng& rng);

  /// Total explicitly evaluated pairs for object i (cases plus subsample).
  std::size_t evaluated_pairs(std::size_t i) const;

  std::string to_json() const;
};

/// Plan with every n_ik = N_ik, i.e. exact evaluation through the
/// case-control code path.
CaseControlPlan exhaustive_plan(const StrataPlan& strata);

/// Pilot evaluator: case bands exact, plus one pooled simple random sample
/// of n_i controls inflated by control_size / n_i. While recording it
/// accumulates the per-band weight shares |dl_k / sum_g dl_g| of every
/// proposal.
class PilotLikelihood final : public LikelihoodEvaluator {
 public:
  PilotLikelihood(const StrataPlan& strata, const std::vector<std::size_t>& n_i, Rng& rng);

  double loglik_change(std::size_t i, std::span<const double> x_new, const ChainState& s, const DissimMatrix& d,
                       ProposalScratch& scratch) override;

  void set_recording(bool on) noexcept { recording_ = on; }
  /// Mean share per band over the recorded proposals with a nonzero sum.
  std::vector<std::vector<double>> weights() const;

 private:
  const StrataPlan* strata_;
  std::vector<Index32> band_of_;                 // [i*n + j]
  std::vector<std::vector<Index32>> pool_;       // [i]
  std::vector<double> inflation_;                // [i]
  std::vector<std::vector<double>> share_sum_;   // [i][k]
  std::vector<std::size_t> share_count_;         // [i]
  std::vector<double> band_change_;
  bool recording_ = false;
};

/// Stratified estimator: case bands exact, each control band's subsample
/// sum inflated by N_ik / n_ik.
class CaseControlLikelihood final : public LikelihoodEvaluator {
 public:
  explicit CaseControlLikelihood(CaseControlPlan& plan, bool resample_each_sweep = false);

  double loglik_change(std::size_t i, std::span<const double> x_new, const ChainState& s, const DissimMatrix& d,
                       ProposalScratch& scratch) override;
  void begin_sweep(Rng& rng) override;

  std::uint64_t pair_evaluations() const noexcept { return evaluations_; }

 private:
  CaseControlPlan* plan_;
  bool resample_;
  std::uint64_t evaluations_ = 0;
};

/// Approximate log full conditional of v_i at the current state: pair terms
/// from the stratified estimator plus the Gaussian prior quadratic.
double approx_pair_loglik(std::size_t i, const ChainState& s, const DissimMatrix& d, const CaseControlPlan& plan);

/// The same conditional with every pair evaluated.
double exact_conditional(std::size_t i, const ChainState& s, const DissimMatrix& d);

struct PilotSettings {
  McmcSettings mcmc;
  PilotSettings() {
    mcmc.iters = 3000;
    mcmc.burnin = 1000;
    mcmc.record_delta = DeltaRecording::None;
  }
};

/// Runs the pilot chain, turns the accumulated shares into n_ik and freezes
/// the subsamples.
CaseControlPlan run_pilot(const DissimMatrix& d, const ModelConfig& cfg, const StrataPlan& strata, double r,
                          const PilotSettings& pilot, const InitEmbedding& init, Rng& rng);

struct LoglikComparison {
  std::vector<double> exact;
  std::vector<double> approx;
  double correlation = 0.0;

  std::string scatter_csv() const;
};

/// For every checkpoint state and n_objects randomly chosen objects, draws
/// one random-walk proposal and evaluates the log conditional change
/// (pair terms plus prior quadratic) exactly and with the given evaluator.
LoglikComparison compare_loglik_changes(const DissimMatrix& d, const ModelConfig& cfg,
                                        const std::vector<ChainState>& checkpoints, LikelihoodEvaluator& approx,
                                        std::size_t n_objects, Rng& rng);

/// Convenience form: runs an exact chain with `settings` and keeps n_params
/// evenly spaced post-burn-in states as checkpoints.
LoglikComparison compare_loglik_changes(const DissimMatrix& d, const ModelConfig& cfg, CaseControlPlan& plan,
                                        const McmcSettings& settings, const InitEmbedding& init,
                                        std::size_t n_params, std::size_t n_objects, Rng& rng);

}  // namespace bhmds
