#include "bhmds/calibration.hpp"

#include <random>

#include "bhmds/dissimilarity.hpp"
#include "bhmds/error.hpp"
#include "bhmds/model.hpp"
#include "bhmds/parallel.hpp"

namespace bhmds {

InstanceParams draw_instance_params(Rng& rng) {
  InstanceParams params;
  params.p = std::uniform_int_distribution<int>(2, 5)(rng);
  params.kappa = std::uniform_real_distribution<double>(0.2, 2.0)(rng);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0));
  std::uniform_real_distribution<double> var(5.0, 10.0);
  params.mu.resize(params.p);
  params.var.resize(params.p);
  for (int j = 0; j < params.p; ++j) params.mu[j] = normal(rng);
  for (int j = 0; j < params.p; ++j) params.var[j] = var(rng);
  return params;
}

namespace {

TangentMatrix draw_tangent(const InstanceParams& params, std::size_t count, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  TangentMatrix V(static_cast<Eigen::Index>(count), params.p);
  for (Eigen::Index i = 0; i < V.rows(); ++i) {
    for (int j = 0; j < params.p; ++j) V(i, j) = params.mu[j] + std::sqrt(params.var[j]) * normal(rng);
  }
  return V;
}

}  // namespace

double draw_instance_distance(const InstanceParams& params, Rng& rng) {
  const PointMatrix X = exp_origin_rows(draw_tangent(params, 2, rng));
  return distance(X.row(0).data(), X.row(1).data(), params.p + 1, Curvature(params.kappa));
}

CalibrationStudy run_calibration_study(const CalibrationSettings& settings) {
  if (settings.instances == 0) throw InputError("calibration: need at least one instance");
  if (settings.replicates == 0) throw InputError("calibration: need at least one replicate");
  if (settings.n < settings.replicates + 1) throw InputError("calibration: n must exceed the replicate count");
  settings.mcmc.validate();

  CalibrationStudy study;
  study.params.resize(settings.instances);
  study.instances.resize(settings.instances);
  for (std::size_t s = 0; s < settings.instances; ++s) {
    Rng rng = make_rng(settings.seed, "calibration-instance", s);
    study.params[s] = draw_instance_params(rng);
    study.instances[s].truth = draw_instance_distance(study.params[s], rng);
    study.instances[s].predictive.assign(settings.replicates, 0.0);
  }

  const std::size_t R = settings.replicates;
  parallel_for(settings.instances * R, settings.threads, [&](std::size_t task) {
    const std::size_t s = task / R, r = task % R;
    const InstanceParams& params = study.params[s];
    const Curvature kappa(params.kappa);
    Rng rng = make_rng(settings.seed, "calibration-replicate", task);
    const PointMatrix X = exp_origin_rows(draw_tangent(params, settings.n, rng));
    const Eigen::MatrixXd delta = pairwise_distances(X, kappa);
    const DissimMatrix d = observe_with_noise(delta, settings.sigma, rng);

    const InitEmbedding init = refine_stress(spectral_init(d, params.p, kappa), d, kappa, settings.refine);
    const ModelConfig cfg = select_hyperparameters(init, log_origin_rows(init.X));
    McmcSettings mcmc = settings.mcmc;
    mcmc.seed = derive_seed(settings.seed, "calibration-chain", task);
    ExactLikelihood lik;
    const ChainResult res = run_chain(d, cfg, mcmc, init, lik);
    study.instances[s].predictive[r] = res.summary.delta_hat(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r + 1));
  });

  study.control = study.instances;
  for (auto& inst : study.control) {
    for (auto& x : inst.predictive) x += settings.shift;
  }
  std::vector<CalibrationInstance> pooled = study.instances;
  pooled.insert(pooled.end(), study.control.begin(), study.control.end());
  study.grid = calibration_grid(pooled);
  study.curve = marginal_calibration(study.instances, study.grid);
  study.control_curve = marginal_calibration(study.control, study.grid);
  return study;
}

}  // namespace bhmds
