#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "bhmds/evaluation.hpp"
#include "bhmds/initializer.hpp"
#include "bhmds/mcmc.hpp"
#include "bhmds/rng.hpp"

namespace bhmds {

/// Generative parameters of one calibration instance: tangent coordinates
/// v ~ N_p(mu, Diag(var)) mapped to the hyperboloid of curvature -kappa.
struct InstanceParams {
  int p = 2;
  double kappa = 1.0;
  Eigen::VectorXd mu;
  Eigen::VectorXd var;
};

/// p uniform on {2,..,5}, kappa ~ U(0.2, 2), mu ~ N_p(0, 2I), var_j ~ U(5, 10).
InstanceParams draw_instance_params(Rng& rng);

/// Distance between two independent points of the instance.
double draw_instance_distance(const InstanceParams& params, Rng& rng);

struct CalibrationSettings {
  std::size_t instances = 100;
  std::size_t replicates = 20;
  std::size_t n = 50;
  double sigma = 1.0;
  double shift = 1.0;  // offset of the control forecaster
  std::uint64_t seed = 1;
  unsigned threads = 1;
  McmcSettings mcmc;
  RefineOptions refine;

  CalibrationSettings() {
    mcmc.iters = 2000;
    mcmc.burnin = 500;
    mcmc.thin = 5;
    mcmc.record_delta = DeltaRecording::None;
    refine.max_iters = 300;
  }
};

struct CalibrationStudy {
  std::vector<InstanceParams> params;
  std::vector<CalibrationInstance> instances;  // predictive = delta_hat(r, r+1) over replicates r
  std::vector<CalibrationInstance> control;    // the same predictive samples shifted by +shift
  std::vector<double> grid;
  CalibrationCurve curve;
  CalibrationCurve control_curve;
};

/// Runs replicates x instances independent chains (in parallel over
/// instances) and evaluates both curves on a common grid.
CalibrationStudy run_calibration_study(const CalibrationSettings& settings);

}  // namespace bhmds
