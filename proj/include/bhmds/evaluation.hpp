#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "bhmds/dissimilarity.hpp"
#include "bhmds/lorentz.hpp"
#include "bhmds/rng.hpp"

namespace bhmds {

struct FitReport {
  double stress = 0.0;
  double distortion = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
};

/// sqrt(sum_{i<j} (d - est)^2 / sum_{i<j} d^2). Throws if d is all zero.
double stress(const Eigen::MatrixXd& d, const Eigen::MatrixXd& est);
double stress(const DissimMatrix& d, const Eigen::MatrixXd& est);

/// (1/m) sum_{i<j} |d - est| / d. Throws on a zero off-diagonal d.
double distortion(const Eigen::MatrixXd& d, const Eigen::MatrixXd& est);
double distortion(const DissimMatrix& d, const Eigen::MatrixXd& est);

FitReport fit_report(const DissimMatrix& d, const Eigen::MatrixXd& est);

/// One calibration instance: a single draw of the truth and the sample of
/// estimates whose empirical CDF is the predictive distribution.
struct CalibrationInstance {
  double truth = 0.0;
  std::vector<double> predictive;
};

struct CalibrationCurve {
  std::vector<double> threshold;
  std::vector<double> diff;  // F_S(x) - G_S(x)

  double max_abs_diff() const;
};

/// 512 evenly spaced thresholds over the pooled range of truths and
/// predictive samples.
std::vector<double> calibration_grid(std::span<const CalibrationInstance> instances, std::size_t points = 512);

/// Average predictive ECDF minus the ECDF of the realised truths, on `grid`.
CalibrationCurve marginal_calibration(std::span<const CalibrationInstance> instances, std::span<const double> grid);
CalibrationCurve marginal_calibration(std::span<const CalibrationInstance> instances);

/// Mean pairwise hyperbolic distance between communities; membership[i] is
/// the community of object i, numbered 0..K-1. The diagonal holds the
/// within-community mean over distinct pairs (0 for singletons).
Eigen::MatrixXd cluster_distance(const PointMatrix& X, std::span<const int> membership, Curvature kappa);

/// Distance of every point to the hyperbolic origin mu0.
Eigen::VectorXd origin_distances(const PointMatrix& X, Curvature kappa);

/// draws[c][o] holds the posterior draws of the o-th object in community c.
using CommunityDraws = std::vector<std::vector<std::vector<double>>>;

/// Monte-Carlo rank table: repeatedly pick one object per community and one
/// of its draws, then rank the communities ascending (rank 0 = closest to
/// the origin). Entry (c, r) counts how often community c took rank r; every
/// row sums to n_draws.
Eigen::MatrixXi rank_frequency(const CommunityDraws& draws, std::size_t n_draws, Rng& rng);

/// Projection of hyperboloid points to the Poincare ball, x_{1..p} / (1 + x0).
RowMatrix poincare_export(const PointMatrix& X);

}  // namespace bhmds
