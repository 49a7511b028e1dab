#include "bhmds/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bhmds/error.hpp"

namespace bhmds {

namespace {

void check_shapes(const Eigen::MatrixXd& d, const Eigen::MatrixXd& est) {
  if (d.rows() != d.cols() || est.rows() != d.rows() || est.cols() != d.cols()) {
    throw InputError("observed and estimated matrices must be square and the same size");
  }
}

}  // namespace

double stress(const Eigen::MatrixXd& d, const Eigen::MatrixXd& est) {
  check_shapes(d, est);
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < d.cols(); ++j) {
      const double r = d(i, j) - est(i, j);
      num += r * r;
      den += d(i, j) * d(i, j);
    }
  }
  if (den == 0.0) throw InputError("stress: observed dissimilarities are all zero");
  return std::sqrt(num / den);
}

double stress(const DissimMatrix& d, const Eigen::MatrixXd& est) { return stress(d.values(), est); }

double distortion(const Eigen::MatrixXd& d, const Eigen::MatrixXd& est) {
  check_shapes(d, est);
  const Eigen::Index n = d.rows();
  if (n < 2) throw InputError("distortion: need at least two objects");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (!(d(i, j) > 0.0)) throw InputError("distortion: observed dissimilarities must be positive off the diagonal");
      acc += std::abs(d(i, j) - est(i, j)) / d(i, j);
    }
  }
  return acc / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

double distortion(const DissimMatrix& d, const Eigen::MatrixXd& est) { return distortion(d.values(), est); }

FitReport fit_report(const DissimMatrix& d, const Eigen::MatrixXd& est) {
  return {stress(d, est), distortion(d, est), d.size(), d.pair_count()};
}

double CalibrationCurve::max_abs_diff() const {
  double m = 0.0;
  for (double v : diff) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> calibration_grid(std::span<const CalibrationInstance> instances, std::size_t points) {
  if (instances.empty()) throw InputError("calibration_grid: no instances");
  if (points < 2) throw InputError("calibration_grid: need at least two grid points");
  double lo = instances.front().truth, hi = lo;
  for (const auto& inst : instances) {
    lo = std::min(lo, inst.truth);
    hi = std::max(hi, inst.truth);
    for (double x : inst.predictive) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  std::vector<double> grid(points);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
  }
  return grid;
}

CalibrationCurve marginal_calibration(std::span<const CalibrationInstance> instances, std::span<const double> grid) {
  if (instances.empty()) throw InputError("marginal_calibration: no instances");
  const double S = static_cast<double>(instances.size());
  CalibrationCurve curve;
  curve.threshold.assign(grid.begin(), grid.end());
  curve.diff.assign(grid.size(), 0.0);

  std::vector<double> truths;
  truths.reserve(instances.size());
  for (const auto& inst : instances) truths.push_back(inst.truth);
  std::sort(truths.begin(), truths.end());

  std::vector<double> sorted;
  for (const auto& inst : instances) {
    if (inst.predictive.empty()) throw InputError("marginal_calibration: instance without predictive samples");
    sorted.assign(inst.predictive.begin(), inst.predictive.end());
    std::sort(sorted.begin(), sorted.end());
    const double m = static_cast<double>(sorted.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto le = std::upper_bound(sorted.begin(), sorted.end(), grid[g]) - sorted.begin();
      curve.diff[g] += static_cast<double>(le) / m / S;
    }
  }
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto le = std::upper_bound(truths.begin(), truths.end(), grid[g]) - truths.begin();
    curve.diff[g] -= static_cast<double>(le) / S;
  }
  return curve;
}

CalibrationCurve marginal_calibration(std::span<const CalibrationInstance> instances) {
  const auto grid = calibration_grid(instances);
  return marginal_calibration(instances, grid);
}

Eigen::MatrixXd cluster_distance(const PointMatrix& X, std::span<const int> membership, Curvature kappa) {
  if (membership.size() != static_cast<std::size_t>(X.rows())) {
    throw InputError("cluster_distance: membership must cover every object");
  }
  int K = 0;
  for (int c : membership) {
    if (c < 0) throw InputError("cluster_distance: negative community id");
    K = std::max(K, c + 1);
  }
  std::vector<double> count(K, 0.0);
  for (int c : membership) count[c] += 1.0;
  for (int c = 0; c < K; ++c) {
    if (count[c] == 0.0) throw InputError("cluster_distance: community " + std::to_string(c) + " is empty");
  }
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(K, K);
  const int cols = static_cast<int>(X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) {
      const double dij = distance(X.row(i).data(), X.row(j).data(), cols, kappa);
      const int a = membership[i], b = membership[j];
      sum(a, b) += dij;
      if (a != b) sum(b, a) += dij;
    }
  }
  Eigen::MatrixXd out(K, K);
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) {
      if (a == b) {
        const double pairs = count[a] * (count[a] - 1.0) / 2.0;
        out(a, a) = pairs > 0.0 ? sum(a, a) / pairs : 0.0;
      } else {
        out(a, b) = sum(a, b) / (count[a] * count[b]);
      }
    }
  }
  return out;
}

Eigen::VectorXd origin_distances(const PointMatrix& X, Curvature kappa) {
  Eigen::VectorXd out(X.rows());
  // -<mu0, x>_L = x0.
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = stable_arccosh(X(i, 0)) / kappa.sqrt();
  return out;
}

Eigen::MatrixXi rank_frequency(const CommunityDraws& draws, std::size_t n_draws, Rng& rng) {
  const std::size_t K = draws.size();
  if (K == 0) throw InputError("rank_frequency: no communities");
  for (std::size_t c = 0; c < K; ++c) {
    if (draws[c].empty()) throw InputError("rank_frequency: community " + std::to_string(c) + " has no objects");
    for (const auto& obj : draws[c]) {
      if (obj.empty()) throw InputError("rank_frequency: community " + std::to_string(c) + " has an object without draws");
    }
  }
  Eigen::MatrixXi freq = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  std::vector<double> value(K);
  std::vector<std::size_t> order(K);
  for (std::size_t t = 0; t < n_draws; ++t) {
    for (std::size_t c = 0; c < K; ++c) {
      std::uniform_int_distribution<std::size_t> pick_obj(0, draws[c].size() - 1);
      const auto& obj = draws[c][pick_obj(rng)];
      std::uniform_int_distribution<std::size_t> pick_draw(0, obj.size() - 1);
      value[c] = obj[pick_draw(rng)];
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    for (std::size_t r = 0; r < K; ++r) ++freq(static_cast<Eigen::Index>(order[r]), static_cast<Eigen::Index>(r));
  }
  return freq;
}

RowMatrix poincare_export(const PointMatrix& X) {
  RowMatrix out(X.rows(), X.cols() - 1);
  for (Eigen::Index i = 0; i < X.rows(); ++i) out.row(i) = X.row(i).tail(X.cols() - 1) / (1.0 + X(i, 0));
  return out;
}

}  // namespace bhmds
