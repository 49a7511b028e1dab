#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "bhmds/lorentz.hpp"
#include "bhmds/rng.hpp"

namespace bhmds {

/// Symmetric matrix of observed dissimilarities with zero diagonal and
/// strictly positive off-diagonal entries.
class DissimMatrix {
 public:
  /// Validates and symmetrizes. Asymmetry up to 1e-8 is averaged away,
  /// diagonal entries up to 1e-12 are zeroed; anything else throws DataError.
  explicit DissimMatrix(Eigen::MatrixXd values, std::vector<std::string> labels = {});

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  /// m = n(n-1)/2.
  std::size_t pair_count() const noexcept { return size() * (size() - 1) / 2; }
  /// sum_{i<j} d_ij^2, the stress normaliser.
  double sum_squares() const noexcept { return sum_squares_; }
  /// True if every off-diagonal entry is an integer (graph path lengths).
  bool integer_valued() const;

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> labels_;
  double sum_squares_ = 0.0;
};

enum class MatrixFormat { Csv, Whitespace };

DissimMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
DissimMatrix parse_matrix(std::istream& in, MatrixFormat format);

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 1.0;
};

struct EdgeList {
  std::size_t n = 0;  // vertex count, 1 + largest index seen
  std::vector<Edge> edges;
  bool weighted = false;
};

/// "i j [w]" per line, '#' starts a comment. Indices are converted to 0-based.
EdgeList load_edge_list(const std::filesystem::path& path, bool one_indexed = true);
EdgeList parse_edge_list(std::istream& in, bool one_indexed = true);

/// Unweighted all-pairs BFS path lengths. Throws DataError(Disconnected) if
/// any pair is unreachable.
DissimMatrix graph_shortest_paths(const std::vector<Edge>& edges, std::size_t n);

/// Dijkstra variant using the edge weights (must be positive).
DissimMatrix weighted_shortest_paths(const std::vector<Edge>& edges, std::size_t n);

/// Edges of the complete `branching`-ary tree on n vertices in BFS order
/// (vertex k's parent is (k-1)/branching).
std::vector<Edge> balanced_tree_edges(std::size_t n, std::size_t branching);

struct SyntheticTruth {
  PointMatrix X;          // n x (p+1)
  Eigen::MatrixXd delta;  // true pairwise distances
  double sigma = 1.0;
  double kappa = 1.0;
  int p = 2;
};

struct SyntheticDataset {
  SyntheticTruth truth;
  DissimMatrix observed;
};

/// Noisy observations d_ij ~ N(delta_ij, sigma^2) truncated to (0, inf),
/// drawn independently for i < j.
DissimMatrix observe_with_noise(const Eigen::MatrixXd& delta, double sigma, Rng& rng);

/// X_i drawn from the origin-centred wrapped normal with covariance
/// prior_var * I_p, then observed through the truncated-normal noise model.
SyntheticDataset simulate_dataset(std::size_t n, int p, double sigma, double kappa, double prior_var, Rng& rng);

/// Writes <dir>/truth_coordinates.csv and <dir>/truth.json.
void write_truth(const std::filesystem::path& dir, const SyntheticTruth& truth, std::uint64_t seed);

}  // namespace bhmds
