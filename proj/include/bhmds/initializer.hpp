#pragma once

#include <Eigen/Dense>

#include <vector>

#include "bhmds/dissimilarity.hpp"
#include "bhmds/lorentz.hpp"

namespace bhmds {

/// A frequentist starting embedding and its fit against the observations.
struct InitEmbedding {
  PointMatrix X;           // n x (p+1)
  Eigen::MatrixXd delta;   // pairwise distances of X
  double ssr = 0.0;        // sum_{i<j} (delta_ij - d_ij)^2
  double stress = 0.0;
  double kappa = 1.0;

  int dim() const noexcept { return static_cast<int>(X.cols()) - 1; }
};

/// Fills delta, ssr and stress for the given coordinates.
InitEmbedding make_embedding(PointMatrix X, const DissimMatrix& d, Curvature kappa);

/// Spectral start in the style of hydra: eigen-decompose A_ij =
/// cosh(sqrt(kappa) d_ij), take x0 from the top eigenvector and the spatial
/// directions from the p most negative eigenpairs, then rescale every row
/// onto the hyperboloid. Requires n >= p+1.
InitEmbedding spectral_init(const DissimMatrix& d, int p, Curvature kappa);

struct RefineOptions {
  int max_iters = 2000;
  double tol = 1e-8;            // stop once the relative SSR gain falls below this
  double initial_step = 1e-2;
  int max_halvings = 30;
  int relocation_rounds = 5;    // relocate_points passes after the descent stalls
};

/// Backtracking gradient descent on SSR over origin tangent coordinates,
/// alternated with relocate_points until no point moves. Never increases
/// SSR. A step whose relative gain is below tol is not taken, so tol = inf
/// returns the input unchanged.
InitEmbedding refine_stress(const InitEmbedding& init, const DissimMatrix& d, Curvature kappa,
                            const RefineOptions& opts = {});

/// Moves each point in turn to the candidate position with the lowest SSR
/// against the others, if that beats its current position. Candidates are
/// the other points' tangent vectors, their negations and a coarse grid
/// covering the configuration. Returns the number of points moved.
std::size_t relocate_points(TangentMatrix& V, const DissimMatrix& d, Curvature kappa);

/// SSR of the embedding exp_origin(V).
double tangent_ssr(const TangentMatrix& V, const DissimMatrix& d, Curvature kappa);

/// SSR and its gradient with respect to V. Pairs at the clamped boundary
/// -<x,y>_L <= 1 contribute no gradient.
double tangent_ssr_gradient(const TangentMatrix& V, const DissimMatrix& d, Curvature kappa, TangentMatrix& grad);

struct CurvatureProfile {
  std::vector<double> grid;
  std::vector<double> stress;
  std::vector<InitEmbedding> embeddings;
  std::size_t best = 0;
  double kappa_hat = 1.0;
};

/// 16 log-spaced curvatures spanning [0.1, 10].
std::vector<double> default_curvature_grid();

/// Runs spectral_init + refine_stress at each kappa and returns the
/// stress-minimising kappa (ties go to the smaller kappa). Grid points are
/// evaluated on up to `threads` workers.
CurvatureProfile estimate_curvature(const DissimMatrix& d, int p, const std::vector<double>& grid,
                                    const RefineOptions& budget = {}, unsigned threads = 1);

}  // namespace bhmds
