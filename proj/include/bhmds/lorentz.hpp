#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>

#include "bhmds/rng.hpp"

namespace bhmds {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n x (p+1) hyperboloid coordinates, one point per row.
using PointMatrix = RowMatrix;
/// n x p tangent-space coordinates at the origin, one object per row.
using TangentMatrix = RowMatrix;
using TangentVector = Eigen::VectorXd;

inline constexpr double kGeometryTol = 1e-9;

/// The space has sectional curvature -kappa.
class Curvature {
 public:
  explicit Curvature(double kappa);

  double value() const noexcept { return kappa_; }
  double sqrt() const noexcept { return sqrt_kappa_; }

 private:
  double kappa_;
  double sqrt_kappa_;
};

/// A point on the upper sheet of the unit hyperboloid in R^{p+1}.
///
/// The self-product constraint is checked relative to the scale of the
/// point: |<x,x>_L + 1| <= tol * max(1, x0^2). An absolute bound cannot hold
/// in double precision once x0^2 exceeds ~1e7.
class LorentzPoint {
 public:
  static LorentzPoint origin(int p);
  static LorentzPoint from_coords(Eigen::VectorXd coords, double tol = kGeometryTol);

  int dim() const noexcept { return static_cast<int>(coords_.size()) - 1; }
  const Eigen::VectorXd& coords() const noexcept { return coords_; }
  std::span<const double> span() const noexcept { return {coords_.data(), static_cast<std::size_t>(coords_.size())}; }
  double operator[](int k) const { return coords_[k]; }

 private:
  explicit LorentzPoint(Eigen::VectorXd coords) : coords_(std::move(coords)) {}
  friend LorentzPoint exp_origin(const TangentVector& v);

  Eigen::VectorXd coords_;
};

/// -x0*y0 + sum_{k>=1} xk*yk. Throws InputError on length mismatch or length < 2.
double lorentz_product(std::span<const double> x, std::span<const double> y);
double lorentz_product(const LorentzPoint& x, const LorentzPoint& y);

/// True when coords lie on the upper hyperboloid sheet (relative tolerance, see LorentzPoint).
bool on_hyperboloid(std::span<const double> coords, double tol = kGeometryTol);

/// arccosh evaluated as log(z + sqrt(z^2-1)), with z clamped to [1, inf) and
/// log(2z) beyond 1e8.
double stable_arccosh(double z);

/// Geodesic distance between two hyperboloid points given as raw coordinate
/// rows of length dim+1. Stays finite for points with x0 up to ~1e300.
double distance(const double* x, const double* y, int dim_plus_one, Curvature kappa);
double distance(const LorentzPoint& x, const LorentzPoint& y, Curvature kappa);

/// The origin-centred exponential map: tangent vector v in R^p to the
/// hyperboloid, cosh(|v|) mu0 + sinh(|v|) (0, v)/|v|.
void exp_origin(std::span<const double> v, std::span<double> out);
LorentzPoint exp_origin(const TangentVector& v);

/// Inverse of exp_origin.
void log_origin(std::span<const double> x, std::span<double> out);
TangentVector log_origin(const LorentzPoint& x);

/// Row-wise maps between tangent and hyperboloid coordinate matrices.
PointMatrix exp_origin_rows(const TangentMatrix& V);
TangentMatrix log_origin_rows(const PointMatrix& X);

/// All pairwise distances between the rows of X.
Eigen::MatrixXd pairwise_distances(const PointMatrix& X, Curvature kappa);

/// Draws v ~ N_p(0, Diag(variances)) and returns exp_origin(v).
/// Throws InputError unless every variance is finite and positive.
LorentzPoint sample_wrapped_normal(std::span<const double> variances, Rng& rng);

}  // namespace bhmds
