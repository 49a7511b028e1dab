#include "bhmds/lorentz.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "bhmds/error.hpp"

namespace bhmds {

namespace {

constexpr double kArccoshLogSwitch = 1e8;
constexpr double kExpOriginZero = 1e-12;
// Beyond this x0 the product x0*y0 may overflow; switch to a log-scaled path.
constexpr double kDirectProductLimit = 1e150;
constexpr double kNearSwitch = 1.5;

double scaled_norm(const double* v, std::size_t len) {
  double scale = 0.0;
  for (std::size_t k = 0; k < len; ++k) scale = std::max(scale, std::abs(v[k]));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  if (scale < 1e100 && scale > 1e-100) {
    double ss = 0.0;
    for (std::size_t k = 0; k < len; ++k) ss += v[k] * v[k];
    return std::sqrt(ss);
  }
  double ss = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    const double t = v[k] / scale;
    ss += t * t;
  }
  return scale * std::sqrt(ss);
}

}  // namespace

Curvature::Curvature(double kappa) : kappa_(kappa), sqrt_kappa_(std::sqrt(kappa)) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw InputError("curvature kappa must be finite and positive, got " + std::to_string(kappa));
  }
}

LorentzPoint LorentzPoint::origin(int p) {
  if (p < 1) throw InputError("hyperbolic dimension must be >= 1");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p + 1);
  c[0] = 1.0;
  return LorentzPoint(std::move(c));
}

LorentzPoint LorentzPoint::from_coords(Eigen::VectorXd coords, double tol) {
  if (coords.size() < 2) throw InputError("a Lorentz point needs at least 2 coordinates");
  if (!on_hyperboloid({coords.data(), static_cast<std::size_t>(coords.size())}, tol)) {
    throw InputError("coordinates do not lie on the upper hyperboloid sheet");
  }
  return LorentzPoint(std::move(coords));
}

double lorentz_product(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InputError("lorentz_product: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw InputError("lorentz_product: vectors need length >= 2");
  double acc = -x[0] * y[0];
  for (std::size_t k = 1; k < x.size(); ++k) acc += x[k] * y[k];
  return acc;
}

double lorentz_product(const LorentzPoint& x, const LorentzPoint& y) { return lorentz_product(x.span(), y.span()); }

bool on_hyperboloid(std::span<const double> c, double tol) {
  if (c.size() < 2) return false;
  for (double v : c) {
    if (!std::isfinite(v)) return false;
  }
  if (!(c[0] > 0.0)) return false;
  const double self = lorentz_product(c, c);
  return std::abs(self + 1.0) <= tol * std::max(1.0, c[0] * c[0]);
}

double stable_arccosh(double z) {
  if (z <= 1.0) return 0.0;
  if (z > kArccoshLogSwitch) return std::log(2.0) + std::log(z);
  return std::log(z + std::sqrt((z - 1.0) * (z + 1.0)));
}

double distance(const double* x, const double* y, int n, Curvature kappa) {
  if (x[0] < kDirectProductLimit && y[0] < kDirectProductLimit) {
    double z = x[0] * y[0];
    for (int k = 1; k < n; ++k) z -= x[k] * y[k];
    if (z < kNearSwitch + 1e-12 * x[0] * y[0]) {
      // <x-y,x-y>_L = 4 sinh^2(d/2); arccosh(z) loses half the digits near z = 1
      double q = -(x[0] - y[0]) * (x[0] - y[0]);
      for (int k = 1; k < n; ++k) q += (x[k] - y[k]) * (x[k] - y[k]);
      return 2.0 * std::asinh(0.5 * std::sqrt(std::max(q, 0.0))) / kappa.sqrt();
    }
    return stable_arccosh(z) / kappa.sqrt();
  }
  // -<x,y>_L = x0*y0*(1 - sum (xk/x0)(yk/y0)), evaluated in log space.
  double t = 1.0;
  for (int k = 1; k < n; ++k) t -= (x[k] / x[0]) * (y[k] / y[0]);
  if (!(t > 0.0)) return 0.0;
  const double log_z = std::log(x[0]) + std::log(y[0]) + std::log(t);
  if (log_z > std::log(kArccoshLogSwitch)) return (std::log(2.0) + log_z) / kappa.sqrt();
  return stable_arccosh(std::exp(log_z)) / kappa.sqrt();
}

double distance(const LorentzPoint& x, const LorentzPoint& y, Curvature kappa) {
  if (x.dim() != y.dim()) throw InputError("distance: points have different dimensions");
  return distance(x.coords().data(), y.coords().data(), x.dim() + 1, kappa);
}

void exp_origin(std::span<const double> v, std::span<double> out) {
  const double r = scaled_norm(v.data(), v.size());
  out[0] = 1.0;
  if (r < kExpOriginZero) {
    for (std::size_t k = 0; k < v.size(); ++k) out[k + 1] = 0.0;
    return;
  }
  out[0] = std::cosh(r);
  const double s = std::sinh(r) / r;
  for (std::size_t k = 0; k < v.size(); ++k) out[k + 1] = s * v[k];
}

LorentzPoint exp_origin(const TangentVector& v) {
  Eigen::VectorXd c(v.size() + 1);
  exp_origin({v.data(), static_cast<std::size_t>(v.size())}, {c.data(), static_cast<std::size_t>(c.size())});
  return LorentzPoint(std::move(c));
}

void log_origin(std::span<const double> x, std::span<double> out) {
  // On the hyperboloid alpha = x0 = sqrt(1 + r^2) with r the spatial norm, so
  // arccosh(alpha)/sqrt(alpha^2-1) = asinh(r)/r; the latter has no
  // cancellation near the origin.
  const std::size_t p = x.size() - 1;
  const double r = scaled_norm(x.data() + 1, p);
  if (r == 0.0) {
    for (std::size_t k = 0; k < p; ++k) out[k] = 0.0;
    return;
  }
  const double f = std::asinh(r) / r;
  for (std::size_t k = 0; k < p; ++k) out[k] = f * x[k + 1];
}

TangentVector log_origin(const LorentzPoint& x) {
  TangentVector v(x.dim());
  log_origin(x.span(), {v.data(), static_cast<std::size_t>(v.size())});
  return v;
}

PointMatrix exp_origin_rows(const TangentMatrix& V) {
  PointMatrix X(V.rows(), V.cols() + 1);
  const auto p = static_cast<std::size_t>(V.cols());
  for (Eigen::Index i = 0; i < V.rows(); ++i) exp_origin({V.row(i).data(), p}, {X.row(i).data(), p + 1});
  return X;
}

TangentMatrix log_origin_rows(const PointMatrix& X) {
  TangentMatrix V(X.rows(), X.cols() - 1);
  const auto p = static_cast<std::size_t>(V.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) log_origin({X.row(i).data(), p + 1}, {V.row(i).data(), p});
  return V;
}

Eigen::MatrixXd pairwise_distances(const PointMatrix& X, Curvature kappa) {
  const Eigen::Index n = X.rows();
  const int cols = static_cast<int>(X.cols());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dij = distance(X.row(i).data(), X.row(j).data(), cols, kappa);
      D(i, j) = dij;
      D(j, i) = dij;
    }
  }
  return D;
}

LorentzPoint sample_wrapped_normal(std::span<const double> variances, Rng& rng) {
  if (variances.empty()) throw InputError("sample_wrapped_normal: empty covariance");
  TangentVector v(variances.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < variances.size(); ++k) {
    if (!(variances[k] > 0.0) || !std::isfinite(variances[k])) {
      throw InputError("sample_wrapped_normal: variances must be finite and positive");
    }
    v[static_cast<Eigen::Index>(k)] = std::sqrt(variances[k]) * normal(rng);
  }
  return exp_origin(v);
}

}  // namespace bhmds
