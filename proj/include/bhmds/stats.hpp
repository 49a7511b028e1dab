#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "bhmds/rng.hpp"

namespace bhmds {

/// log Phi(z) for the standard normal CDF. Finite for every finite z; the
/// lower tail goes through the scaled complementary error function so it
/// does not underflow below z ~ -37.
double log_norm_cdf(double z);

/// Scaled complementary error function exp(x^2) erfc(x).
double erfcx(double x);

/// One draw from N(mean, sd^2) truncated to (0, inf).
double sample_positive_truncated_normal(double mean, double sd, Rng& rng);

/// Inverse-gamma with density proportional to x^{-(shape+1)} exp(-scale/x).
double sample_inverse_gamma(double shape, double scale, Rng& rng);

/// Unnormalised log density of IG(shape, scale) at x > 0.
inline double log_inverse_gamma_kernel(double x, double shape, double scale);

/// Sample quantile with linear interpolation between order statistics
/// (the R type-7 rule). The input is copied and partially sorted.
double quantile(std::span<const double> values, double prob);
double quantile_sorted(std::span<const double> sorted, double prob);
double median(std::span<const double> values);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

/// Streaming quantile estimate with the five-marker P^2 algorithm
/// (Jain & Chlamtac 1985). Constant memory per tracked quantile.
class P2Quantile {
 public:
  explicit P2Quantile(double prob = 0.5);
  void add(double x);
  double value() const;
  long count() const noexcept { return count_; }

 private:
  double parabolic(int i, int d) const;
  double linear(int i, int d) const;
  double desired(int i) const;

  double prob_;
  long count_ = 0;
  double height_[5] = {};
  int pos_[5] = {1, 2, 3, 4, 5};
};

// ---------------------------------------------------------------------------

inline double log_inverse_gamma_kernel(double x, double shape, double scale) {
  return -(shape + 1.0) * std::log(x) - scale / x;
}

}  // namespace bhmds
