#include "bhmds/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "bhmds/error.hpp"

namespace bhmds {

double erfcx(double x) {
  if (x < 25.0) return std::exp(x * x) * std::erfc(x);
  // Laplace continued fraction, evaluated bottom-up; at x >= 25 thirty
  // levels are far beyond double precision.
  double frac = x;
  for (int k = 30; k >= 1; --k) frac = x + (0.5 * k) / frac;
  return 1.0 / (std::sqrt(std::numbers::pi) * frac);
}

double log_norm_cdf(double z) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  if (z > 0.0) return std::log1p(-0.5 * std::erfc(z * inv_sqrt2));
  const double t = -z * inv_sqrt2;
  if (t < 25.0) return std::log(0.5 * std::erfc(t));
  return std::log(0.5 * erfcx(t)) - t * t;
}

double sample_positive_truncated_normal(double mean, double sd, Rng& rng) {
  if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(mean)) {
    throw InputError("truncated normal needs finite mean and positive sd");
  }
  const double a = -mean / sd;  // standardized truncation point
  if (a <= 3.0) {
    std::normal_distribution<double> normal(mean, sd);
    for (;;) {
      const double x = normal(rng);
      if (x > 0.0) return x;
    }
  }
  // Far tail: invert the upper-tail CDF restricted to (a, inf).
  boost::math::normal_distribution<double> stdnorm;
  const double tail = boost::math::cdf(boost::math::complement(stdnorm, a));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  while (u == 0.0) u = unif(rng);
  const double z = boost::math::quantile(boost::math::complement(stdnorm, u * tail));
  return std::max(mean + sd * z, std::numeric_limits<double>::min());
}

double sample_inverse_gamma(double shape, double scale, Rng& rng) {
  std::gamma_distribution<double> gamma(shape, 1.0 / scale);
  return 1.0 / gamma(rng);
}

double quantile_sorted(std::span<const double> s, double prob) {
  if (s.empty()) throw InputError("quantile of an empty sample");
  if (s.size() == 1) return s[0];
  const double h = (static_cast<double>(s.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double quantile(std::span<const double> values, double prob) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, prob);
}

double median(std::span<const double> values) { return quantile(values, 0.5); }

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("pearson_correlation: need two equal-length samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = x[k] - mx, dy = y[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

P2Quantile::P2Quantile(double prob) : prob_(prob) {}

double P2Quantile::desired(int i) const {
  const double f[5] = {0.0, prob_ / 2.0, prob_, (1.0 + prob_) / 2.0, 1.0};
  return 1.0 + static_cast<double>(count_ - 1) * f[i];
}

double P2Quantile::parabolic(int i, int d) const {
  const double qi = height_[i];
  const double n0 = pos_[i - 1], n1 = pos_[i], n2 = pos_[i + 1];
  return qi + d / (n2 - n0) *
                  ((n1 - n0 + d) * (height_[i + 1] - qi) / (n2 - n1) + (n2 - n1 - d) * (qi - height_[i - 1]) / (n1 - n0));
}

double P2Quantile::linear(int i, int d) const {
  return height_[i] + d * (height_[i + d] - height_[i]) / (pos_[i + d] - pos_[i]);
}

void P2Quantile::add(double x) {
  if (count_ < 5) {
    height_[count_++] = x;
    if (count_ == 5) std::sort(height_, height_ + 5);
    return;
  }
  ++count_;
  int k;
  if (x < height_[0]) {
    height_[0] = x;
    k = 0;
  } else if (x >= height_[4]) {
    height_[4] = x;
    k = 3;
  } else {
    k = 0;
    while (k < 3 && x >= height_[k + 1]) ++k;
  }
  for (int i = k + 1; i < 5; ++i) ++pos_[i];
  for (int i = 1; i <= 3; ++i) {
    const double dlt = desired(i) - pos_[i];
    if ((dlt >= 1.0 && pos_[i + 1] - pos_[i] > 1) || (dlt <= -1.0 && pos_[i - 1] - pos_[i] < -1)) {
      const int d = dlt > 0 ? 1 : -1;
      double h = parabolic(i, d);
      if (!(height_[i - 1] < h && h < height_[i + 1])) h = linear(i, d);
      height_[i] = h;
      pos_[i] += d;
    }
  }
}

double P2Quantile::value() const {
  if (count_ == 0) throw InputError("P2Quantile: no observations");
  if (count_ < 5) {
    std::vector<double> v(height_, height_ + count_);
    return quantile(v, prob_);
  }
  return height_[2];
}

}  // namespace bhmds
