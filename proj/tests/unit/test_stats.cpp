#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/normal.hpp>

#include "bhmds/rng.hpp"
#include "bhmds/stats.hpp"

using namespace bhmds;

TEST_SUITE("stats") {

TEST_CASE("log normal cdf against boost") {
  const boost::math::normal_distribution<double> N;
  for (double z = -8.0; z <= 8.0; z += 0.25) {
    CHECK(log_norm_cdf(z) == doctest::Approx(std::log(boost::math::cdf(N, z))).epsilon(1e-12));
  }
  // lower tail: log Phi(z) = log(phi(z)/|z|) + log(1 - 1/z^2 + 3/z^4 - 15/z^6 + ...)
  for (double z : {-40.0, -100.0, -1000.0}) {
    const double lead = -0.5 * z * z - std::log(-z) - 0.5 * std::log(2 * M_PI);
    const double z2 = z * z;
    CHECK(log_norm_cdf(z) == doctest::Approx(lead + std::log1p(-1 / z2 + 3 / (z2 * z2) - 15 / (z2 * z2 * z2))).epsilon(1e-12));
  }
  CHECK(std::abs(log_norm_cdf(8.5)) < 1e-15);
  CHECK(log_norm_cdf(30.0) == doctest::Approx(-0.5 * std::erfc(30.0 / std::sqrt(2.0))).epsilon(1e-10));
}

TEST_CASE("log normal cdf is monotone and finite on [-40, 40]") {
  double prev = -INFINITY;
  for (double z = -40.0; z <= 40.0; z += 0.01) {
    const double v = log_norm_cdf(z);
    REQUIRE(std::isfinite(v));
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("erfcx") {
  for (double x : {-2.0, 0.0, 0.5, 3.0, 10.0}) CHECK(erfcx(x) == doctest::Approx(std::exp(x * x) * std::erfc(x)));
  // asymptotic 1/(x sqrt(pi)) (1 - 1/(2x^2))
  CHECK(erfcx(1e4) == doctest::Approx(1 / (1e4 * std::sqrt(M_PI)) * (1 - 0.5e-8)).epsilon(1e-12));
}

TEST_CASE("truncated normal stays positive and is unbiased far from zero") {
  Rng rng(1);
  bool all_positive = true;
  for (int t = 0; t < 1000000; ++t) all_positive &= sample_positive_truncated_normal(0.1, 2.0, rng) > 0.0;
  CHECK(all_positive);
  for (int t = 0; t < 1000; ++t) CHECK(sample_positive_truncated_normal(-10.0, 1.0, rng) > 0.0);

  const int N = 100000;
  double sum = 0.0;
  for (int t = 0; t < N; ++t) sum += sample_positive_truncated_normal(4.0, 1.0, rng);
  CHECK(std::abs(sum / N - 4.0) < 3.0 / std::sqrt(N));
}

TEST_CASE("truncated normal deep in the tail matches the conditional mean") {
  // mean of N(mu, 1) given > 0 is mu + phi(mu)/Phi(mu)
  Rng rng(2);
  const double mu = -5.0;
  const boost::math::normal_distribution<double> N;
  const double expect = mu + boost::math::pdf(N, mu) / boost::math::cdf(N, mu);
  const int n = 50000;
  double sum = 0.0, sq = 0.0;
  for (int t = 0; t < n; ++t) {
    const double x = sample_positive_truncated_normal(mu, 1.0, rng);
    sum += x;
    sq += x * x;
  }
  const double m = sum / n, se = std::sqrt((sq / n - m * m) / n);
  CHECK(std::abs(m - expect) < 3 * se);
}

TEST_CASE("inverse gamma moments") {
  Rng rng(4);
  const double shape = 25.5, scale = 6.0;
  const int N = 100000;
  std::vector<double> x(N);
  for (auto& v : x) v = sample_inverse_gamma(shape, scale, rng);
  double sum = 0.0;
  for (double v : x) sum += v;
  const double mean = scale / (shape - 1);
  const double sd = mean / std::sqrt(shape - 2);
  CHECK(std::abs(sum / N - mean) < 3 * sd / std::sqrt(N));
  const boost::math::inverse_gamma_distribution<double> ig(shape, scale);
  CHECK(median(x) == doctest::Approx(boost::math::median(ig)).epsilon(0.01));
}

TEST_CASE("inverse gamma kernel differences") {
  const boost::math::inverse_gamma_distribution<double> ig(3.0, 2.0);
  const double a = 0.7, b = 1.9;
  CHECK(log_inverse_gamma_kernel(a, 3, 2) - log_inverse_gamma_kernel(b, 3, 2) ==
        doctest::Approx(std::log(boost::math::pdf(ig, a) / boost::math::pdf(ig, b))));
}

TEST_CASE("type-7 quantiles") {
  const std::vector<double> x = {4, 1, 3, 2};
  CHECK(quantile(x, 0.0) == 1.0);
  CHECK(quantile(x, 1.0) == 4.0);
  CHECK(quantile(x, 0.5) == 2.5);
  CHECK(quantile(x, 0.25) == doctest::Approx(1.75));
  CHECK(median(std::vector<double>{5}) == 5.0);
}

TEST_CASE("pearson correlation") {
  const std::vector<double> x = {1, 2, 3, 4}, y = {2, 4, 6, 8}, z = {4, 3, 2, 1};
  CHECK(pearson_correlation(x, y) == doctest::Approx(1.0));
  CHECK(pearson_correlation(x, z) == doctest::Approx(-1.0));

  Rng rng(9);
  std::normal_distribution<double> nd;
  std::vector<double> a(5000), b(5000);
  for (auto& v : a) v = nd(rng);
  b = a;
  std::shuffle(b.begin(), b.end(), rng);
  CHECK(std::abs(pearson_correlation(a, b)) < 0.1);
}

TEST_CASE("P2 quantile tracks the sample quantile") {
  Rng rng(8);
  std::normal_distribution<double> nd;
  for (double prob : {0.025, 0.5, 0.975}) {
    P2Quantile q(prob);
    std::vector<double> x(20000);
    for (auto& v : x) {
      v = nd(rng);
      q.add(v);
    }
    CHECK(q.count() == 20000);
    CHECK(q.value() == doctest::Approx(quantile(x, prob)).epsilon(0.05));
  }
  P2Quantile few(0.5);
  for (double v : {3.0, 1.0, 2.0}) few.add(v);
  CHECK(few.value() == 2.0);
}

TEST_CASE("named streams") {
  CHECK(derive_seed(1, "chain") == derive_seed(1, "chain"));
  CHECK(derive_seed(1, "chain") != derive_seed(1, "pilot"));
  CHECK(derive_seed(1, "chain", 0) != derive_seed(1, "chain", 1));
  CHECK(derive_seed(1, "chain") != derive_seed(2, "chain"));
  // FNV-1a 64 reference values
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

}
