#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "kacsim/rng.hpp"

namespace kacsim {

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);  // unbiased, n >= 2
double stderr_of_mean(const std::vector<double>& v);

struct LinFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;  // OLS residual-based
};

// OLS fit y ~ intercept + slope * x; requires >= 3 points for a finite slope_se.
LinFit linfit(const std::vector<double>& x, const std::vector<double>& y);

// regularized lower incomplete gamma P(a, x), a > 0, x >= 0
double gammp(double a, double x);

// inverse chi-square CDF: smallest x with P(dof/2, x/2) >= p
double chi2_quantile(double dof, double p);

// one-sample Kolmogorov-Smirnov against a continuous CDF; samples need not be sorted
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// asymptotic two-sided KS p-value with Stephens' small-sample correction
double ks_pvalue(double d, std::size_t n);

// Pearson chi-square statistic for observed counts vs expected counts (> 0 each)
double chi2_statistic(const std::vector<double>& observed, const std::vector<double>& expected);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap over replica indices [0, n_replicas). The statistic receives a
// resampled index multiset. Deterministic given the rng stream.
Interval bootstrap_percentile(std::size_t n_replicas, int n_resamples, double alpha, Rng& rng,
                              const std::function<double(const std::vector<std::size_t>&)>& stat);

}  // namespace kacsim
