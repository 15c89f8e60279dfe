#include "kacsim/stats.hpp"

#include <algorithm>
#include <cmath>

#include "kacsim/errors.hpp"

namespace kacsim {

double mean(const std::vector<double>& v) {
  if (v.empty()) throw NumericalError("mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) throw NumericalError("variance needs n >= 2");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double stderr_of_mean(const std::vector<double>& v) {
  return std::sqrt(sample_variance(v) / static_cast<double>(v.size()));
}

LinFit linfit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw NumericalError("linfit needs matched x/y, n >= 2");
  const double xb = mean(x), yb = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xb) * (x[i] - xb);
    sxy += (x[i] - xb) * (y[i] - yb);
  }
  if (sxx == 0.0) throw NumericalError("linfit: degenerate abscissae");
  LinFit f;
  f.slope = sxy / sxx;
  f.intercept = yb - f.slope * xb;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return f;
}

namespace {

// lower incomplete gamma by series, valid for x < a + 1
double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 3e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// upper incomplete gamma by Lentz continued fraction, valid for x >= a + 1
double gamma_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 3e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gammp(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw NumericalError("gammp domain");
  if (x == 0.0) return 0.0;
  return x < a + 1.0 ? gamma_series(a, x) : 1.0 - gamma_cf(a, x);
}

double chi2_quantile(double dof, double p) {
  if (dof <= 0.0 || p <= 0.0 || p >= 1.0) throw NumericalError("chi2_quantile domain");
  double lo = 0.0;
  double hi = dof + 10.0;
  while (gammp(0.5 * dof, 0.5 * hi) < p) {
    hi *= 2.0;
    if (hi > 1e9) throw NumericalError("chi2_quantile: bracket failure");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (gammp(0.5 * dof, 0.5 * mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw NumericalError("ks_statistic: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

double ks_pvalue(double d, std::size_t n) {
  const double en = std::sqrt(static_cast<double>(n));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  double q = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = 2.0 * ((j % 2 == 1) ? 1.0 : -1.0) *
                        std::exp(-2.0 * static_cast<double>(j) * static_cast<double>(j) *
                                 lambda * lambda);
    q += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

double chi2_statistic(const std::vector<double>& observed, const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw NumericalError("chi2_statistic: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) throw NumericalError("chi2_statistic: nonpositive expected count");
    const double r = observed[i] - expected[i];
    s += r * r / expected[i];
  }
  return s;
}

Interval bootstrap_percentile(std::size_t n_replicas, int n_resamples, double alpha, Rng& rng,
                              const std::function<double(const std::vector<std::size_t>&)>& stat) {
  if (n_replicas == 0 || n_resamples < 2) throw NumericalError("bootstrap_percentile domain");
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(n_resamples));
  std::vector<std::size_t> idx(n_replicas);
  for (int b = 0; b < n_resamples; ++b) {
    for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_index(n_replicas));
    draws.push_back(stat(idx));
  }
  std::sort(draws.begin(), draws.end());
  const auto pick = [&](double q) {
    const double pos = q * static_cast<double>(draws.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < draws.size() ? draws[i] * (1.0 - frac) + draws[i + 1] * frac : draws[i];
  };
  return {pick(0.5 * alpha), pick(1.0 - 0.5 * alpha)};
}

}  // namespace kacsim
