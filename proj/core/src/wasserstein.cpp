#include "kacsim/wasserstein.hpp"

#include <algorithm>
#include <cmath>

#include "kacsim/assignment.hpp"
#include "kacsim/errors.hpp"
#include "kacsim/stats.hpp"

namespace kacsim {

namespace {

void check_pair(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw ConfigError("w2: empty cloud");
  if (a.size() != b.size()) throw ConfigError("w2: cloud sizes differ");
  if (a.size() > kW2HardCap) throw ConfigError("w2: size exceeds the exact-solver cap");
}

}  // namespace

W2Result w2_exact(const PointCloud& a, const PointCloud& b) {
  check_pair(a, b);
  auto sol = assign_squared(a, b);
  return W2Result{sol.mean_cost, std::move(sol.col_of_row)};
}

double w2_exact_value(const PointCloud& a, const PointCloud& b) { return w2_exact(a, b).w2sq; }

double w2_replicated(const PointCloud& small, const PointCloud& big) {
  if (small.empty() || big.empty()) throw ConfigError("w2_replicated: empty cloud");
  if (big.size() % small.size() != 0)
    throw ConfigError("w2_replicated: big size must be a multiple of small size");
  if (big.size() > kW2HardCap) throw ConfigError("w2_replicated: size exceeds the solver cap");
  const std::size_t r = big.size() / small.size();
  // each small atom of mass 1/n splits into r atoms of mass 1/m, which is exact
  // for uniform weights
  const auto sol = solve_assignment(big.size(), [&](std::size_t i, std::size_t j) {
    return dist2(small[i / r], big[j]);
  });
  return sol.mean_cost;
}

double w2_sinkhorn(const PointCloud& a, const PointCloud& b, double reg, int max_iter) {
  if (a.empty() || b.empty()) throw ConfigError("w2_sinkhorn: empty cloud");
  if (!(reg > 0.0)) throw ConfigError("w2_sinkhorn: regularization must be positive");
  if (a.size() > kW2HardCap || b.size() > kW2HardCap)
    throw ConfigError("w2_sinkhorn: size exceeds the cap");
  const std::size_t n = a.size(), m = b.size();
  std::vector<double> cst(n * m), ker(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = dist2(a[i], b[j]);
      cst[i * m + j] = c;
      ker[i * m + j] = std::exp(-c / reg);
    }
  }
  std::vector<double> u(n, 1.0), v(m, 1.0);
  const double pi = 1.0 / static_cast<double>(n), qj = 1.0 / static_cast<double>(m);
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += ker[i * m + j] * v[j];
      if (!(s > 0.0)) throw NumericalError("w2_sinkhorn: kernel underflow, increase reg");
      u[i] = pi / s;
    }
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += ker[i * m + j] * u[i];
      if (!(s > 0.0)) throw NumericalError("w2_sinkhorn: kernel underflow, increase reg");
      v[j] = qj / s;
    }
  }
  double cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) cost += u[i] * ker[i * m + j] * v[j] * cst[i * m + j];
  }
  if (!std::isfinite(cost)) throw NumericalError("w2_sinkhorn: non-finite transport cost");
  return cost;
}

int default_surrogate_size(int n) {
  if (n < 1 || static_cast<std::size_t>(n) > kW2HardCap)
    throw ConfigError("default_surrogate_size: n out of range");
  const int r = std::max<int>(1, std::min<int>(16, static_cast<int>(kW2HardCap) / n));
  return r * n;
}

namespace {

PointCloud draw_cloud(const std::function<Vec3(Rng&)>& sampler, int n, Rng& rng) {
  PointCloud out(static_cast<std::size_t>(n));
  for (auto& p : out) p = sampler(rng);
  return out;
}

}  // namespace

EpsEstimate eps_n(const std::function<Vec3(Rng&)>& sampler, int n, int reps, int m, Rng& rng) {
  if (n < 1) throw ConfigError("eps_n: n must be positive");
  if (reps < 1) throw ConfigError("eps_n: need at least one replicate");
  if (m % n != 0) throw ConfigError("eps_n: surrogate size must be a multiple of n");
  std::vector<double> vals(static_cast<std::size_t>(reps));
  for (auto& val : vals) {
    const PointCloud sample = draw_cloud(sampler, n, rng);
    const PointCloud surrogate = draw_cloud(sampler, m, rng);
    val = w2_replicated(sample, surrogate);
  }
  EpsEstimate est;
  est.mean = mean(vals);
  est.se = vals.size() > 1 ? stderr_of_mean(vals) : 0.0;
  est.n = n;
  est.m = m;
  est.reps = reps;
  return est;
}

BlockBoundReport block_bound_check(const std::function<PointCloud(Rng&)>& x_replica,
                                   const std::function<Vec3(Rng&)>& mu_sampler, int n, int reps,
                                   Rng& rng) {
  if (reps < 2) throw ConfigError("block_bound_check: need at least two replicates");
  PointCloud first = x_replica(rng);
  const int m = static_cast<int>(first.size());
  if (m < 1 || n < 1 || n > m) throw ConfigError("block_bound_check: need 1 <= n <= m");
  const int k = m / n, l = m % n;
  const int sur_m = default_surrogate_size(m);
  const int sur_n = default_surrogate_size(n);
  const int sur_l = l > 0 ? default_surrogate_size(l) : 0;

  std::vector<double> lhs_vals, rhs_vals;
  lhs_vals.reserve(static_cast<std::size_t>(reps));
  rhs_vals.reserve(static_cast<std::size_t>(reps));
  for (int rep = 0; rep < reps; ++rep) {
    const PointCloud x = rep == 0 ? std::move(first) : x_replica(rng);
    if (static_cast<int>(x.size()) != m)
      throw NumericalError("block_bound_check: replica size changed");
    lhs_vals.push_back(0.5 * w2_replicated(x, draw_cloud(mu_sampler, sur_m, rng)));

    const PointCloud head(x.begin(), x.begin() + n);
    const double w2n = w2_exact_value(head, draw_cloud(mu_sampler, n, rng));
    const double epsn =
        w2_replicated(draw_cloud(mu_sampler, n, rng), draw_cloud(mu_sampler, sur_n, rng));
    double rhs = (static_cast<double>(k) * n / m) * (w2n + epsn);
    if (l > 0) {
      const PointCloud tail(x.end() - l, x.end());
      const double w2l = w2_exact_value(tail, draw_cloud(mu_sampler, l, rng));
      const double epsl =
          w2_replicated(draw_cloud(mu_sampler, l, rng), draw_cloud(mu_sampler, sur_l, rng));
      rhs += (static_cast<double>(l) / m) * (w2l + epsl);
    }
    rhs_vals.push_back(rhs);
  }

  BlockBoundReport rep;
  rep.lhs = mean(lhs_vals);
  rep.lhs_se = stderr_of_mean(lhs_vals);
  rep.rhs = mean(rhs_vals);
  rep.rhs_se = stderr_of_mean(rhs_vals);
  rep.m = m;
  rep.n = n;
  rep.k = k;
  rep.l = l;
  rep.surrogate_m = sur_m;
  rep.holds = rep.lhs <= rep.rhs + 3.0 * std::sqrt(rep.lhs_se * rep.lhs_se + rep.rhs_se * rep.rhs_se);
  return rep;
}

StandardizedCloud standardize(const PointCloud& x) {
  if (x.empty()) throw ConfigError("standardize: empty cloud");
  const double inv_n = 1.0 / static_cast<double>(x.size());
  Vec3 m{};
  for (const auto& p : x) m += p;
  m *= inv_n;
  double s2 = 0.0;
  for (const auto& p : x) s2 += dist2(p, m);
  s2 *= inv_n;
  const double s = std::sqrt(s2);

  StandardizedCloud out;
  out.removed_mean = m;
  out.removed_scale = s;
  if (s > 0.0) {
    out.points.reserve(x.size());
    for (const auto& p : x) out.points.push_back((1.0 / s) * (p - m));
    out.cost = (s - 1.0) * (s - 1.0) + norm2(m);
  } else {
    out.points = degenerate_sphere_cloud(x.size());
    double c = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) c += dist2(x[i], out.points[i]);
    out.cost = c * inv_n;
  }
  return out;
}

PointCloud degenerate_sphere_cloud(std::size_t n) {
  if (n == 0) throw ConfigError("degenerate_sphere_cloud: empty");
  PointCloud out;
  out.reserve(n);
  if (n == 1) {
    out.push_back(Vec3{});
    return out;
  }
  const bool odd = (n % 2) != 0;
  const double c =
      odd ? std::sqrt(static_cast<double>(n) / static_cast<double>(n - 1)) : 1.0;
  if (odd) out.push_back(Vec3{});
  for (std::size_t i = out.size(); i < n; i += 2) {
    out.push_back(Vec3{c, 0.0, 0.0});
    out.push_back(Vec3{-c, 0.0, 0.0});
  }
  return out;
}

PointCloud sample_boltzmann_sphere(std::size_t n, Rng& rng) {
  if (n < 2) throw ConfigError("sample_boltzmann_sphere: need at least two points");
  const double sigma = 1.0 / std::sqrt(3.0);
  PointCloud x(n);
  for (auto& p : x) p = rng.gauss3(sigma);
  return standardize(x).points;
}

}  // namespace kacsim
