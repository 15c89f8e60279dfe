#include "kacsim/moments.hpp"

#include <algorithm>
#include <cmath>

#include "kacsim/errors.hpp"
#include "kacsim/quadrature.hpp"

namespace kacsim {

namespace {

void require_even_p(int p, int minimum) {
  if (p < minimum || p % 2 != 0) throw ConfigError("moment order must be even and >= minimum");
}

// 1 - sin^p(theta/2) - cos^p(theta/2), stable against the p=O(theta^2) cancellation
double povzner_bracket(double theta, int p) {
  const double s = std::sin(0.5 * theta);
  const double s2 = s * s;
  return -std::expm1(0.5 * p * std::log1p(-s2)) - std::pow(s, p);
}

double binom_central(int i) {
  double c = 1.0;
  for (int k = 1; k <= i; ++k) c *= static_cast<double>(i + k) / k;
  return c;
}

}  // namespace

PovznerConstants povzner_constants(int p, const AngularKernel& kernel, double abs_tol) {
  require_even_p(p, 2);
  PovznerConstants out;
  out.p = p;
  out.abs_tol = abs_tol;
  // sin^2 + cos^2 = 1 makes the p = 2 integrand vanish identically
  out.a_p = p == 2 ? 0.0
                   : integrate([&](double th) { return povzner_bracket(th, p) * kernel.beta(th); },
                               0.0, M_PI_2, abs_tol);
  out.i_theta2 = integrate([&](double th) { return th * th * kernel.beta(th); }, 0.0, M_PI_2,
                           abs_tol);
  return out;
}

CircleMomentPair circle_moment_identity(const Vec3& v, const Vec3& vs, int i) {
  if (i < 1) throw ConfigError("circle moment order must be >= 1");
  if (v == vs) throw ConfigError("circle moment needs distinct velocities");
  CircleMomentPair out;
  const double bracket = std::max(0.0, norm2(v) * norm2(vs) - dot(v, vs) * dot(v, vs));
  out.closed_form = binom_central(i) * std::pow(bracket, i);
  const Vec3 s = v + vs;
  const Vec3 w = v - vs;
  out.quadrature = integrate(
                       [&](double phi) {
                         return std::pow(dot(s, ortho_dir(w, phi)), 2.0 * i);
                       },
                       0.0, 2.0 * M_PI, 1e-10 * (1.0 + out.closed_form)) /
                   (2.0 * M_PI);
  return out;
}

PovznerReport povzner_inequality_probe(const Vec3& v, const Vec3& vs, int p,
                                       const AngularKernel& kernel, double theta_min,
                                       double abs_tol) {
  require_even_p(p, 4);
  if (theta_min < 0.0 || theta_min >= M_PI_2)
    throw ConfigError("theta_min must lie in [0, pi/2)");
  PovznerReport out;
  const double nv2 = norm2(v), ns2 = norm2(vs);
  const double base = std::pow(nv2, p / 2.0) + std::pow(ns2, p / 2.0);

  // 32-point azimuth midpoint rule: the integrand is a trigonometric polynomial of
  // degree p/2 in phi, so the rule is exact for every supported p
  const int m_phi = 32;
  const auto phi_avg = [&](double theta) {
    double acc = 0.0;
    for (int l = 0; l < m_phi; ++l) {
      const double phi = 2.0 * M_PI * (l + 0.5) / m_phi;
      const auto [vp, vsp] = post_collision(v, vs, theta, phi);
      acc += std::pow(norm2(vp), p / 2.0) + std::pow(norm2(vsp), p / 2.0) - base;
    }
    return acc / m_phi;
  };
  // tolerance scales with the pair magnitude; the integrand is O(theta^2) beta
  // after azimuth averaging, with envelope 4 p^2 R^p theta^2, so cutting below
  // theta_floor discards under 5% of the tolerance and dodges the cancellation
  // noise floor of the p-power differences
  const double tol_eff = abs_tol * std::max(1.0, base);
  const double r = std::max(1.0, std::sqrt(nv2) + std::sqrt(ns2));
  const double nu = kernel.nu();
  const double theta_floor =
      std::pow(0.05 * tol_eff * (2.0 - nu) / (4.0 * p * p * std::pow(r, p)),
               1.0 / (2.0 - nu));
  const double lo = std::min(std::max(theta_min, theta_floor), M_PI_2 / 2.0);
  out.lhs = nv2 == 0.0 && ns2 == 0.0
                ? 0.0
                : integrate([&](double th) { return phi_avg(th) * kernel.beta(th); }, lo,
                            M_PI_2, tol_eff);

  const auto constants = povzner_constants(p, kernel);
  out.decay = constants.a_p * base;
  out.i_theta2 = constants.i_theta2;
  out.cross = std::pow(nv2, (p - 2) / 2.0) * ns2 + std::pow(ns2, (p - 2) / 2.0) * nv2;
  const double denom = constants.i_theta2 * out.cross;
  out.required_tilde = denom > 0.0 ? std::max(0.0, (out.lhs + out.decay) / denom) : 0.0;
  return out;
}

LinFit MomentTrack::final_half_fit(std::size_t p_index) const {
  if (p_index >= m.size()) throw ConfigError("moment track: no such order");
  if (t.size() < 2) throw ConfigError("moment track: need at least two observations");
  const double mid = 0.5 * (t.front() + t.back());
  std::vector<double> xs, ys;
  for (std::size_t l = 0; l < t.size(); ++l) {
    if (t[l] < mid) continue;
    xs.push_back(t[l]);
    ys.push_back(m[p_index][l]);
  }
  if (xs.size() < 3) throw ConfigError("moment track: need 3+ observations in the final half");
  return linfit(xs, ys);
}

bool MomentTrack::upward_trend(std::size_t p_index) const {
  const auto fit = final_half_fit(p_index);
  return fit.slope > 3.0 * fit.slope_se;
}

MomentTrack track_moments(Ensemble ens, double t_end, EventStream& stream,
                          const std::vector<int>& p_list, const std::vector<double>& observe_at) {
  if (p_list.empty()) throw ConfigError("moment track: empty order list");
  for (int p : p_list) require_even_p(p, 2);
  MomentTrack track;
  track.p = p_list;
  track.energy0 = ens.ledger_energy;
  track.m.resize(p_list.size());
  std::size_t next = 0;
  RunOptions opts;
  opts.observe_at = observe_at;
  opts.on_observe = [&](const Ensemble& state) {
    track.t.push_back(observe_at[next++]);
    for (std::size_t l = 0; l < p_list.size(); ++l) {
      double acc = 0.0;
      for (const auto& vel : state.v) acc += std::pow(norm2(vel), p_list[l] / 2.0);
      track.m[l].push_back(acc / state.n());
    }
  };
  run(std::move(ens), t_end, stream, opts);
  return track;
}

double m4_relaxation_rate(const AngularKernel& kernel, double cutoff) {
  if (!(cutoff > 0.0)) throw ConfigError("relaxation rate needs a positive cutoff");
  return 2.0 * kernel.sin2_cost_integral(cutoff);
}

}  // namespace kacsim
