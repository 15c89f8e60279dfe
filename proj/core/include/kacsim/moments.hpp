#pragma once

#include <cstddef>
#include <vector>

#include "kacsim/geometry.hpp"
#include "kacsim/kac.hpp"
#include "kacsim/stats.hpp"
#include "kacsim/vec3.hpp"

namespace kacsim {

// Angular constants of the p-th moment production inequality:
//   a_p      = int (1 - sin^p(theta/2) - cos^p(theta/2)) beta(theta) dtheta  on (0, pi/2)
//   i_theta2 = int theta^2 beta(theta) dtheta                                on (0, pi/2)
// a_p > 0 for even p > 2, a_2 = 0; both integrands are O(theta^{1-nu}) at 0.
struct PovznerConstants {
  int p = 0;
  double a_p = 0.0;
  double i_theta2 = 0.0;
  double abs_tol = 0.0;
};
PovznerConstants povzner_constants(int p, const AngularKernel& kernel, double abs_tol = 1e-10);

// Both evaluations of the scattering azimuth moment
//   int ((v + vs) . ortho_dir(v - vs, phi))^{2i} dphi/2pi
//     = binom(2i, i) (|v|^2 |vs|^2 - (v . vs)^2)^i
// Requires v != vs (the azimuth frame needs a nonzero relative velocity).
struct CircleMomentPair {
  double closed_form = 0.0;
  double quadrature = 0.0;
};
CircleMomentPair circle_moment_identity(const Vec3& v, const Vec3& vs, int i);

// One probe of the moment production bound
//   lhs <= -a_p (|v|^p + |vs|^p) + i_theta2 * tilde_a * cross,
//   cross = |v|^{p-2} |vs|^2 + |vs|^{p-2} |v|^2,
// where lhs = int (|v'|^p + |vs'|^p - |v|^p - |vs|^p) beta(theta) dtheta dphi/2pi
// restricted to theta >= theta_min (theta_min = 0 integrates the full kernel).
// required_tilde is the smallest constant making the bound hold for this pair.
struct PovznerReport {
  double lhs = 0.0;
  double decay = 0.0;  // a_p (|v|^p + |vs|^p)
  double cross = 0.0;
  double i_theta2 = 0.0;
  double required_tilde = 0.0;
};
PovznerReport povzner_inequality_probe(const Vec3& v, const Vec3& vs, int p,
                                       const AngularKernel& kernel, double theta_min = 0.0,
                                       double abs_tol = 1e-9);

// Empirical moments m_p(t) = (1/n) sum_i |v^i_t|^p recorded along a run.
struct MomentTrack {
  std::vector<int> p;
  std::vector<double> t;
  std::vector<std::vector<double>> m;  // [p index][observation]
  double energy0 = 0.0;                // ledger energy at the start of the run

  // least-squares fit of m_p over observations in the final half of the horizon
  LinFit final_half_fit(std::size_t p_index) const;
  // sustained growth flag: final-half slope more than 3 standard errors above 0
  bool upward_trend(std::size_t p_index) const;
};
MomentTrack track_moments(Ensemble ens, double t_end, EventStream& stream,
                          const std::vector<int>& p_list, const std::vector<double>& observe_at);

// fourth moment of the unit-energy isotropic Gaussian, the equilibrium target
inline constexpr double kGaussianM4 = 5.0 / 3.0;

// exponential relaxation rate of m4 toward kGaussianM4 under tail cutoff L:
//   d m4/dt = -rate (m4 - 5/3),  rate = 2 * sin2_cost_integral(L)
double m4_relaxation_rate(const AngularKernel& kernel, double cutoff);

}  // namespace kacsim
