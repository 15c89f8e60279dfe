#pragma once

#include <functional>
#include <utility>

#include "kacsim/vec3.hpp"

namespace kacsim {

// Orthogonal tangent pair attached to x: |e1| = |e2| = |x|, e1 and e2 orthogonal to x
// and to each other. Both components are odd in x (hence homogeneous under any real
// scaling), at the cost of an orientation flip between hemispheres. frame(0) = (0, 0).
struct Frame {
  Vec3 e1, e2;
};

Frame frame(const Vec3& x);

// cos(phi) e1 + sin(phi) e2; traces the radius-|x| circle orthogonal to x
Vec3 ortho_dir(const Vec3& x, double phi);

// velocity increment of the first particle in a binary collision with deflection
// angle theta and azimuth phi:
//   a = -(1-cos theta)/2 (v - vs) + (sin theta)/2 * ortho_dir(v - vs, phi)
// |a| <= (theta/2) |v - vs|
Vec3 deflection(const Vec3& v, const Vec3& vs, double theta, double phi);

// (v', vs') = (v + a, vs - a); momentum and kinetic energy are conserved exactly
// in real arithmetic, to rounding here
std::pair<Vec3, Vec3> post_collision(const Vec3& v, const Vec3& vs, double theta, double phi);

// Angular collision kernel beta(theta) = theta^{-1-nu} on (0, pi/2], nu in (0, 1).
// Non-integrable at 0; all simulation happens under a tail cutoff.
class AngularKernel {
 public:
  explicit AngularKernel(double nu);  // ConfigError unless 0 < nu < 1

  double nu() const { return nu_; }
  double beta(double theta) const;

  // tail mass H(theta) = int_theta^{pi/2} beta = (theta^-nu - (pi/2)^-nu)/nu
  double tail_mass(double theta) const;
  // inverse tail mass G(z) = (nu z + (pi/2)^-nu)^{-1/nu}; G(0) = pi/2, decreasing
  double inverse_tail_mass(double z) const;

  // c_lo (1+z)^{-1/nu} <= G(z) <= c_hi (1+z)^{-1/nu} for all z >= 0
  double bound_lo() const { return c_lo_; }
  double bound_hi() const { return c_hi_; }

  // deflection with theta = G(z); the Grad cutoff z <= K is the caller's gate
  Vec3 z_jump(const Vec3& v, const Vec3& vs, double z, double phi) const;

  // int_L^K (1 - cos G(z))/2 dz, K may be +infinity
  double cos_cost_integral(double L, double K) const;
  // int_0^L sin^2(G(z))/4 dz
  double sin2_cost_integral(double L) const;
  // closed-form upper bound for cos_cost_integral(L, inf):
  //   (c_hi^2 nu / (4 (2 - nu))) (1+L)^{1 - 2/nu}
  double cos_cost_tail_bound(double L) const;

 private:
  double nu_, q_;  // q = (pi/2)^-nu
  double c_lo_, c_hi_;
};

// Both evaluations of the scattering average of an observable of the first
// post-collisional velocity, restricted to deflection angles >= theta_min:
//   sphere side:  int over the spherical cap, sigma-parametrized, azimuth-normalized
//   param side:   int beta(theta) dtheta dphi/2pi of f(v + a(v, vs, theta, phi))
// The two use unrelated frame constructions; agreement validates the kinematics.
struct ScatteringAverages {
  double sphere_side;
  double param_side;
};
ScatteringAverages scattering_average_check(const AngularKernel& kernel, const Vec3& v,
                                            const Vec3& vs, double theta_min,
                                            const std::function<double(const Vec3&)>& observable);

}  // namespace kacsim
