#pragma once

#include "kacsim/geometry.hpp"
#include "kacsim/vec3.hpp"

namespace kacsim {

// Post-collisional circle: the set of first-particle outcomes over all azimuths at a
// fixed deflection angle. axis is unit when radius > 0; a coincident pair degenerates
// to the point circle (center = v, radius = 0, axis = 0).
struct Circle {
  Vec3 center;
  double radius = 0.0;
  Vec3 axis;
};

Circle circle_of(const Vec3& v, const Vec3& vs, double theta);

// squared 2-Wasserstein distance between the uniform laws on two circles:
//   |b - b~|^2 + (r - r~)^2 + r r~ (1 - |axis . axis~|)
double w2_circles(const Circle& a, const Circle& b);

// R(x, y) = |x||y| + |x.y| - 2 x.y; nonnegative, zero iff y is a nonnegative
// multiple of x, and vanishing to second order as y -> x
double alignment_residual(const Vec3& x, const Vec3& y);

// Optimal azimuth transport between the circles parametrized by vdiff and udiff:
// maps phi on the vdiff-circle to the angle on the udiff-circle such that equal
// angles realize the optimal coupling of the two uniform circle laws. Affine with
// slope +-1 in phi, so it pushes the uniform law forward to the uniform law.
// Requires vdiff != 0 and udiff != 0. varphi(x, x, phi) = phi exactly.
double varphi(const Vec3& vdiff, const Vec3& udiff, double phi);

// Closed-form azimuth-averaged coupled-jump cost increment
//   int_0^{2pi} (|v + a(v,vs,theta,phi) - u - a(u,us,vartheta,varphi(phi))|^2
//               - |v - u|^2) dphi/2pi
// under the optimal azimuth transport above.
double phi_avg_cost(const Vec3& v, const Vec3& vs, const Vec3& u, const Vec3& us, double theta,
                    double vartheta);

// The same cost further averaged over the tail coordinate z on [0, K] with the
// u-side jump gated at z <= L (L <= K, K may be +infinity):
//   cc(0,L) [ -|v-u|^2 + |vs-us|^2 ] + cc(L,K) (v-vs).(2u - v - vs)
//   - R(v-vs, u-us) * sin2_cost_integral(L)
// with cc = kernel.cos_cost_integral.
double z_phi_avg_cost(const AngularKernel& kernel, const Vec3& v, const Vec3& vs, const Vec3& u,
                      const Vec3& us, double L, double K);

}  // namespace kacsim
