#include "kacsim/circle.hpp"

#include <cmath>

#include "kacsim/errors.hpp"

namespace kacsim {

Circle circle_of(const Vec3& v, const Vec3& vs, double theta) {
  const Vec3 w = v - vs;
  const double n = norm(w);
  if (n == 0.0) return Circle{v, 0.0, Vec3{}};
  Circle c;
  c.center = (v + vs) * 0.5 + w * (0.5 * std::cos(theta));
  c.radius = 0.5 * std::sin(theta) * n;
  c.axis = w * (1.0 / n);
  return c;
}

double w2_circles(const Circle& a, const Circle& b) {
  const double align = std::abs(dot(a.axis, b.axis));
  return dist2(a.center, b.center) + (a.radius - b.radius) * (a.radius - b.radius) +
         a.radius * b.radius * (1.0 - align);
}

double alignment_residual(const Vec3& x, const Vec3& y) {
  const double p = dot(x, y);
  return norm(x) * norm(y) + std::abs(p) - 2.0 * p;
}

namespace {

// +1 if (e1, e2, x) is right-handed; frames from frame() are never degenerate for x != 0
double handedness(const Frame& f, const Vec3& x) { return det3(f.e1, f.e2, x) > 0.0 ? 1.0 : -1.0; }

}  // namespace

double varphi(const Vec3& vdiff, const Vec3& udiff, double phi) {
  if (vdiff == udiff) return phi;  // identity transport, exact by construction

  const double nv = norm(vdiff);
  const double nu = norm(udiff);
  if (nv == 0.0 || nu == 0.0) throw NumericalError("varphi: zero relative velocity");
  const Vec3 d = vdiff * (1.0 / nv);
  const Vec3 dt = udiff * (1.0 / nu);

  // hinge direction: common line of the two circle planes; any shared orthogonal
  // direction works when the axes are (anti)parallel
  Vec3 h = cross(d, dt);
  const double hn = norm(h);
  if (hn < 1e-14) {
    h = frame(d).e1;
    h *= 1.0 / norm(h);
  } else {
    h *= 1.0 / hn;
  }

  const Frame fv = frame(vdiff);
  const Frame fu = frame(udiff);
  // azimuth of the hinge in each circle's own chart (frame components share the
  // |diff| scale, so atan2 needs no normalization)
  const double phi1 = std::atan2(dot(h, fv.e2), dot(h, fv.e1));
  const double phi2 = std::atan2(dot(h, fu.e2), dot(h, fu.e1));
  // matched points advance in the same rotational sense about nearly-aligned axes;
  // each chart's sense is its handedness, and opposite axes reverse once more
  const double s = (dot(d, dt) >= 0.0 ? 1.0 : -1.0) * handedness(fv, vdiff) * handedness(fu, udiff);

  const double two_pi = 2.0 * M_PI;
  double out = std::fmod(s * (phi - phi1) + phi2, two_pi);
  if (out < 0.0) out += two_pi;
  if (out >= two_pi) out = 0.0;
  return out;
}

double phi_avg_cost(const Vec3& v, const Vec3& vs, const Vec3& u, const Vec3& us, double theta,
                    double vartheta) {
  const Vec3 w = v - vs;
  const Vec3 wp = u - us;
  const double cv = 0.5 * (1.0 - std::cos(theta));
  const double cu = 0.5 * (1.0 - std::cos(vartheta));
  const Vec3 sum_diff = (v - u) + (vs - us);
  const double term1 = -dot(sum_diff, w * cv - wp * cu);
  const double term2 = -0.25 * std::sin(theta) * std::sin(vartheta) * alignment_residual(w, wp);
  const double term3 = 0.5 * (1.0 - std::cos(theta - vartheta)) * dot(w, wp);
  return term1 + term2 + term3;
}

double z_phi_avg_cost(const AngularKernel& kernel, const Vec3& v, const Vec3& vs, const Vec3& u,
                      const Vec3& us, double L, double K) {
  if (!(L >= 0.0) || !(K >= L)) throw NumericalError("z_phi_avg_cost: need 0 <= L <= K");
  const Vec3 w = v - vs;
  const Vec3 wp = u - us;
  const double both = kernel.cos_cost_integral(0.0, L);
  const double solo = kernel.cos_cost_integral(L, K);
  return both * (dist2(vs, us) - dist2(v, u)) + solo * dot(w, u * 2.0 - v - vs) -
         alignment_residual(w, wp) * kernel.sin2_cost_integral(L);
}

}  // namespace kacsim
