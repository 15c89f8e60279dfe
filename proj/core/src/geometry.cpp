#include "kacsim/geometry.hpp"

#include <cmath>
#include <limits>

#include "kacsim/errors.hpp"
#include "kacsim/quadrature.hpp"

namespace kacsim {

namespace {

// coordinate axis least aligned with x, lowest index on ties; even in x
int least_aligned_axis(const Vec3& x) {
  const double ax = std::abs(x.x), ay = std::abs(x.y), az = std::abs(x.z);
  if (ax <= ay && ax <= az) return 0;
  if (ay <= az) return 1;
  return 2;
}

// sign of the first nonzero component; odd in x
double leading_sign(const Vec3& x) {
  if (x.x != 0.0) return x.x > 0.0 ? 1.0 : -1.0;
  if (x.y != 0.0) return x.y > 0.0 ? 1.0 : -1.0;
  return x.z > 0.0 ? 1.0 : -1.0;
}

}  // namespace

Frame frame(const Vec3& x) {
  const double n = norm(x);
  if (n == 0.0) return {{0, 0, 0}, {0, 0, 0}};
  const int k = least_aligned_axis(x);
  const Vec3 e = k == 0 ? Vec3{1, 0, 0} : (k == 1 ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
  const Vec3 c = cross(x, e);
  const Vec3 e1 = (n / norm(c)) * c;
  const Vec3 e2 = (leading_sign(x) / n) * cross(x, e1);
  return {e1, e2};
}

Vec3 ortho_dir(const Vec3& x, double phi) {
  const Frame f = frame(x);
  return std::cos(phi) * f.e1 + std::sin(phi) * f.e2;
}

Vec3 deflection(const Vec3& v, const Vec3& vs, double theta, double phi) {
  const Vec3 w = v - vs;
  const double half_sin = std::sin(0.5 * theta);
  const double c = half_sin * half_sin;           // (1 - cos theta)/2
  const double s = half_sin * std::cos(0.5 * theta);  // (sin theta)/2
  return (-c) * w + s * ortho_dir(w, phi);
}

std::pair<Vec3, Vec3> post_collision(const Vec3& v, const Vec3& vs, double theta, double phi) {
  const Vec3 a = deflection(v, vs, theta, phi);
  return {v + a, vs - a};
}

AngularKernel::AngularKernel(double nu) : nu_(nu) {
  if (!(nu > 0.0) || !(nu < 1.0)) throw ConfigError("kernel exponent nu must lie in (0, 1)");
  q_ = std::pow(M_PI_2, -nu_);
  // G(z)(1+z)^{1/nu} = ((1+z)/(nu z + q))^{1/nu} is monotone between pi/2 and nu^{-1/nu}
  const double at_inf = std::pow(nu_, -1.0 / nu_);
  c_lo_ = std::min(M_PI_2, at_inf);
  c_hi_ = std::max(M_PI_2, at_inf);
}

double AngularKernel::beta(double theta) const {
  if (!(theta > 0.0) || theta > M_PI_2 + 1e-12)
    throw NumericalError("beta: deflection angle outside (0, pi/2]");
  return std::pow(theta, -1.0 - nu_);
}

double AngularKernel::tail_mass(double theta) const {
  if (!(theta > 0.0) || theta > M_PI_2 + 1e-12)
    throw NumericalError("tail_mass: deflection angle outside (0, pi/2]");
  return (std::pow(theta, -nu_) - q_) / nu_;
}

double AngularKernel::inverse_tail_mass(double z) const {
  if (!(z >= 0.0)) throw NumericalError("inverse_tail_mass: negative tail coordinate");
  return std::pow(nu_ * z + q_, -1.0 / nu_);
}

Vec3 AngularKernel::z_jump(const Vec3& v, const Vec3& vs, double z, double phi) const {
  return deflection(v, vs, inverse_tail_mass(z), phi);
}

double AngularKernel::cos_cost_integral(double L, double K) const {
  if (!(L >= 0.0) || !(K >= L)) throw NumericalError("cos_cost_integral: need 0 <= L <= K");
  if (L == K) return 0.0;
  const double theta_hi = inverse_tail_mass(L);
  const double theta_lo = std::isinf(K) ? 0.0 : inverse_tail_mass(K);
  // substitute z = tail_mass(theta): dz = -beta dtheta
  return integrate(
      [this](double th) {
        const double hs = std::sin(0.5 * th);
        return hs * hs * beta(th);
      },
      theta_lo, theta_hi, 1e-12);
}

double AngularKernel::sin2_cost_integral(double L) const {
  if (!(L >= 0.0)) throw NumericalError("sin2_cost_integral: negative cutoff");
  if (L == 0.0) return 0.0;
  const double theta_lo = inverse_tail_mass(L);
  return integrate(
      [this](double th) {
        const double s = std::sin(th);
        return 0.25 * s * s * beta(th);
      },
      theta_lo, M_PI_2, 1e-12);
}

double AngularKernel::cos_cost_tail_bound(double L) const {
  return 0.25 * c_hi_ * c_hi_ * nu_ / (2.0 - nu_) * std::pow(1.0 + L, 1.0 - 2.0 / nu_);
}

ScatteringAverages scattering_average_check(const AngularKernel& kernel, const Vec3& v,
                                            const Vec3& vs, double theta_min,
                                            const std::function<double(const Vec3&)>& observable) {
  if (!(theta_min > 0.0) || theta_min >= M_PI_2)
    throw NumericalError("scattering_average_check: theta_min outside (0, pi/2)");
  const Vec3 w = v - vs;
  const Vec3 b = 0.5 * (v + vs);
  const double nw = norm(w);
  if (nw == 0.0) throw NumericalError("scattering_average_check: coincident velocities");

  // sphere side: sigma = cos(theta) d + sin(theta)(cos(psi) p1 + sin(psi) p2) with a
  // Gram-Schmidt pair (p1, p2), unrelated to frame()
  const Vec3 d = (1.0 / nw) * w;
  const Vec3 ref = std::abs(d.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 p1 = ref - dot(ref, d) * d;
  p1 = (1.0 / norm(p1)) * p1;
  const Vec3 p2 = cross(d, p1);

  const double two_pi = 2.0 * M_PI;
  auto sphere_outer = [&](double th) {
    const double ct = std::cos(th), st = std::sin(th);
    auto inner = [&](double psi) {
      const Vec3 sigma = ct * d + st * (std::cos(psi) * p1 + std::sin(psi) * p2);
      return observable(b + (0.5 * nw) * sigma);
    };
    return kernel.beta(th) * integrate(inner, 0.0, two_pi, 1e-12) / two_pi;
  };
  const double sphere_side = integrate(sphere_outer, theta_min, M_PI_2, 1e-10);

  auto param_outer = [&](double th) {
    auto inner = [&](double phi) { return observable(v + deflection(v, vs, th, phi)); };
    return kernel.beta(th) * integrate(inner, 0.0, two_pi, 1e-12) / two_pi;
  };
  const double param_side = integrate(param_outer, theta_min, M_PI_2, 1e-10);

  return {sphere_side, param_side};
}

}  // namespace kacsim
