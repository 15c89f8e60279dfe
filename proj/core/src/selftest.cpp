#include "kacsim/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "kacsim/circle.hpp"
#include "kacsim/geometry.hpp"
#include "kacsim/kac.hpp"
#include "kacsim/moments.hpp"
#include "kacsim/nonlinear.hpp"
#include "kacsim/quadrature.hpp"
#include "kacsim/rng.hpp"
#include "kacsim/vec3.hpp"
#include "kacsim/wasserstein.hpp"

namespace kacsim {

namespace {

struct Tally {
  std::ostream& out;
  int failures = 0;
  void check(bool ok, const std::string& name) {
    out << (ok ? "ok " : "FAIL ") << name << "\n";
    if (!ok) ++failures;
  }
};

Vec3 rand_vec(Rng& rng, double scale) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

// exhaustive assignment minimum between equal-size clouds, cost summed in row order
std::pair<double, std::vector<int>> brute_assignment(const std::vector<Vec3>& a,
                                                     const std::vector<Vec3>& b) {
  const std::size_t k = a.size();
  std::vector<int> perm(k), best(k);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < k; ++i) cost += norm2(a[i] - b[perm[i]]);
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best_cost, best};
}

std::vector<Vec3> discretize(const Circle& c, int m) {
  Vec3 e1{1.0, 0.0, 0.0};
  if (std::abs(c.axis.x) > 0.9) e1 = Vec3{0.0, 1.0, 0.0};
  Vec3 u = cross(c.axis, e1);
  u = (1.0 / std::sqrt(norm2(u))) * u;
  const Vec3 w = cross(c.axis, u);
  std::vector<Vec3> pts;
  pts.reserve(m);
  for (int i = 0; i < m; ++i) {
    const double phi = 2.0 * M_PI * (i + 0.5) / m;
    pts.push_back(c.center + c.radius * (std::cos(phi) * u + std::sin(phi) * w));
  }
  return pts;
}

bool kernel_integrals(Rng& rng) {
  for (int trial = 0; trial < 20; ++trial) {
    const AngularKernel kernel(rng.uniform(0.1, 0.9));
    const double k_hi = rng.uniform(2.0, 40.0);
    const double l = rng.uniform(0.1, k_hi);
    // inversion
    const double theta = kernel.inverse_tail_mass(l);
    if (std::abs(kernel.tail_mass(theta) - l) > 1e-9 * (1.0 + l)) return false;
    // z-averaged cost pieces against direct quadrature in z
    const double cc = kernel.cos_cost_integral(l, k_hi);
    const double cc_q = integrate(
        [&](double z) { return 0.5 * (1.0 - std::cos(kernel.inverse_tail_mass(z))); }, l, k_hi,
        1e-12);
    if (std::abs(cc - cc_q) > 1e-8 * (1.0 + std::abs(cc))) return false;
    const double s2 = kernel.sin2_cost_integral(l);
    const double s2_q = integrate(
        [&](double z) {
          const double s = std::sin(kernel.inverse_tail_mass(z));
          return 0.25 * s * s;
        },
        0.0, l, 1e-12);
    if (std::abs(s2 - s2_q) > 1e-8 * (1.0 + std::abs(s2))) return false;
  }
  return true;
}

bool deflection_geometry(Rng& rng) {
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 v = rand_vec(rng, 3.0), vs = rand_vec(rng, 3.0);
    const double theta = rng.uniform(1e-6, M_PI_2);
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    const Vec3 a = deflection(v, vs, theta, phi);
    const Vec3 b = deflection(vs, v, theta, phi);
    if (a.x != -b.x || a.y != -b.y || a.z != -b.z) return false;
    const double w2 = norm2(v - vs);
    if (norm2(a) > 0.25 * theta * theta * w2 * (1.0 + 1e-12)) return false;
    const auto [vp, vsp] = post_collision(v, vs, theta, phi);
    const Vec3 dm = vp + vsp - v - vs;
    if (norm2(dm) > 1e-24 * (1.0 + norm2(v) + norm2(vs))) return false;
    const double de = norm2(vp) + norm2(vsp) - norm2(v) - norm2(vs);
    if (std::abs(de) > 1e-12 * (1.0 + norm2(v) + norm2(vs))) return false;
  }
  return true;
}

bool circle_transport(Rng& rng) {
  for (int trial = 0; trial < 6; ++trial) {
    const Vec3 v = rand_vec(rng, 2.0), vs = rand_vec(rng, 2.0);
    const Vec3 u = rand_vec(rng, 2.0), us = rand_vec(rng, 2.0);
    const Circle a = circle_of(v, vs, rng.uniform(0.05, M_PI_2));
    const Circle b = circle_of(u, us, rng.uniform(0.05, M_PI_2));
    const double closed = w2_circles(a, b);
    const double oracle = w2_exact(discretize(a, 512), discretize(b, 512)).w2sq;
    if (std::abs(closed - oracle) > 1e-3 * (1.0 + std::abs(closed))) return false;
  }
  return true;
}

bool azimuth_transport(Rng& rng) {
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 x = rand_vec(rng, 2.0), y = rand_vec(rng, 2.0);
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    if (varphi(x, x, phi) != phi) return false;
    // affine with slope +-1: increments map to increments exactly
    const double d = rng.uniform(0.0, 0.1);
    const double delta = std::remainder(varphi(x, y, phi + d) - varphi(x, y, phi), 2.0 * M_PI);
    if (std::abs(std::abs(delta) - d) > 1e-9) return false;
  }
  return true;
}

bool phi_average_cost(Rng& rng) {
  for (int trial = 0; trial < 30; ++trial) {
    const Vec3 v = rand_vec(rng, 2.0), vs = rand_vec(rng, 2.0);
    const Vec3 u = rand_vec(rng, 2.0), us = rand_vec(rng, 2.0);
    const double theta = rng.uniform(0.01, M_PI_2);
    const double vartheta = rng.uniform(0.01, M_PI_2);
    const double closed = phi_avg_cost(v, vs, u, us, theta, vartheta);
    const double oracle = integrate(
        [&](double phi) {
          const Vec3 av = deflection(v, vs, theta, phi);
          const Vec3 au = deflection(u, us, vartheta, varphi(v - vs, u - us, phi));
          return (norm2(v + av - u - au) - norm2(v - u)) / (2.0 * M_PI);
        },
        0.0, 2.0 * M_PI, 1e-10);
    if (std::abs(closed - oracle) > 1e-6 * (1.0 + std::abs(closed))) return false;
  }
  return true;
}

bool z_phi_average_cost(Rng& rng) {
  for (int trial = 0; trial < 12; ++trial) {
    const AngularKernel kernel(rng.uniform(0.2, 0.8));
    const Vec3 v = rand_vec(rng, 1.5), vs = rand_vec(rng, 1.5);
    const Vec3 u = rand_vec(rng, 1.5), us = rand_vec(rng, 1.5);
    const double k_hi = rng.uniform(4.0, 20.0);
    const double l = rng.uniform(0.5, k_hi);
    const double closed = z_phi_avg_cost(kernel, v, vs, u, us, l, k_hi);
    // the integrand jumps at the gate, so the oracle integrates each side separately
    const double below = integrate(
        [&](double z) {
          const double theta = kernel.inverse_tail_mass(z);
          return phi_avg_cost(v, vs, u, us, theta, theta);
        },
        0.0, l, 1e-9);
    const double above = integrate(
        [&](double z) {
          const double theta = kernel.inverse_tail_mass(z);
          // beyond the gate only the first ensemble jumps
          return integrate(
              [&](double phi) {
                const Vec3 av = deflection(v, vs, theta, phi);
                return (norm2(v + av - u) - norm2(v - u)) / (2.0 * M_PI);
              },
              0.0, 2.0 * M_PI, 1e-11);
        },
        l, k_hi, 1e-9);
    if (std::abs(closed - (below + above)) > 1e-6 * (1.0 + std::abs(closed))) return false;
  }
  return true;
}

bool circle_moments(Rng& rng) {
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3 v = rand_vec(rng, 2.0), vs = rand_vec(rng, 2.0);
    for (int i = 1; i <= 3; ++i) {
      const CircleMomentPair pair = circle_moment_identity(v, vs, i);
      if (std::abs(pair.closed_form - pair.quadrature) > 1e-8 * (1.0 + std::abs(pair.closed_form)))
        return false;
    }
  }
  return true;
}

bool povzner_p2_exact() {
  const AngularKernel kernel(0.5);
  return povzner_constants(2, kernel).a_p == 0.0;
}

bool transport_vs_enumeration(Rng& rng) {
  for (std::size_t k = 2; k <= 8; ++k) {
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<Vec3> a(k), b(k);
      for (auto& p : a) p = rand_vec(rng, 1.0);
      for (auto& p : b) p = rand_vec(rng, 1.0);
      const W2Result fast = w2_exact(a, b);
      const auto [brute_cost, brute_perm] = brute_assignment(a, b);
      if (fast.w2sq != brute_cost / static_cast<double>(k)) return false;
      for (std::size_t i = 0; i < k; ++i)
        if (fast.match[i] != brute_perm[i]) return false;
    }
  }
  return true;
}

bool matching_vs_enumeration(Rng& rng) {
  for (std::size_t n = 3; n <= 9; ++n) {
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<Vec3> u(n), ref(n - 1);
      for (auto& p : u) p = rand_vec(rng, 1.0);
      for (auto& p : ref) p = rand_vec(rng, 1.0);
      const std::int32_t excluded = static_cast<std::int32_t>(rng.uniform_index(n));
      Rng sub = rng.split(1000 + n);
      const MatchingTable table = build_matching(u, excluded, ref, sub);
      std::vector<Vec3> rows;
      for (std::size_t i = 0; i < n; ++i)
        if (static_cast<std::int32_t>(i) != excluded) rows.push_back(u[i]);
      const auto [brute_cost, brute_perm] = brute_assignment(rows, ref);
      if (table.total_cost != brute_cost) return false;
      std::size_t row = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<std::int32_t>(i) == excluded) continue;
        if (table.partner[i] != brute_perm[row]) return false;
        ++row;
      }
    }
  }
  return true;
}

bool pathwise_conservation() {
  Rng init(401);
  Ensemble ens = init_gaussian(64, init);
  const AngularKernel kernel(0.5);
  EventStream stream(64, kernel, 12.0, Rng(402));
  ens = run(std::move(ens), 50.0, stream);
  return energy_drift(ens) <= 1e-9 && momentum_drift(ens) <= 1e-9;
}

}  // namespace

int run_selftest(std::ostream& out) {
  Tally t{out};
  Rng rng(20260816);
  t.check(kernel_integrals(rng), "kernel-closed-forms-vs-quadrature");
  t.check(deflection_geometry(rng), "deflection-antisymmetry-bound-conservation");
  t.check(circle_transport(rng), "circle-transport-vs-512-point-assignment");
  t.check(azimuth_transport(rng), "azimuth-transport-pushforward");
  t.check(phi_average_cost(rng), "azimuth-averaged-cost-vs-quadrature");
  t.check(z_phi_average_cost(rng), "tail-averaged-cost-vs-quadrature");
  t.check(circle_moments(rng), "circle-moment-identity-vs-quadrature");
  t.check(povzner_p2_exact(), "quadratic-moment-functional-vanishes");
  t.check(transport_vs_enumeration(rng), "exact-transport-vs-enumeration");
  t.check(matching_vs_enumeration(rng), "matching-vs-enumeration");
  t.check(pathwise_conservation(), "pathwise-conservation");
  if (t.failures == 0)
    out << "selftest: all checks passed\n";
  else
    out << "selftest: " << t.failures << " check(s) FAILED\n";
  return t.failures;
}

}  // namespace kacsim
