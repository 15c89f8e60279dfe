#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "kacsim/errors.hpp"
#include "kacsim/geometry.hpp"
#include "kacsim/kac.hpp"
#include "kacsim/nonlinear.hpp"
#include "kacsim/rng.hpp"
#include "kacsim/stats.hpp"
#include "kacsim/vec3.hpp"
#include "support/oracles.hpp"

using namespace kacsim;
using testsupport::brute_force_assignment;

namespace {

double gauss_cdf_third_var(double x) { return 0.5 * std::erfc(-x * std::sqrt(3.0 / 2.0)); }

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] <= b[ib])
      ++ia;
    else
      ++ib;
    const double fa = static_cast<double>(ia) / static_cast<double>(a.size());
    const double fb = static_cast<double>(ib) / static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

double ks_two_sample_critical(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c * std::sqrt(static_cast<double>(n + m) / static_cast<double>(n * m));
}

std::vector<Vec3> drop_index(const std::vector<Vec3>& u, std::int32_t excluded) {
  std::vector<Vec3> out;
  for (std::int32_t m = 0; m < static_cast<std::int32_t>(u.size()); ++m)
    if (m != excluded) out.push_back(u[m]);
  return out;
}

}  // namespace

TEST_CASE("build_matching reproduces the two-atom worked example") {
  const std::vector<Vec3> u = {Vec3{0, 0, 0}, Vec3{10, 0, 0}, Vec3{55, 55, 55}};
  const std::vector<Vec3> reference = {Vec3{9, 0, 0}, Vec3{1, 0, 0}};
  Rng rng(1);
  const auto table = build_matching(u, 2, reference, rng);
  CHECK(table.excluded == 2);
  CHECK(table.total_cost == doctest::Approx(2.0).epsilon(1e-12));  // crossed pairing costs 162
  CHECK(pi_sample(table, 2, 0) == Vec3{1, 0, 0});
  CHECK(pi_sample(table, 2, 1) == Vec3{9, 0, 0});
  CHECK(table.partner[2] == -1);
}

TEST_CASE("identical multisets match identically with zero cost") {
  Rng rng(2);
  std::vector<Vec3> u;
  for (int i = 0; i < 9; ++i) u.push_back(rng.gauss3(1.0));
  Rng table_rng(3);
  const auto table = build_matching(u, -1, u, table_rng);
  CHECK(table.total_cost == 0.0);
  for (std::int32_t j = 0; j < 9; ++j) {
    if (j == 4) continue;
    CHECK(pi_sample(table, 4, j) == u[j]);
  }
}

TEST_CASE("matching cost equals the exhaustive assignment optimum") {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_index(7));  // matched block size <= 8
    std::vector<Vec3> u, reference;
    for (int i = 0; i < n; ++i) u.push_back(rng.gauss3(1.0));
    for (int i = 0; i < n - 1; ++i) reference.push_back(rng.gauss3(1.0));
    const auto excluded = static_cast<std::int32_t>(rng.uniform_index(n));
    Rng table_rng(100 + trial);
    const auto table = build_matching(u, excluded, reference, table_rng);
    const auto brute = brute_force_assignment(drop_index(u, excluded), reference);
    CHECK(table.total_cost / (n - 1) == doctest::Approx(brute.cost).epsilon(1e-12));
  }
}

TEST_CASE("a shared full-ensemble matching restricts to a per-index optimum") {
  Rng rng(5);
  const int n = 7;
  std::vector<Vec3> u, reference;
  for (int i = 0; i < n; ++i) u.push_back(rng.gauss3(1.0));
  for (int i = 0; i < n; ++i) reference.push_back(rng.gauss3(1.0));
  Rng table_rng(6);
  const auto table = build_matching(u, -1, reference, table_rng);
  for (std::int32_t i = 0; i < n; ++i) {
    std::vector<Vec3> sub_ref;
    double restricted = 0.0;
    for (std::int32_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sub_ref.push_back(table.atoms[table.partner[j]]);
      restricted += dist2(u[j], table.atoms[table.partner[j]]);
    }
    const auto brute = brute_force_assignment(drop_index(u, i), sub_ref);
    CHECK(restricted / (n - 1) == doctest::Approx(brute.cost).epsilon(1e-12));
  }
}

TEST_CASE("oversized references are subsampled without replacement, deterministically") {
  Rng rng(7);
  std::vector<Vec3> u, reference;
  for (int i = 0; i < 6; ++i) u.push_back(rng.gauss3(1.0));
  for (int i = 0; i < 12; ++i) reference.push_back(rng.gauss3(1.0));
  Rng ra(11), rb(11), rc(12);
  const auto ta = build_matching(u, 3, reference, ra);
  const auto tb = build_matching(u, 3, reference, rb);
  const auto tc = build_matching(u, 3, reference, rc);
  REQUIRE(ta.atoms.size() == 5);
  for (const auto& a : ta.atoms)
    CHECK(std::count(reference.begin(), reference.end(), a) == 1);
  for (std::size_t l = 0; l < ta.atoms.size(); ++l)
    CHECK(std::count(ta.atoms.begin(), ta.atoms.end(), ta.atoms[l]) == 1);
  CHECK(ta.atoms == tb.atoms);
  CHECK(ta.partner == tb.partner);
  CHECK(ta.total_cost == tb.total_cost);
  CHECK(tc.atoms != ta.atoms);
}

TEST_CASE("pi_sample outputs are uniform over the matched atoms") {
  Rng rng(8);
  std::vector<Vec3> u, reference;
  for (int i = 0; i < 8; ++i) u.push_back(rng.gauss3(1.0));
  for (int i = 0; i < 7; ++i) reference.push_back(rng.gauss3(1.0));
  Rng table_rng(9);
  const auto table = build_matching(u, 0, reference, table_rng);
  std::vector<double> observed(7, 0.0);
  const int draws = 100000;
  for (int d = 0; d < draws; ++d) {
    const auto j = static_cast<std::int32_t>(1 + rng.uniform_index(7));
    const Vec3 atom = pi_sample(table, 0, j);
    const auto it = std::find(table.atoms.begin(), table.atoms.end(), atom);
    REQUIRE(it != table.atoms.end());
    observed[static_cast<std::size_t>(it - table.atoms.begin())] += 1.0;
  }
  const std::vector<double> expected(7, draws / 7.0);
  CHECK(chi2_statistic(observed, expected) < chi2_quantile(6.0, 0.99));
}

TEST_CASE("matching and sampling reject malformed inputs") {
  Rng rng(10);
  std::vector<Vec3> u = {Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{2, 0, 0}};
  const std::vector<Vec3> reference = {Vec3{0, 0, 1}, Vec3{0, 0, 2}};
  CHECK_THROWS_AS(build_matching({Vec3{0, 0, 0}}, -1, reference, rng), ConfigError);
  CHECK_THROWS_AS(build_matching(u, 3, reference, rng), ConfigError);
  CHECK_THROWS_AS(build_matching(u, -2, reference, rng), ConfigError);
  CHECK_THROWS_AS(build_matching(u, -1, reference, rng), ConfigError);  // needs 3 atoms
  const auto table = build_matching(u, 1, reference, rng);
  CHECK_THROWS_AS(pi_sample(table, 1, 1), ConfigError);   // coinciding indices
  CHECK_THROWS_AS(pi_sample(table, 0, 2), ConfigError);   // table excludes 1, not 0
  CHECK_THROWS_AS(pi_sample(table, 1, 1000), ConfigError);
  CHECK_THROWS_AS(pi_sample(table, 1, -1), ConfigError);
}

TEST_CASE("default matching policy switches to a shared table past 256 particles") {
  const auto small = default_matching_policy(256);
  CHECK(small.refresh_every == 1);
  CHECK_FALSE(small.shared_table);
  const auto large = default_matching_policy(257);
  CHECK(large.refresh_every == 257);
  CHECK(large.shared_table);
}

TEST_CASE("reference flow: gaussian mode redraws atoms, self-consistent mode evolves them") {
  auto gflow = ReferenceFlow::stationary_gaussian(7, Rng(21));
  CHECK(gflow.stationary());
  REQUIRE(gflow.atoms().size() == 7);
  const auto before = gflow.atoms();
  gflow.sync(0.0);
  CHECK(gflow.atoms() != before);
  CHECK_THROWS_AS(ReferenceFlow::stationary_gaussian(0, Rng(1)), ConfigError);

  const AngularKernel kernel(0.5);
  Rng init(22);
  auto sflow = ReferenceFlow::self_consistent(init_gaussian(10, init), kernel, 10.0, Rng(23));
  CHECK_FALSE(sflow.stationary());
  REQUIRE(sflow.atoms().size() == 10);
  const auto atoms0 = sflow.atoms();
  double e0 = 0.0, e1 = 0.0;
  for (const auto& a : atoms0) e0 += norm2(a);
  sflow.sync(0.5);
  CHECK(sflow.t() == 0.5);
  CHECK(sflow.atoms() != atoms0);
  for (const auto& a : sflow.atoms()) e1 += norm2(a);
  CHECK(e1 == doctest::Approx(e0).epsilon(1e-9));
  CHECK_THROWS_AS(sflow.sync(0.2), ConfigError);
}

TEST_CASE("coupled_step: events above the nonlinear cutoff leave the U side untouched") {
  const AngularKernel kernel(0.5);
  Rng init(31);
  Ensemble v = init_gaussian(6, init);
  Ensemble u = v;
  Rng table_rng(32);
  auto flow = ReferenceFlow::stationary_gaussian(5, Rng(33));
  const auto ti = build_matching(u.v, 0, flow.atoms(), table_rng);
  const auto tj = build_matching(u.v, 1, flow.atoms(), table_rng);
  const auto u_before = u.v;
  const auto v_before = v.v;

  CollisionEvent ev{0.1, 0, 1, 15.0, kernel.inverse_tail_mass(15.0), 1.0};
  coupled_step(v, u, 10.0, ev, ti, tj);
  CHECK(u.v == u_before);
  CHECK(u.t == 0.1);
  CHECK(v.v != v_before);

  CollisionEvent low{0.2, 0, 1, 5.0, kernel.inverse_tail_mass(5.0), 1.0};
  coupled_step(v, u, 10.0, low, ti, tj);
  CHECK(u.v != u_before);
}

TEST_CASE("self-coupling against the particle empirical law is bitwise exact") {
  const AngularKernel kernel(0.5);
  Rng init(41);
  Ensemble v = init_gaussian(16, init);
  Ensemble u = v;
  EventStream stream(16, kernel, 12.0, Rng(42));
  Rng table_rng(43);
  int events = 0;
  while (auto ev = stream.next_before(2.0)) {
    const auto table = build_matching(u.v, -1, v.v, table_rng);
    REQUIRE(table.total_cost == 0.0);
    coupled_step(v, u, 12.0, *ev, table, table);
    CHECK(ensemble_dist2(v, u) == 0.0);
    ++events;
  }
  CHECK(events > 100);
}

TEST_CASE("run_coupled: initial observation equals the initial coupling cost") {
  const AngularKernel kernel(0.5);
  Rng init_v(51), init_u(52);
  const Ensemble v0 = init_gaussian(12, init_v);
  const Ensemble u0 = init_gaussian(12, init_u);
  EventStream stream(12, kernel, 10.0, Rng(53));
  auto flow = ReferenceFlow::stationary_gaussian(11, Rng(54));
  const auto res = run_coupled(v0, u0, 10.0, 0.5, stream, flow, Rng(55),
                               default_matching_policy(12), {0.0, 0.25, 0.5});
  REQUIRE(res.obs_t.size() == 3);
  CHECK(res.obs_dist2[0] == ensemble_dist2(v0, u0));
  CHECK(res.v.t == 0.5);
  CHECK(res.u.t == 0.5);
  for (const double d : res.obs_dist2) CHECK(std::isfinite(d));
}

TEST_CASE("run_coupled rejects inconsistent configurations") {
  const AngularKernel kernel(0.5);
  Rng init(61);
  const Ensemble v0 = init_gaussian(8, init);
  Rng init2(62);
  const Ensemble u_small = init_gaussian(6, init2);
  EventStream stream(8, kernel, 10.0, Rng(63));
  auto flow = ReferenceFlow::stationary_gaussian(7, Rng(64));
  CHECK_THROWS_AS(run_coupled(v0, u_small, 10.0, 1.0, stream, flow, Rng(65),
                              default_matching_policy(8), {}),
                  ConfigError);
  CHECK_THROWS_AS(run_coupled(v0, v0, 12.0, 1.0, stream, flow, Rng(65),
                              default_matching_policy(8), {}),
                  ConfigError);
  CHECK_THROWS_AS(run_coupled(v0, v0, 10.0, 1.0, stream, flow, Rng(65),
                              MatchingPolicy{0, false}, {}),
                  ConfigError);
}

TEST_CASE("stationary flow keeps each U coordinate Gaussian(0, 1/3)") {
  const AngularKernel kernel(0.5);
  const int replicas = 10000;
  std::vector<double> x0;
  x0.reserve(replicas);
  for (int r = 0; r < replicas; ++r) {
    Rng init = make_stream(90, r, StreamRole::kInit);
    const Ensemble start = init_gaussian(8, init);
    EventStream stream(8, kernel, 10.0, make_stream(90, r, StreamRole::kEvents));
    auto flow = ReferenceFlow::stationary_gaussian(7, make_stream(90, r, StreamRole::kReference));
    auto res = run_coupled(start, start, 10.0, 1.0, stream, flow,
                           make_stream(90, r, StreamRole::kMatching),
                           default_matching_policy(8), {});
    x0.push_back(res.u.v[0].x);
  }
  const double d = ks_statistic(x0, gauss_cdf_third_var);
  CHECK(ks_pvalue(d, x0.size()) > 0.01);
}

TEST_CASE("coordinate pairs (V^i, U^i) are exchangeable across indices") {
  const AngularKernel kernel(0.5);
  std::vector<double> h0, h4;
  for (int r = 0; r < 2400; ++r) {
    Rng init = make_stream(91, r, StreamRole::kInit);
    const Ensemble start = init_gaussian(6, init);
    EventStream stream(6, kernel, 8.0, make_stream(91, r, StreamRole::kEvents));
    auto flow = ReferenceFlow::stationary_gaussian(5, make_stream(91, r, StreamRole::kReference));
    auto res = run_coupled(start, start, 8.0, 0.8, stream, flow,
                           make_stream(91, r, StreamRole::kMatching),
                           default_matching_policy(6), {});
    if (r % 2 == 0)
      h0.push_back(dist2(res.v.v[0], res.u.v[0]));
    else
      h4.push_back(dist2(res.v.v[4], res.u.v[4]));
  }
  const double d = ks_two_sample(h0, h4);
  CHECK(d < ks_two_sample_critical(h0.size(), h4.size(), 0.01));
}

TEST_CASE("run_decoupled: a single tagged copy reproduces its base coordinate bitwise") {
  const AngularKernel kernel(0.5);
  Rng init(71);
  const Ensemble u0 = init_gaussian(16, init);
  EventStream stream(16, kernel, 10.0, Rng(72));
  auto flow = ReferenceFlow::stationary_gaussian(15, Rng(73));
  const std::vector<double> obs = {0.1, 0.25, 0.5, 0.75, 1.0};
  const auto res = run_decoupled(u0, 1.0, stream, kernel, flow, Rng(74), Rng(75), {1},
                                 default_matching_policy(16), obs);
  REQUIRE(res.obs_t.size() == obs.size());
  for (const double d : res.obs_dist2[0]) CHECK(d == 0.0);
}

TEST_CASE("run_decoupled: tagging everything reroutes every pair event") {
  const AngularKernel kernel(0.5);
  Rng init(76);
  const Ensemble u0 = init_gaussian(8, init);
  EventStream stream(8, kernel, 6.0, Rng(77));
  auto flow = ReferenceFlow::stationary_gaussian(7, Rng(78));
  const auto res = run_decoupled(u0, 0.6, stream, kernel, flow, Rng(79), Rng(80), {8},
                                 default_matching_policy(8), {0.6});
  REQUIRE(res.obs_dist2[0].size() == 1);
  CHECK(res.obs_dist2[0][0] > 0.0);
}

TEST_CASE("run_decoupled: families in one call stay isolated and deterministic") {
  const AngularKernel kernel(0.5);
  Rng init(81);
  const Ensemble u0 = init_gaussian(16, init);
  const std::vector<double> obs = {0.25, 0.5, 0.75, 1.0};
  const auto once = [&]() {
    EventStream stream(16, kernel, 8.0, Rng(82));
    auto flow = ReferenceFlow::stationary_gaussian(15, Rng(83));
    return run_decoupled(u0, 1.0, stream, kernel, flow, Rng(84), Rng(85), {1, 16},
                         default_matching_policy(16), obs);
  };
  const auto a = once();
  const auto b = once();
  for (const double d : a.obs_dist2[0]) CHECK(d == 0.0);
  CHECK(a.obs_dist2[1].back() > 0.0);
  CHECK(a.obs_dist2[1] == b.obs_dist2[1]);
  CHECK(a.u.v == b.u.v);
}

TEST_CASE("decoupling distance grows with the tagged count") {
  const AngularKernel kernel(0.5);
  double mean4 = 0.0, mean32 = 0.0;
  const int reps = 30;
  for (int r = 0; r < reps; ++r) {
    Rng init = make_stream(92, r, StreamRole::kInit);
    const Ensemble u0 = init_gaussian(64, init);
    EventStream stream(64, kernel, 8.0, make_stream(92, r, StreamRole::kEvents));
    auto flow = ReferenceFlow::stationary_gaussian(63, make_stream(92, r, StreamRole::kReference));
    const auto res = run_decoupled(u0, 0.5, stream, kernel, flow,
                                   make_stream(92, r, StreamRole::kMatching),
                                   make_stream(92, r, StreamRole::kAux), {4, 32},
                                   default_matching_policy(64), {0.5});
    mean4 += res.obs_dist2[0][0];
    mean32 += res.obs_dist2[1][0];
  }
  mean4 /= reps;
  mean32 /= reps;
  CHECK(mean32 > 2.0 * mean4);  // linear-in-k law predicts a ratio near 8
}

TEST_CASE("decoupled copies are uncorrelated under bounded observables") {
  const AngularKernel kernel(0.5);
  const Vec3 w{1, 1, 1};
  const int replicas = 10000;
  std::vector<double> g1, g2;
  g1.reserve(replicas);
  g2.reserve(replicas);
  for (int r = 0; r < replicas; ++r) {
    Rng init = make_stream(93, r, StreamRole::kInit);
    const Ensemble u0 = init_gaussian(12, init);
    EventStream stream(12, kernel, 8.0, make_stream(93, r, StreamRole::kEvents));
    auto flow = ReferenceFlow::stationary_gaussian(11, make_stream(93, r, StreamRole::kReference));
    const auto res = run_decoupled(u0, 0.5, stream, kernel, flow,
                                   make_stream(93, r, StreamRole::kMatching),
                                   make_stream(93, r, StreamRole::kAux), {2},
                                   default_matching_policy(12), {});
    g1.push_back(std::cos(dot(res.tilde[0][0], w)));
    g2.push_back(std::cos(dot(res.tilde[0][1], w)));
  }
  const double m1 = mean(g1), m2 = mean(g2);
  double cov = 0.0, v1 = 0.0, v2 = 0.0;
  for (int r = 0; r < replicas; ++r) {
    cov += (g1[r] - m1) * (g2[r] - m2);
    v1 += (g1[r] - m1) * (g1[r] - m1);
    v2 += (g2[r] - m2) * (g2[r] - m2);
  }
  cov /= replicas - 1;
  v1 /= replicas - 1;
  v2 /= replicas - 1;
  const double se = std::sqrt(v1 * v2 / replicas);
  CHECK(std::abs(cov) < 3.0 * se);
}

TEST_CASE("run_decoupled validates the tagged counts") {
  const AngularKernel kernel(0.5);
  Rng init(86);
  const Ensemble u0 = init_gaussian(8, init);
  EventStream stream(8, kernel, 8.0, Rng(87));
  auto flow = ReferenceFlow::stationary_gaussian(7, Rng(88));
  CHECK_THROWS_AS(run_decoupled(u0, 1.0, stream, kernel, flow, Rng(1), Rng(2), {},
                                default_matching_policy(8), {}),
                  ConfigError);
  CHECK_THROWS_AS(run_decoupled(u0, 1.0, stream, kernel, flow, Rng(1), Rng(2), {0},
                                default_matching_policy(8), {}),
                  ConfigError);
  CHECK_THROWS_AS(run_decoupled(u0, 1.0, stream, kernel, flow, Rng(1), Rng(2), {9},
                                default_matching_policy(8), {}),
                  ConfigError);
}
