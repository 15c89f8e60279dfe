#include "kacsim/kac.hpp"

#include <cmath>

#include "kacsim/circle.hpp"
#include "kacsim/errors.hpp"
#include "kacsim/wasserstein.hpp"

namespace kacsim {

namespace {

Ensemble seal(std::vector<Vec3> v) {
  Ensemble ens;
  ens.v = std::move(v);
  Vec3 m{};
  double e = 0.0;
  for (const auto& p : ens.v) {
    m += p;
    e += norm2(p);
  }
  const double inv_n = 1.0 / static_cast<double>(ens.v.size());
  ens.ledger_momentum = inv_n * m;
  ens.ledger_energy = inv_n * e;
  return ens;
}

}  // namespace

Vec3 mean_momentum(const Ensemble& ens) {
  Vec3 m{};
  for (const auto& p : ens.v) m += p;
  return (1.0 / static_cast<double>(ens.n())) * m;
}

double mean_energy(const Ensemble& ens) {
  double e = 0.0;
  for (const auto& p : ens.v) e += norm2(p);
  return e / static_cast<double>(ens.n());
}

double energy_drift(const Ensemble& ens) {
  return std::abs(mean_energy(ens) - ens.ledger_energy) / std::max(ens.ledger_energy, 1.0);
}

double momentum_drift(const Ensemble& ens) {
  const double scale = std::max(std::sqrt(ens.ledger_energy), 1.0);
  return norm(mean_momentum(ens) - ens.ledger_momentum) / scale;
}

void check_ledger(const Ensemble& ens, double tol) {
  if (energy_drift(ens) > tol) throw NumericalError("ensemble energy drifted past tolerance");
  if (momentum_drift(ens) > tol) throw NumericalError("ensemble momentum drifted past tolerance");
}

Ensemble init_gaussian(std::size_t n, Rng& rng) {
  if (n < 2) throw ConfigError("init: need at least two particles");
  const double sigma = 1.0 / std::sqrt(3.0);
  std::vector<Vec3> v(n);
  for (auto& p : v) p = rng.gauss3(sigma);
  return seal(std::move(v));
}

Ensemble init_explicit(std::vector<Vec3> v) {
  if (v.size() < 2) throw ConfigError("init: need at least two particles");
  return seal(std::move(v));
}

Ensemble init_sphere(std::size_t n, Rng& rng) {
  if (n < 2) throw ConfigError("init: need at least two particles");
  return seal(sample_boltzmann_sphere(n, rng));
}

Ensemble init_student(std::size_t n, int dof, Rng& rng) {
  if (n < 2) throw ConfigError("init: need at least two particles");
  if (dof < 5) throw ConfigError("init: student dof must be >= 5 for a finite fourth moment");
  const double scale = std::sqrt(static_cast<double>(dof - 2) / (3.0 * dof));
  std::vector<Vec3> v(n);
  for (auto& p : v) {
    double c[3];
    for (double& ci : c) {
      double chi2 = 0.0;
      for (int d = 0; d < dof; ++d) {
        const double g = rng.gauss();
        chi2 += g * g;
      }
      ci = scale * rng.gauss() / std::sqrt(chi2 / dof);
    }
    p = Vec3{c[0], c[1], c[2]};
  }
  return seal(std::move(v));
}

EventStream::EventStream(std::size_t n, const AngularKernel& kernel, double cutoff, Rng rng)
    : n_(n), kernel_(&kernel), cutoff_(cutoff), rate_(0.0), t_(0.0), rng_(rng) {
  if (n < 2) throw ConfigError("event stream: need at least two particles");
  if (!(cutoff > 0.0) || !std::isfinite(cutoff))
    throw ConfigError("event stream: cutoff must be finite and positive");
  rate_ = static_cast<double>(n) * cutoff / 2.0;
}

std::optional<CollisionEvent> EventStream::next_before(double t_end) {
  if (!pending_) {
    CollisionEvent ev;
    t_ += rng_.exponential(rate_);
    ev.t = t_;
    ev.i = static_cast<std::int32_t>(rng_.uniform_index(n_));
    ev.j = static_cast<std::int32_t>(rng_.uniform_index(n_ - 1));
    if (ev.j >= ev.i) ++ev.j;
    ev.z = rng_.uniform(0.0, cutoff_);
    ev.theta = kernel_->inverse_tail_mass(ev.z);
    ev.phi = rng_.uniform(0.0, 2.0 * M_PI);
    pending_ = ev;
  }
  if (pending_->t > t_end) return std::nullopt;
  auto out = *pending_;
  pending_.reset();
  return out;
}

void apply_event(Ensemble& ens, const CollisionEvent& ev) {
  const auto n = static_cast<std::int32_t>(ens.n());
  if (ev.i < 0 || ev.j < 0 || ev.i >= n || ev.j >= n || ev.i == ev.j)
    throw ConfigError("collision event: bad particle indices");
  if (ev.t < ens.t) throw ConfigError("collision event: time runs backwards");
  const auto [vi, vj] = post_collision(ens.v[ev.i], ens.v[ev.j], ev.theta, ev.phi);
  ens.v[ev.i] = vi;
  ens.v[ev.j] = vj;
  ens.t = ev.t;
}

namespace {

void rescale_to_ledger(Ensemble& ens) {
  const Vec3 m = mean_momentum(ens);
  double ec = 0.0;
  for (const auto& p : ens.v) ec += dist2(p, m);
  ec /= static_cast<double>(ens.n());
  const double target = ens.ledger_energy - norm2(ens.ledger_momentum);
  if (!(ec > 0.0) || !(target > 0.0)) return;
  const double s = std::sqrt(target / ec);
  for (auto& p : ens.v) p = ens.ledger_momentum + s * (p - m);
}

// fires every observation at time <= horizon, advancing the clock to each
void flush_observations(Ensemble& ens, double horizon, const RunOptions& opts,
                        std::size_t& next_obs) {
  while (next_obs < opts.observe_at.size() && opts.observe_at[next_obs] <= horizon) {
    ens.t = opts.observe_at[next_obs];
    if (opts.on_observe) opts.on_observe(ens);
    ++next_obs;
  }
}

}  // namespace

Ensemble run(Ensemble ens, double t_end, EventStream& stream, const RunOptions& opts) {
  if (t_end < ens.t) throw ConfigError("run: t_end precedes the ensemble clock");
  for (std::size_t k = 1; k < opts.observe_at.size(); ++k) {
    if (!(opts.observe_at[k] > opts.observe_at[k - 1]))
      throw ConfigError("run: observation times must be strictly increasing");
  }
  std::size_t next_obs = 0;
  std::uint64_t events = 0;
  while (auto ev = stream.next_before(t_end)) {
    flush_observations(ens, ev->t, opts, next_obs);
    apply_event(ens, *ev);
    if (opts.on_event) opts.on_event(ens, *ev);
    if (opts.rescale && ++events % 100000 == 0) rescale_to_ledger(ens);
  }
  flush_observations(ens, t_end, opts, next_obs);
  ens.t = t_end;
  return ens;
}

double ensemble_dist2(const Ensemble& a, const Ensemble& b) {
  if (a.n() != b.n() || a.n() == 0) throw ConfigError("ensemble_dist2: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.n(); ++i) d += dist2(a.v[i], b.v[i]);
  return d / static_cast<double>(a.n());
}

CoupledCutoffsResult run_coupled_cutoffs(const Ensemble& ens0, double k1, double k2, double t_end,
                                         EventStream& stream, std::vector<double> observe_at) {
  if (!(k1 > 0.0) || !(k2 > 0.0) || k1 > k2)
    throw ConfigError("coupled cutoffs: need 0 < k1 <= k2");
  if (stream.cutoff() != k2) throw ConfigError("coupled cutoffs: stream cutoff must equal k2");
  if (t_end < ens0.t) throw ConfigError("coupled cutoffs: t_end precedes the ensemble clock");

  CoupledCutoffsResult res;
  res.low = ens0;
  res.high = ens0;
  std::size_t next_obs = 0;
  const auto observe_up_to = [&](double horizon) {
    while (next_obs < observe_at.size() && observe_at[next_obs] <= horizon) {
      res.obs_t.push_back(observe_at[next_obs]);
      res.obs_dist2.push_back(ensemble_dist2(res.low, res.high));
      ++next_obs;
    }
  };

  while (auto ev = stream.next_before(t_end)) {
    observe_up_to(ev->t);
    if (ev->z <= k1) {
      // the low system mirrors the jump along the optimal transport between the
      // two post-collisional circles; a zero relative velocity on either side
      // makes that side's jump a no-op and the azimuth irrelevant
      const Vec3 vd_high = res.high.v[ev->i] - res.high.v[ev->j];
      const Vec3 vd_low = res.low.v[ev->i] - res.low.v[ev->j];
      CollisionEvent low_ev = *ev;
      const Vec3 zero{};
      if (!(vd_high == zero) && !(vd_low == zero))
        low_ev.phi = varphi(vd_high, vd_low, ev->phi);
      apply_event(res.low, low_ev);
    } else {
      res.low.t = ev->t;
    }
    apply_event(res.high, *ev);
  }
  observe_up_to(t_end);
  res.low.t = t_end;
  res.high.t = t_end;
  return res;
}

}  // namespace kacsim
