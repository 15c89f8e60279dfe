#include "kacsim/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kacsim/assignment.hpp"
#include "kacsim/circle.hpp"
#include "kacsim/errors.hpp"

namespace kacsim {

ReferenceFlow ReferenceFlow::stationary_gaussian(std::size_t m, Rng rng) {
  if (m < 1) throw ConfigError("reference flow: need at least one atom");
  ReferenceFlow flow;
  flow.mode_ = Mode::kGaussian;
  flow.m_ = m;
  flow.rng_ = rng;
  flow.sync(0.0);
  return flow;
}

ReferenceFlow ReferenceFlow::self_consistent(Ensemble aux0, const AngularKernel& kernel,
                                             double cutoff, Rng stream_rng) {
  ReferenceFlow flow;
  flow.mode_ = Mode::kSelfConsistent;
  flow.m_ = aux0.n();
  flow.t_ = aux0.t;
  flow.aux_stream_.emplace(aux0.n(), kernel, cutoff, stream_rng);
  flow.aux_ = std::move(aux0);
  flow.atoms_ = flow.aux_->v;
  return flow;
}

void ReferenceFlow::sync(double t) {
  if (t < t_) throw ConfigError("reference flow: cannot rewind");
  if (mode_ == Mode::kGaussian) {
    const double sigma = 1.0 / std::sqrt(3.0);
    atoms_.resize(m_);
    for (auto& a : atoms_) a = rng_.gauss3(sigma);
    t_ = t;
    return;
  }
  if (t > aux_->t) *aux_ = run(std::move(*aux_), t, *aux_stream_, {});
  atoms_ = aux_->v;
  t_ = t;
}

MatchingTable build_matching(const std::vector<Vec3>& u, std::int32_t excluded,
                             const std::vector<Vec3>& reference, Rng& rng,
                             std::uint64_t built_at) {
  const auto n = static_cast<std::int32_t>(u.size());
  if (n < 2) throw ConfigError("matching: need at least two coordinates");
  if (excluded < -1 || excluded >= n) throw ConfigError("matching: excluded index out of range");
  const std::size_t need = excluded >= 0 ? u.size() - 1 : u.size();
  if (reference.size() < need)
    throw ConfigError("matching: reference ensemble smaller than the required count");

  MatchingTable table;
  table.excluded = excluded;
  table.built_at = built_at;
  if (reference.size() == need) {
    table.atoms = reference;
  } else {
    std::vector<std::uint32_t> idx(reference.size());
    std::iota(idx.begin(), idx.end(), 0u);
    for (std::size_t l = 0; l < need; ++l)
      std::swap(idx[l], idx[l + rng.uniform_index(idx.size() - l)]);
    table.atoms.reserve(need);
    for (std::size_t l = 0; l < need; ++l) table.atoms.push_back(reference[idx[l]]);
  }

  std::vector<std::int32_t> rows;
  rows.reserve(need);
  for (std::int32_t m = 0; m < n; ++m)
    if (m != excluded) rows.push_back(m);
  const auto sol = solve_assignment(
      need, [&](std::size_t r, std::size_t c) { return dist2(u[rows[r]], table.atoms[c]); });
  table.partner.assign(u.size(), -1);
  double total = 0.0;
  for (std::size_t r = 0; r < need; ++r) {
    table.partner[rows[r]] = sol.col_of_row[r];
    total += dist2(u[rows[r]], table.atoms[sol.col_of_row[r]]);
  }
  table.total_cost = total;
  return table;
}

Vec3 pi_sample(const MatchingTable& table, std::int32_t i, std::int32_t j) {
  if (i == j) throw ConfigError("pi_sample: coinciding indices");
  if (table.excluded != -1 && table.excluded != i)
    throw ConfigError("pi_sample: table was built for a different excluded index");
  if (j < 0 || static_cast<std::size_t>(j) >= table.partner.size() || table.partner[j] < 0)
    throw ConfigError("pi_sample: no partner for this index");
  return table.atoms[table.partner[j]];
}

MatchingPolicy default_matching_policy(std::size_t n) {
  if (n <= 256) return MatchingPolicy{1, false};
  return MatchingPolicy{n, true};
}

namespace {

double recouple(const Vec3& ref_diff, const Vec3& own_diff, double phi) {
  const Vec3 zero{};
  if (ref_diff == zero || own_diff == zero) return phi;
  return varphi(ref_diff, own_diff, phi);
}

// staleness-tracked matching tables over one run; the flow is synced at most
// once per event, right before the first rebuild that event triggers
class TableBank {
 public:
  TableBank(const MatchingPolicy& policy, ReferenceFlow& flow, Rng rng)
      : policy_(policy), flow_(&flow), rng_(rng) {
    if (policy.refresh_every < 1) throw ConfigError("matching policy: refresh must be >= 1");
  }

  void begin_event() { ++counter_; }

  const MatchingTable& get(const std::vector<Vec3>& u, std::int32_t excluded, double t_now) {
    if (per_index_.empty()) per_index_.resize(u.size() + 1);
    auto& slot = policy_.shared_table ? per_index_[u.size()] : per_index_[excluded];
    if (!slot || counter_ - slot->built_at >= policy_.refresh_every) {
      if (last_sync_ != counter_) {
        flow_->sync(t_now);
        last_sync_ = counter_;
      }
      slot = build_matching(u, policy_.shared_table ? -1 : excluded, flow_->atoms(), rng_,
                            counter_);
    }
    return *slot;
  }

 private:
  MatchingPolicy policy_;
  ReferenceFlow* flow_;
  Rng rng_;
  std::vector<std::optional<MatchingTable>> per_index_;
  std::uint64_t counter_ = 0;
  std::uint64_t last_sync_ = std::numeric_limits<std::uint64_t>::max();
};

}  // namespace

void coupled_step(Ensemble& v, Ensemble& u, double cutoff_l, const CollisionEvent& ev,
                  const MatchingTable& table_i, const MatchingTable& table_j) {
  if (v.n() != u.n()) throw ConfigError("coupled step: ensemble sizes differ");
  const Vec3 vi = v.v[ev.i], vj = v.v[ev.j];
  apply_event(v, ev);
  if (ev.z <= cutoff_l) {
    const Vec3 pi_atom = pi_sample(table_i, ev.i, ev.j);
    const Vec3 pj_atom = pi_sample(table_j, ev.j, ev.i);
    const Vec3 ui = u.v[ev.i], uj = u.v[ev.j];
    u.v[ev.i] =
        ui + deflection(ui, pi_atom, ev.theta, recouple(vi - vj, ui - pi_atom, ev.phi));
    u.v[ev.j] =
        uj + deflection(uj, pj_atom, ev.theta, recouple(vj - vi, uj - pj_atom, ev.phi));
  }
  u.t = ev.t;
}

CoupledSeries run_coupled(const Ensemble& v0, const Ensemble& u0, double cutoff_l, double t_end,
                          EventStream& stream, ReferenceFlow& flow, Rng table_rng,
                          const MatchingPolicy& policy, std::vector<double> observe_at) {
  if (v0.n() != u0.n()) throw ConfigError("coupled run: ensemble sizes differ");
  if (cutoff_l > stream.cutoff())
    throw ConfigError("coupled run: nonlinear cutoff exceeds the event cutoff");
  if (t_end < v0.t) throw ConfigError("coupled run: t_end precedes the ensemble clock");

  CoupledSeries res;
  res.v = v0;
  res.u = u0;
  TableBank bank(policy, flow, table_rng);
  std::size_t next_obs = 0;
  const auto observe_up_to = [&](double horizon) {
    while (next_obs < observe_at.size() && observe_at[next_obs] <= horizon) {
      res.obs_t.push_back(observe_at[next_obs]);
      res.obs_dist2.push_back(ensemble_dist2(res.v, res.u));
      ++next_obs;
    }
  };

  while (auto ev = stream.next_before(t_end)) {
    observe_up_to(ev->t);
    bank.begin_event();
    const auto& ti = bank.get(res.u.v, ev->i, ev->t);
    const auto& tj = bank.get(res.u.v, ev->j, ev->t);
    coupled_step(res.v, res.u, cutoff_l, *ev, ti, tj);
  }
  observe_up_to(t_end);
  res.v.t = t_end;
  res.u.t = t_end;
  return res;
}

DecoupledSeries run_decoupled(const Ensemble& u0, double t_end, EventStream& stream,
                              const AngularKernel& kernel, ReferenceFlow& flow, Rng table_rng,
                              Rng aux_rng, const std::vector<int>& k_values,
                              const MatchingPolicy& policy, std::vector<double> observe_at) {
  const auto n = static_cast<int>(u0.n());
  if (n < 2) throw ConfigError("decoupled run: need at least two particles");
  if (k_values.empty()) throw ConfigError("decoupled run: no tagged counts requested");
  for (int k : k_values)
    if (k < 1 || k > n) throw ConfigError("decoupled run: tagged count out of range");
  if (t_end < u0.t) throw ConfigError("decoupled run: t_end precedes the ensemble clock");

  const double cutoff = stream.cutoff();
  struct Family {
    int k;
    std::vector<Vec3> tilde;
    double rate;
    Rng rng;
    double next_aux;
  };
  std::vector<Family> families;
  families.reserve(k_values.size());
  const double inf = std::numeric_limits<double>::infinity();
  for (int k : k_values) {
    Family fam{k,
               std::vector<Vec3>(u0.v.begin(), u0.v.begin() + k),
               cutoff * k * (k - 1) / (2.0 * (n - 1)),
               Rng(aux_rng.next_u64()),
               inf};
    if (fam.rate > 0.0) fam.next_aux = u0.t + fam.rng.exponential(fam.rate);
    families.push_back(std::move(fam));
  }

  DecoupledSeries res;
  res.k_values = k_values;
  res.u = u0;
  TableBank bank(policy, flow, table_rng);
  res.obs_dist2.resize(families.size());
  std::size_t next_obs = 0;
  const auto observe_up_to = [&](double horizon) {
    while (next_obs < observe_at.size() && observe_at[next_obs] <= horizon) {
      res.obs_t.push_back(observe_at[next_obs]);
      for (std::size_t f = 0; f < families.size(); ++f) {
        double d = 0.0;
        for (int m = 0; m < families[f].k; ++m) d += dist2(res.u.v[m], families[f].tilde[m]);
        res.obs_dist2[f].push_back(d / families[f].k);
      }
      ++next_obs;
    }
  };

  std::optional<CollisionEvent> pending;
  while (true) {
    if (!pending) pending = stream.next_before(t_end);
    std::size_t fa = families.size();
    double ta = inf;
    for (std::size_t f = 0; f < families.size(); ++f) {
      if (families[f].next_aux < ta) {
        ta = families[f].next_aux;
        fa = f;
      }
    }
    const double tm = pending ? pending->t : inf;
    if (ta <= t_end && ta < tm) {
      // compensating jump: a tagged copy collides alone, with a partner matched
      // to another tagged coordinate of the base system
      observe_up_to(ta);
      Family& fam = families[fa];
      const auto i = static_cast<std::int32_t>(fam.rng.uniform_index(fam.k));
      auto p = static_cast<std::int32_t>(fam.rng.uniform_index(fam.k - 1));
      if (p >= i) ++p;
      const double z = fam.rng.uniform(0.0, cutoff);
      const double phi = fam.rng.uniform(0.0, 2.0 * M_PI);
      const double theta = kernel.inverse_tail_mass(z);
      bank.begin_event();
      const auto& table = bank.get(res.u.v, i, ta);
      const Vec3 partner = pi_sample(table, i, p);
      const double phi_t = recouple(res.u.v[i] - partner, fam.tilde[i] - partner, phi);
      fam.tilde[i] += deflection(fam.tilde[i], partner, theta, phi_t);
      fam.next_aux = ta + fam.rng.exponential(fam.rate);
      continue;
    }
    if (!pending) break;
    observe_up_to(tm);
    const CollisionEvent ev = *pending;
    pending.reset();
    bank.begin_event();
    const auto& ti = bank.get(res.u.v, ev.i, ev.t);
    const auto& tj = bank.get(res.u.v, ev.j, ev.t);
    const Vec3 partner_i = pi_sample(ti, ev.i, ev.j);
    const Vec3 partner_j = pi_sample(tj, ev.j, ev.i);
    const Vec3 ui = res.u.v[ev.i], uj = res.u.v[ev.j];
    res.u.v[ev.i] = ui + deflection(ui, partner_i, ev.theta, ev.phi);
    res.u.v[ev.j] = uj + deflection(uj, partner_j, ev.theta, ev.phi);
    res.u.t = ev.t;
    for (Family& fam : families) {
      if (ev.i < fam.k) {
        const double phi_t = recouple(ui - partner_i, fam.tilde[ev.i] - partner_i, ev.phi);
        fam.tilde[ev.i] += deflection(fam.tilde[ev.i], partner_i, ev.theta, phi_t);
      }
      if (ev.j < fam.k && ev.i >= fam.k) {
        const double phi_t = recouple(uj - partner_j, fam.tilde[ev.j] - partner_j, ev.phi);
        fam.tilde[ev.j] += deflection(fam.tilde[ev.j], partner_j, ev.theta, phi_t);
      }
    }
  }
  observe_up_to(t_end);
  res.u.t = t_end;
  res.tilde.reserve(families.size());
  for (Family& fam : families) res.tilde.push_back(std::move(fam.tilde));
  return res;
}

}  // namespace kacsim
