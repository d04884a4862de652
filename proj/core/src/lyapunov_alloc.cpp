#include "mecsim/lyapunov_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mecsim/channel.hpp"
#include "mecsim/errors.hpp"

namespace mecsim {

namespace {

void require_nonnegative(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw ContractError(std::string(what) + "[" + std::to_string(i) + "] must be finite and >= 0");
    }
  }
}

void require_nonnegative(double value, const char* what) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw ContractError(std::string(what) + " must be finite and >= 0");
}

std::vector<double> caps_of(std::span<const double> backlog, double tau) {
  std::vector<double> caps(backlog.size());
  for (std::size_t i = 0; i < backlog.size(); ++i) caps[i] = backlog[i] / tau;
  return caps;
}

// sum_i value_i * x_i of the greedy fill.
double fill_value(std::span<const double> value, std::span<const double> cap, double budget) {
  const auto x = greedy_fill(value, cap, budget);
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) v += value[i] * x[i];
  return v;
}

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

std::vector<double> greedy_fill(std::span<const double> value, std::span<const double> cap, double budget) {
  std::vector<std::size_t> order(value.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] > value[b]; });
  std::vector<double> out(value.size(), 0.0);
  double left = std::max(budget, 0.0);
  for (std::size_t i : order) {
    if (left <= 0.0) break;
    const double give = std::min(cap[i], left);
    out[i] = give;
    left -= give;
  }
  return out;
}

double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double rel_tol) {
  if (!(hi > lo)) return lo;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double stop = rel_tol * (hi - lo);
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > stop) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double best = 0.5 * (a + b);
  double fbest = f(best);
  for (double x : {lo, hi}) {
    const double fx = f(x);
    if (fx <= fbest) {
      best = x;
      fbest = fx;
    }
  }
  return best;
}

double local_energy(double total_hz, double energy_coeff, double tau) {
  return tau * energy_coeff * total_hz * total_hz * total_hz;
}

double transmit_energy(double power_w, double tau) { return tau * power_w; }

std::vector<double> solve_local(std::span<const double> backlog, double capacity_hz, const PenaltyWeights& w,
                                double tau) {
  require_nonnegative(backlog, "local backlog");
  require_nonnegative(capacity_hz, "local capacity");
  const auto caps = caps_of(backlog, tau);
  const double hi = std::min(capacity_hz, sum(caps));
  if (!(hi > 0.0)) return std::vector<double>(backlog.size(), 0.0);
  const double cubic = w.local * tau * w.energy_coeff;
  auto reduced = [&](double total) {
    return -tau * fill_value(backlog, caps, total) + cubic * total * total * total;
  };
  const double total = golden_section_minimize(reduced, 0.0, hi);
  return greedy_fill(backlog, caps, total);
}

double local_objective(std::span<const double> backlog, std::span<const double> f, const PenaltyWeights& w,
                       double tau) {
  double lin = 0.0;
  for (std::size_t i = 0; i < backlog.size(); ++i) lin -= f[i] * tau * backlog[i];
  return lin + w.local * local_energy(sum(f), w.energy_coeff, tau);
}

TransmissionDecision solve_transmission(std::span<const double> backlog, double p_max, double gain,
                                        double bandwidth_hz, double noise_psd, const PenaltyWeights& w, double tau) {
  require_nonnegative(backlog, "transmit backlog");
  require_nonnegative(p_max, "p_max");
  require_nonnegative(gain, "gain");
  TransmissionDecision out;
  out.rate_bps.assign(backlog.size(), 0.0);
  const auto caps = caps_of(backlog, tau);
  const double demand = sum(caps);
  if (!(demand > 0.0) || !(p_max > 0.0) || !(gain > 0.0)) return out;

  // Power beyond what carries the whole demand buys nothing.
  const double hi = std::min(p_max, power_for_rate(demand, gain, bandwidth_hz, noise_psd));
  auto reduced = [&](double p) {
    const double budget = uplink_rate(p, gain, bandwidth_hz, noise_psd);
    return -tau * fill_value(backlog, caps, budget) + w.transmit * tau * p;
  };
  const double p_star = golden_section_minimize(reduced, 0.0, hi);
  out.rate_bps = greedy_fill(backlog, caps, uplink_rate(p_star, gain, bandwidth_hz, noise_psd));
  const double total = sum(out.rate_bps);
  out.power_w = std::min(p_star, power_for_rate(total, gain, bandwidth_hz, noise_psd));
  out.max_rate_bps = uplink_rate(out.power_w, gain, bandwidth_hz, noise_psd);
  return out;
}

double transmission_objective(std::span<const double> backlog, std::span<const double> r, double p,
                              const PenaltyWeights& w, double tau) {
  double lin = 0.0;
  for (std::size_t i = 0; i < backlog.size(); ++i) lin -= r[i] * tau * backlog[i];
  return lin + w.transmit * transmit_energy(p, tau);
}

std::vector<double> solve_edge(std::span<const double> backlog, double capacity_hz, double tau) {
  require_nonnegative(backlog, "edge backlog");
  require_nonnegative(capacity_hz, "edge capacity");
  return greedy_fill(backlog, caps_of(backlog, tau), capacity_hz);
}

double edge_objective(std::span<const double> backlog, std::span<const double> f, double tau) {
  double v = 0.0;
  for (std::size_t i = 0; i < backlog.size(); ++i) v -= f[i] * tau * backlog[i];
  return v;
}

std::optional<double> edge_kkt_multiplier(std::span<const double> backlog, double capacity_hz, double tau,
                                          std::span<const double> f, double rel_tol) {
  if (f.size() != backlog.size()) return std::nullopt;
  const double scale = std::max({1.0, capacity_hz, sum(caps_of(backlog, tau))});
  const double atol = rel_tol * scale;
  const double used = sum(f);
  if (used > capacity_hz + atol) return std::nullopt;

  // Marginal values tau * Q_i; partial allocations pin lambda, zero ones bound it
  // from below, full ones from above.
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  std::optional<double> pinned;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double cap = backlog[i] / tau;
    const double marginal = tau * backlog[i];
    if (f[i] < -atol || f[i] > cap + atol) return std::nullopt;
    const bool at_zero = f[i] <= atol;
    const bool at_cap = f[i] >= cap - atol;
    if (at_zero && at_cap) continue;  // Q_i = 0: any lambda >= 0 works
    if (at_zero) {
      lower = std::max(lower, marginal);
    } else if (at_cap) {
      upper = std::min(upper, marginal);
    } else {
      if (pinned && std::abs(*pinned - marginal) > rel_tol * std::max(1.0, marginal)) return std::nullopt;
      pinned = marginal;
    }
  }
  const double mtol = rel_tol * std::max(1.0, upper == std::numeric_limits<double>::infinity() ? lower : upper);
  double lambda = pinned ? *pinned : lower;
  if (lambda < lower - mtol || lambda > upper + mtol) return std::nullopt;
  // Complementary slackness on the capacity constraint.
  if (used < capacity_hz - atol && lambda > mtol) return std::nullopt;
  return lambda;
}

Allocation allocate_slot(const SystemState& state, std::span<const double> gains, const AllocatorParams& params) {
  const Topology& topo = state.topology;
  if (gains.size() != static_cast<std::size_t>(topo.num_devices())) {
    throw ContractError("allocate_slot: need one gain per device");
  }
  Allocation alloc = Allocation::zeros(topo);
  const auto n = state.services.size();
  std::vector<double> edge_backlog(n);
  for (std::size_t i = 0; i < n; ++i) edge_backlog[i] = state.services[i].edge.backlog();

  for (int m = 0; m < topo.num_devices(); ++m) {
    const auto first = static_cast<std::size_t>(topo.offset(m));
    const auto count = static_cast<std::size_t>(topo.services_on(m));
    std::vector<double> ql(count);
    std::vector<double> qt(count);
    for (std::size_t j = 0; j < count; ++j) {
      ql[j] = state.services[first + j].local.backlog();
      qt[j] = state.services[first + j].transmit.backlog();
    }
    const auto fl = solve_local(ql, params.local_capacity_hz, params.weights, params.tau);
    const auto tx = solve_transmission(qt, params.p_max_w, gains[static_cast<std::size_t>(m)], params.bandwidth_hz,
                                       params.noise_psd, params.weights, params.tau);
    for (std::size_t j = 0; j < count; ++j) {
      alloc.local_hz[first + j] = fl[j];
      alloc.rate_bps[first + j] = tx.rate_bps[j];
    }
    alloc.power_w[static_cast<std::size_t>(m)] = tx.power_w;
    alloc.max_rate_bps[static_cast<std::size_t>(m)] = tx.max_rate_bps;
  }
  alloc.edge_hz = solve_edge(edge_backlog, params.edge_capacity_hz, params.tau);
  return alloc;
}

void check_feasible(const SystemState& state, const Allocation& alloc, std::span<const double> gains,
                    const AllocatorParams& params) {
  const Topology& topo = state.topology;
  constexpr double kSlack = 1e-9;
  auto fail = [](const std::string& what) { throw ContractError("infeasible allocation: " + what); };
  double edge_total = 0.0;
  for (int m = 0; m < topo.num_devices(); ++m) {
    const auto mi = static_cast<std::size_t>(m);
    double fl = 0.0;
    double r = 0.0;
    for (int j = 0; j < topo.services_on(m); ++j) {
      const auto i = static_cast<std::size_t>(topo.flat(m, j));
      const auto& q = state.services[i];
      const std::string at = " at (" + std::to_string(m) + "," + std::to_string(j) + ")";
      if (alloc.local_hz[i] < 0.0 || alloc.local_hz[i] * params.tau > q.local.backlog() * (1 + kSlack) + kSlack) {
        fail("local rate exceeds backlog" + at);
      }
      if (alloc.rate_bps[i] < 0.0 || alloc.rate_bps[i] * params.tau > q.transmit.backlog() * (1 + kSlack) + kSlack) {
        fail("uplink rate exceeds backlog" + at);
      }
      if (alloc.edge_hz[i] < 0.0 || alloc.edge_hz[i] * params.tau > q.edge.backlog() * (1 + kSlack) + kSlack) {
        fail("edge rate exceeds backlog" + at);
      }
      fl += alloc.local_hz[i];
      r += alloc.rate_bps[i];
      edge_total += alloc.edge_hz[i];
    }
    if (fl > params.local_capacity_hz * (1 + kSlack)) fail("local capacity exceeded on device " + std::to_string(m));
    const double p = alloc.power_w[mi];
    if (p < 0.0 || p > params.p_max_w * (1 + kSlack)) fail("power limit exceeded on device " + std::to_string(m));
    const double rmax = uplink_rate(p, gains[mi], params.bandwidth_hz, params.noise_psd);
    if (r > rmax * (1 + kSlack) + kSlack) fail("uplink capacity exceeded on device " + std::to_string(m));
  }
  if (edge_total > params.edge_capacity_hz * (1 + kSlack)) fail("edge capacity exceeded");
}

namespace {

QueueDrift queue_drift(double backlog, double service, const StageFlow& flow, double a_max, double task_work,
                       double capacity) {
  QueueDrift q;
  q.backlog = backlog;
  q.service = service;
  q.admitted_work = flow.admitted_work;
  q.arrival_bound = a_max;
  q.task_work = task_work;
  if (flow.admitted > a_max) {
    q.arrival_bound = flow.admitted;
    q.widened = true;
  }
  if (flow.max_admitted_task_work > task_work) {
    q.task_work = flow.max_admitted_task_work;
    q.widened = true;
  }
  q.capacity = capacity;
  const double arrivals = q.arrival_bound * q.task_work;
  q.bound_constant = arrivals * arrivals + capacity * capacity;
  q.drift_bound = backlog * (q.admitted_work - service) + 0.5 * q.bound_constant;
  return q;
}

}  // namespace

DriftDiagnostics drift_penalty_bound(const SystemState& before, const Allocation& alloc, const SlotDepartures& flows,
                                     const ArrivalBounds& bounds, const AllocatorParams& params) {
  const Topology& topo = before.topology;
  const double tau = params.tau;
  DriftDiagnostics out;
  const auto n = before.services.size();
  out.local.reserve(n);
  out.transmit.reserve(n);
  out.edge.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& q = before.services[i];
    const auto& f = flows.services.at(i);
    const auto m = static_cast<std::size_t>(topo.device_of(static_cast<int>(i)));
    out.local.push_back(queue_drift(q.local.backlog(), alloc.local_hz[i] * tau, f.local, bounds.local,
                                    q.costs.local_cycles, params.local_capacity_hz * tau));
    out.transmit.push_back(queue_drift(q.transmit.backlog(), alloc.rate_bps[i] * tau, f.transmit, bounds.transmit,
                                       q.costs.transfer_bits, alloc.max_rate_bps[m] * tau));
    out.edge.push_back(queue_drift(q.edge.backlog(), alloc.edge_hz[i] * tau, f.edge, bounds.edge,
                                   q.costs.edge_cycles, params.edge_capacity_hz * tau));
  }
  out.local_energy.assign(static_cast<std::size_t>(topo.num_devices()), 0.0);
  out.transmit_energy.assign(static_cast<std::size_t>(topo.num_devices()), 0.0);
  for (int m = 0; m < topo.num_devices(); ++m) {
    const auto mi = static_cast<std::size_t>(m);
    double fl = 0.0;
    for (int j = 0; j < topo.services_on(m); ++j) fl += alloc.local_hz[static_cast<std::size_t>(topo.flat(m, j))];
    out.local_energy[mi] = local_energy(fl, params.weights.energy_coeff, tau);
    out.transmit_energy[mi] = transmit_energy(alloc.power_w[mi], tau);
    out.weighted_penalty +=
        params.weights.local * out.local_energy[mi] + params.weights.transmit * out.transmit_energy[mi];
  }
  for (const auto* stage : {&out.local, &out.transmit, &out.edge}) {
    for (const auto& q : *stage) out.drift_bound_total += q.drift_bound;
  }
  out.drift_plus_penalty_bound = out.drift_bound_total + out.weighted_penalty;
  return out;
}

}  // namespace mecsim
