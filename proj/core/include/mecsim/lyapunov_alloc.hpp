#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mecsim/allocation.hpp"
#include "mecsim/queueing.hpp"

namespace mecsim {

/// Drift-plus-penalty weights. The energy penalty is U^l E^l + U^t E^t with
/// E^l = tau * delta * (sum f^l)^3 and E^t = tau * p.
struct PenaltyWeights {
  double local = 1e9;          // U^l
  double transmit = 1e6;       // U^t
  double energy_coeff = 1e-28;  // delta, W s^3
};

/// Interval tolerance of the golden-section search, relative to the initial bracket.
inline constexpr double kGoldenTolerance = 1e-9;

/// Budget split over `cap`-bounded demands in descending `value` order; ties
/// go to the lower index.
std::vector<double> greedy_fill(std::span<const double> value, std::span<const double> cap, double budget);

/// Minimizer of a convex function on [lo, hi]. The bracket ends are always
/// considered, so boundary optima are returned exactly.
double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                               double rel_tol = kGoldenTolerance);

double local_energy(double total_hz, double energy_coeff, double tau);
double transmit_energy(double power_w, double tau);

/// Local computing subproblem of one device:
/// min sum_n -f_n tau Q_n + U^l tau delta (sum_n f_n)^3, sum f <= F, 0 <= f_n <= Q_n / tau.
std::vector<double> solve_local(std::span<const double> backlog_cycles, double capacity_hz,
                                const PenaltyWeights& weights, double tau);
double local_objective(std::span<const double> backlog_cycles, std::span<const double> local_hz,
                       const PenaltyWeights& weights, double tau);

struct TransmissionDecision {
  std::vector<double> rate_bps;
  double power_w = 0.0;
  double max_rate_bps = 0.0;  // R(power_w)
};

/// Transmission subproblem of one device:
/// min sum_n -r_n tau Q_n + U^t tau p, 0 <= p <= p_max, sum r <= R(p), 0 <= r_n <= Q_n / tau.
/// The returned power is the smallest one carrying the allocated total rate.
TransmissionDecision solve_transmission(std::span<const double> backlog_bits, double p_max, double gain,
                                        double bandwidth_hz, double noise_psd, const PenaltyWeights& weights,
                                        double tau);
double transmission_objective(std::span<const double> backlog_bits, std::span<const double> rate_bps,
                              double power_w, const PenaltyWeights& weights, double tau);

/// Edge subproblem over all services: min sum -f_i tau Q_i, sum f <= F^e, 0 <= f_i <= Q_i / tau.
/// Demands are served fully in descending backlog order; the first one that
/// does not fit gets the remaining capacity.
std::vector<double> solve_edge(std::span<const double> backlog_cycles, double capacity_hz, double tau);
double edge_objective(std::span<const double> backlog_cycles, std::span<const double> edge_hz, double tau);

/// Recovers the capacity multiplier lambda* certifying that `edge_hz` satisfies
/// the KKT conditions of the edge subproblem; nullopt if no multiplier exists.
std::optional<double> edge_kkt_multiplier(std::span<const double> backlog_cycles, double capacity_hz, double tau,
                                          std::span<const double> edge_hz, double rel_tol = 1e-9);

struct AllocatorParams {
  double tau = 0.01;
  double local_capacity_hz = 1.5e9;  // F^l_m, same for every device
  double edge_capacity_hz = 20e9;    // F^e
  double p_max_w = 0.3;
  double bandwidth_hz = 2.5e5;  // per device
  double noise_psd = 3.98e-21;
  PenaltyWeights weights;
};

/// Solves the three subproblems against the current backlogs and gains.
Allocation allocate_slot(const SystemState& state, std::span<const double> gains, const AllocatorParams& params);

/// Throws ContractError if `alloc` breaks a capacity, power or backlog limit for `state`.
void check_feasible(const SystemState& state, const Allocation& alloc, std::span<const double> gains,
                    const AllocatorParams& params);

/// Per-queue pieces of the one-slot drift bound
/// V(t+1) - V(t) <= Q (A - s) + B / 2, with A the admitted work, s the allocated service,
/// B = (a_max w)^2 + (cap tau)^2.
struct QueueDrift {
  double backlog = 0.0;
  double service = 0.0;
  double admitted_work = 0.0;
  double arrival_bound = 0.0;  // a_max
  double task_work = 0.0;      // w
  double capacity = 0.0;       // cap * tau
  double bound_constant = 0.0;  // B
  double drift_bound = 0.0;
  /// a_max or w had to be raised to the realized admission (partition change or a burst).
  bool widened = false;
};

/// Truncation bounds on tasks admitted per slot.
struct ArrivalBounds {
  double local = 5;
  double transmit = 5;
  double edge = 5;
};

struct DriftDiagnostics {
  std::vector<QueueDrift> local;
  std::vector<QueueDrift> transmit;
  std::vector<QueueDrift> edge;
  std::vector<double> local_energy;     // per device, E^l
  std::vector<double> transmit_energy;  // per device, E^t
  double weighted_penalty = 0.0;        // sum U^l E^l + U^t E^t
  double drift_bound_total = 0.0;
  double drift_plus_penalty_bound = 0.0;
};

/// Evaluates the drift-plus-penalty bound of one slot. `before` is the state
/// the allocation was made against; `flows` is what step_queues returned.
DriftDiagnostics drift_penalty_bound(const SystemState& before, const Allocation& alloc, const SlotDepartures& flows,
                                     const ArrivalBounds& bounds, const AllocatorParams& params);

inline double lyapunov(double backlog) { return 0.5 * backlog * backlog; }

}  // namespace mecsim
