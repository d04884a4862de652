#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mecsim/mlp.hpp"
#include "mecsim/rng.hpp"
#include "mecsim/slot_log.hpp"
#include "mecsim/topology.hpp"

namespace mecsim {

struct PpoConfig {
  double gamma = 0.99;
  double clip = 0.2;
  double learning_rate = 3e-4;
  int epochs = 10;
  int minibatch = 32;
  double energy_weight = 0.6;  // omega_1
  double queue_weight = 0.2;   // omega_2
  double queue_scale_cycles = 1e8;
  double queue_scale_bits = 1e6;
  bool standardize_advantages = true;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.0;
  std::vector<int> hidden = {128, 128};
};

/// Divisors turning raw period means into network inputs.
struct ObservationScales {
  double queue_cycles = 1e8;
  double queue_bits = 1e6;
  std::vector<double> total_cycles;  // per service, C rho
  std::vector<double> input_bits;    // per service, D
  double local_capacity_hz = 1.5e9;
  double edge_capacity_hz = 20e9;
  double p_max_w = 0.3;
  std::vector<double> reference_rate_bps;  // per device, rate at p_max under the mean gain
};

/// Period-averaged slot statistics forming the policy input.
struct PeriodObservation {
  // Per service.
  std::vector<double> backlog_local;
  std::vector<double> backlog_transmit;
  std::vector<double> backlog_edge;
  std::vector<double> local_cycles;
  std::vector<double> transfer_bits;
  std::vector<double> edge_cycles;
  std::vector<double> local_hz;
  std::vector<double> rate_bps;
  std::vector<double> edge_hz;
  // Per device.
  std::vector<double> power_w;
  std::vector<double> max_rate_bps;
  /// Normalized features: 9 per service followed by 2 per device.
  std::vector<double> features;
};

inline constexpr int kFeaturesPerService = 9;
inline constexpr int kFeaturesPerDevice = 2;
int observation_size(const Topology& topo);

/// Means over a window of exactly `period_slots` slot logs. Throws ContractError otherwise.
PeriodObservation build_state(std::span<const SlotLog> window, int period_slots, const Topology& topo,
                              const ObservationScales& scales);

/// Observation with empty queues, zero allocations and the given partition costs.
PeriodObservation initial_state(const Topology& topo, std::span<const PartitionCosts> costs,
                                const ObservationScales& scales);

/// -sum_m [w1 (mean E^l_m + mean E^t_m) + w2 Qbar_m], Qbar_m the scaled sum of
/// the device's mean backlogs.
double reward(std::span<const SlotLog> window, const Topology& topo, const PpoConfig& config);

struct PolicySpec {
  int observation_size = 0;
  std::vector<int> head_sizes;  // one categorical head per service

  int total_logits() const;
  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

/// Actor (one softmax head per service), target actor and critic with their optimizers.
struct ActorCritic {
  PolicySpec spec;
  Mlp actor;
  Mlp actor_old;
  Mlp critic;
  Adam actor_optimizer;
  Adam critic_optimizer;

  static ActorCritic create(const PolicySpec& spec, const std::vector<int>& hidden, double learning_rate,
                            std::uint64_t seed);
  double value(std::span<const double> features) const;
};

std::vector<double> log_softmax(std::span<const double> logits);

struct ActionSample {
  std::vector<int> action;  // index into each head
  double log_prob = 0.0;
};

/// Samples (or takes the argmax of) every head of the target actor. Throws NumericError on non-finite logits.
ActionSample act(const ActorCritic& ac, std::span<const double> features, Rng& rng, bool greedy);

/// Sum of head log-probabilities of `action` under `actor`.
double joint_log_prob(const Mlp& actor, const PolicySpec& spec, std::span<const double> features,
                      std::span<const int> action);

struct Transition {
  std::vector<double> state;
  std::vector<int> action;
  double reward = 0.0;
  std::vector<double> next_state;
  double old_log_prob = 0.0;
  bool episode_end = false;
};

/// r + gamma V(s') - V(s)
double advantage(double reward, double next_value, double value, double gamma);

/// R_t = r_t + gamma R_{t+1}, seeded with `bootstrap` after the last reward.
std::vector<double> discounted_returns(std::span<const double> rewards, double bootstrap, double gamma);

/// Returns per transition, restarting (and bootstrapping with the critic) at every episode end.
std::vector<double> critic_targets(const ActorCritic& ac, std::span<const Transition> replay, double gamma);

/// Mean-zero, unit-variance copy (returned unchanged when the spread is zero).
std::vector<double> standardize(std::span<const double> values);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Negated clipped surrogate (plus optional entropy bonus) over `indices`.
LossAndGrad actor_loss(const Mlp& actor, const PolicySpec& spec, std::span<const Transition> replay,
                       std::span<const std::size_t> indices, std::span<const double> advantages,
                       const PpoConfig& config);

/// Mean squared error between V(s) and `targets` over `indices`.
LossAndGrad critic_loss(const Mlp& critic, std::span<const Transition> replay, std::span<const std::size_t> indices,
                        std::span<const double> targets);

struct UpdateStats {
  double actor_loss_before = 0.0;
  double actor_loss_after = 0.0;
  double critic_loss_before = 0.0;
  double critic_loss_after = 0.0;
  std::vector<double> actor_loss_per_epoch;  // full-batch loss after each epoch
  int gradient_steps = 0;
};

/// Mini-batch Adam epochs on both networks, then actor_old <- actor.
/// Throws NumericError if a loss becomes non-finite.
UpdateStats update(ActorCritic& ac, std::span<const Transition> replay, const PpoConfig& config, Rng& rng);

}  // namespace mecsim
