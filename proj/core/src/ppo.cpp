#include "mecsim/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "mecsim/errors.hpp"

namespace mecsim {

double SlotLog::total_energy() const {
  double e = 0.0;
  for (double v : local_energy) e += v;
  for (double v : transmit_energy) e += v;
  return e;
}

int observation_size(const Topology& topo) {
  return kFeaturesPerService * topo.num_services() + kFeaturesPerDevice * topo.num_devices();
}

namespace {

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

void fill_features(PeriodObservation& obs, const Topology& topo, const ObservationScales& sc) {
  const auto n = static_cast<std::size_t>(topo.num_services());
  const auto md = static_cast<std::size_t>(topo.num_devices());
  obs.features.clear();
  obs.features.reserve(static_cast<std::size_t>(observation_size(topo)));
  for (std::size_t i = 0; i < n; ++i) {
    const auto m = static_cast<std::size_t>(topo.device_of(static_cast<int>(i)));
    obs.features.push_back(safe_div(obs.backlog_local[i], sc.queue_cycles));
    obs.features.push_back(safe_div(obs.backlog_transmit[i], sc.queue_bits));
    obs.features.push_back(safe_div(obs.backlog_edge[i], sc.queue_cycles));
    obs.features.push_back(safe_div(obs.local_cycles[i], sc.total_cycles.at(i)));
    obs.features.push_back(safe_div(obs.transfer_bits[i], sc.input_bits.at(i)));
    obs.features.push_back(safe_div(obs.edge_cycles[i], sc.total_cycles.at(i)));
    obs.features.push_back(safe_div(obs.local_hz[i], sc.local_capacity_hz));
    obs.features.push_back(safe_div(obs.rate_bps[i], sc.reference_rate_bps.at(m)));
    obs.features.push_back(safe_div(obs.edge_hz[i], sc.edge_capacity_hz));
  }
  for (std::size_t m = 0; m < md; ++m) {
    obs.features.push_back(safe_div(obs.power_w[m], sc.p_max_w));
    obs.features.push_back(safe_div(obs.max_rate_bps[m], sc.reference_rate_bps.at(m)));
  }
}

void require_window(std::span<const SlotLog> window, int period_slots) {
  if (period_slots < 1 || window.size() != static_cast<std::size_t>(period_slots)) {
    throw ContractError("period window holds " + std::to_string(window.size()) + " slots, expected G=" +
                        std::to_string(period_slots));
  }
}

}  // namespace

PeriodObservation build_state(std::span<const SlotLog> window, int period_slots, const Topology& topo,
                              const ObservationScales& scales) {
  require_window(window, period_slots);
  const auto n = static_cast<std::size_t>(topo.num_services());
  const auto md = static_cast<std::size_t>(topo.num_devices());
  PeriodObservation obs;
  for (auto* v : {&obs.backlog_local, &obs.backlog_transmit, &obs.backlog_edge, &obs.local_cycles,
                  &obs.transfer_bits, &obs.edge_cycles, &obs.local_hz, &obs.rate_bps, &obs.edge_hz}) {
    v->assign(n, 0.0);
  }
  obs.power_w.assign(md, 0.0);
  obs.max_rate_bps.assign(md, 0.0);
  for (const SlotLog& s : window) {
    for (std::size_t i = 0; i < n; ++i) {
      obs.backlog_local[i] += s.backlog_local.at(i);
      obs.backlog_transmit[i] += s.backlog_transmit.at(i);
      obs.backlog_edge[i] += s.backlog_edge.at(i);
      obs.local_cycles[i] += s.costs.at(i).local_cycles;
      obs.transfer_bits[i] += s.costs.at(i).transfer_bits;
      obs.edge_cycles[i] += s.costs.at(i).edge_cycles;
      obs.local_hz[i] += s.allocation.local_hz.at(i);
      obs.rate_bps[i] += s.allocation.rate_bps.at(i);
      obs.edge_hz[i] += s.allocation.edge_hz.at(i);
    }
    for (std::size_t m = 0; m < md; ++m) {
      obs.power_w[m] += s.allocation.power_w.at(m);
      obs.max_rate_bps[m] += s.allocation.max_rate_bps.at(m);
    }
  }
  const double g = static_cast<double>(window.size());
  for (auto* v : {&obs.backlog_local, &obs.backlog_transmit, &obs.backlog_edge, &obs.local_cycles,
                  &obs.transfer_bits, &obs.edge_cycles, &obs.local_hz, &obs.rate_bps, &obs.edge_hz, &obs.power_w,
                  &obs.max_rate_bps}) {
    for (double& x : *v) x /= g;
  }
  fill_features(obs, topo, scales);
  return obs;
}

PeriodObservation initial_state(const Topology& topo, std::span<const PartitionCosts> costs,
                                const ObservationScales& scales) {
  const auto n = static_cast<std::size_t>(topo.num_services());
  const auto md = static_cast<std::size_t>(topo.num_devices());
  PeriodObservation obs;
  for (auto* v : {&obs.backlog_local, &obs.backlog_transmit, &obs.backlog_edge, &obs.local_hz, &obs.rate_bps,
                  &obs.edge_hz}) {
    v->assign(n, 0.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    obs.local_cycles.push_back(costs[i].local_cycles);
    obs.transfer_bits.push_back(costs[i].transfer_bits);
    obs.edge_cycles.push_back(costs[i].edge_cycles);
  }
  obs.power_w.assign(md, 0.0);
  obs.max_rate_bps.assign(md, 0.0);
  fill_features(obs, topo, scales);
  return obs;
}

double reward(std::span<const SlotLog> window, const Topology& topo, const PpoConfig& config) {
  if (window.empty()) throw ContractError("reward: empty window");
  const double g = static_cast<double>(window.size());
  double total = 0.0;
  for (int m = 0; m < topo.num_devices(); ++m) {
    const auto mi = static_cast<std::size_t>(m);
    double el = 0.0;
    double et = 0.0;
    double queues = 0.0;
    for (const SlotLog& s : window) {
      el += s.local_energy.at(mi);
      et += s.transmit_energy.at(mi);
      for (int j = 0; j < topo.services_on(m); ++j) {
        const auto i = static_cast<std::size_t>(topo.flat(m, j));
        queues += s.backlog_local.at(i) / config.queue_scale_cycles + s.backlog_transmit.at(i) / config.queue_scale_bits +
                  s.backlog_edge.at(i) / config.queue_scale_cycles;
      }
    }
    total += config.energy_weight * (el / g + et / g) + config.queue_weight * (queues / g);
  }
  return -total;
}

int PolicySpec::total_logits() const { return std::accumulate(head_sizes.begin(), head_sizes.end(), 0); }

ActorCritic ActorCritic::create(const PolicySpec& spec, const std::vector<int>& hidden, double learning_rate,
                                std::uint64_t seed) {
  if (spec.observation_size < 1 || spec.head_sizes.empty()) throw ContractError("ActorCritic: empty policy spec");
  for (int h : spec.head_sizes) {
    if (h < 1) throw ContractError("ActorCritic: every head needs at least one action");
  }
  std::vector<int> actor_sizes{spec.observation_size};
  actor_sizes.insert(actor_sizes.end(), hidden.begin(), hidden.end());
  actor_sizes.push_back(spec.total_logits());
  std::vector<int> critic_sizes{spec.observation_size};
  critic_sizes.insert(critic_sizes.end(), hidden.begin(), hidden.end());
  critic_sizes.push_back(1);

  ActorCritic ac;
  ac.spec = spec;
  ac.actor = Mlp(actor_sizes);
  ac.critic = Mlp(critic_sizes);
  Rng rng(mix_seed(seed));
  // Near-uniform initial policy.
  ac.actor.initialize(rng, 0.01);
  ac.critic.initialize(rng, 1.0);
  ac.actor_old = ac.actor;
  ac.actor_optimizer.learning_rate = learning_rate;
  ac.critic_optimizer.learning_rate = learning_rate;
  return ac;
}

double ActorCritic::value(std::span<const double> features) const { return critic.forward(features).front(); }

std::vector<double> log_softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - mx);
  const double lse = mx + std::log(s);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string(what) + ": non-finite value");
  }
}

}  // namespace

ActionSample act(const ActorCritic& ac, std::span<const double> features, Rng& rng, bool greedy) {
  require_finite(features, "act: state");
  const auto logits = ac.actor_old.forward(features);
  require_finite(logits, "act: logits");
  ActionSample out;
  std::size_t off = 0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int h : ac.spec.head_sizes) {
    const auto hs = static_cast<std::size_t>(h);
    const auto lsm = log_softmax(std::span<const double>(logits).subspan(off, hs));
    int choice = 0;
    if (greedy) {
      choice = static_cast<int>(std::max_element(lsm.begin(), lsm.end()) - lsm.begin());
    } else {
      const double u = unit(rng);
      double cdf = 0.0;
      choice = h - 1;
      for (std::size_t j = 0; j < hs; ++j) {
        cdf += std::exp(lsm[j]);
        if (u < cdf) {
          choice = static_cast<int>(j);
          break;
        }
      }
    }
    out.action.push_back(choice);
    out.log_prob += lsm[static_cast<std::size_t>(choice)];
    off += hs;
  }
  return out;
}

double joint_log_prob(const Mlp& actor, const PolicySpec& spec, std::span<const double> features,
                      std::span<const int> action) {
  const auto logits = actor.forward(features);
  double lp = 0.0;
  std::size_t off = 0;
  for (std::size_t h = 0; h < spec.head_sizes.size(); ++h) {
    const auto hs = static_cast<std::size_t>(spec.head_sizes[h]);
    const auto lsm = log_softmax(std::span<const double>(logits).subspan(off, hs));
    lp += lsm.at(static_cast<std::size_t>(action[h]));
    off += hs;
  }
  return lp;
}

double advantage(double reward, double next_value, double value, double gamma) {
  return reward + gamma * next_value - value;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double bootstrap, double gamma) {
  std::vector<double> out(rewards.size());
  double running = bootstrap;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    out[t] = running;
  }
  return out;
}

std::vector<double> critic_targets(const ActorCritic& ac, std::span<const Transition> replay, double gamma) {
  std::vector<double> out(replay.size());
  std::size_t start = 0;
  for (std::size_t t = 0; t < replay.size(); ++t) {
    if (replay[t].episode_end || t + 1 == replay.size()) {
      std::vector<double> rewards;
      for (std::size_t j = start; j <= t; ++j) rewards.push_back(replay[j].reward);
      const auto ret = discounted_returns(rewards, ac.value(replay[t].next_state), gamma);
      std::copy(ret.begin(), ret.end(), out.begin() + static_cast<std::ptrdiff_t>(start));
      start = t + 1;
    }
  }
  return out;
}

std::vector<double> standardize(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  if (values.size() < 2) return out;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  if (!(sd > 0.0)) return out;
  for (double& v : out) v = (v - mean) / sd;
  return out;
}

LossAndGrad actor_loss(const Mlp& actor, const PolicySpec& spec, std::span<const Transition> replay,
                       std::span<const std::size_t> indices, std::span<const double> advantages,
                       const PpoConfig& config) {
  LossAndGrad out;
  out.grad.assign(actor.num_params(), 0.0);
  if (indices.empty()) throw ContractError("actor_loss: empty batch");
  const double inv_b = 1.0 / static_cast<double>(indices.size());
  Mlp::Cache cache;
  std::vector<double> grad_logits(static_cast<std::size_t>(spec.total_logits()));
  for (std::size_t idx : indices) {
    const Transition& tr = replay[idx];
    const auto logits = actor.forward(tr.state, cache);
    std::vector<std::vector<double>> lsm;
    double logp = 0.0;
    double entropy = 0.0;
    std::size_t off = 0;
    for (std::size_t h = 0; h < spec.head_sizes.size(); ++h) {
      const auto hs = static_cast<std::size_t>(spec.head_sizes[h]);
      lsm.push_back(log_softmax(std::span<const double>(logits).subspan(off, hs)));
      logp += lsm.back().at(static_cast<std::size_t>(tr.action.at(h)));
      for (double l : lsm.back()) entropy -= std::exp(l) * l;
      off += hs;
    }
    const double a = advantages[idx];
    const double ratio = std::exp(logp - tr.old_log_prob);
    const double clipped = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
    const double surr1 = ratio * a;
    const double surr2 = clipped * a;
    const bool unclipped_branch = surr1 <= surr2;
    out.loss += -std::min(surr1, surr2) * inv_b - config.entropy_coef * entropy * inv_b;

    // d loss / d logp; zero when the clipped branch is active.
    const double dlogp = unclipped_branch ? -ratio * a * inv_b : 0.0;
    off = 0;
    for (std::size_t h = 0; h < spec.head_sizes.size(); ++h) {
      const auto hs = static_cast<std::size_t>(spec.head_sizes[h]);
      double head_entropy = 0.0;
      for (double l : lsm[h]) head_entropy -= std::exp(l) * l;
      for (std::size_t j = 0; j < hs; ++j) {
        const double p = std::exp(lsm[h][j]);
        const double onehot = static_cast<std::size_t>(tr.action[h]) == j ? 1.0 : 0.0;
        double g = dlogp * (onehot - p);
        g += config.entropy_coef * inv_b * p * (lsm[h][j] + head_entropy);
        grad_logits[off + j] = g;
      }
      off += hs;
    }
    actor.backward(cache, grad_logits, out.grad);
  }
  return out;
}

LossAndGrad critic_loss(const Mlp& critic, std::span<const Transition> replay, std::span<const std::size_t> indices,
                        std::span<const double> targets) {
  LossAndGrad out;
  out.grad.assign(critic.num_params(), 0.0);
  if (indices.empty()) throw ContractError("critic_loss: empty batch");
  const double inv_b = 1.0 / static_cast<double>(indices.size());
  Mlp::Cache cache;
  for (std::size_t idx : indices) {
    const double v = critic.forward(replay[idx].state, cache).front();
    const double err = v - targets[idx];
    out.loss += err * err * inv_b;
    const double g = 2.0 * err * inv_b;
    critic.backward(cache, std::span<const double>(&g, 1), out.grad);
  }
  return out;
}

namespace {

void require_finite_loss(double loss, const char* which, std::size_t epoch, std::span<const std::size_t> batch) {
  if (std::isfinite(loss)) return;
  std::ostringstream os;
  os << which << " loss became non-finite (" << loss << ") in epoch " << epoch << " on a batch of " << batch.size()
     << " transitions starting at index " << (batch.empty() ? 0 : batch.front());
  throw NumericError(os.str());
}

}  // namespace

UpdateStats update(ActorCritic& ac, std::span<const Transition> replay, const PpoConfig& config, Rng& rng) {
  if (replay.empty()) throw ContractError("update: replay buffer is empty");
  const std::size_t n = replay.size();
  std::vector<double> adv(n);
  for (std::size_t i = 0; i < n; ++i) {
    adv[i] = advantage(replay[i].reward, ac.value(replay[i].next_state), ac.value(replay[i].state), config.gamma);
  }
  if (config.standardize_advantages) adv = standardize(adv);
  const auto targets = critic_targets(ac, replay, config.gamma);

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  UpdateStats stats;
  stats.actor_loss_before = actor_loss(ac.actor, ac.spec, replay, all, adv, config).loss;
  stats.critic_loss_before = critic_loss(ac.critic, replay, all, targets).loss;

  const std::size_t mb = static_cast<std::size_t>(std::max(1, config.minibatch));
  std::vector<std::size_t> order = all;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::span<const std::size_t> batch(order.data() + start, std::min(mb, n - start));
      auto a = actor_loss(ac.actor, ac.spec, replay, batch, adv, config);
      require_finite_loss(a.loss, "actor", static_cast<std::size_t>(epoch), batch);
      clip_grad_norm(a.grad, config.max_grad_norm);
      ac.actor_optimizer.step(ac.actor.params(), a.grad);

      auto c = critic_loss(ac.critic, replay, batch, targets);
      require_finite_loss(c.loss, "critic", static_cast<std::size_t>(epoch), batch);
      clip_grad_norm(c.grad, config.max_grad_norm);
      ac.critic_optimizer.step(ac.critic.params(), c.grad);
      ++stats.gradient_steps;
    }
    stats.actor_loss_per_epoch.push_back(actor_loss(ac.actor, ac.spec, replay, all, adv, config).loss);
  }
  stats.actor_loss_after = actor_loss(ac.actor, ac.spec, replay, all, adv, config).loss;
  stats.critic_loss_after = critic_loss(ac.critic, replay, all, targets).loss;
  ac.actor_old = ac.actor;
  return stats;
}

}  // namespace mecsim
