#include "mecsim/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mecsim/errors.hpp"

namespace mecsim {

namespace {
constexpr double kSpeedOfLight = 3e8;
}

double dbm_per_hz_to_watt_per_hz(double dbm_per_hz) { return std::pow(10.0, (dbm_per_hz - 30.0) / 10.0); }

void validate(const ChannelParams& p) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ContractError(std::string("channel: ") + name + " must be > 0");
  };
  positive(p.antenna_gain, "antenna_gain");
  positive(p.carrier_hz, "carrier_hz");
  positive(p.path_loss_exp, "path_loss_exp");
  positive(p.total_bandwidth_hz, "total_bandwidth_hz");
  positive(p.noise_psd_w_per_hz, "noise_psd");
  positive(p.min_distance_m, "min_distance_m");
  if (p.max_distance_m < p.min_distance_m) throw ContractError("channel: max_distance_m < min_distance_m");
  if (p.distance_m.empty()) throw ContractError("channel: no devices");
  for (std::size_t m = 0; m < p.distance_m.size(); ++m) {
    const double d = p.distance_m[m];
    if (!(d >= p.min_distance_m && d <= p.max_distance_m)) {
      throw ContractError("channel: distance of device " + std::to_string(m) + " outside configured range");
    }
  }
}

std::vector<double> draw_distances(int num_devices, double min_m, double max_m, Rng& rng) {
  std::uniform_real_distribution<double> dist(min_m, max_m);
  std::vector<double> out(static_cast<std::size_t>(num_devices));
  for (auto& d : out) d = dist(rng);
  return out;
}

double mean_gain(const ChannelParams& p, int device) {
  const double d = p.distance_m.at(static_cast<std::size_t>(device));
  const double base = p.antenna_gain * kSpeedOfLight / (4.0 * std::numbers::pi * p.carrier_hz * d);
  return std::pow(base, p.path_loss_exp);
}

double sample_gain(const ChannelParams& p, int device, Rng& rng) {
  std::exponential_distribution<double> beta(1.0);
  double b = beta(rng);
  // Exp(1) has support (0, inf); guard the measure-zero draw.
  while (!(b > 0.0)) b = beta(rng);
  return b * mean_gain(p, device);
}

double uplink_rate(double power_w, double gain, double bandwidth_hz, double noise_psd) {
  if (power_w <= 0.0) return 0.0;
  return bandwidth_hz * std::log1p(power_w * gain / (bandwidth_hz * noise_psd)) / std::numbers::ln2;
}

double power_for_rate(double rate_bps, double gain, double bandwidth_hz, double noise_psd) {
  if (rate_bps <= 0.0) return 0.0;
  return std::expm1(rate_bps / bandwidth_hz * std::numbers::ln2) * bandwidth_hz * noise_psd / gain;
}

}  // namespace mecsim
