#pragma once

#include <vector>

#include "mecsim/rng.hpp"

namespace mecsim {

/// Converts a noise density in dBm/Hz to W/Hz.
double dbm_per_hz_to_watt_per_hz(double dbm_per_hz);

struct ChannelParams {
  double antenna_gain = 3.0;
  double carrier_hz = 915e6;
  double path_loss_exp = 3.0;
  double total_bandwidth_hz = 1e6;
  double noise_psd_w_per_hz = dbm_per_hz_to_watt_per_hz(-174.0);
  double min_distance_m = 150.0;
  double max_distance_m = 250.0;
  /// One entry per device.
  std::vector<double> distance_m;

  int num_devices() const { return static_cast<int>(distance_m.size()); }
  /// Equal split of the uplink band over the devices.
  double per_device_bandwidth_hz() const { return total_bandwidth_hz / static_cast<double>(distance_m.size()); }
};

/// Throws ContractError on non-positive parameters or out-of-range distances.
void validate(const ChannelParams& params);

/// Distances drawn uniformly in [min, max].
std::vector<double> draw_distances(int num_devices, double min_m, double max_m, Rng& rng);

/// Free-space style average gain (A_d * c / (4 pi f_c d))^{d_e}.
double mean_gain(const ChannelParams& params, int device);

/// Rayleigh block fading: mean gain scaled by an Exp(1) draw.
double sample_gain(const ChannelParams& params, int device, Rng& rng);

/// Shannon rate in bit/s for power `power_w` over `bandwidth_hz`.
double uplink_rate(double power_w, double gain, double bandwidth_hz, double noise_psd);

/// Inverse of uplink_rate in the power argument.
double power_for_rate(double rate_bps, double gain, double bandwidth_hz, double noise_psd);

}  // namespace mecsim
