#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mecsim {

/// Devices and the services each one hosts. Services are addressed by a flat
/// index ordered by (device, service).
class Topology {
 public:
  Topology() = default;
  explicit Topology(std::vector<int> services_per_device) : services_per_device_(std::move(services_per_device)) {
    offsets_.reserve(services_per_device_.size() + 1);
    offsets_.push_back(0);
    for (std::size_t m = 0; m < services_per_device_.size(); ++m) {
      if (services_per_device_[m] < 1) {
        throw std::invalid_argument("device " + std::to_string(m) + " must host at least one service");
      }
      offsets_.push_back(offsets_.back() + services_per_device_[m]);
      for (int n = 0; n < services_per_device_[m]; ++n) device_of_.push_back(static_cast<int>(m));
    }
  }

  static Topology uniform(int num_devices, int services_each) {
    return Topology(std::vector<int>(static_cast<std::size_t>(num_devices), services_each));
  }

  int num_devices() const { return static_cast<int>(services_per_device_.size()); }
  int num_services() const { return offsets_.empty() ? 0 : offsets_.back(); }
  int services_on(int device) const { return services_per_device_.at(static_cast<std::size_t>(device)); }
  /// Flat index of the first service on `device`.
  int offset(int device) const { return offsets_.at(static_cast<std::size_t>(device)); }
  int flat(int device, int service) const { return offset(device) + service; }
  int device_of(int flat_index) const { return device_of_.at(static_cast<std::size_t>(flat_index)); }
  const std::vector<int>& services_per_device() const { return services_per_device_; }

  friend bool operator==(const Topology& a, const Topology& b) {
    return a.services_per_device_ == b.services_per_device_;
  }

 private:
  std::vector<int> services_per_device_;
  std::vector<int> offsets_;
  std::vector<int> device_of_;
};

}  // namespace mecsim
