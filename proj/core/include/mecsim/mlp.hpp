#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mecsim/rng.hpp"

namespace mecsim {

/// Fully connected network with tanh hidden layers and a linear output.
/// Parameters live in one flat vector: for each layer, the row-major
/// (out x in) weight matrix followed by the bias.
class Mlp {
 public:
  /// Activations saved by forward() for backward().
  struct Cache {
    std::vector<std::vector<double>> inputs;  // input of every layer
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> layer_sizes);

  /// Uniform fan-in initialization; the output layer is scaled by `output_gain`.
  void initialize(Rng& rng, double output_gain = 1.0);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::vector<double> forward(std::span<const double> x) const;
  std::vector<double> forward(std::span<const double> x, Cache& cache) const;

  /// Adds d(loss)/d(params) to `grad` given d(loss)/d(output).
  void backward(const Cache& cache, std::span<const double> grad_output, std::span<double> grad) const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::vector<int> sizes_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;  // start of each layer's weights
};

/// Adam with bias correction.
struct Adam {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t steps = 0;

  void step(std::span<double> params, std::span<const double> grad);
};

/// Rescales `grad` in place so its L2 norm is at most `max_norm` (no-op if max_norm <= 0).
void clip_grad_norm(std::span<double> grad, double max_norm);

}  // namespace mecsim
