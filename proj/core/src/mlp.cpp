#include "mecsim/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace mecsim {

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw std::invalid_argument("Mlp layer sizes must be >= 1");
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l]) * static_cast<std::size_t>(sizes_[l + 1]) +
             static_cast<std::size_t>(sizes_[l + 1]);
  }
  params_.assign(total, 0.0);
}

void Mlp::initialize(Rng& rng, double output_gain) {
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = static_cast<std::size_t>(sizes_[l]);
    const auto out = static_cast<std::size_t>(sizes_[l + 1]);
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    if (l + 1 == layers) bound *= output_gain;
    std::uniform_real_distribution<double> dist(-bound, bound);
    double* w = params_.data() + offsets_[l];
    for (std::size_t i = 0; i < in * out; ++i) w[i] = dist(rng);
    for (std::size_t i = 0; i < out; ++i) w[in * out + i] = 0.0;
  }
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Cache scratch;
  return forward(x, scratch);
}

std::vector<double> Mlp::forward(std::span<const double> x, Cache& cache) const {
  if (static_cast<int>(x.size()) != sizes_.front()) throw std::invalid_argument("Mlp::forward: input size mismatch");
  const std::size_t layers = sizes_.size() - 1;
  cache.inputs.resize(layers);
  std::vector<double> a(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = static_cast<std::size_t>(sizes_[l]);
    const auto out = static_cast<std::size_t>(sizes_[l + 1]);
    const double* w = params_.data() + offsets_[l];
    const double* b = w + in * out;
    std::vector<double> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * a[i];
      z[o] = l + 1 < layers ? std::tanh(acc) : acc;
    }
    cache.inputs[l] = std::move(a);
    a = std::move(z);
  }
  return a;
}

void Mlp::backward(const Cache& cache, std::span<const double> grad_output, std::span<double> grad) const {
  const std::size_t layers = sizes_.size() - 1;
  std::vector<double> delta(grad_output.begin(), grad_output.end());
  for (std::size_t l = layers; l-- > 0;) {
    const auto in = static_cast<std::size_t>(sizes_[l]);
    const auto out = static_cast<std::size_t>(sizes_[l + 1]);
    const double* w = params_.data() + offsets_[l];
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + in * out;
    const auto& a = cache.inputs[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * a[i];
      gb[o] += d;
    }
    if (l == 0) break;
    // a is the tanh output of layer l-1.
    std::vector<double> prev(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * d;
    }
    for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - a[i] * a[i];
    delta = std::move(prev);
  }
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (m.size() != params.size()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
  }
  ++steps;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    params[i] -= learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon);
  }
}

void clip_grad_norm(std::span<double> grad, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
}

}  // namespace mecsim
