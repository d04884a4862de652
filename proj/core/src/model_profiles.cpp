#include "mecsim/model_profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "mecsim/errors.hpp"
#include "mecsim/rng.hpp"

namespace mecsim {

namespace {

using nlohmann::json;

std::string where(std::size_t index, const std::string& name) {
  std::ostringstream os;
  os << "profile[" << index << "]";
  if (!name.empty()) os << " '" << name << "'";
  return os.str();
}

// 1-based line of a byte offset.
std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

std::vector<double> number_array(const json& obj, const char* key, const std::string& ctx) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(ctx + ": missing key '" + key + "'");
  if (!it->is_array()) throw SchemaError(ctx + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(it->size());
  for (std::size_t i = 0; i < it->size(); ++i) {
    const auto& v = (*it)[i];
    if (!v.is_number()) {
      throw SchemaError(ctx + "." + key + "[" + std::to_string(i) + "]: expected a number");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

double number(const json& obj, const char* key, const std::string& ctx) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(ctx + ": missing key '" + key + "'");
  if (!it->is_number()) throw SchemaError(ctx + "." + key + ": expected a number");
  return it->get<double>();
}

}  // namespace

void validate_profile(const DnnProfile& p) {
  const std::string ctx = p.model_name.empty() ? std::string("profile") : "profile '" + p.model_name + "'";
  auto fail = [&](const std::string& what) { throw ValidationError(ctx + ": " + what); };

  if (!(p.total_macs > 0.0) || !std::isfinite(p.total_macs)) fail("total_macs must be > 0");
  if (!(p.input_bits > 0.0) || !std::isfinite(p.input_bits)) fail("input_bits must be > 0");
  const auto& c = p.compute_fraction;
  const auto& d = p.feature_ratio;
  if (c.size() < 2) fail("K must be >= 1 (compute_fraction needs at least 2 entries)");
  if (d.size() != c.size()) {
    fail("feature_ratio has " + std::to_string(d.size()) + " entries, compute_fraction has " +
         std::to_string(c.size()));
  }
  const std::size_t K = c.size() - 1;
  if (c.front() != 0.0) fail("c[0] must be 0");
  if (c.back() != 1.0) fail("c[K] must be 1 (K=" + std::to_string(K) + ")");
  for (std::size_t k = 0; k + 1 < c.size(); ++k) {
    if (!(c[k] < c[k + 1])) fail("c not strictly increasing at k=" + std::to_string(k + 1));
  }
  if (d.front() != 1.0) fail("d[0] must be 1");
  if (d.back() != 0.0) fail("d[K] must be 0 (K=" + std::to_string(K) + ")");
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (!(d[k] >= 0.0) || !std::isfinite(d[k])) fail("d must be finite and >= 0 at k=" + std::to_string(k));
  }
}

std::vector<DnnProfile> parse_profiles(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SchemaError("profile file: parse error at line " + std::to_string(line_of(text, e.byte)) +
                      ": " + e.what());
  }
  if (!doc.is_array()) throw SchemaError("profile file: top level must be an array of profiles");

  std::vector<DnnProfile> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& obj = doc[i];
    std::string ctx = where(i, "");
    if (!obj.is_object()) throw SchemaError(ctx + ": expected an object");
    DnnProfile p;
    const auto name = obj.find("model_name");
    if (name == obj.end() || !name->is_string()) throw SchemaError(ctx + ": missing string key 'model_name'");
    p.model_name = name->get<std::string>();
    ctx = where(i, p.model_name);
    for (const auto& [key, _] : obj.items()) {
      if (key != "model_name" && key != "total_macs" && key != "input_bits" && key != "compute_fraction" &&
          key != "feature_ratio") {
        throw SchemaError(ctx + ": unknown key '" + key + "'");
      }
    }
    p.total_macs = number(obj, "total_macs", ctx);
    p.input_bits = number(obj, "input_bits", ctx);
    p.compute_fraction = number_array(obj, "compute_fraction", ctx);
    p.feature_ratio = number_array(obj, "feature_ratio", ctx);
    validate_profile(p);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<DnnProfile> load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open profile file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_profiles(buf.str());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::string serialize_profiles(std::span<const DnnProfile> profiles) {
  json doc = json::array();
  for (const auto& p : profiles) {
    doc.push_back({{"model_name", p.model_name},
                   {"total_macs", p.total_macs},
                   {"input_bits", p.input_bits},
                   {"compute_fraction", p.compute_fraction},
                   {"feature_ratio", p.feature_ratio}});
  }
  return doc.dump(2) + "\n";
}

PartitionCosts partition_view(const DnnProfile& profile, int k, double rho) {
  const int K = profile.num_partition_layers();
  if (k < 0 || k > K) {
    throw std::out_of_range("partition index " + std::to_string(k) + " outside [0, " + std::to_string(K) +
                            "] for model '" + profile.model_name + "'");
  }
  const double c = profile.compute_fraction[static_cast<std::size_t>(k)];
  const double total_cycles = profile.total_macs * rho;
  return PartitionCosts{
      .local_cycles = c * total_cycles,
      .transfer_bits = profile.feature_ratio[static_cast<std::size_t>(k)] * profile.input_bits,
      .edge_cycles = (1.0 - c) * total_cycles,
  };
}

DnnProfile synth_profile(int num_layers, std::uint64_t seed) {
  if (num_layers < 1) throw ContractError("synth_profile: num_layers must be >= 1");
  Rng rng(mix_seed(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto K = static_cast<std::size_t>(num_layers);

  DnnProfile p;
  p.model_name = "synth-K" + std::to_string(num_layers) + "-s" + std::to_string(seed);
  // Same workload regime as the shipped example models.
  p.total_macs = 1.0e8 + 1.5e8 * unit(rng);
  p.input_bits = 3.0e4 + 2.0e4 * unit(rng);

  std::vector<double> weight(K);
  for (auto& w : weight) w = 0.2 + unit(rng);
  double total = 0.0;
  for (double w : weight) total += w;
  p.compute_fraction.assign(K + 1, 0.0);
  double acc = 0.0;
  for (std::size_t k = 1; k < K; ++k) {
    acc += weight[k - 1];
    p.compute_fraction[k] = acc / total;
  }
  p.compute_fraction[K] = 1.0;

  // Early layers may widen the feature map; deep layers shrink it.
  p.feature_ratio.assign(K + 1, 0.0);
  p.feature_ratio[0] = 1.0;
  for (std::size_t k = 1; k < K; ++k) {
    const double depth = static_cast<double>(k) / static_cast<double>(K);
    p.feature_ratio[k] = (1.8 - 1.7 * depth) * (0.75 + 0.5 * unit(rng));
  }
  p.feature_ratio[K] = 0.0;
  return p;
}

}  // namespace mecsim
