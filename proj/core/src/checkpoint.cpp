#include "mecsim/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mecsim/errors.hpp"

namespace mecsim {

namespace {

using nlohmann::json;

json mlp_to_json(const Mlp& net) {
  return {{"layer_sizes", net.layer_sizes()},
          {"params", std::vector<double>(net.params().begin(), net.params().end())}};
}

json adam_to_json(const Adam& opt) {
  return {{"learning_rate", opt.learning_rate}, {"beta1", opt.beta1}, {"beta2", opt.beta2},
          {"epsilon", opt.epsilon},             {"steps", opt.steps}, {"m", opt.m},
          {"v", opt.v}};
}

Mlp mlp_from_json(const json& j, const std::vector<int>& expected_sizes, const char* name) {
  const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
  if (sizes != expected_sizes) {
    std::ostringstream os;
    os << "checkpoint " << name << " has layer sizes [";
    for (std::size_t i = 0; i < sizes.size(); ++i) os << (i ? "," : "") << sizes[i];
    os << "], configuration expects [";
    for (std::size_t i = 0; i < expected_sizes.size(); ++i) os << (i ? "," : "") << expected_sizes[i];
    os << "]";
    throw CheckpointError(os.str());
  }
  Mlp net(sizes);
  const auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != net.num_params()) {
    throw CheckpointError(std::string("checkpoint ") + name + " has " + std::to_string(params.size()) +
                          " parameters, expected " + std::to_string(net.num_params()));
  }
  std::copy(params.begin(), params.end(), net.params().begin());
  return net;
}

Adam adam_from_json(const json& j, std::size_t num_params, const char* name) {
  Adam opt;
  opt.learning_rate = j.at("learning_rate").get<double>();
  opt.beta1 = j.at("beta1").get<double>();
  opt.beta2 = j.at("beta2").get<double>();
  opt.epsilon = j.at("epsilon").get<double>();
  opt.steps = j.at("steps").get<std::int64_t>();
  opt.m = j.at("m").get<std::vector<double>>();
  opt.v = j.at("v").get<std::vector<double>>();
  const bool fresh = opt.m.empty() && opt.v.empty();
  if (!fresh && (opt.m.size() != num_params || opt.v.size() != num_params)) {
    throw CheckpointError(std::string("checkpoint ") + name + " optimizer moments do not match the network");
  }
  return opt;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ActorCritic& ac, const CheckpointMeta& meta) {
  json doc = {
      {"format", "mecsim-checkpoint"},
      {"version", kCheckpointVersion},
      {"config_hash", meta.config_hash},
      {"episodes_completed", meta.episodes_completed},
      {"policy", {{"observation_size", ac.spec.observation_size}, {"head_sizes", ac.spec.head_sizes}}},
      {"actor", mlp_to_json(ac.actor)},
      {"actor_old", mlp_to_json(ac.actor_old)},
      {"critic", mlp_to_json(ac.critic)},
      {"actor_optimizer", adam_to_json(ac.actor_optimizer)},
      {"critic_optimizer", adam_to_json(ac.critic_optimizer)},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out << doc.dump() << "\n";
}

ActorCritic load_checkpoint(const std::filesystem::path& path, const PolicySpec& spec, const std::vector<int>& hidden,
                            CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw CheckpointError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    if (doc.at("format") != "mecsim-checkpoint") throw CheckpointError("not a mecsim checkpoint");
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + doc.at("version").dump());
    }
    PolicySpec stored;
    stored.observation_size = doc.at("policy").at("observation_size").get<int>();
    stored.head_sizes = doc.at("policy").at("head_sizes").get<std::vector<int>>();
    if (!(stored == spec)) throw CheckpointError("checkpoint policy shape does not match the configuration");

    std::vector<int> actor_sizes{spec.observation_size};
    actor_sizes.insert(actor_sizes.end(), hidden.begin(), hidden.end());
    actor_sizes.push_back(spec.total_logits());
    std::vector<int> critic_sizes{spec.observation_size};
    critic_sizes.insert(critic_sizes.end(), hidden.begin(), hidden.end());
    critic_sizes.push_back(1);

    ActorCritic ac;
    ac.spec = spec;
    ac.actor = mlp_from_json(doc.at("actor"), actor_sizes, "actor");
    ac.actor_old = mlp_from_json(doc.at("actor_old"), actor_sizes, "actor_old");
    ac.critic = mlp_from_json(doc.at("critic"), critic_sizes, "critic");
    ac.actor_optimizer = adam_from_json(doc.at("actor_optimizer"), ac.actor.num_params(), "actor");
    ac.critic_optimizer = adam_from_json(doc.at("critic_optimizer"), ac.critic.num_params(), "critic");
    if (meta) {
      meta->episodes_completed = doc.at("episodes_completed").get<std::int64_t>();
      meta->config_hash = doc.at("config_hash").get<std::string>();
    }
    return ac;
  } catch (const json::exception& e) {
    throw CheckpointError("checkpoint " + path.string() + " is missing fields: " + e.what());
  }
}

}  // namespace mecsim
