#include "qvpo/model_io.hpp"

#include <fstream>

#include <json.hpp>

#include "qvpo/errors.hpp"

namespace qvpo {

namespace {

using nlohmann::json;

json mlp_to_json(const Mlp& net) {
  json j;
  j["activation"] = net.hidden_activation == Activation::mish ? "mish" : "identity";
  j["layers"] = json::array();
  for (const Layer& layer : net.layers) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c) row.push_back(layer.w(r, c));
      rows.push_back(std::move(row));
    }
    json bias = json::array();
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) bias.push_back(layer.b[r]);
    j["layers"].push_back({{"w", std::move(rows)}, {"b", std::move(bias)}});
  }
  return j;
}

Mlp mlp_from_json(const json& j) {
  Mlp net;
  const std::string act = j.at("activation");
  if (act == "mish") net.hidden_activation = Activation::mish;
  else if (act == "identity") net.hidden_activation = Activation::identity;
  else throw IoError("model file: unknown activation '" + act + "'");
  for (const json& lj : j.at("layers")) {
    const json& rows = lj.at("w");
    const json& bias = lj.at("b");
    if (rows.empty()) throw IoError("model file: empty weight matrix");
    Layer layer;
    layer.w.resize(static_cast<Eigen::Index>(rows.size()),
                   static_cast<Eigen::Index>(rows[0].size()));
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
      if (static_cast<Eigen::Index>(rows[r].size()) != layer.w.cols())
        throw IoError("model file: ragged weight matrix");
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c)
        layer.w(r, c) = rows[r][c].get<double>();
    }
    layer.b.resize(static_cast<Eigen::Index>(bias.size()));
    for (Eigen::Index r = 0; r < layer.b.size(); ++r)
      layer.b[r] = bias[r].get<double>();
    if (layer.b.size() != layer.w.rows())
      throw IoError("model file: bias/weight shape mismatch");
    net.layers.push_back(std::move(layer));
  }
  if (net.layers.empty()) throw IoError("model file: network has no layers");
  return net;
}

}  // namespace

void save_model(const ModelBundle& bundle, const std::filesystem::path& path) {
  json j;
  j["format"] = "qvpo-model-v1";
  j["env"] = bundle.env;
  j["bandit_strict_exponent"] = bundle.bandit_strict_exponent;
  j["diffusion_steps"] = bundle.diffusion_steps;
  j["beta_min"] = bundle.beta_min;
  j["beta_max"] = bundle.beta_max;
  j["predictor"] = {{"obs_dim", bundle.predictor.obs_dim},
                    {"action_dim", bundle.predictor.action_dim},
                    {"time_embed_dim", bundle.predictor.time_embed_dim},
                    {"net", mlp_to_json(bundle.predictor.net)}};
  j["critic"] = {{"tau", bundle.critic.tau},
                 {"gamma", bundle.critic.gamma},
                 {"obs_dim", bundle.critic.obs_dim},
                 {"action_dim", bundle.critic.action_dim},
                 {"q1", mlp_to_json(bundle.critic.q1)},
                 {"q2", mlp_to_json(bundle.critic.q2)},
                 {"q1_shadow", mlp_to_json(bundle.critic.q1_shadow)},
                 {"q2_shadow", mlp_to_json(bundle.critic.q2_shadow)}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open model file for writing: " + path.string());
  out << j.dump();
  out.flush();
  if (!out) throw IoError("failed writing model to " + path.string());
}

ModelBundle load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("model file parse error in " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("format") != "qvpo-model-v1")
      throw IoError("model file: unsupported format tag");
    ModelBundle bundle;
    bundle.env = j.at("env");
    bundle.bandit_strict_exponent = j.at("bandit_strict_exponent");
    bundle.diffusion_steps = j.at("diffusion_steps");
    bundle.beta_min = j.at("beta_min");
    bundle.beta_max = j.at("beta_max");
    const json& p = j.at("predictor");
    bundle.predictor.obs_dim = p.at("obs_dim");
    bundle.predictor.action_dim = p.at("action_dim");
    bundle.predictor.time_embed_dim = p.at("time_embed_dim");
    bundle.predictor.net = mlp_from_json(p.at("net"));
    const json& c = j.at("critic");
    bundle.critic.tau = c.at("tau");
    bundle.critic.gamma = c.at("gamma");
    bundle.critic.obs_dim = c.at("obs_dim");
    bundle.critic.action_dim = c.at("action_dim");
    bundle.critic.q1 = mlp_from_json(c.at("q1"));
    bundle.critic.q2 = mlp_from_json(c.at("q2"));
    bundle.critic.q1_shadow = mlp_from_json(c.at("q1_shadow"));
    bundle.critic.q2_shadow = mlp_from_json(c.at("q2_shadow"));
    return bundle;
  } catch (const json::exception& e) {
    throw IoError("model file structure error in " + path.string() + ": " +
                  e.what());
  }
}

}  // namespace qvpo
