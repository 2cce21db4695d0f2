#include "gradlibra/config_json.hpp"

namespace gradlibra {

using ordered_json = nlohmann::ordered_json;

ordered_json to_json(const ModelSpec& spec) {
  ordered_json j;
  j["arch"] = to_string(spec.arch);
  j["hidden_dim"] = spec.hidden_dim;
  j["feature_dim"] = spec.feature_dim;
  j["num_classes"] = spec.num_classes;
  j["init_seed"] = spec.init_seed;
  return j;
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  if (j.contains("arch")) spec.arch = arch_from_string(j.at("arch").get<std::string>());
  if (j.contains("hidden_dim")) spec.hidden_dim = j.at("hidden_dim").get<int>();
  if (j.contains("feature_dim")) spec.feature_dim = j.at("feature_dim").get<int>();
  if (j.contains("num_classes")) spec.num_classes = j.at("num_classes").get<int>();
  if (j.contains("init_seed")) spec.init_seed = j.at("init_seed").get<std::uint64_t>();
  return spec;
}

ordered_json to_json(const OptimSpec& spec) {
  ordered_json j;
  j["lr"] = spec.lr;
  j["momentum"] = spec.momentum;
  j["weight_decay"] = spec.weight_decay;
  j["epochs"] = spec.epochs;
  j["batch_size"] = spec.batch_size;
  j["lr_decay_epochs"] = spec.lr_decay_epochs;
  j["lr_decay_factor"] = spec.lr_decay_factor;
  j["warmup_ratio"] = spec.warmup_ratio;
  j["warmup_iters"] = spec.warmup_iters;
  return j;
}

OptimSpec optim_spec_from_json(const nlohmann::json& j) {
  OptimSpec spec;
  if (j.contains("lr")) spec.lr = j.at("lr").get<double>();
  if (j.contains("momentum")) spec.momentum = j.at("momentum").get<double>();
  if (j.contains("weight_decay")) spec.weight_decay = j.at("weight_decay").get<double>();
  if (j.contains("epochs")) spec.epochs = j.at("epochs").get<int>();
  if (j.contains("batch_size")) spec.batch_size = j.at("batch_size").get<int>();
  if (j.contains("lr_decay_epochs")) {
    spec.lr_decay_epochs = j.at("lr_decay_epochs").get<std::vector<int>>();
  }
  if (j.contains("lr_decay_factor")) spec.lr_decay_factor = j.at("lr_decay_factor").get<double>();
  if (j.contains("warmup_ratio")) spec.warmup_ratio = j.at("warmup_ratio").get<double>();
  if (j.contains("warmup_iters")) spec.warmup_iters = j.at("warmup_iters").get<long>();
  return spec;
}

ordered_json to_json(const LossConfig& cfg) {
  ordered_json j;
  j["kind"] = to_string(cfg.kind);
  j["alpha_pos"] = cfg.alpha_pos;
  j["alpha_neg"] = cfg.alpha_neg;
  if (cfg.alpha_unified) j["alpha_unified"] = *cfg.alpha_unified;
  j["differentiate_weight"] = cfg.differentiate_weight;
  j["focal_gamma"] = cfg.focal_gamma;
  j["focal_alpha"] = cfg.focal_alpha;
  j["prob_clamp_eps"] = cfg.prob_clamp_eps;
  return j;
}

LossConfig loss_config_from_json(const nlohmann::json& j) {
  LossConfig cfg;
  if (j.contains("kind")) cfg.kind = loss_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("alpha_pos")) cfg.alpha_pos = j.at("alpha_pos").get<double>();
  if (j.contains("alpha_neg")) cfg.alpha_neg = j.at("alpha_neg").get<double>();
  if (j.contains("alpha_unified") && !j.at("alpha_unified").is_null()) {
    cfg.alpha_unified = j.at("alpha_unified").get<double>();
    cfg.alpha_pos = *cfg.alpha_unified;
    cfg.alpha_neg = *cfg.alpha_unified;
  }
  if (j.contains("differentiate_weight")) {
    cfg.differentiate_weight = j.at("differentiate_weight").get<bool>();
  }
  if (j.contains("focal_gamma")) cfg.focal_gamma = j.at("focal_gamma").get<double>();
  if (j.contains("focal_alpha")) cfg.focal_alpha = j.at("focal_alpha").get<double>();
  if (j.contains("prob_clamp_eps")) cfg.prob_clamp_eps = j.at("prob_clamp_eps").get<double>();
  return cfg;
}

ordered_json to_json(const DatasetSpec& spec) {
  ordered_json j;
  j["num_classes"] = spec.num_classes;
  j["counts"] = spec.counts;
  j["background_count"] = spec.background_count;
  j["feature_dim"] = spec.feature_dim;
  j["center_separation"] = spec.center_separation;
  j["covariance_scale"] = spec.covariance_scale;
  j["group_thresholds"] = {spec.group_thresholds.first, spec.group_thresholds.second};
  j["seed"] = spec.seed;
  return j;
}

DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
  DatasetSpec spec = DatasetSpec::desk_default();
  if (j.contains("num_classes")) spec.num_classes = j.at("num_classes").get<int>();
  if (j.contains("counts")) {
    const auto& c = j.at("counts");
    if (c.is_object()) {
      // {"head": H, "tail": T} shorthand for a geometric decay.
      spec.counts = exponential_counts(c.at("head").get<std::int64_t>(),
                                       c.at("tail").get<std::int64_t>(), spec.num_classes);
    } else {
      spec.counts = c.get<std::vector<std::int64_t>>();
    }
  } else if (j.contains("num_classes")) {
    spec.counts = exponential_counts(10000, 50, spec.num_classes);
  }
  if (j.contains("background_count")) {
    spec.background_count = j.at("background_count").get<std::int64_t>();
  }
  if (j.contains("feature_dim")) spec.feature_dim = j.at("feature_dim").get<int>();
  if (j.contains("center_separation")) {
    spec.center_separation = j.at("center_separation").get<double>();
  }
  if (j.contains("covariance_scale")) {
    spec.covariance_scale = j.at("covariance_scale").get<double>();
  }
  if (j.contains("group_thresholds")) {
    const auto th = j.at("group_thresholds").get<std::vector<std::int64_t>>();
    if (th.size() != 2) throw ConfigError("group_thresholds must have two entries");
    spec.group_thresholds = {th[0], th[1]};
  }
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  return spec;
}

}  // namespace gradlibra
