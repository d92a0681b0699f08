#include "fare/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fare {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw std::invalid_argument("config: unknown key '" + context + key + "'");
    }
  }
}

json parse_object(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, true, /*ignore_comments=*/false);
  if (!j.is_object()) throw std::invalid_argument("config: " + what + " must be a JSON object");
  return j;
}

KernelSpec kernel_spec_from_json(const json& j) {
  reject_unknown_keys(j, {"kind", "bandwidth", "degree", "offset"}, "loss.kernel.");
  KernelSpec spec;
  if (j.contains("kind")) spec.kind = kernel_kind_from_string(j["kind"].get<std::string>());
  if (j.contains("bandwidth")) spec.bandwidth = j["bandwidth"].get<double>();
  if (j.contains("degree")) spec.degree = j["degree"].get<std::size_t>();
  if (j.contains("offset")) spec.offset = j["offset"].get<double>();
  spec.validate();
  return spec;
}

LossConfig loss_config_from_json(const json& j) {
  reject_unknown_keys(j, {"kind", "include_self", "lambda", "clusters", "kernel"}, "loss.");
  LossConfig cfg;
  cfg.kind = loss_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("include_self")) cfg.include_self = j["include_self"].get<bool>();
  if (j.contains("lambda")) cfg.lambda = j["lambda"].get<double>();
  if (j.contains("clusters")) cfg.clusters = j["clusters"].get<std::size_t>();
  if (j.contains("kernel")) cfg.kernel = kernel_spec_from_json(j["kernel"]);
  cfg.validate();
  return cfg;
}

LshConfig lsh_config_from_json(const json& j) {
  reject_unknown_keys(j, {"rounds", "n_buckets", "chunk_size", "adjacency", "seed"}, "sparse.");
  LshConfig cfg;
  if (j.contains("rounds")) cfg.rounds = j["rounds"].get<std::size_t>();
  if (j.contains("n_buckets")) cfg.n_buckets = j["n_buckets"].get<std::size_t>();
  if (j.contains("chunk_size")) cfg.chunk_size = j["chunk_size"].get<std::size_t>();
  if (j.contains("adjacency")) {
    const std::string a = j["adjacency"].get<std::string>();
    if (a == "none") cfg.adjacency = ChunkAdjacency::kNone;
    else if (a == "adjacent") cfg.adjacency = ChunkAdjacency::kAdjacent;
    else throw std::invalid_argument("config: sparse.adjacency must be 'none' or 'adjacent'");
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

OptimizerConfig optimizer_config_from_json(const json& j) {
  reject_unknown_keys(
      j, {"kind", "learning_rate", "weight_decay", "betas", "momentum"}, "optimizer.");
  OptimizerConfig cfg;
  if (j.contains("kind")) {
    const std::string k = j["kind"].get<std::string>();
    if (k == "adam") cfg.kind = OptimizerKind::kAdam;
    else if (k == "sgd_momentum") cfg.kind = OptimizerKind::kSgdMomentum;
    else throw std::invalid_argument("config: optimizer.kind must be 'adam' or 'sgd_momentum'");
  }
  if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("weight_decay")) cfg.weight_decay = j["weight_decay"].get<double>();
  if (j.contains("betas")) {
    const auto betas = j["betas"].get<std::vector<double>>();
    if (betas.size() != 2) throw std::invalid_argument("config: optimizer.betas must have 2 entries");
    cfg.beta1 = betas[0];
    cfg.beta2 = betas[1];
  }
  if (j.contains("momentum")) cfg.momentum = j["momentum"].get<double>();
  cfg.validate();
  return cfg;
}

AttentionInit attention_init_from_json(const json& j) {
  reject_unknown_keys(j, {"d_k", "rho", "normalize_z"}, "attention.");
  AttentionInit init;
  if (j.contains("d_k")) init.d_k = j["d_k"].get<std::size_t>();
  if (j.contains("rho")) {
    if (j["rho"].is_string()) {
      if (j["rho"].get<std::string>() != "sqrt_dk") {
        throw std::invalid_argument("config: attention.rho must be a number or 'sqrt_dk'");
      }
      init.rho = 0.0;  // sqrt(d_k) rule
    } else {
      init.rho = j["rho"].get<double>();
      if (init.rho <= 0.0) throw std::invalid_argument("config: attention.rho must be positive");
    }
  }
  if (j.contains("normalize_z")) init.normalize_z = j["normalize_z"].get<bool>();
  return init;
}

}  // namespace

SynthConfig synth_config_from_json(const std::string& text) {
  const json j = parse_object(text, "SynthConfig");
  reject_unknown_keys(j,
                      {"n_train", "n_test", "d_features", "n_classes", "d_protected",
                       "label_scale", "protected_scale", "correlation", "noise_sd",
                       "one_hot_protected", "seed"},
                      "");
  SynthConfig cfg;
  if (j.contains("n_train")) cfg.n_train = j["n_train"].get<std::size_t>();
  if (j.contains("n_test")) cfg.n_test = j["n_test"].get<std::size_t>();
  if (j.contains("d_features")) cfg.d_features = j["d_features"].get<std::size_t>();
  if (j.contains("n_classes")) cfg.n_classes = j["n_classes"].get<std::size_t>();
  if (j.contains("d_protected")) cfg.d_protected = j["d_protected"].get<std::size_t>();
  if (j.contains("label_scale")) cfg.label_scale = j["label_scale"].get<double>();
  if (j.contains("protected_scale")) cfg.protected_scale = j["protected_scale"].get<double>();
  if (j.contains("correlation")) cfg.correlation = j["correlation"].get<double>();
  if (j.contains("noise_sd")) cfg.noise_sd = j["noise_sd"].get<double>();
  if (j.contains("one_hot_protected")) cfg.one_hot_protected = j["one_hot_protected"].get<bool>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

TrainConfig train_config_from_json(const std::string& text) {
  const json j = parse_object(text, "TrainConfig");
  reject_unknown_keys(j,
                      {"loss", "sparse", "encoder", "scoring", "attention", "epochs",
                       "batch_size", "optimizer", "schedule", "augment_noise_sd",
                       "augment_dropout", "seed"},
                      "");
  TrainConfig cfg;
  cfg.loss = loss_config_from_json(j.at("loss"));
  if (j.contains("sparse")) cfg.sparse = lsh_config_from_json(j["sparse"]);
  if (j.contains("encoder")) {
    reject_unknown_keys(j["encoder"], {"hidden", "embed_dim"}, "encoder.");
    if (j["encoder"].contains("hidden")) {
      cfg.encoder_hidden = j["encoder"]["hidden"].get<std::vector<std::size_t>>();
    }
    if (j["encoder"].contains("embed_dim")) {
      cfg.embed_dim = j["encoder"]["embed_dim"].get<std::size_t>();
    }
  }
  if (j.contains("scoring")) {
    reject_unknown_keys(j["scoring"], {"tau"}, "scoring.");
    if (j["scoring"].contains("tau")) cfg.scoring.tau = j["scoring"]["tau"].get<double>();
  }
  if (j.contains("attention")) cfg.attention = attention_init_from_json(j["attention"]);
  if (j.contains("epochs")) cfg.epochs = j["epochs"].get<std::size_t>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<std::size_t>();
  if (j.contains("optimizer")) cfg.optimizer = optimizer_config_from_json(j["optimizer"]);
  if (j.contains("schedule")) {
    const std::string s = j["schedule"].get<std::string>();
    if (s == "cosine") cfg.schedule = ScheduleKind::kCosine;
    else if (s == "constant") cfg.schedule = ScheduleKind::kConstant;
    else throw std::invalid_argument("config: schedule must be 'cosine' or 'constant'");
  }
  if (j.contains("augment_noise_sd")) cfg.augment_noise_sd = j["augment_noise_sd"].get<double>();
  if (j.contains("augment_dropout")) cfg.augment_dropout = j["augment_dropout"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

std::string synth_config_to_json(const SynthConfig& cfg) {
  json j;
  j["n_train"] = cfg.n_train;
  j["n_test"] = cfg.n_test;
  j["d_features"] = cfg.d_features;
  j["n_classes"] = cfg.n_classes;
  j["d_protected"] = cfg.d_protected;
  j["label_scale"] = cfg.label_scale;
  j["protected_scale"] = cfg.protected_scale;
  j["correlation"] = cfg.correlation;
  j["noise_sd"] = cfg.noise_sd;
  j["one_hot_protected"] = cfg.one_hot_protected;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["loss"]["kind"] = loss_kind_to_string(cfg.loss.kind);
  j["loss"]["include_self"] = cfg.loss.include_self;
  j["loss"]["lambda"] = cfg.loss.lambda;
  j["loss"]["clusters"] = cfg.loss.clusters;
  j["loss"]["kernel"]["kind"] = kernel_kind_to_string(cfg.loss.kernel.kind);
  j["loss"]["kernel"]["bandwidth"] = cfg.loss.kernel.bandwidth;
  j["loss"]["kernel"]["degree"] = cfg.loss.kernel.degree;
  j["loss"]["kernel"]["offset"] = cfg.loss.kernel.offset;
  if (cfg.sparse.has_value()) {
    j["sparse"]["rounds"] = cfg.sparse->rounds;
    j["sparse"]["n_buckets"] = cfg.sparse->n_buckets;
    j["sparse"]["chunk_size"] = cfg.sparse->chunk_size;
    j["sparse"]["adjacency"] =
        cfg.sparse->adjacency == ChunkAdjacency::kAdjacent ? "adjacent" : "none";
    j["sparse"]["seed"] = cfg.sparse->seed;
  }
  j["encoder"]["hidden"] = cfg.encoder_hidden;
  j["encoder"]["embed_dim"] = cfg.embed_dim;
  j["scoring"]["tau"] = cfg.scoring.tau;
  j["attention"]["d_k"] = cfg.attention.d_k;
  if (cfg.attention.rho > 0.0) j["attention"]["rho"] = cfg.attention.rho;
  else j["attention"]["rho"] = "sqrt_dk";
  j["attention"]["normalize_z"] = cfg.attention.normalize_z;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["optimizer"]["kind"] = cfg.optimizer.kind == OptimizerKind::kAdam ? "adam" : "sgd_momentum";
  j["optimizer"]["learning_rate"] = cfg.optimizer.learning_rate;
  j["optimizer"]["weight_decay"] = cfg.optimizer.weight_decay;
  j["optimizer"]["betas"] = {cfg.optimizer.beta1, cfg.optimizer.beta2};
  j["optimizer"]["momentum"] = cfg.optimizer.momentum;
  j["schedule"] = cfg.schedule == ScheduleKind::kCosine ? "cosine" : "constant";
  j["augment_noise_sd"] = cfg.augment_noise_sd;
  j["augment_dropout"] = cfg.augment_dropout;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

SynthConfig load_synth_config(const std::string& path) {
  return synth_config_from_json(read_file(path));
}

TrainConfig load_train_config(const std::string& path) {
  return train_config_from_json(read_file(path));
}

}  // namespace fare
