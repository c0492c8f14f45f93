#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sumrank/chat.hpp"
#include "sumrank/errors.hpp"
#include "sumrank/eval.hpp"
#include "sumrank/io.hpp"
#include "sumrank/ranker.hpp"
#include "sumrank/retrieval.hpp"

namespace sumrank {

struct ProviderSpec {
  std::string kind = "hashed";  // hashed | precomputed | remote
  std::size_t dim = 256;        // hashed and remote
  std::uint64_t seed = 1;       // hashed
  std::string path;             // precomputed
  std::string url;              // remote
  std::string model;            // remote
  std::string api_key_env = "API_KEY";
};

struct TransportSpec {
  std::string kind = "replay";  // replay | live
  std::string path;             // replay
  std::string url;              // live
  std::string api_key_env = "API_KEY";
};

struct TrainSpec {
  TrainConfig train;
  Eigen::Index hidden_dim = 32;
  Eigen::Index proj_dim = 16;
};

/// Everything one run needs. File values override these defaults and command
/// line flags override file values.
struct RunConfig {
  std::string test_corpus;
  std::string pool_corpus;
  std::string mode = "similar_demo";
  std::string strategy = "bm25";
  GenerationConfig generation;
  ProviderSpec provider;
  TransportSpec transport;
  std::string record_path;  // wraps the transport in a recorder when set
  std::uint64_t seed = 1;
  std::string ranker_model;
  std::string output_dir = ".";
  std::size_t parallelism = 4;
  bool exclude_self = false;
  TrainSpec train;

  void validate() const {
    parse_mode(mode);
    parse_strategy(strategy);
    generation.validate();
    train.train.validate();
    if (train.hidden_dim < 1 || train.proj_dim < 1)
      throw ConfigError("train dimensions must be >= 1");
    if (mode == "pads" && ranker_model.empty())
      throw ConfigError("mode \"pads\" requires ranker_model");
    if (transport.kind == "replay") {
      if (transport.path.empty())
        throw ConfigError("replay transport requires transport.path");
    } else if (transport.kind == "live") {
      if (transport.url.empty())
        throw ConfigError("live transport requires transport.url");
    } else {
      throw ConfigError("unknown transport kind \"" + transport.kind + "\"");
    }
    if (provider.kind == "hashed") {
      if (provider.dim < 1)
        throw ConfigError("hashed provider requires dim >= 1");
    } else if (provider.kind == "precomputed") {
      if (provider.path.empty())
        throw ConfigError("precomputed provider requires provider.path");
    } else if (provider.kind == "remote") {
      if (provider.url.empty() || provider.model.empty() || provider.dim < 1)
        throw ConfigError(
            "remote provider requires provider.url, provider.model, and dim");
    } else {
      throw ConfigError("unknown provider kind \"" + provider.kind + "\"");
    }
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  }
};

namespace detail {

inline void reject_unknown_fields(const json& value,
                                  const std::vector<std::string>& known,
                                  const std::string& context) {
  for (const auto& [key, unused] : value.items()) {
    bool found = false;
    for (const auto& k : known)
      if (k == key) found = true;
    if (!found)
      throw ConfigError("config: unknown field \"" +
                        (context.empty() ? key : context + "." + key) + "\"");
  }
}

template <class T>
inline void read_field(const json& value, const char* name, T& out) {
  if (!value.contains(name)) return;
  try {
    out = value[name].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: field \"") + name +
                      "\" has the wrong type");
  }
}

inline void apply_provider(const json& value, ProviderSpec& spec) {
  if (!value.is_object())
    throw ConfigError("config: provider must be an object");
  reject_unknown_fields(
      value, {"kind", "dim", "seed", "path", "url", "model", "api_key_env"},
      "provider");
  read_field(value, "kind", spec.kind);
  read_field(value, "dim", spec.dim);
  read_field(value, "seed", spec.seed);
  read_field(value, "path", spec.path);
  read_field(value, "url", spec.url);
  read_field(value, "model", spec.model);
  read_field(value, "api_key_env", spec.api_key_env);
}

inline void apply_transport(const json& value, TransportSpec& spec) {
  if (!value.is_object())
    throw ConfigError("config: transport must be an object");
  reject_unknown_fields(value, {"kind", "path", "url", "api_key_env"},
                        "transport");
  read_field(value, "kind", spec.kind);
  read_field(value, "path", spec.path);
  read_field(value, "url", spec.url);
  read_field(value, "api_key_env", spec.api_key_env);
}

inline void apply_train(const json& value, TrainSpec& spec) {
  if (!value.is_object()) throw ConfigError("config: train must be an object");
  reject_unknown_fields(value,
                        {"tau", "lr_backbone", "lr_head", "epochs_phase1",
                         "epochs_phase2", "batch_size", "seed", "hidden_dim",
                         "proj_dim"},
                        "train");
  read_field(value, "tau", spec.train.tau);
  read_field(value, "lr_backbone", spec.train.lr_backbone);
  read_field(value, "lr_head", spec.train.lr_head);
  read_field(value, "epochs_phase1", spec.train.epochs_phase1);
  read_field(value, "epochs_phase2", spec.train.epochs_phase2);
  read_field(value, "batch_size", spec.train.batch_size);
  read_field(value, "seed", spec.train.seed);
  read_field(value, "hidden_dim", spec.hidden_dim);
  read_field(value, "proj_dim", spec.proj_dim);
}

}  // namespace detail

/// Overlays one parsed config object onto cfg. Unknown fields are errors
/// naming the field.
inline void apply_config_json(RunConfig& cfg, const json& value) {
  if (!value.is_object())
    throw ConfigError("config: top level must be an object");
  detail::reject_unknown_fields(
      value,
      {"test_corpus", "pool_corpus", "mode", "strategy", "k",
       "max_format_retries", "temperature", "model_name", "provider",
       "transport", "record_path", "seed", "ranker_model", "output_dir",
       "parallelism", "exclude_self", "train"},
      "");
  detail::read_field(value, "test_corpus", cfg.test_corpus);
  detail::read_field(value, "pool_corpus", cfg.pool_corpus);
  detail::read_field(value, "mode", cfg.mode);
  detail::read_field(value, "strategy", cfg.strategy);
  detail::read_field(value, "k", cfg.generation.k);
  detail::read_field(value, "max_format_retries",
                     cfg.generation.max_format_retries);
  detail::read_field(value, "temperature", cfg.generation.sampling_temperature);
  detail::read_field(value, "model_name", cfg.generation.model_name);
  if (value.contains("provider"))
    detail::apply_provider(value["provider"], cfg.provider);
  if (value.contains("transport"))
    detail::apply_transport(value["transport"], cfg.transport);
  detail::read_field(value, "record_path", cfg.record_path);
  detail::read_field(value, "seed", cfg.seed);
  detail::read_field(value, "ranker_model", cfg.ranker_model);
  detail::read_field(value, "output_dir", cfg.output_dir);
  detail::read_field(value, "parallelism", cfg.parallelism);
  detail::read_field(value, "exclude_self", cfg.exclude_self);
  if (value.contains("train")) detail::apply_train(value["train"], cfg.train);
}

inline RunConfig load_config(const std::string& path) {
  json value;
  try {
    value = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse config " + path + ": " + e.what());
  }
  RunConfig cfg;
  apply_config_json(cfg, value);
  cfg.validate();
  return cfg;
}

/// Full render of every field; load(render(c)) reproduces c exactly.
inline json render_config(const RunConfig& cfg) {
  json out;
  out["test_corpus"] = cfg.test_corpus;
  out["pool_corpus"] = cfg.pool_corpus;
  out["mode"] = cfg.mode;
  out["strategy"] = cfg.strategy;
  out["k"] = cfg.generation.k;
  out["max_format_retries"] = cfg.generation.max_format_retries;
  out["temperature"] = cfg.generation.sampling_temperature;
  out["model_name"] = cfg.generation.model_name;
  json provider;
  provider["kind"] = cfg.provider.kind;
  provider["dim"] = cfg.provider.dim;
  provider["seed"] = cfg.provider.seed;
  provider["path"] = cfg.provider.path;
  provider["url"] = cfg.provider.url;
  provider["model"] = cfg.provider.model;
  provider["api_key_env"] = cfg.provider.api_key_env;
  out["provider"] = std::move(provider);
  json transport;
  transport["kind"] = cfg.transport.kind;
  transport["path"] = cfg.transport.path;
  transport["url"] = cfg.transport.url;
  transport["api_key_env"] = cfg.transport.api_key_env;
  out["transport"] = std::move(transport);
  out["record_path"] = cfg.record_path;
  out["seed"] = cfg.seed;
  out["ranker_model"] = cfg.ranker_model;
  out["output_dir"] = cfg.output_dir;
  out["parallelism"] = cfg.parallelism;
  out["exclude_self"] = cfg.exclude_self;
  json train;
  train["tau"] = cfg.train.train.tau;
  train["lr_backbone"] = cfg.train.train.lr_backbone;
  train["lr_head"] = cfg.train.train.lr_head;
  train["epochs_phase1"] = cfg.train.train.epochs_phase1;
  train["epochs_phase2"] = cfg.train.train.epochs_phase2;
  train["batch_size"] = cfg.train.train.batch_size;
  train["seed"] = cfg.train.train.seed;
  train["hidden_dim"] = cfg.train.hidden_dim;
  train["proj_dim"] = cfg.train.proj_dim;
  out["train"] = std::move(train);
  return out;
}

}  // namespace sumrank
