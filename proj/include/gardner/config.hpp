#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gardner/ppo.hpp"
#include "gardner/selfplay.hpp"

namespace gardner {

struct NetConfig {
  int channels = 64;
  int hidden = 128;
  double dropout = 0.3;
  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

struct ArenaConfig {
  long games = 10000;
  std::uint64_t seed = 0;  // 0: derive from the global seed
  friend bool operator==(const ArenaConfig&, const ArenaConfig&) = default;
};

struct PretrainSection {
  long games = 12000;
  int depth = 2;
  int epochs = 5;
  double split = 0.9;
  long positions = 120000;
  int batch = 256;
  double learning_rate = 1e-3;
  std::string optimizer = "adam";
  friend bool operator==(const PretrainSection&, const PretrainSection&) = default;
};

struct SelfplaySection {
  int iterations = 12;
  double epsilon = 0.5;
  long iteration_steps = 25000;
  long eval_games = 10000;
  friend bool operator==(const SelfplaySection&, const SelfplaySection&) = default;
};

struct PpoSection {
  double gamma = 0.3;
  double lambda = 1.0;
  double clip_ratio = 0.2;
  double learning_rate = 1e-5;
  int train_batch = 1000;
  int minibatch = 100;
  int epochs_per_batch = 4;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  long iteration_steps = 50000;
  bool normalize_advantages = true;
  std::string optimizer = "sgd";
  friend bool operator==(const PpoSection&, const PpoSection&) = default;

  PpoConfig to_ppo_config() const;
};

struct RunConfig {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string init_checkpoint;  // warm start for train-single (may be empty)
  PpoSection ppo;
  NetConfig net;
  SelfplaySection selfplay;
  ArenaConfig arena;
  PretrainSection pretrain;
  std::string workdir = "runs/run";
  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  void validate() const;  // throws on out-of-range values
  std::string to_json_text() const;
};

// Strict parser: unknown keys anywhere are an error.
RunConfig config_from_json_text(const std::string&);
RunConfig load_config(const std::filesystem::path&);
void save_config(const RunConfig&, const std::filesystem::path&);

// Named full-default presets. "table1-best" is the single-agent recipe
// (gamma 0.3, lambda 1.0, the 1000/100 schedule, 50k steps per iteration);
// "selfplay-paper" is the league recipe (epsilon 0.5, 25k-step iterations).
RunConfig make_preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace gardner
