#include "gardner/config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace gardner {

using nlohmann::json;

PpoConfig PpoSection::to_ppo_config() const {
  PpoConfig cfg;
  cfg.gamma = gamma;
  cfg.lambda = lambda;
  cfg.clip_ratio = clip_ratio;
  cfg.learning_rate = learning_rate;
  cfg.train_batch = train_batch;
  cfg.minibatch = minibatch;
  cfg.epochs_per_batch = epochs_per_batch;
  cfg.entropy_coef = entropy_coef;
  cfg.value_coef = value_coef;
  cfg.iteration_steps = iteration_steps;
  cfg.normalize_advantages = normalize_advantages;
  cfg.optimizer = optimizer == "adam" ? PpoConfig::Optimizer::Adam : PpoConfig::Optimizer::Sgd;
  return cfg;
}

void RunConfig::validate() const {
  GARDNER_CHECK_MSG(workers >= 1, "workers must be >= 1");
  ppo.to_ppo_config().validate();
  GARDNER_CHECK_MSG(ppo.optimizer == "sgd" || ppo.optimizer == "adam",
                    "ppo.optimizer must be sgd or adam");
  GARDNER_CHECK_MSG(net.channels >= 1 && net.hidden >= 1, "network sizes must be positive");
  GARDNER_CHECK_MSG(net.dropout >= 0.0 && net.dropout < 1.0, "dropout must be in [0, 1)");
  GARDNER_CHECK_MSG(selfplay.iterations >= 0, "selfplay.iterations must be >= 0");
  GARDNER_CHECK_MSG(selfplay.epsilon >= 0.0 && selfplay.epsilon <= 1.0,
                    "selfplay.epsilon must be in [0, 1]");
  GARDNER_CHECK_MSG(selfplay.iteration_steps >= ppo.train_batch &&
                        selfplay.iteration_steps % ppo.train_batch == 0,
                    "selfplay.iteration_steps must be a positive multiple of ppo.train_batch");
  GARDNER_CHECK_MSG(selfplay.eval_games >= 1, "selfplay.eval_games must be >= 1");
  GARDNER_CHECK_MSG(arena.games >= 1, "arena.games must be >= 1");
  GARDNER_CHECK_MSG(pretrain.games >= 1, "pretrain.games must be >= 1");
  GARDNER_CHECK_MSG(pretrain.depth >= 0, "pretrain.depth must be >= 0");
  GARDNER_CHECK_MSG(pretrain.epochs >= 1, "pretrain.epochs must be >= 1");
  GARDNER_CHECK_MSG(pretrain.split > 0.0 && pretrain.split < 1.0,
                    "pretrain.split must be in (0, 1)");
  GARDNER_CHECK_MSG(pretrain.batch >= 2, "pretrain.batch must be >= 2");
  GARDNER_CHECK_MSG(pretrain.optimizer == "sgd" || pretrain.optimizer == "adam",
                    "pretrain.optimizer must be sgd or adam");
  GARDNER_CHECK_MSG(!workdir.empty(), "workdir must not be empty");
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw std::runtime_error("unknown config key '" + where + key + "'");
    }
  }
}

template <typename T>
void fetch(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig config_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  RunConfig cfg;

  reject_unknown(j, {"seed", "workers", "init_checkpoint", "ppo", "net", "selfplay", "arena",
                     "pretrain", "workdir"},
                 "");
  fetch(j, "seed", cfg.seed);
  fetch(j, "workers", cfg.workers);
  fetch(j, "init_checkpoint", cfg.init_checkpoint);
  fetch(j, "workdir", cfg.workdir);

  if (j.contains("ppo")) {
    const json& p = j.at("ppo");
    reject_unknown(p,
                   {"gamma", "lambda", "clip_ratio", "learning_rate", "train_batch", "minibatch",
                    "epochs_per_batch", "entropy_coef", "value_coef", "iteration_steps",
                    "normalize_advantages", "optimizer"},
                   "ppo.");
    fetch(p, "gamma", cfg.ppo.gamma);
    fetch(p, "lambda", cfg.ppo.lambda);
    fetch(p, "clip_ratio", cfg.ppo.clip_ratio);
    fetch(p, "learning_rate", cfg.ppo.learning_rate);
    fetch(p, "train_batch", cfg.ppo.train_batch);
    fetch(p, "minibatch", cfg.ppo.minibatch);
    fetch(p, "epochs_per_batch", cfg.ppo.epochs_per_batch);
    fetch(p, "entropy_coef", cfg.ppo.entropy_coef);
    fetch(p, "value_coef", cfg.ppo.value_coef);
    fetch(p, "iteration_steps", cfg.ppo.iteration_steps);
    fetch(p, "normalize_advantages", cfg.ppo.normalize_advantages);
    fetch(p, "optimizer", cfg.ppo.optimizer);
  }
  if (j.contains("net")) {
    const json& n = j.at("net");
    reject_unknown(n, {"channels", "hidden", "dropout"}, "net.");
    fetch(n, "channels", cfg.net.channels);
    fetch(n, "hidden", cfg.net.hidden);
    fetch(n, "dropout", cfg.net.dropout);
  }
  if (j.contains("selfplay")) {
    const json& s = j.at("selfplay");
    reject_unknown(s, {"iterations", "epsilon", "iteration_steps", "eval_games"}, "selfplay.");
    fetch(s, "iterations", cfg.selfplay.iterations);
    fetch(s, "epsilon", cfg.selfplay.epsilon);
    fetch(s, "iteration_steps", cfg.selfplay.iteration_steps);
    fetch(s, "eval_games", cfg.selfplay.eval_games);
  }
  if (j.contains("arena")) {
    const json& a = j.at("arena");
    reject_unknown(a, {"games", "seed"}, "arena.");
    fetch(a, "games", cfg.arena.games);
    fetch(a, "seed", cfg.arena.seed);
  }
  if (j.contains("pretrain")) {
    const json& p = j.at("pretrain");
    reject_unknown(p,
                   {"games", "depth", "epochs", "split", "positions", "batch", "learning_rate",
                    "optimizer"},
                   "pretrain.");
    fetch(p, "games", cfg.pretrain.games);
    fetch(p, "depth", cfg.pretrain.depth);
    fetch(p, "epochs", cfg.pretrain.epochs);
    fetch(p, "split", cfg.pretrain.split);
    fetch(p, "positions", cfg.pretrain.positions);
    fetch(p, "batch", cfg.pretrain.batch);
    fetch(p, "learning_rate", cfg.pretrain.learning_rate);
    fetch(p, "optimizer", cfg.pretrain.optimizer);
  }
  cfg.validate();
  return cfg;
}

std::string RunConfig::to_json_text() const {
  json j;
  j["seed"] = seed;
  j["workers"] = workers;
  j["init_checkpoint"] = init_checkpoint;
  j["workdir"] = workdir;
  j["ppo"] = {{"gamma", ppo.gamma},
              {"lambda", ppo.lambda},
              {"clip_ratio", ppo.clip_ratio},
              {"learning_rate", ppo.learning_rate},
              {"train_batch", ppo.train_batch},
              {"minibatch", ppo.minibatch},
              {"epochs_per_batch", ppo.epochs_per_batch},
              {"entropy_coef", ppo.entropy_coef},
              {"value_coef", ppo.value_coef},
              {"iteration_steps", ppo.iteration_steps},
              {"normalize_advantages", ppo.normalize_advantages},
              {"optimizer", ppo.optimizer}};
  j["net"] = {{"channels", net.channels}, {"hidden", net.hidden}, {"dropout", net.dropout}};
  j["selfplay"] = {{"iterations", selfplay.iterations},
                   {"epsilon", selfplay.epsilon},
                   {"iteration_steps", selfplay.iteration_steps},
                   {"eval_games", selfplay.eval_games}};
  j["arena"] = {{"games", arena.games}, {"seed", arena.seed}};
  j["pretrain"] = {{"games", pretrain.games},
                   {"depth", pretrain.depth},
                   {"epochs", pretrain.epochs},
                   {"split", pretrain.split},
                   {"positions", pretrain.positions},
                   {"batch", pretrain.batch},
                   {"learning_rate", pretrain.learning_rate},
                   {"optimizer", pretrain.optimizer}};
  return j.dump(2) + "\n";
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << cfg.to_json_text();
}

RunConfig make_preset(const std::string& name) {
  RunConfig cfg;
  if (name == "table1-best") {
    // Best single-agent operating point: shortsighted discounting with full
    // advantage rollouts, trained against the random opponent.
    cfg.ppo.gamma = 0.3;
    cfg.ppo.lambda = 1.0;
    cfg.ppo.train_batch = 1000;
    cfg.ppo.minibatch = 100;
    cfg.ppo.entropy_coef = 0.0;
    cfg.ppo.iteration_steps = 50000;
    cfg.ppo.optimizer = "adam";
    cfg.ppo.learning_rate = 3e-4;
    return cfg;
  }
  if (name == "selfplay-paper") {
    cfg.ppo.gamma = 0.3;
    cfg.ppo.lambda = 1.0;
    cfg.ppo.train_batch = 1000;
    cfg.ppo.minibatch = 100;
    cfg.ppo.entropy_coef = 0.0;
    cfg.ppo.optimizer = "adam";
    cfg.ppo.learning_rate = 3e-4;
    cfg.selfplay.iterations = 12;
    cfg.selfplay.epsilon = 0.5;
    cfg.selfplay.iteration_steps = 25000;
    cfg.ppo.iteration_steps = 25000;
    return cfg;
  }
  throw std::runtime_error("unknown preset '" + name + "' (available: table1-best, selfplay-paper)");
}

std::vector<std::string> preset_names() { return {"table1-best", "selfplay-paper"}; }

}  // namespace gardner
