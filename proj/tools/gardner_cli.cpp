// Command-line front end. Everything goes through the C library surface in
// gardner.h; this translation unit never touches the C++ core directly.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gardner.h"

namespace {

void print_log(const char* line, void*) { std::printf("%s\n", line); }

[[noreturn]] void die(gardner_status status, const std::string& what) {
  std::fprintf(stderr, "error (%s) during %s: %s\n", gardner_status_name(status), what.c_str(),
               gardner_last_error());
  std::exit(1);
}

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::string workdir;
  std::uint64_t seed = 0;
  int workers = 0;
  bool seed_set = false;
  bool workers_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "configuration file (json)");
  cmd->add_option("--preset", opts.preset, "named preset: table1-best, selfplay-paper");
  cmd->add_option("--workdir", opts.workdir, "run directory for checkpoints, logs and metrics");
  cmd->add_option("--seed", opts.seed, "global seed")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  cmd->add_option("--workers", opts.workers, "worker threads (1 = fully deterministic)")
      ->each([&](const std::string&) { opts.workers_set = true; });
}

gardner_config* build_config(const CommonOpts& opts, const std::string& what) {
  gardner_config* cfg = nullptr;
  if (!opts.preset.empty()) {
    if (auto rc = gardner_config_preset(opts.preset.c_str(), &cfg); rc != GARDNER_OK) {
      die(rc, what);
    }
  } else if (!opts.config_path.empty()) {
    if (auto rc = gardner_config_load(opts.config_path.c_str(), &cfg); rc != GARDNER_OK) {
      die(rc, what);
    }
  } else {
    cfg = gardner_config_default();
  }
  // A config file may refine a preset.
  if (!opts.preset.empty() && !opts.config_path.empty()) {
    gardner_config_free(cfg);
    std::fprintf(stderr, "error: pass either --preset or --config, not both\n");
    std::exit(1);
  }
  auto set = [&](const char* key, const std::string& value) {
    if (auto rc = gardner_config_set(cfg, key, value.c_str()); rc != GARDNER_OK) die(rc, what);
  };
  if (opts.seed_set) set("seed", std::to_string(opts.seed));
  if (opts.workers_set) set("workers", std::to_string(opts.workers));
  if (!opts.workdir.empty()) set("workdir", opts.workdir);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gardner minichess self-play training"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gardner_version()));

  // perft
  auto* perft = app.add_subcommand("perft", "node counts from the initial position");
  int perft_depth = 4;
  perft->add_option("--depth", perft_depth, "maximum depth")->check(CLI::Range(0, 8));

  // train-single
  CommonOpts train_opts;
  auto* train = app.add_subcommand("train-single", "train one iteration against random");
  add_common(train, train_opts);
  long train_steps = 0;
  std::string init_from;
  train->add_option("--steps", train_steps, "override ppo.iteration_steps");
  train->add_option("--init-from", init_from, "warm-start checkpoint (pretrained)");

  // selfplay
  CommonOpts selfplay_opts;
  auto* selfplay = app.add_subcommand("selfplay", "iterative policy improvement league");
  add_common(selfplay, selfplay_opts);
  int league_iterations = -1;
  selfplay->add_option("--iterations", league_iterations, "override selfplay.iterations");

  // evaluate
  CommonOpts eval_opts;
  auto* evaluate = app.add_subcommand("evaluate", "head-to-head match vs random or checkpoints");
  add_common(evaluate, eval_opts);
  std::string white = "random", black = "random";
  long eval_games = 0;
  evaluate->add_option("--white", white, "'random' or checkpoint path");
  evaluate->add_option("--black", black, "'random' or checkpoint path");
  evaluate->add_option("--games", eval_games, "override arena.games");

  // collect
  CommonOpts collect_opts;
  auto* collect = app.add_subcommand("collect", "play and log games for pretraining");
  add_common(collect, collect_opts);
  long collect_games_n = 0;
  collect->add_option("--games", collect_games_n, "override pretrain.games");

  // pretrain
  CommonOpts pretrain_opts;
  auto* pretrain = app.add_subcommand("pretrain", "label positions and fit the value head");
  add_common(pretrain, pretrain_opts);
  int pretrain_epochs = 0;
  pretrain->add_option("--epochs", pretrain_epochs, "override pretrain.epochs");

  CLI11_PARSE(app, argc, argv);

  if (perft->parsed()) {
    gardner_board* board = gardner_board_initial();
    for (int d = 1; d <= perft_depth; ++d) {
      uint64_t nodes = 0;
      if (auto rc = gardner_perft(board, d, &nodes); rc != GARDNER_OK) die(rc, "perft");
      std::printf("%" PRIu64 "\n", nodes);
    }
    gardner_board_free(board);
    return 0;
  }

  if (train->parsed()) {
    gardner_config* cfg = build_config(train_opts, "train-single");
    if (train_steps > 0) {
      gardner_config_set(cfg, "ppo.iteration_steps", std::to_string(train_steps).c_str());
    }
    if (!init_from.empty()) gardner_config_set(cfg, "init_checkpoint", init_from.c_str());
    char path[4096];
    if (auto rc = gardner_run_train_single(cfg, print_log, nullptr, path, sizeof(path));
        rc != GARDNER_OK) {
      die(rc, "train-single");
    }
    std::printf("%s\n", path);
    gardner_config_free(cfg);
    return 0;
  }

  if (selfplay->parsed()) {
    gardner_config* cfg = build_config(selfplay_opts, "selfplay");
    if (league_iterations >= 0) {
      gardner_config_set(cfg, "selfplay.iterations", std::to_string(league_iterations).c_str());
    }
    char white_path[4096] = {0}, black_path[4096] = {0};
    if (auto rc = gardner_run_selfplay(cfg, print_log, nullptr, white_path, sizeof(white_path),
                                       black_path, sizeof(black_path));
        rc != GARDNER_OK) {
      die(rc, "selfplay");
    }
    std::printf("champion white: %s\nchampion black: %s\n", white_path, black_path);
    gardner_config_free(cfg);
    return 0;
  }

  if (evaluate->parsed()) {
    gardner_config* cfg = build_config(eval_opts, "evaluate");
    if (eval_games > 0) {
      gardner_config_set(cfg, "arena.games", std::to_string(eval_games).c_str());
    }
    gardner_match_stats stats;
    if (auto rc = gardner_run_evaluate(cfg, white.c_str(), black.c_str(), print_log, nullptr,
                                       &stats);
        rc != GARDNER_OK) {
      die(rc, "evaluate");
    }
    std::printf("%.4f\n", stats.white_win_rate);
    gardner_config_free(cfg);
    return 0;
  }

  if (collect->parsed()) {
    gardner_config* cfg = build_config(collect_opts, "collect");
    if (collect_games_n > 0) {
      gardner_config_set(cfg, "pretrain.games", std::to_string(collect_games_n).c_str());
    }
    char path[4096];
    int64_t games = 0, positions = 0;
    if (auto rc = gardner_run_collect(cfg, print_log, nullptr, path, sizeof(path), &games,
                                      &positions);
        rc != GARDNER_OK) {
      die(rc, "collect");
    }
    std::printf("%s\n", path);
    gardner_config_free(cfg);
    return 0;
  }

  if (pretrain->parsed()) {
    gardner_config* cfg = build_config(pretrain_opts, "pretrain");
    if (pretrain_epochs > 0) {
      gardner_config_set(cfg, "pretrain.epochs", std::to_string(pretrain_epochs).c_str());
    }
    char path[4096];
    if (auto rc = gardner_run_pretrain(cfg, print_log, nullptr, path, sizeof(path));
        rc != GARDNER_OK) {
      die(rc, "pretrain");
    }
    std::printf("%s\n", path);
    gardner_config_free(cfg);
    return 0;
  }

  return 0;
}
