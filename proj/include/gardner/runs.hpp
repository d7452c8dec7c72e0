#pragma once

#include <functional>
#include <string>

#include "gardner/arena.hpp"
#include "gardner/config.hpp"

namespace gardner {

using LogSink = std::function<void(const std::string&)>;

// Workdir layout shared by every command:
//   config.json      effective configuration snapshot
//   metrics.csv      training / pretraining metrics rows
//   checkpoints/     *.ckpt
//   logs/            games.jsonl, dataset.jsonl
//   league.manifest  selfplay league records
//   results.csv      arena match reports

// Trains one iteration against the random opponent. Returns the final
// checkpoint path.
std::string run_train_single(const RunConfig&, const LogSink& log = nullptr);

struct SelfplayOutcome {
  std::string champion_white;
  std::string champion_black;
  double champion_white_win_rate = 0.0;
  double champion_black_win_rate = 0.0;
  int iterations = 0;
};

// Runs (or resumes) the iterative improvement league, then picks champions.
SelfplayOutcome run_selfplay(const RunConfig&, const LogSink& log = nullptr);

struct CollectOutcome {
  std::string games_path;
  long games = 0;
  long positions = 0;  // distinct recorded positions across all logs
};
CollectOutcome run_collect(const RunConfig&, const LogSink& log = nullptr);

struct PretrainOutcome {
  std::string checkpoint_path;
  std::string dataset_path;
  long train_positions = 0;
  long validation_positions = 0;
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
};
// Builds the labeled dataset from logs/games.jsonl (collecting games first if
// the file is missing) and supervises the value head.
PretrainOutcome run_pretrain(const RunConfig&, const LogSink& log = nullptr);

// Policy spec strings: "random" or a checkpoint path.
ArenaResult run_evaluate(const RunConfig&, const std::string& white, const std::string& black,
                         const LogSink& log = nullptr);

}  // namespace gardner
