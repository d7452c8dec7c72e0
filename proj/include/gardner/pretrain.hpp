#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gardner/env.hpp"
#include "gardner/parallel.hpp"
#include "gardner/ppo.hpp"

namespace gardner {

// Plays `count` complete games (random vs random unless nets are given) and
// returns their logs; ids are sequential and seeds derived from `seed`.
std::vector<GameLog> collect_games(long count, std::uint64_t seed,
                                   const Network<float>* white = nullptr,
                                   const Network<float>* black = nullptr);

void write_game_logs(const std::filesystem::path&, const std::vector<GameLog>&);
std::vector<GameLog> read_game_logs(const std::filesystem::path&);

// Fixed-depth full-width negamax over the material evaluation, returned from
// white's perspective and scaled by 1/1000. Terminal positions score +-60
// (king capture) or 0 (draw) regardless of depth.
double negamax_eval(const Board&, int depth);

struct LabeledPosition {
  Board board;
  double eval = 0.0;
  long game_id = 0;
  int ply = 0;
};

// Labels every position (ply 0 through the final board) of the given games.
std::vector<LabeledPosition> label_positions(const std::vector<GameLog>&, int depth,
                                             ThreadPool* pool = nullptr);

struct PositionDataset {
  std::vector<LabeledPosition> train;
  std::vector<LabeledPosition> validation;
  double split_ratio = 0.9;
  std::uint64_t seed = 0;
};

// Samples up to max_positions positions uniformly across the games (seeded),
// labels them, and splits train/validation disjointly by game id.
PositionDataset build_dataset(const std::vector<GameLog>&, int depth, long max_positions,
                              double split_ratio, std::uint64_t seed, ThreadPool* pool = nullptr);

void write_dataset(const std::filesystem::path&, const PositionDataset&);
PositionDataset read_dataset(const std::filesystem::path&);

struct PretrainConfig {
  int epochs = 5;
  int batch = 256;
  double learning_rate = 1e-3;
  bool adam = true;
  double label_clamp = 60.0;
  bool dropout_active = true;  // train-mode forward (batch stats + dropout)
};

struct PretrainResult {
  std::vector<double> train_loss;       // per epoch, eval-mode MSE on the train split
  std::vector<double> validation_loss;  // per epoch, eval-mode MSE on the validation split
  int best_epoch = 0;                   // epoch whose parameters were kept
};

// Minimizes value-head MSE against the labels; the network is left holding
// the best-validation-epoch parameters. The policy head receives no gradient.
PretrainResult pretrain_value(Network<float>& net, const PositionDataset&, const PretrainConfig&,
                              std::uint64_t seed, const MetricsSink& sink = nullptr);

}  // namespace gardner
