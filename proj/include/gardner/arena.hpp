#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gardner/env.hpp"
#include "gardner/parallel.hpp"

namespace gardner {

// One side of a match: uniform random play, or a network acting by masked
// argmax (sample=true switches to stochastic play).
struct MatchPolicySpec {
  enum class Kind { Random, Network };
  Kind kind = Kind::Random;
  std::string id = "random";
  const Network<float>* net = nullptr;
  bool sample = false;

  static MatchPolicySpec random() { return MatchPolicySpec{}; }
  static MatchPolicySpec network(std::string id, const Network<float>& net, bool sample = false) {
    return MatchPolicySpec{Kind::Network, std::move(id), &net, sample};
  }
};

struct ArenaResult {
  long games = 0;
  long white_wins = 0;
  long black_wins = 0;
  long draws = 0;
  double white_win_rate = 0.0;
  double ci95 = 0.0;                 // 1.96 * sqrt(p(1-p)/n)
  double mean_episode_reward = 0.0;  // white's material outcome / 1000
  double mean_episode_length = 0.0;
};

// Plays n independent games; per-game rng streams are derived from the match
// seed by game index, so results are identical for any worker count.
ArenaResult run_match(const MatchPolicySpec& white, const MatchPolicySpec& black, long n,
                      std::uint64_t seed, ThreadPool* pool = nullptr);

// w ~= (reward + 60) / 120, clamped to [0, 1].
double winrate_from_reward(double mean_reward);

void append_result_csv(const std::filesystem::path&, const MatchPolicySpec& white,
                       const MatchPolicySpec& black, const ArenaResult&, std::uint64_t seed);

}  // namespace gardner
