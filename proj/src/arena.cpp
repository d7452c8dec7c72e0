#include "gardner/arena.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gardner {

namespace {

std::unique_ptr<Policy> make_match_policy(const MatchPolicySpec& spec) {
  if (spec.kind == MatchPolicySpec::Kind::Random) return std::make_unique<RandomPolicy>();
  GARDNER_CHECK(spec.net != nullptr);
  if (spec.sample) return std::make_unique<SamplingNetPolicy>(*spec.net);
  return std::make_unique<ArgmaxNetPolicy>(*spec.net, 0.0);
}

struct GameOutcome {
  std::int8_t result = 0;  // +1 white win, -1 black win, 0 draw
  double white_reward = 0.0;
  int length = 0;
};

GameOutcome play_one(const MatchPolicySpec& white, const MatchPolicySpec& black,
                     std::uint64_t game_seed) {
  auto white_policy = make_match_policy(white);
  auto black_policy = make_match_policy(black);
  Rng rng(game_seed);
  const auto rec = play_episode(*white_policy, *black_policy, rng, false, false);
  GameOutcome out;
  out.length = rec.length;
  double sum = 0.0;
  for (std::size_t ply = 0; ply < rec.mover_rewards.size(); ++ply) {
    sum += ply % 2 == 0 ? rec.mover_rewards[ply] : -rec.mover_rewards[ply];
  }
  out.white_reward = sum;  // telescopes to white's final material / 1000
  switch (rec.status.outcome) {
    case GameStatus::Outcome::WhiteWin: out.result = 1; break;
    case GameStatus::Outcome::BlackWin: out.result = -1; break;
    default: out.result = 0; break;
  }
  return out;
}

}  // namespace

ArenaResult run_match(const MatchPolicySpec& white, const MatchPolicySpec& black, long n,
                      std::uint64_t seed, ThreadPool* pool) {
  GARDNER_CHECK(n >= 1);
  std::vector<GameOutcome> outcomes(n);
  auto run_range = [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t g = begin; g < end; ++g) {
      outcomes[g] = play_one(white, black, mix_seed(seed, "game", g));
    }
  };
  if (pool && pool->workers() > 1) {
    pool->for_chunks(static_cast<std::size_t>(n), run_range);
  } else {
    run_range(0, static_cast<std::size_t>(n), 0);
  }

  // Aggregate in index order so the result is independent of scheduling.
  ArenaResult result;
  result.games = n;
  double reward_sum = 0.0;
  double length_sum = 0.0;
  for (const GameOutcome& g : outcomes) {
    if (g.result > 0) ++result.white_wins;
    else if (g.result < 0) ++result.black_wins;
    else ++result.draws;
    reward_sum += g.white_reward;
    length_sum += g.length;
  }
  result.white_win_rate = static_cast<double>(result.white_wins) / static_cast<double>(n);
  const double p = result.white_win_rate;
  result.ci95 = 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  result.mean_episode_reward = reward_sum / static_cast<double>(n);
  result.mean_episode_length = length_sum / static_cast<double>(n);
  return result;
}

double winrate_from_reward(double mean_reward) {
  return std::clamp((mean_reward + 60.0) / 120.0, 0.0, 1.0);
}

void append_result_csv(const std::filesystem::path& path, const MatchPolicySpec& white,
                       const MatchPolicySpec& black, const ArenaResult& r, std::uint64_t seed) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + path.string());
  if (fresh) {
    out << "white,black,games,wins,draws,losses,winrate,ci95,mean_reward,mean_length,seed\n";
  }
  std::ostringstream line;
  line.precision(17);
  line << white.id << ',' << black.id << ',' << r.games << ',' << r.white_wins << ',' << r.draws
       << ',' << r.black_wins << ',' << r.white_win_rate << ',' << r.ci95 << ','
       << r.mean_episode_reward << ',' << r.mean_episode_length << ',' << seed;
  out << line.str() << '\n';
}

}  // namespace gardner
