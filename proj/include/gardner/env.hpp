#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "gardner/actions.hpp"
#include "gardner/board.hpp"
#include "gardner/net.hpp"
#include "gardner/rng.hpp"

namespace gardner {

// One learner step. The reward is the mover's own material swing plus the
// opponent's reply swing, both scaled by 1/1000, settled once the mover is
// next to observe (or the game ends).
struct Transition {
  Observation obs;
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  bool done = false;
};

struct EpisodeRecord {
  std::vector<Transition> white;
  std::vector<Transition> black;
  std::vector<std::uint16_t> actions;  // per ply, in the mover's frame
  std::vector<double> mover_rewards;   // per ply, the mover's own swing
  GameStatus status;
  int length = 0;

  double reward_sum(Color c) const {
    const auto& t = c == Color::White ? white : black;
    double sum = 0.0;
    for (const auto& tr : t) sum += tr.reward;
    return sum;
  }
};

// (material after - material before) from the mover's side, scaled by 1/1000.
double shaped_reward(const Board& prev, const Board& next, Color mover);

// With probability epsilon a uniform legal action, otherwise the argmax of
// the masked policy (lowest index wins ties).
int epsilon_mix_action(std::span<const double> masked_probs, std::span<const std::uint8_t> mask,
                       double epsilon, Rng& rng);

// Action selection for one side of an episode.
class Policy {
 public:
  virtual ~Policy() = default;
  // Returns an index into `moves`; fills log_prob/value when it has them.
  virtual int choose(const Board&, const std::vector<Move>& moves, const Observation& obs,
                     Rng& rng, double* log_prob, double* value) = 0;
  // True when choose() needs the network forward pass (and the observation).
  virtual bool needs_observation() const { return true; }
};

class RandomPolicy final : public Policy {
 public:
  int choose(const Board&, const std::vector<Move>& moves, const Observation&, Rng& rng,
             double* log_prob, double* value) override;
  bool needs_observation() const override { return false; }
};

// Samples from the masked softmax; the training-time exploration behavior.
class SamplingNetPolicy final : public Policy {
 public:
  explicit SamplingNetPolicy(const Network<float>& net) : eval_(net) {}
  int choose(const Board&, const std::vector<Move>& moves, const Observation&, Rng&,
             double* log_prob, double* value) override;

 private:
  NetEvaluator eval_;
};

// Deterministic argmax with epsilon-uniform mixing; how frozen opponents and
// evaluated checkpoints act.
class ArgmaxNetPolicy final : public Policy {
 public:
  ArgmaxNetPolicy(const Network<float>& net, double epsilon) : eval_(net), epsilon_(epsilon) {}
  int choose(const Board&, const std::vector<Move>& moves, const Observation&, Rng&,
             double* log_prob, double* value) override;

 private:
  NetEvaluator eval_;
  double epsilon_;
};

struct OpponentSpec {
  enum class Kind { Random, Network };
  Kind kind = Kind::Random;
  const Network<float>* net = nullptr;
  double epsilon = 0.0;

  static OpponentSpec random() { return OpponentSpec{}; }
  static OpponentSpec network(const Network<float>& net, double epsilon) {
    return OpponentSpec{Kind::Network, &net, epsilon};
  }
};

std::unique_ptr<Policy> make_opponent_policy(const OpponentSpec&);

// Core loop: plays one game to termination, recording transitions for the
// requested sides. Both policies draw from the same per-episode rng stream.
EpisodeRecord play_episode(Policy& white, Policy& black, Rng& rng, bool record_white,
                           bool record_black);

// Learner (sampling) vs a fixed opponent; records the learner side only.
EpisodeRecord play_episode_single(const Network<float>& learner, const OpponentSpec& opponent,
                                  Color learner_color, Rng& rng);

// Two sampling learners; records both sides.
EpisodeRecord play_episode_multi(const Network<float>& white_net, const Network<float>& black_net,
                                 Rng& rng);

// Line-delimited episode log records.
struct GameLog {
  long id = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint16_t> actions;
  std::vector<double> rewards;
  GameStatus status;
  int length = 0;
};

GameLog to_game_log(const EpisodeRecord&, long id, std::uint64_t seed);
void write_game_log(std::ostream&, const GameLog&);
GameLog parse_game_log(const std::string& line);

// Replays a log from the initial position, visiting every position from the
// start through the final one: fn(board, ply).
void replay_game(const GameLog&, const std::function<void(const Board&, int)>& fn);

}  // namespace gardner
