#include "gardner/env.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

#include "json.hpp"

namespace gardner {

double shaped_reward(const Board& prev, const Board& next, Color mover) {
  return (material_score(next, mover) - material_score(prev, mover)) / 1000.0;
}

int epsilon_mix_action(std::span<const double> masked_probs, std::span<const std::uint8_t> mask,
                       double epsilon, Rng& rng) {
  GARDNER_CHECK(masked_probs.size() == mask.size());
  std::vector<int> legal;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) legal.push_back(static_cast<int>(i));
  }
  GARDNER_CHECK_MSG(!legal.empty(), "epsilon_mix_action with an all-zero mask");
  if (rng.next_double() < epsilon) {
    return legal[rng.next_index(static_cast<int>(legal.size()))];
  }
  int best = legal[0];
  for (int a : legal) {
    if (masked_probs[a] > masked_probs[best]) best = a;
  }
  return best;
}

int RandomPolicy::choose(const Board&, const std::vector<Move>& moves, const Observation&,
                         Rng& rng, double* log_prob, double* value) {
  if (log_prob) *log_prob = -std::log(static_cast<double>(moves.size()));
  if (value) *value = 0.0;
  return rng.next_index(static_cast<int>(moves.size()));
}

namespace {

// Moves arrive in generation order while observations carry sorted action
// ids; pick through the sorted ids and map back to the move list.
std::vector<int> move_index_by_legal_slot(const std::vector<Move>& moves, const Observation& obs,
                                          Color mover) {
  const ActionTable& table = ActionTable::instance();
  std::vector<int> slot_to_move(obs.legal.size(), -1);
  for (std::size_t i = 0; i < moves.size(); ++i) {
    const auto id = static_cast<std::uint16_t>(table.encode(moves[i], mover));
    const auto it = std::lower_bound(obs.legal.begin(), obs.legal.end(), id);
    GARDNER_CHECK(it != obs.legal.end() && *it == id);
    slot_to_move[static_cast<std::size_t>(it - obs.legal.begin())] = static_cast<int>(i);
  }
  return slot_to_move;
}

}  // namespace

int SamplingNetPolicy::choose(const Board& b, const std::vector<Move>& moves,
                              const Observation& obs, Rng& rng, double* log_prob, double* value) {
  const auto out = eval_.evaluate(obs.plane, obs.legal);
  const auto probs = masked_probabilities(out.legal_logits);
  const int slot = rng.next_categorical(probs);
  if (log_prob) *log_prob = std::log(probs[slot]);
  if (value) *value = out.value;
  const auto slot_to_move = move_index_by_legal_slot(moves, obs, b.side_to_move());
  return slot_to_move[slot];
}

int ArgmaxNetPolicy::choose(const Board& b, const std::vector<Move>& moves, const Observation& obs,
                            Rng& rng, double* log_prob, double* value) {
  const auto out = eval_.evaluate(obs.plane, obs.legal);
  const auto probs = masked_probabilities(out.legal_logits);
  int slot;
  if (epsilon_ > 0.0 && rng.next_double() < epsilon_) {
    slot = rng.next_index(static_cast<int>(probs.size()));
  } else {
    slot = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
      if (probs[i] > probs[slot]) slot = static_cast<int>(i);
    }
  }
  if (log_prob) *log_prob = std::log(std::max(probs[slot], 1e-300));
  if (value) *value = out.value;
  const auto slot_to_move = move_index_by_legal_slot(moves, obs, b.side_to_move());
  return slot_to_move[slot];
}

std::unique_ptr<Policy> make_opponent_policy(const OpponentSpec& spec) {
  if (spec.kind == OpponentSpec::Kind::Random) {
    return std::make_unique<RandomPolicy>();
  }
  GARDNER_CHECK(spec.net != nullptr);
  GARDNER_CHECK(spec.epsilon >= 0.0 && spec.epsilon <= 1.0);
  return std::make_unique<ArgmaxNetPolicy>(*spec.net, spec.epsilon);
}

EpisodeRecord play_episode(Policy& white, Policy& black, Rng& rng, bool record_white,
                           bool record_black) {
  const ActionTable& table = ActionTable::instance();
  EpisodeRecord rec;
  Board board = Board::initial();

  // Swings owed to a side before it has recorded its first transition.
  double pending[2] = {0.0, 0.0};
  Transition* open[2] = {nullptr, nullptr};
  const bool recorded[2] = {record_white, record_black};
  auto transitions = [&](Color c) -> std::vector<Transition>& {
    return c == Color::White ? rec.white : rec.black;
  };

  for (;;) {
    const Color mover = board.side_to_move();
    Policy& policy = mover == Color::White ? white : black;
    const auto moves = legal_moves(board);
    const bool want_obs = recorded[static_cast<int>(mover)] || policy.needs_observation();
    Observation obs;
    if (want_obs) obs = observe(board, mover);

    double log_prob = 0.0, value = 0.0;
    const int idx = policy.choose(board, moves, obs, rng, &log_prob, &value);
    const Move move = moves[idx];
    const auto step = apply_move(board, move);
    const double swing = shaped_reward(board, step.board, mover);

    rec.actions.push_back(static_cast<std::uint16_t>(table.encode(move, mover)));
    rec.mover_rewards.push_back(swing);

    if (recorded[static_cast<int>(mover)]) {
      auto& list = transitions(mover);
      Transition t;
      t.obs = std::move(obs);
      t.action = table.encode(move, mover);
      t.log_prob = log_prob;
      t.value = value;
      t.reward = pending[static_cast<int>(mover)] + swing;
      pending[static_cast<int>(mover)] = 0.0;
      list.push_back(std::move(t));
      open[static_cast<int>(mover)] = &list.back();
    }
    // The opponent sees the negated swing.
    const int opp = static_cast<int>(opponent(mover));
    if (recorded[opp]) {
      if (open[opp]) {
        open[opp]->reward -= swing;
      } else {
        pending[opp] -= swing;
      }
    }

    if (step.status.is_terminal()) {
      rec.status = step.status;
      rec.length = step.board.half_move_count();
      for (int c = 0; c < 2; ++c) {
        if (open[c]) open[c]->done = true;
      }
      break;
    }
    board = step.board;
  }
  return rec;
}

EpisodeRecord play_episode_single(const Network<float>& learner, const OpponentSpec& opponent_spec,
                                  Color learner_color, Rng& rng) {
  SamplingNetPolicy learner_policy(learner);
  auto opponent_policy = make_opponent_policy(opponent_spec);
  Policy& white = learner_color == Color::White ? static_cast<Policy&>(learner_policy)
                                                : *opponent_policy;
  Policy& black = learner_color == Color::White ? *opponent_policy
                                                : static_cast<Policy&>(learner_policy);
  return play_episode(white, black, rng, learner_color == Color::White,
                      learner_color == Color::Black);
}

EpisodeRecord play_episode_multi(const Network<float>& white_net, const Network<float>& black_net,
                                 Rng& rng) {
  SamplingNetPolicy white(white_net);
  SamplingNetPolicy black(black_net);
  return play_episode(white, black, rng, true, true);
}

GameLog to_game_log(const EpisodeRecord& rec, long id, std::uint64_t seed) {
  GameLog log;
  log.id = id;
  log.seed = seed;
  log.actions = rec.actions;
  log.rewards = rec.mover_rewards;
  log.status = rec.status;
  log.length = rec.length;
  return log;
}

void write_game_log(std::ostream& out, const GameLog& log) {
  nlohmann::json j;
  j["id"] = log.id;
  j["seed"] = log.seed;
  j["moves"] = log.actions;
  j["rewards"] = log.rewards;
  j["status"] = outcome_name(log.status.outcome);
  j["cause"] = cause_name(log.status.cause);
  j["length"] = log.length;
  out << j.dump() << '\n';
}

GameLog parse_game_log(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  GameLog log;
  log.id = j.at("id").get<long>();
  log.seed = j.at("seed").get<std::uint64_t>();
  log.actions = j.at("moves").get<std::vector<std::uint16_t>>();
  log.rewards = j.at("rewards").get<std::vector<double>>();
  log.status.outcome = outcome_from_name(j.at("status").get<std::string>());
  log.status.cause = cause_from_name(j.at("cause").get<std::string>());
  log.length = j.at("length").get<int>();
  return log;
}

void replay_game(const GameLog& log, const std::function<void(const Board&, int)>& fn) {
  const ActionTable& table = ActionTable::instance();
  Board board = Board::initial();
  fn(board, 0);
  for (std::size_t ply = 0; ply < log.actions.size(); ++ply) {
    const Move move = table.materialize(log.actions[ply], board);
    const auto step = apply_move(board, move);
    fn(step.board, static_cast<int>(ply) + 1);
    if (step.status.is_terminal()) {
      GARDNER_CHECK_MSG(ply + 1 == log.actions.size(), "terminal mid-log");
      return;
    }
    board = step.board;
  }
}

}  // namespace gardner
