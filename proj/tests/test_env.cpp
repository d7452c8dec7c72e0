#include "doctest.h"

#include <cmath>
#include <sstream>

#include "gardner/env.hpp"
#include "oracles.hpp"

using namespace gardner;

namespace {

// Material difference of the final position a record telescopes to.
double final_material(const EpisodeRecord& rec, Color c) {
  const ActionTable& table = ActionTable::instance();
  Board b = Board::initial();
  for (std::size_t ply = 0; ply < rec.actions.size(); ++ply) {
    const Move m = table.materialize(rec.actions[ply], b);
    b = apply_move(b, m).board;
  }
  return material_score(b, c) / 1000.0;
}

}  // namespace

TEST_SUITE_BEGIN("env");

TEST_CASE("shaped reward: knight capture, king capture, quiet move") {
  Board quiet = Board::initial();
  const auto quiet_step = apply_move(quiet, legal_moves(quiet)[0]);
  CHECK(shaped_reward(quiet, quiet_step.board, Color::White) == 0.0);

  Board knight = board_from_text(
      "...nk\n"
      ".....\n"
      "..N..\n"
      ".....\n"
      "....K\n"
      "w 12");
  const auto nstep =
      apply_move(knight, Move{square_from_name("c3"), square_from_name("d5"), std::nullopt});
  CHECK(shaped_reward(knight, nstep.board, Color::White) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(shaped_reward(knight, nstep.board, Color::Black) == doctest::Approx(-0.3).epsilon(1e-12));

  Board royal = board_from_text(
      "...k.\n"
      "...Q.\n"
      ".....\n"
      ".....\n"
      "K....\n"
      "w 30");
  const auto kstep =
      apply_move(royal, Move{square_from_name("d4"), square_from_name("d5"), std::nullopt});
  CHECK(shaped_reward(royal, kstep.board, Color::White) == doctest::Approx(60.0).epsilon(1e-12));
}

TEST_CASE("random episodes terminate within the cap") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    RandomPolicy w, b;
    const auto rec = play_episode(w, b, rng, false, false);
    CHECK(rec.status.outcome != GameStatus::Outcome::Ongoing);
    CHECK(rec.length <= kHalfMoveCap);
    CHECK(rec.length == static_cast<int>(rec.actions.size()));
  }
}

TEST_CASE("telescoping: learner reward sums to its final material difference") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    RandomPolicy w, b;
    const bool learner_white = trial % 2 == 0;
    const auto rec = play_episode(w, b, rng, learner_white, !learner_white);
    const Color c = learner_white ? Color::White : Color::Black;
    const double total = rec.reward_sum(c);
    CHECK(std::abs(total - final_material(rec, c)) < 1e-9);
    // done appears exactly once, on the last transition
    const auto& ts = learner_white ? rec.white : rec.black;
    REQUIRE(!ts.empty());
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) CHECK(!ts[i].done);
    CHECK(ts.back().done);
  }
}

TEST_CASE("multi-agent episodes are zero-sum and both sides see done") {
  auto white_net = Network<float>::initialized(4, 8, ActionTable::instance().size(), 0.0, 1);
  auto black_net = Network<float>::initialized(4, 8, ActionTable::instance().size(), 0.0, 2);
  Rng rng(43);
  for (int trial = 0; trial < 12; ++trial) {
    const auto rec = play_episode_multi(white_net, black_net, rng);
    CHECK(std::abs(rec.reward_sum(Color::White) + rec.reward_sum(Color::Black)) < 1e-9);
    REQUIRE(!rec.white.empty());
    REQUIRE(!rec.black.empty());
    CHECK(rec.white.back().done);
    CHECK(rec.black.back().done);
    // transition counts differ by at most one
    const auto diff = static_cast<long>(rec.white.size()) - static_cast<long>(rec.black.size());
    CHECK(std::abs(diff) <= 1);
    // every stored action is legal in its own observation
    for (const auto& t : rec.white) CHECK(t.obs.is_legal(t.action));
    for (const auto& t : rec.black) CHECK(t.obs.is_legal(t.action));
  }
}

TEST_CASE("single-agent learner records only its side, against both opponents") {
  auto learner = Network<float>::initialized(4, 8, ActionTable::instance().size(), 0.0, 3);
  auto frozen = Network<float>::initialized(4, 8, ActionTable::instance().size(), 0.0, 4);
  Rng rng(44);

  const auto vs_random =
      play_episode_single(learner, OpponentSpec::random(), Color::White, rng);
  CHECK(!vs_random.white.empty());
  CHECK(vs_random.black.empty());
  CHECK(std::abs(vs_random.reward_sum(Color::White) - final_material(vs_random, Color::White)) <
        1e-9);

  const auto as_black =
      play_episode_single(learner, OpponentSpec::network(frozen, 0.5), Color::Black, rng);
  CHECK(!as_black.black.empty());
  CHECK(as_black.white.empty());
  CHECK(std::abs(as_black.reward_sum(Color::Black) - final_material(as_black, Color::Black)) <
        1e-9);
}

TEST_CASE("epsilon_mix_action: pure cases") {
  Rng rng(45);
  std::vector<double> probs = {0.0, 0.1, 0.0, 0.6, 0.3, 0.0};
  std::vector<std::uint8_t> mask = {0, 1, 0, 1, 1, 0};
  // epsilon 0: argmax of the masked policy
  for (int i = 0; i < 20; ++i) CHECK(epsilon_mix_action(probs, mask, 0.0, rng) == 3);
  // epsilon 1: uniform over legal actions
  std::vector<int> counts(6, 0);
  const int draws = 30000;
  for (int i = 0; i < draws; ++i) ++counts[epsilon_mix_action(probs, mask, 1.0, rng)];
  CHECK(counts[0] == 0);
  CHECK(counts[2] == 0);
  CHECK(counts[5] == 0);
  for (int a : {1, 3, 4}) {
    CHECK(std::abs(counts[a] / static_cast<double>(draws) - 1.0 / 3.0) < 0.02);
  }
}

TEST_CASE("epsilon_mix_action: empirical uniform-branch rate at epsilon 0.5") {
  Rng rng(46);
  std::vector<double> probs = {0.05, 0.9, 0.05};
  std::vector<std::uint8_t> mask = {1, 1, 1};
  const int draws = 10000;
  int non_argmax = 0;
  for (int i = 0; i < draws; ++i) {
    if (epsilon_mix_action(probs, mask, 0.5, rng) != 1) ++non_argmax;
  }
  // A non-argmax pick means the uniform branch fired and avoided the argmax,
  // so its frequency is epsilon * 2/3.
  const double implied_epsilon = non_argmax / static_cast<double>(draws) * 3.0 / 2.0;
  CHECK(std::abs(implied_epsilon - 0.5) < 0.02);
}

TEST_CASE("epsilon_mix_action rejects an all-zero mask") {
  Rng rng(47);
  std::vector<double> probs = {0.5, 0.5};
  std::vector<std::uint8_t> mask = {0, 0};
  CHECK_THROWS_AS(epsilon_mix_action(probs, mask, 0.5, rng), ContractError);
}

TEST_CASE("game log round-trip and replay") {
  Rng rng(48);
  RandomPolicy w, b;
  const auto rec = play_episode(w, b, rng, true, false);
  const auto log = to_game_log(rec, 17, 0xabcdULL);
  std::ostringstream out;
  write_game_log(out, log);
  const auto parsed = parse_game_log(out.str());
  CHECK(parsed.id == 17);
  CHECK(parsed.seed == 0xabcdULL);
  CHECK(parsed.actions == log.actions);
  CHECK(parsed.rewards == log.rewards);
  CHECK(parsed.status == log.status);
  CHECK(parsed.length == log.length);

  int visited = 0;
  replay_game(parsed, [&](const Board& board, int ply) {
    CHECK(ply == visited);
    if (ply == 0) CHECK(board == Board::initial());
    ++visited;
  });
  CHECK(visited == log.length + 1);
}

TEST_CASE("same seed reproduces an episode exactly") {
  auto net = Network<float>::initialized(4, 8, ActionTable::instance().size(), 0.0, 9);
  Rng r1(99), r2(99);
  const auto a = play_episode_single(net, OpponentSpec::random(), Color::White, r1);
  const auto b = play_episode_single(net, OpponentSpec::random(), Color::White, r2);
  CHECK(a.actions == b.actions);
  CHECK(a.status == b.status);
  REQUIRE(a.white.size() == b.white.size());
  for (std::size_t i = 0; i < a.white.size(); ++i) {
    CHECK(a.white[i].action == b.white[i].action);
    CHECK(a.white[i].log_prob == b.white[i].log_prob);
    CHECK(a.white[i].reward == b.white[i].reward);
  }
}

TEST_SUITE_END();
