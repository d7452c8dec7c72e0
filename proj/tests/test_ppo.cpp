#include "doctest.h"

#include <cmath>
#include <numeric>

#include "gardner/ppo.hpp"
#include "oracles.hpp"

using namespace gardner;

namespace {

PpoConfig small_config() {
  PpoConfig cfg;
  cfg.gamma = 0.3;
  cfg.lambda = 1.0;
  cfg.train_batch = 200;
  cfg.minibatch = 50;
  cfg.epochs_per_batch = 2;
  cfg.iteration_steps = 400;
  cfg.learning_rate = 1e-4;
  return cfg;
}

Network<float> small_net(std::uint64_t seed) {
  return Network<float>::initialized(6, 12, ActionTable::instance().size(), 0.0, seed);
}

}  // namespace

TEST_SUITE_BEGIN("ppo");

TEST_CASE("gae: lambda 0 collapses to the one-step temporal difference") {
  const std::vector<double> rewards = {0.5, -1.0, 2.0, 0.25};
  const std::vector<double> values = {0.1, 0.2, -0.4, 0.6};
  const std::vector<std::uint8_t> dones = {0, 0, 0, 0};
  const double boot = 0.9, gamma = 0.7;
  const auto out = gae_advantages(rewards, values, dones, gamma, 0.0, boot);
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    const double next = t + 1 < rewards.size() ? values[t + 1] : boot;
    CHECK(out.advantages[t] == doctest::Approx(rewards[t] + gamma * next - values[t]).epsilon(1e-15));
    CHECK(out.returns[t] == doctest::Approx(out.advantages[t] + values[t]).epsilon(1e-15));
  }
}

TEST_CASE("gae: lambda 1 with zero values is the discounted reward-to-go") {
  const std::vector<double> rewards = {1.0, 2.0, 3.0, -4.0};
  const std::vector<double> values = {0.0, 0.0, 0.0, 0.0};
  const std::vector<std::uint8_t> dones = {0, 0, 0, 1};
  const double gamma = 0.9;
  const auto out = gae_advantages(rewards, values, dones, gamma, 1.0, 0.0);
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    double to_go = 0.0;
    for (std::size_t u = rewards.size(); u-- > t;) to_go = rewards[u] + gamma * to_go;
    CHECK(out.advantages[t] == doctest::Approx(to_go).epsilon(1e-15));
  }
}

TEST_CASE("gae hand case matches the frozen double-loop values") {
  const std::vector<double> rewards = {1.0, 0.0, 2.0};
  const std::vector<double> values = {0.5, 0.1, -0.2};
  const std::vector<std::uint8_t> dones = {0, 0, 1};
  const auto out = gae_advantages(rewards, values, dones, 0.9, 0.8, 0.0);
  // delta = (0.59, -0.28, 2.2); gamma*lambda = 0.72
  CHECK(std::abs(out.advantages[2] - 2.2) < 1e-12);
  CHECK(std::abs(out.advantages[1] - 1.304) < 1e-12);
  CHECK(std::abs(out.advantages[0] - 1.52888) < 1e-12);
  const auto oracle = oracle::gae_double_loop(rewards, values, dones, 0.9, 0.8, 0.0);
  for (int t = 0; t < 3; ++t) {
    CHECK(std::abs(out.advantages[t] - oracle.advantages[t]) < 1e-12);
    CHECK(std::abs(out.returns[t] - oracle.returns[t]) < 1e-12);
  }
}

TEST_CASE("gae agrees with the double-loop oracle on random trajectories") {
  Rng rng(404);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + rng.next_index(40);
    std::vector<double> rewards(n), values(n);
    std::vector<std::uint8_t> dones(n, 0);
    for (int i = 0; i < n; ++i) {
      rewards[i] = (rng.next_double() - 0.5) * 10.0;
      values[i] = (rng.next_double() - 0.5) * 5.0;
      dones[i] = rng.next_double() < 0.15;
    }
    const double gamma = rng.next_double();
    const double lambda = rng.next_double();
    const double boot = (rng.next_double() - 0.5) * 4.0;
    const auto fast = gae_advantages(rewards, values, dones, gamma, lambda, boot);
    const auto slow = oracle::gae_double_loop(rewards, values, dones, gamma, lambda, boot);
    for (int t = 0; t < n; ++t) {
      CHECK(std::abs(fast.advantages[t] - slow.advantages[t]) < 1e-10);
      CHECK(std::abs(fast.returns[t] - slow.returns[t]) < 1e-10);
    }
  }
}

TEST_CASE("advantage normalization: mean 0, std 1") {
  Rng rng(405);
  std::vector<double> adv(500);
  for (auto& a : adv) a = rng.next_double() * 20.0 - 3.0;
  normalize_advantages(adv);
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= adv.size();
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= adv.size();
  CHECK(std::abs(mean) < 1e-9);
  CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-6);
}

TEST_CASE("first-epoch importance ratios are exactly one") {
  auto net = small_net(21);
  RolloutCollector collector(net, Color::White, OpponentSpec::random(), 777);
  auto batch = collector.collect(120);
  std::vector<double> rewards, values;
  std::vector<std::uint8_t> dones;
  for (const auto& t : batch.transitions) {
    rewards.push_back(t.reward);
    values.push_back(t.value);
    dones.push_back(t.done);
  }
  auto gae = gae_advantages(rewards, values, dones, 0.3, 1.0, batch.bootstrap_value);
  normalize_advantages(gae.advantages);

  PpoConfig cfg = small_config();
  std::vector<int> indices(batch.transitions.size());
  std::iota(indices.begin(), indices.end(), 0);
  std::vector<float> grads;
  std::vector<double> ratios;
  const auto stats = ppo_loss(net, batch.transitions, indices, gae.advantages, gae.returns, cfg,
                              grads, &ratios);
  for (double r : ratios) CHECK(std::abs(r - 1.0) < 1e-6);
  // With every ratio 1 the surrogate mean equals the mean advantage (zero
  // after normalization).
  double mean_adv = 0.0;
  for (std::size_t i = 0; i < gae.advantages.size(); ++i) mean_adv += gae.advantages[i];
  mean_adv /= gae.advantages.size();
  CHECK(std::abs(-stats.policy_loss - mean_adv) < 1e-6);
  CHECK(std::abs(stats.kl) < 1e-9);
}

TEST_CASE("zero advantages produce zero policy gradient") {
  auto net = small_net(22);
  RolloutCollector collector(net, Color::White, OpponentSpec::random(), 778);
  auto batch = collector.collect(40);
  std::vector<double> advantages(batch.transitions.size(), 0.0);
  std::vector<double> returns(batch.transitions.size());
  for (std::size_t i = 0; i < returns.size(); ++i) returns[i] = batch.transitions[i].value;

  PpoConfig cfg = small_config();
  cfg.value_coef = 0.0;  // isolate the policy term
  std::vector<int> indices(batch.transitions.size());
  std::iota(indices.begin(), indices.end(), 0);
  std::vector<float> grads;
  ppo_loss(net, batch.transitions, indices, advantages, returns, cfg, grads);
  for (float g : grads) CHECK(g == 0.0f);
}

TEST_CASE("hand-built clipped surrogate: ratio 1.5, clip 0.2, advantage +1 gives 1.2") {
  auto net = small_net(23);
  RolloutCollector collector(net, Color::White, OpponentSpec::random(), 779);
  auto batch = collector.collect(1);
  REQUIRE(batch.transitions.size() == 1);
  // Force the stored log-prob so the recomputed ratio is exactly 1.5.
  batch.transitions[0].log_prob -= std::log(1.5);

  std::vector<double> advantages = {1.0};
  std::vector<double> returns = {batch.transitions[0].value};  // no value loss
  PpoConfig cfg = small_config();
  cfg.value_coef = 0.0;
  std::vector<int> indices = {0};
  std::vector<float> grads;
  std::vector<double> ratios;
  const auto stats =
      ppo_loss(net, batch.transitions, indices, advantages, returns, cfg, grads, &ratios);
  CHECK(std::abs(ratios[0] - 1.5) < 1e-6);
  CHECK(std::abs(-stats.policy_loss - 1.2) < 1e-6);  // min(1.5, 1.2) * 1
  // The clipped branch is flat: no policy gradient flows.
  for (float g : grads) CHECK(g == 0.0f);
}

TEST_CASE("train_iteration with lr 0 leaves parameters bitwise unchanged") {
  auto net = small_net(24);
  const auto before = net.trainable();
  PpoConfig cfg = small_config();
  cfg.learning_rate = 0.0;
  cfg.iteration_steps = 400;
  const auto summary =
      train_iteration(net, Color::White, OpponentSpec::random(), cfg, 5150, 1);
  CHECK(net.trainable() == before);
  CHECK(summary.steps == 400);
  CHECK(summary.rows.size() == 2);  // iteration_steps / train_batch
}

TEST_CASE("metrics rows carry episode statistics and losses") {
  auto net = small_net(25);
  PpoConfig cfg = small_config();
  const auto summary =
      train_iteration(net, Color::White, OpponentSpec::random(), cfg, 5151, 3);
  CHECK(summary.rows.size() == static_cast<std::size_t>(cfg.iteration_steps / cfg.train_batch));
  for (const auto& row : summary.rows) {
    CHECK(row.iteration == 3);
    CHECK(row.mean_episode_length > 0.0);
    CHECK(row.mean_episode_length <= kHalfMoveCap);
    CHECK(std::isfinite(row.policy_loss));
    CHECK(std::isfinite(row.value_loss));
    CHECK(row.entropy >= 0.0);
  }
  CHECK(summary.rows.back().steps == cfg.iteration_steps);
}

TEST_CASE("identical seeds reproduce an iteration bitwise") {
  auto a = small_net(26);
  auto b = small_net(26);
  PpoConfig cfg = small_config();
  train_iteration(a, Color::White, OpponentSpec::random(), cfg, 31337, 1);
  train_iteration(b, Color::White, OpponentSpec::random(), cfg, 31337, 1);
  CHECK(a.trainable() == b.trainable());
}

TEST_CASE("mean episode reward trends upward against random") {
  // Short directional run: gamma 0.3, lambda 1.0.
  auto net = Network<float>::initialized(8, 16, ActionTable::instance().size(), 0.0, 27);
  PpoConfig cfg;
  cfg.gamma = 0.3;
  cfg.lambda = 1.0;
  cfg.train_batch = 500;
  cfg.minibatch = 100;
  cfg.epochs_per_batch = 4;
  cfg.iteration_steps = 6000;
  cfg.optimizer = PpoConfig::Optimizer::Adam;
  cfg.learning_rate = 3e-4;
  const auto summary = train_iteration(net, Color::White, OpponentSpec::random(), cfg, 606, 1);
  const auto& rows = summary.rows;
  REQUIRE(rows.size() == 12);
  double early = 0.0, late = 0.0;
  for (int i = 0; i < 3; ++i) early += rows[i].mean_episode_reward;
  for (int i = 9; i < 12; ++i) late += rows[i].mean_episode_reward;
  CHECK(late / 3.0 > early / 3.0);
  CHECK(late / 3.0 > 0.0);
}

TEST_SUITE_END();
