#include "gardner/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace gardner {

void PpoConfig::validate() const {
  GARDNER_CHECK(gamma >= 0.0 && gamma <= 1.0);
  GARDNER_CHECK(lambda >= 0.0 && lambda <= 1.0);
  GARDNER_CHECK(clip_ratio > 0.0);
  GARDNER_CHECK(std::isfinite(learning_rate) && learning_rate >= 0.0);
  GARDNER_CHECK(train_batch >= 1 && minibatch >= 1);
  GARDNER_CHECK_MSG(train_batch % minibatch == 0, "minibatch must divide train_batch");
  GARDNER_CHECK(epochs_per_batch >= 1);
  GARDNER_CHECK(std::isfinite(entropy_coef) && std::isfinite(value_coef));
  GARDNER_CHECK(iteration_steps >= train_batch);
  GARDNER_CHECK_MSG(iteration_steps % train_batch == 0,
                    "train_batch must divide iteration_steps");
}

GaeOut gae_advantages(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double gamma, double lambda,
                      double bootstrap_value) {
  const std::size_t n = rewards.size();
  GARDNER_CHECK(values.size() == n && dones.size() == n);
  GaeOut out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double carry = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_value = dones[i] ? 0.0 : (i + 1 < n ? values[i + 1] : bootstrap_value);
    const double delta = rewards[i] + gamma * next_value - values[i];
    carry = dones[i] ? delta : delta + gamma * lambda * carry;
    out.advantages[i] = carry;
    out.returns[i] = carry + values[i];
  }
  return out;
}

void normalize_advantages(std::span<double> advantages) {
  const std::size_t n = advantages.size();
  if (n == 0) return;
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  const double inv = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& a : advantages) a = (a - mean) * inv;
}

PpoLossStats ppo_loss(const Network<float>& net, std::span<const Transition> transitions,
                      std::span<const int> indices, std::span<const double> advantages,
                      std::span<const double> returns, const PpoConfig& config,
                      std::vector<float>& grads, std::vector<double>* ratios_out) {
  const int b = static_cast<int>(indices.size());
  GARDNER_CHECK(b >= 1);

  // Batched eval-mode forward over the selected observations.
  std::vector<float> planes(static_cast<std::size_t>(b) * kNumSquares);
  for (int i = 0; i < b; ++i) {
    const auto& obs = transitions[indices[i]].obs;
    std::copy(obs.plane.begin(), obs.plane.end(), planes.begin() + i * kNumSquares);
  }
  Network<float>::Cache cache;
  net.forward(planes, b, Network<float>::Mode::Eval, nullptr, cache);

  PpoLossStats stats;
  std::vector<std::vector<Network<float>::LogitGrad>> dlogits(b);
  std::vector<float> dvalue(b, 0.0f);
  std::vector<float> legal_logits;
  if (ratios_out) ratios_out->assign(b, 0.0);

  const double eps = config.clip_ratio;
  const double inv_b = 1.0 / b;
  for (int i = 0; i < b; ++i) {
    const Transition& t = transitions[indices[i]];
    const double adv = advantages[indices[i]];
    const double ret = returns[indices[i]];
    const auto& legal = t.obs.legal;

    legal_logits.resize(legal.size());
    net.policy_logits(cache, i, legal, legal_logits);
    const auto probs = masked_probabilities(legal_logits);

    // position of the taken action in the sorted legal list
    const auto it = std::lower_bound(legal.begin(), legal.end(),
                                     static_cast<std::uint16_t>(t.action));
    GARDNER_CHECK_MSG(it != legal.end() && *it == t.action, "stored action not legal in its mask");
    const int slot = static_cast<int>(it - legal.begin());

    const double new_log_prob = std::log(probs[slot]);
    const double ratio = std::exp(new_log_prob - t.log_prob);
    if (ratios_out) (*ratios_out)[i] = ratio;

    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    const double surrogate = std::min(unclipped, clipped);
    // Per-sample clip bound: the surrogate never escapes the candidate set.
    const double lo = std::min({unclipped, (1.0 - eps) * adv, (1.0 + eps) * adv});
    const double hi = std::max({unclipped, (1.0 - eps) * adv, (1.0 + eps) * adv});
    GARDNER_CHECK(surrogate >= lo - 1e-9 && surrogate <= hi + 1e-9);
    stats.policy_loss -= surrogate * inv_b;

    double entropy = 0.0;
    for (double p : probs) entropy -= p * std::log(std::max(p, 1e-300));
    stats.entropy += entropy * inv_b;
    stats.kl += (t.log_prob - new_log_prob) * inv_b;

    const double value = net.value(cache, i);
    const double verr = value - ret;
    stats.value_loss += verr * verr * inv_b;
    dvalue[i] = static_cast<float>(config.value_coef * 2.0 * verr * inv_b);

    // d(-surrogate)/dlogits: gradient flows through the unclipped branch when
    // it is active (ratio inside the clip window counts as active).
    const bool pass_through = ratio >= 1.0 - eps && ratio <= 1.0 + eps;
    const double dsurr_dlogp = (pass_through || unclipped <= clipped) ? ratio * adv : 0.0;
    auto& grads_i = dlogits[i];
    grads_i.reserve(legal.size());
    for (std::size_t s = 0; s < legal.size(); ++s) {
      // dlogp(a_taken)/dlogit_s = [s == slot] - p_s over the legal set
      const double dlogp = (static_cast<int>(s) == slot ? 1.0 : 0.0) - probs[s];
      double dl = -inv_b * dsurr_dlogp * dlogp;
      if (config.entropy_coef != 0.0) {
        const double logp = std::log(std::max(probs[s], 1e-300));
        dl += inv_b * config.entropy_coef * probs[s] * (logp + entropy);
      }
      if (dl != 0.0) {
        grads_i.push_back({legal[s], static_cast<float>(dl)});
      }
    }
  }

  stats.total = stats.policy_loss + config.value_coef * stats.value_loss -
                config.entropy_coef * stats.entropy;
  if (!std::isfinite(stats.total)) {
    throw std::runtime_error(
        "non-finite loss (policy=" + std::to_string(stats.policy_loss) +
        ", value=" + std::to_string(stats.value_loss) + ", entropy=" + std::to_string(stats.entropy) +
        ")");
  }

  net.backward(cache, dlogits, dvalue, grads);
  return stats;
}

RolloutCollector::RolloutCollector(const Network<float>& learner, Color learner_color,
                                   OpponentSpec opponent, std::uint64_t seed)
    : learner_(&learner),
      learner_color_(learner_color),
      opponent_spec_(opponent),
      seed_(seed),
      bootstrap_eval_(learner) {}

RolloutCollector::~RolloutCollector() = default;

void RolloutCollector::start_episode() {
  episode_rng_ = std::make_unique<Rng>(mix_seed(seed_, "episode", episodes_started_));
  ++episodes_started_;
  board_ = Board::initial();
  opponent_ = make_opponent_policy(opponent_spec_);
  learner_policy_ = std::make_unique<SamplingNetPolicy>(*learner_);
  pending_ = 0.0;
  episode_reward_ = 0.0;
  episode_active_ = true;

  // When the learner plays black the opponent opens the game.
  if (learner_color_ == Color::Black) {
    const auto moves = legal_moves(board_);
    Observation obs;
    if (opponent_->needs_observation()) obs = observe(board_, Color::White);
    const int idx = opponent_->choose(board_, moves, obs, *episode_rng_, nullptr, nullptr);
    const auto step = apply_move(board_, moves[idx]);
    // The opening move cannot end the game or change material from the
    // initial position, but fold the swing in for robustness.
    pending_ -= shaped_reward(board_, step.board, Color::White);
    board_ = step.board;
  }
}

void RolloutCollector::step_once(Batch& batch) {
  if (!episode_active_) start_episode();

  // Learner's move.
  const auto moves = legal_moves(board_);
  Observation obs = observe(board_, learner_color_);
  double log_prob = 0.0, value = 0.0;
  const int idx =
      learner_policy_->choose(board_, moves, obs, *episode_rng_, &log_prob, &value);
  const Move move = moves[idx];
  const auto step = apply_move(board_, move);

  Transition t;
  t.action = ActionTable::instance().encode(move, learner_color_);
  t.log_prob = log_prob;
  t.value = value;
  t.reward = pending_ + shaped_reward(board_, step.board, learner_color_);
  t.obs = std::move(obs);
  pending_ = 0.0;

  if (step.status.is_terminal()) {
    t.done = true;
    episode_active_ = false;
    board_ = step.board;
  } else {
    // Opponent's reply; its swing lands in the same transition.
    const Board mid = step.board;
    const auto opp_moves = legal_moves(mid);
    Observation opp_obs;
    if (opponent_->needs_observation()) opp_obs = observe(mid, opponent(learner_color_));
    const int opp_idx =
        opponent_->choose(mid, opp_moves, opp_obs, *episode_rng_, nullptr, nullptr);
    const auto opp_step = apply_move(mid, opp_moves[opp_idx]);
    t.reward += shaped_reward(mid, opp_step.board, learner_color_);
    if (opp_step.status.is_terminal()) {
      t.done = true;
      episode_active_ = false;
    }
    board_ = opp_step.board;
  }

  episode_reward_ += t.reward;
  if (t.done) {
    batch.episode_rewards.push_back(episode_reward_);
    batch.episode_lengths.push_back(board_.half_move_count());
  }
  batch.transitions.push_back(std::move(t));
}

RolloutCollector::Batch RolloutCollector::collect(int steps) {
  Batch batch;
  batch.transitions.reserve(steps);
  for (int i = 0; i < steps; ++i) step_once(batch);
  if (episode_active_) {
    const Observation next = observe(board_, learner_color_);
    batch.bootstrap_value = bootstrap_eval_.evaluate(next.plane, next.legal).value;
  }
  return batch;
}

namespace {

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double mean_of(const std::vector<int>& xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (int x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

}  // namespace

IterationSummary train_iteration(Network<float>& learner, Color learner_color,
                                 const OpponentSpec& opponent, const PpoConfig& config,
                                 std::uint64_t seed, int iteration_index,
                                 const MetricsSink& sink) {
  config.validate();
  RolloutCollector collector(learner, learner_color, opponent, mix_seed(seed, "collect"));
  SgdOptimizer sgd{config.learning_rate};
  AdamOptimizer adam;
  adam.lr = config.learning_rate;

  IterationSummary summary;
  std::vector<float> grads;
  std::vector<int> order(config.train_batch);
  const int num_batches = static_cast<int>(config.iteration_steps / config.train_batch);

  for (int batch_index = 0; batch_index < num_batches; ++batch_index) {
    auto batch = collector.collect(config.train_batch);
    const int n = static_cast<int>(batch.transitions.size());

    std::vector<double> rewards(n), values(n);
    std::vector<std::uint8_t> dones(n);
    for (int i = 0; i < n; ++i) {
      rewards[i] = batch.transitions[i].reward;
      values[i] = batch.transitions[i].value;
      dones[i] = batch.transitions[i].done ? 1 : 0;
    }
    auto gae = gae_advantages(rewards, values, dones, config.gamma, config.lambda,
                              batch.bootstrap_value);
    if (config.normalize_advantages) normalize_advantages(gae.advantages);

    Rng update_rng(mix_seed(seed, "update", batch_index));
    std::iota(order.begin(), order.end(), 0);
    PpoLossStats accum;
    int updates = 0;
    for (int epoch = 0; epoch < config.epochs_per_batch; ++epoch) {
      update_rng.shuffle(std::span<int>(order));
      for (int at = 0; at < n; at += config.minibatch) {
        const std::span<const int> mb(order.data() + at,
                                      std::min(config.minibatch, n - at));
        const auto stats = ppo_loss(learner, batch.transitions, mb, gae.advantages, gae.returns,
                                    config, grads);
        if (config.optimizer == PpoConfig::Optimizer::Adam) {
          adam.step(learner.trainable(), grads);
        } else {
          sgd.step(learner.trainable(), grads);
        }
        accum.policy_loss += stats.policy_loss;
        accum.value_loss += stats.value_loss;
        accum.entropy += stats.entropy;
        accum.kl += stats.kl;
        ++updates;
      }
    }

    summary.steps += n;
    summary.episodes += static_cast<long>(batch.episode_rewards.size());

    MetricsRow row;
    row.iteration = iteration_index;
    row.steps = summary.steps;
    row.mean_episode_reward = mean_of(batch.episode_rewards);
    row.mean_episode_length = mean_of(batch.episode_lengths);
    row.policy_loss = accum.policy_loss / updates;
    row.value_loss = accum.value_loss / updates;
    row.entropy = accum.entropy / updates;
    row.kl_estimate = accum.kl / updates;
    summary.final_mean_episode_reward = row.mean_episode_reward;
    summary.rows.push_back(row);
    if (sink) sink(row);
  }
  return summary;
}

std::string metrics_csv_header() {
  return "phase,iteration,steps,mean_episode_reward,mean_episode_length,policy_loss,value_loss,"
         "entropy,kl_estimate,val_loss";
}

void append_metrics_csv(const std::filesystem::path& path, const MetricsRow& row) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + path.string());
  if (fresh) out << metrics_csv_header() << '\n';
  std::ostringstream line;
  line.precision(17);
  line << row.phase << ',' << row.iteration << ',' << row.steps << ',' << row.mean_episode_reward
       << ',' << row.mean_episode_length << ',' << row.policy_loss << ',' << row.value_loss << ','
       << row.entropy << ',' << row.kl_estimate << ',' << row.val_loss;
  out << line.str() << '\n';
}

}  // namespace gardner
