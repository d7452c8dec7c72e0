#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gardner/env.hpp"
#include "gardner/net.hpp"

namespace gardner {

struct PpoConfig {
  double gamma = 0.3;
  double lambda = 1.0;
  double clip_ratio = 0.2;
  double learning_rate = 1e-5;
  int train_batch = 1000;       // steps collected per update round
  int minibatch = 100;          // must divide train_batch
  int epochs_per_batch = 4;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  long iteration_steps = 50000;  // total steps per training iteration
  bool normalize_advantages = true;
  enum class Optimizer { Sgd, Adam } optimizer = Optimizer::Sgd;

  void validate() const;
};

// GAE(gamma, lambda) over arrays that may span several episodes; `dones`
// cuts the recursion and zeroes the bootstrap at episode ends. The final
// element bootstraps with `bootstrap_value` when not done.
struct GaeOut {
  std::vector<double> advantages;
  std::vector<double> returns;
};
GaeOut gae_advantages(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double gamma, double lambda,
                      double bootstrap_value);

// In-place mean-0 std-1 normalization (no-op on empty input).
void normalize_advantages(std::span<double> advantages);

struct PpoLossStats {
  double policy_loss = 0.0;   // -clipped surrogate
  double value_loss = 0.0;    // mean squared value error (before value_coef)
  double entropy = 0.0;       // mean masked-policy entropy
  double kl = 0.0;            // mean(old_log_prob - new_log_prob)
  double total = 0.0;
};

// Loss and exact gradients for one minibatch (indices into `transitions`).
// The forward pass runs in eval mode so that redoing it right after
// collection reproduces the stored log-probabilities. Throws on non-finite
// loss. `ratios_out`, when given, receives the per-sample importance ratios.
PpoLossStats ppo_loss(const Network<float>& net, std::span<const Transition> transitions,
                      std::span<const int> indices, std::span<const double> advantages,
                      std::span<const double> returns, const PpoConfig& config,
                      std::vector<float>& grads, std::vector<double>* ratios_out = nullptr);

// Streaming single-agent rollout source. Episodes persist across batch
// boundaries; each episode draws from its own seed-derived rng stream.
class RolloutCollector {
 public:
  RolloutCollector(const Network<float>& learner, Color learner_color, OpponentSpec opponent,
                   std::uint64_t seed);
  ~RolloutCollector();

  struct Batch {
    std::vector<Transition> transitions;
    double bootstrap_value = 0.0;  // value of the next state when truncated mid-episode
    std::vector<double> episode_rewards;  // learner reward sums of episodes finished in-batch
    std::vector<int> episode_lengths;     // half-move lengths of those episodes
  };
  Batch collect(int steps);

  long episodes_started() const { return episodes_started_; }

 private:
  void start_episode();
  // Plays learner move + opponent reply, appending one settled transition.
  void step_once(Batch& batch);

  const Network<float>* learner_;
  Color learner_color_;
  OpponentSpec opponent_spec_;
  std::uint64_t seed_;
  long episodes_started_ = 0;

  // live episode state
  bool episode_active_ = false;
  Board board_;
  std::unique_ptr<Rng> episode_rng_;
  std::unique_ptr<Policy> opponent_;
  std::unique_ptr<SamplingNetPolicy> learner_policy_;
  NetEvaluator bootstrap_eval_;
  double pending_ = 0.0;        // opponent swings before the learner's first move
  double episode_reward_ = 0.0;
};

struct MetricsRow {
  std::string phase = "train";
  int iteration = 0;
  long steps = 0;
  double mean_episode_reward = 0.0;
  double mean_episode_length = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl_estimate = 0.0;
  double val_loss = 0.0;  // pretraining validation loss; unused for RL rows
};

using MetricsSink = std::function<void(const MetricsRow&)>;

struct IterationSummary {
  long steps = 0;
  long episodes = 0;
  double final_mean_episode_reward = 0.0;
  std::vector<MetricsRow> rows;
};

// One training iteration: repeat {collect train_batch steps, GAE, several
// epochs of minibatch updates} until iteration_steps, emitting one metrics
// row per train batch. Deterministic for a fixed seed.
IterationSummary train_iteration(Network<float>& learner, Color learner_color,
                                 const OpponentSpec& opponent, const PpoConfig& config,
                                 std::uint64_t seed, int iteration_index,
                                 const MetricsSink& sink = nullptr);

void append_metrics_csv(const std::filesystem::path&, const MetricsRow&);
std::string metrics_csv_header();

}  // namespace gardner
