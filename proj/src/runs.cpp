#include "gardner/runs.hpp"

#include <fstream>
#include <sstream>

#include "gardner/checkpoint.hpp"
#include "gardner/pretrain.hpp"

namespace gardner {

namespace {

void say(const LogSink& log, const std::string& line) {
  if (log) log(line);
}

std::filesystem::path prepare_workdir(const RunConfig& cfg) {
  const std::filesystem::path dir(cfg.workdir);
  std::filesystem::create_directories(dir / "checkpoints");
  std::filesystem::create_directories(dir / "logs");
  save_config(cfg, dir / "config.json");
  return dir;
}

MetricsSink csv_sink(const std::filesystem::path& dir) {
  const auto path = dir / "metrics.csv";
  return [path](const MetricsRow& row) { append_metrics_csv(path, row); };
}

MatchPolicySpec spec_from_string(const std::string& id, const RunConfig& cfg,
                                 std::vector<std::unique_ptr<Checkpoint>>& owned) {
  if (id == "random") return MatchPolicySpec::random();
  auto ckpt = std::make_unique<Checkpoint>(load_checkpoint_checked(
      id, ActionTable::instance().size(), cfg.net.channels, cfg.net.hidden));
  const Network<float>& net = ckpt->net;
  owned.push_back(std::move(ckpt));
  return MatchPolicySpec::network(id, net);
}

}  // namespace

std::string run_train_single(const RunConfig& cfg, const LogSink& log) {
  cfg.validate();
  const auto dir = prepare_workdir(cfg);
  const int actions = ActionTable::instance().size();

  Network<float> net(cfg.net.channels, cfg.net.hidden, actions, cfg.net.dropout);
  std::uint64_t base_steps = 0;
  if (!cfg.init_checkpoint.empty()) {
    // Warm start: keep the pretrained trunk and value head, fresh policy head.
    auto warm = load_checkpoint_checked(cfg.init_checkpoint, actions, cfg.net.channels,
                                        cfg.net.hidden);
    net = std::move(warm.net);
    auto fresh = Network<float>::initialized(cfg.net.channels, cfg.net.hidden, actions,
                                             cfg.net.dropout, mix_seed(cfg.seed, "policy-head"));
    const auto src_w = fresh.tensor("policy.weight");
    const auto src_b = fresh.tensor("policy.bias");
    auto dst_w = net.tensor("policy.weight");
    auto dst_b = net.tensor("policy.bias");
    std::copy(src_w.begin(), src_w.end(), dst_w.begin());
    std::copy(src_b.begin(), src_b.end(), dst_b.begin());
    base_steps = warm.meta.train_steps;
    say(log, "warm start from " + cfg.init_checkpoint + " (policy head reinitialized)");
  } else {
    net = Network<float>::initialized(cfg.net.channels, cfg.net.hidden, actions, cfg.net.dropout,
                                      mix_seed(cfg.seed, "init-single"));
  }

  const PpoConfig ppo = cfg.ppo.to_ppo_config();
  say(log, "training vs random: " + std::to_string(ppo.iteration_steps) + " steps");
  const auto summary = train_iteration(net, Color::White, OpponentSpec::random(), ppo,
                                       mix_seed(cfg.seed, "train-single"), 1, csv_sink(dir));
  say(log, "finished " + std::to_string(summary.steps) + " steps, " +
               std::to_string(summary.episodes) + " episodes, final mean episode reward " +
               std::to_string(summary.final_mean_episode_reward));

  CheckpointMeta meta = meta_for(net);
  meta.color = Color::White;
  meta.iteration = 1;
  meta.seed = cfg.seed;
  meta.phase = "train";
  meta.opponent = "random";
  meta.train_steps = base_steps + static_cast<std::uint64_t>(summary.steps);
  const auto path = dir / "checkpoints" / "single_agent.ckpt";
  save_checkpoint(Checkpoint{meta, std::move(net)}, path);
  say(log, "checkpoint written to " + path.string());
  return path.string();
}

SelfplayOutcome run_selfplay(const RunConfig& cfg, const LogSink& log) {
  cfg.validate();
  const auto dir = prepare_workdir(cfg);

  PpoConfig ppo = cfg.ppo.to_ppo_config();
  ppo.iteration_steps = cfg.selfplay.iteration_steps;
  SelfplayParams params;
  params.iterations = cfg.selfplay.iterations;
  params.epsilon = cfg.selfplay.epsilon;
  params.eval_games = cfg.selfplay.eval_games;
  params.net_channels = cfg.net.channels;
  params.net_hidden = cfg.net.hidden;
  params.net_dropout = cfg.net.dropout;

  ThreadPool pool(cfg.workers);
  LeagueState league = load_league(dir);
  const int resumed = league.completed_iterations();
  if (resumed > 0) say(log, "resuming league after iteration " + std::to_string(resumed));
  league = improve(std::move(league), params, ppo, cfg.seed, csv_sink(dir),
                   cfg.workers > 1 ? &pool : nullptr);

  SelfplayOutcome out;
  out.iterations = league.completed_iterations();
  if (out.iterations >= 1) {
    const auto pick = select_champion(league);
    out.champion_white = pick.white.checkpoint;
    out.champion_black = pick.black.checkpoint;
    out.champion_white_win_rate = pick.white.win_rate;
    out.champion_black_win_rate = pick.black.win_rate;
    say(log, "champion white: iteration " + std::to_string(pick.white.iteration) +
                 " (win rate " + std::to_string(pick.white.win_rate) + ")");
    say(log, "champion black: iteration " + std::to_string(pick.black.iteration) +
                 " (win rate " + std::to_string(pick.black.win_rate) + ")");
  } else {
    say(log, "baseline evaluation recorded; no improvement iterations requested");
  }
  return out;
}

CollectOutcome run_collect(const RunConfig& cfg, const LogSink& log) {
  cfg.validate();
  const auto dir = prepare_workdir(cfg);
  say(log, "collecting " + std::to_string(cfg.pretrain.games) + " games");
  const auto logs = collect_games(cfg.pretrain.games, mix_seed(cfg.seed, "collect-cmd"));
  const auto path = dir / "logs" / "games.jsonl";
  write_game_logs(path, logs);
  CollectOutcome out;
  out.games_path = path.string();
  out.games = static_cast<long>(logs.size());
  for (const auto& g : logs) out.positions += static_cast<long>(g.actions.size()) + 1;
  say(log, "wrote " + std::to_string(out.games) + " games (" + std::to_string(out.positions) +
               " positions) to " + out.games_path);
  return out;
}

PretrainOutcome run_pretrain(const RunConfig& cfg, const LogSink& log) {
  cfg.validate();
  const auto dir = prepare_workdir(cfg);
  const auto games_path = dir / "logs" / "games.jsonl";
  if (!std::filesystem::exists(games_path)) {
    say(log, "no game log found; collecting first");
    run_collect(cfg, log);
  }
  const auto logs = read_game_logs(games_path);
  if (logs.empty()) throw std::runtime_error("empty game log: " + games_path.string());

  ThreadPool pool(cfg.workers);
  say(log, "labeling up to " + std::to_string(cfg.pretrain.positions) + " positions at depth " +
               std::to_string(cfg.pretrain.depth));
  const auto dataset = build_dataset(logs, cfg.pretrain.depth, cfg.pretrain.positions,
                                     cfg.pretrain.split, mix_seed(cfg.seed, "dataset"),
                                     cfg.workers > 1 ? &pool : nullptr);
  if (dataset.train.empty()) throw std::runtime_error("empty dataset after labeling");
  const auto dataset_path = dir / "logs" / "dataset.jsonl";
  write_dataset(dataset_path, dataset);
  say(log, "dataset: " + std::to_string(dataset.train.size()) + " train / " +
               std::to_string(dataset.validation.size()) + " validation positions");

  const int actions = ActionTable::instance().size();
  auto net = Network<float>::initialized(cfg.net.channels, cfg.net.hidden, actions,
                                         cfg.net.dropout, mix_seed(cfg.seed, "init-pretrain"));
  PretrainConfig pt;
  pt.epochs = cfg.pretrain.epochs;
  pt.batch = cfg.pretrain.batch;
  pt.learning_rate = cfg.pretrain.learning_rate;
  pt.adam = cfg.pretrain.optimizer == "adam";
  const auto result = pretrain_value(net, dataset, pt, cfg.seed, csv_sink(dir));
  for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
    say(log, "epoch " + std::to_string(e) + ": train mse " +
                 std::to_string(result.train_loss[e]) + ", validation mse " +
                 std::to_string(result.validation_loss[e]));
  }

  CheckpointMeta meta = meta_for(net);
  meta.color = Color::White;
  meta.seed = cfg.seed;
  meta.phase = "pretrain";
  meta.train_steps = static_cast<std::uint64_t>(dataset.train.size()) *
                     static_cast<std::uint64_t>(result.best_epoch + 1);
  const auto path = dir / "checkpoints" / "pretrained.ckpt";
  save_checkpoint(Checkpoint{meta, std::move(net)}, path);
  say(log, "pretrained checkpoint written to " + path.string());

  PretrainOutcome out;
  out.checkpoint_path = path.string();
  out.dataset_path = dataset_path.string();
  out.train_positions = static_cast<long>(dataset.train.size());
  out.validation_positions = static_cast<long>(dataset.validation.size());
  out.train_loss = result.train_loss;
  out.validation_loss = result.validation_loss;
  return out;
}

ArenaResult run_evaluate(const RunConfig& cfg, const std::string& white, const std::string& black,
                         const LogSink& log) {
  cfg.validate();
  const auto dir = prepare_workdir(cfg);
  std::vector<std::unique_ptr<Checkpoint>> owned;
  const auto white_spec = spec_from_string(white, cfg, owned);
  const auto black_spec = spec_from_string(black, cfg, owned);
  const std::uint64_t seed = cfg.arena.seed != 0 ? cfg.arena.seed : mix_seed(cfg.seed, "arena");
  ThreadPool pool(cfg.workers);
  say(log, "evaluating " + white + " vs " + black + " over " + std::to_string(cfg.arena.games) +
               " games");
  const auto result = run_match(white_spec, black_spec, cfg.arena.games, seed,
                                cfg.workers > 1 ? &pool : nullptr);
  append_result_csv(dir / "results.csv", white_spec, black_spec, result, seed);
  std::ostringstream line;
  line.precision(4);
  line << "white win rate " << result.white_win_rate << " (" << result.white_wins << "W/"
       << result.draws << "D/" << result.black_wins << "L, ci95 " << result.ci95
       << ", mean reward " << result.mean_episode_reward << ", mean length "
       << result.mean_episode_length << ")";
  say(log, line.str());
  return result;
}

}  // namespace gardner
