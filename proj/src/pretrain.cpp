#include "gardner/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace gardner {

std::vector<GameLog> collect_games(long count, std::uint64_t seed, const Network<float>* white,
                                   const Network<float>* black) {
  GARDNER_CHECK(count >= 1);
  std::vector<GameLog> logs;
  logs.reserve(count);
  for (long i = 0; i < count; ++i) {
    const std::uint64_t game_seed = mix_seed(seed, "collect", i);
    Rng rng(game_seed);
    EpisodeRecord rec;
    if (white || black) {
      RandomPolicy fallback;
      SamplingNetPolicy white_net(white ? *white : *black);
      SamplingNetPolicy black_net(black ? *black : *white);
      Policy& w = white ? static_cast<Policy&>(white_net) : fallback;
      Policy& b = black ? static_cast<Policy&>(black_net) : fallback;
      rec = play_episode(w, b, rng, false, false);
    } else {
      RandomPolicy w, b;
      rec = play_episode(w, b, rng, false, false);
    }
    logs.push_back(to_game_log(rec, i, game_seed));
  }
  return logs;
}

void write_game_logs(const std::filesystem::path& path, const std::vector<GameLog>& logs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& log : logs) write_game_log(out, log);
}

std::vector<GameLog> read_game_logs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open game log " + path.string());
  std::vector<GameLog> logs;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) logs.push_back(parse_game_log(line));
  }
  return logs;
}

namespace {

// Side-to-move perspective; terminal checks precede the depth cutoff so a
// finished position always scores its terminal value.
double negamax_stm(const Board& b, int depth) {
  const bool own_king = b.king_alive(b.side_to_move());
  const bool opp_king = b.king_alive(opponent(b.side_to_move()));
  if (!own_king) return -60.0;
  if (!opp_king) return 60.0;
  if (b.half_move_count() >= kHalfMoveCap) return 0.0;
  if (depth == 0) return material_score(b, b.side_to_move()) / 1000.0;
  const auto moves = legal_moves(b);
  if (moves.empty()) return 0.0;  // stalemate
  double best = -1e18;
  for (const Move& m : moves) {
    Board child = b;
    const auto piece = child.piece_at(m.from);
    child.set_piece(m.from, std::nullopt);
    child.set_piece(m.to, m.promotion ? Piece{piece->color, *m.promotion} : *piece);
    child.set_side_to_move(opponent(b.side_to_move()));
    child.set_half_move_count(b.half_move_count() + 1);
    best = std::max(best, -negamax_stm(child, depth - 1));
  }
  return best;
}

}  // namespace

double negamax_eval(const Board& b, int depth) {
  GARDNER_CHECK(depth >= 0);
  const double v = negamax_stm(b, depth);
  return b.side_to_move() == Color::White ? v : -v;
}

std::vector<LabeledPosition> label_positions(const std::vector<GameLog>& games, int depth,
                                             ThreadPool* pool) {
  std::vector<LabeledPosition> out;
  for (const GameLog& game : games) {
    replay_game(game, [&](const Board& b, int ply) {
      out.push_back(LabeledPosition{b, 0.0, game.id, ply});
    });
  }
  auto label_range = [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t i = begin; i < end; ++i) out[i].eval = negamax_eval(out[i].board, depth);
  };
  if (pool && pool->workers() > 1) {
    pool->for_chunks(out.size(), label_range);
  } else {
    label_range(0, out.size(), 0);
  }
  return out;
}

PositionDataset build_dataset(const std::vector<GameLog>& games, int depth, long max_positions,
                              double split_ratio, std::uint64_t seed, ThreadPool* pool) {
  GARDNER_CHECK(split_ratio > 0.0 && split_ratio < 1.0);
  // Collect (game index, ply) candidates, then sample without replacement.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> refs;
  for (std::size_t gi = 0; gi < games.size(); ++gi) {
    const int plies = static_cast<int>(games[gi].actions.size());
    for (int p = 0; p <= plies; ++p) refs.emplace_back(gi, p);
  }
  Rng rng(mix_seed(seed, "dataset-sample"));
  rng.shuffle(std::span(refs));
  if (max_positions > 0 && refs.size() > static_cast<std::size_t>(max_positions)) {
    refs.resize(max_positions);
  }
  std::sort(refs.begin(), refs.end());

  // Materialize boards by replaying each involved game once.
  std::vector<LabeledPosition> positions(refs.size());
  std::size_t at = 0;
  for (std::size_t gi = 0; gi < games.size() && at < refs.size(); ++gi) {
    if (refs[at].first != gi) continue;
    const std::size_t begin = at;
    std::size_t end = at;
    while (end < refs.size() && refs[end].first == gi) ++end;
    replay_game(games[gi], [&](const Board& b, int ply) {
      for (std::size_t i = begin; i < end; ++i) {
        if (refs[i].second == static_cast<std::uint32_t>(ply)) {
          positions[i] = LabeledPosition{b, 0.0, games[gi].id, ply};
        }
      }
    });
    at = end;
  }

  auto label_range = [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t i = begin; i < end; ++i) {
      positions[i].eval = negamax_eval(positions[i].board, depth);
    }
  };
  if (pool && pool->workers() > 1) {
    pool->for_chunks(positions.size(), label_range);
  } else {
    label_range(0, positions.size(), 0);
  }

  PositionDataset ds;
  ds.split_ratio = split_ratio;
  ds.seed = seed;
  for (auto& pos : positions) {
    // Split by game id so near-duplicate positions never straddle the splits.
    const double u =
        static_cast<double>(mix_seed(seed, "split", static_cast<std::uint64_t>(pos.game_id)) >> 11) *
        0x1.0p-53;
    (u < split_ratio ? ds.train : ds.validation).push_back(std::move(pos));
  }
  return ds;
}

namespace {

void write_positions(std::ostream& out, const std::vector<LabeledPosition>& positions,
                     const char* split) {
  for (const auto& pos : positions) {
    nlohmann::json j;
    j["board"] = board_to_line(pos.board);
    j["eval"] = pos.eval;
    j["game"] = pos.game_id;
    j["ply"] = pos.ply;
    j["split"] = split;
    out << j.dump() << '\n';
  }
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const PositionDataset& ds) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_positions(out, ds.train, "train");
  write_positions(out, ds.validation, "validation");
}

PositionDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  PositionDataset ds;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    LabeledPosition pos;
    pos.board = board_from_text(j.at("board").get<std::string>());
    pos.eval = j.at("eval").get<double>();
    pos.game_id = j.at("game").get<long>();
    pos.ply = j.at("ply").get<int>();
    const auto split = j.at("split").get<std::string>();
    (split == "train" ? ds.train : ds.validation).push_back(std::move(pos));
  }
  return ds;
}

namespace {

float clamped_label(const LabeledPosition& pos, double clamp) {
  return static_cast<float>(std::clamp(pos.eval, -clamp, clamp));
}

// Eval-mode mean squared error of the value head over a split.
double split_mse(const Network<float>& net, const std::vector<LabeledPosition>& positions,
                 double clamp, int batch) {
  if (positions.empty()) return 0.0;
  Network<float>::Cache cache;
  std::vector<float> planes;
  double total = 0.0;
  for (std::size_t at = 0; at < positions.size(); at += batch) {
    const int n = static_cast<int>(std::min<std::size_t>(batch, positions.size() - at));
    planes.assign(static_cast<std::size_t>(n) * kNumSquares, 0.0f);
    for (int i = 0; i < n; ++i) {
      const Observation obs = observe(positions[at + i].board, Color::White);
      std::copy(obs.plane.begin(), obs.plane.end(), planes.begin() + i * kNumSquares);
    }
    net.forward(planes, n, Network<float>::Mode::Eval, nullptr, cache);
    for (int i = 0; i < n; ++i) {
      const double err = net.value(cache, i) - clamped_label(positions[at + i], clamp);
      total += err * err;
    }
  }
  return total / static_cast<double>(positions.size());
}

}  // namespace

PretrainResult pretrain_value(Network<float>& net, const PositionDataset& ds,
                              const PretrainConfig& cfg, std::uint64_t seed,
                              const MetricsSink& sink) {
  GARDNER_CHECK_MSG(!ds.train.empty(), "pretraining needs a non-empty train split");
  GARDNER_CHECK(cfg.epochs >= 1 && cfg.batch >= 2);

  SgdOptimizer sgd{cfg.learning_rate};
  AdamOptimizer adam;
  adam.lr = cfg.learning_rate;

  // Observation planes depend only on the board; cache them once.
  const std::size_t n_train = ds.train.size();
  std::vector<float> train_planes(n_train * kNumSquares);
  std::vector<float> labels(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    const Observation obs = observe(ds.train[i].board, Color::White);
    std::copy(obs.plane.begin(), obs.plane.end(), train_planes.begin() + i * kNumSquares);
    labels[i] = clamped_label(ds.train[i], cfg.label_clamp);
  }

  PretrainResult result;
  std::vector<float> best_params = net.trainable();
  std::vector<float> best_running = net.running_stats();
  double best_val = 1e300;

  Rng order_rng(mix_seed(seed, "pretrain-order"));
  Rng dropout_rng(mix_seed(seed, "pretrain-dropout"));
  std::vector<std::uint32_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  Network<float>::Cache cache;
  std::vector<float> planes, grads;
  std::vector<float> dvalue;

  const auto mode =
      cfg.dropout_active ? Network<float>::Mode::Train : Network<float>::Mode::Eval;
  const long steps_per_epoch = static_cast<long>(n_train);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(std::span(order));
    for (std::size_t at = 0; at + 1 < n_train; at += cfg.batch) {
      const int nb = static_cast<int>(std::min<std::size_t>(cfg.batch, n_train - at));
      if (nb < 2) break;  // train-mode batch norm needs at least two samples
      planes.assign(static_cast<std::size_t>(nb) * kNumSquares, 0.0f);
      for (int i = 0; i < nb; ++i) {
        const std::uint32_t src = order[at + i];
        std::copy(train_planes.begin() + src * kNumSquares,
                  train_planes.begin() + (src + 1) * kNumSquares,
                  planes.begin() + static_cast<std::size_t>(i) * kNumSquares);
      }
      net.forward(planes, nb, mode, &dropout_rng, cache);
      dvalue.assign(nb, 0.0f);
      double batch_loss = 0.0;
      for (int i = 0; i < nb; ++i) {
        const double err = net.value(cache, i) - labels[order[at + i]];
        batch_loss += err * err;
        dvalue[i] = static_cast<float>(2.0 * err / nb);
      }
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("pretraining diverged (non-finite loss)");
      }
      std::vector<std::vector<Network<float>::LogitGrad>> no_logit_grads(nb);
      net.backward(cache, no_logit_grads, dvalue, grads);
      if (cfg.adam) {
        adam.step(net.trainable(), grads);
      } else {
        sgd.step(net.trainable(), grads);
      }
      if (mode == Network<float>::Mode::Train) net.commit_running_stats(cache);
    }

    const double train_mse = split_mse(net, ds.train, cfg.label_clamp, cfg.batch);
    const double val_mse = split_mse(net, ds.validation, cfg.label_clamp, cfg.batch);
    result.train_loss.push_back(train_mse);
    result.validation_loss.push_back(val_mse);
    if (ds.validation.empty() ? train_mse < best_val : val_mse < best_val) {
      best_val = ds.validation.empty() ? train_mse : val_mse;
      best_params = net.trainable();
      best_running = net.running_stats();
      result.best_epoch = epoch;
    }
    if (sink) {
      MetricsRow row;
      row.phase = "pretrain";
      row.iteration = epoch;
      row.steps = steps_per_epoch * (epoch + 1);
      row.value_loss = train_mse;
      row.val_loss = val_mse;
      sink(row);
    }
  }

  net.trainable() = best_params;
  net.running_stats() = best_running;
  return result;
}

}  // namespace gardner
