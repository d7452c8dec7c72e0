#include "gardner/selfplay.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gardner/arena.hpp"
#include "gardner/checkpoint.hpp"

namespace gardner {

namespace {

const char* color_tag(Color c) { return c == Color::White ? "white" : "black"; }

std::string format_iteration(int k) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", k);
  return buf;
}

}  // namespace

std::filesystem::path LeagueState::checkpoint_path(int iteration, Color color) const {
  return dir / "checkpoints" /
         (std::string(color_tag(color)) + "_" + format_iteration(iteration) + ".ckpt");
}

const LeagueEntry* LeagueState::find(int iteration, Color color) const {
  for (const auto& e : entries) {
    if (e.iteration == iteration && e.color == color) return &e;
  }
  return nullptr;
}

int LeagueState::completed_iterations() const {
  int k = 0;
  while (find(k + 1, Color::White) && find(k + 1, Color::Black)) ++k;
  return k;
}

void save_manifest(const LeagueState& league) {
  std::filesystem::create_directories(league.dir);
  std::ofstream out(league.manifest_path(), std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + league.manifest_path().string());
  out << "iteration,color,checkpoint,opponent,epsilon,win_rate,seed\n";
  out.precision(17);
  for (const auto& e : league.entries) {
    out << e.iteration << ',' << color_tag(e.color) << ',' << e.checkpoint << ',' << e.opponent
        << ',' << e.epsilon << ',' << e.win_rate << ',' << e.seed << '\n';
  }
}

LeagueState load_league(const std::filesystem::path& dir) {
  LeagueState league;
  league.dir = dir;
  const auto path = league.manifest_path();
  if (!std::filesystem::exists(path)) return league;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    LeagueEntry e;
    std::string field;
    std::getline(row, field, ',');
    e.iteration = std::stoi(field);
    std::getline(row, field, ',');
    e.color = field == "white" ? Color::White : Color::Black;
    std::getline(row, e.checkpoint, ',');
    std::getline(row, e.opponent, ',');
    std::getline(row, field, ',');
    e.epsilon = std::stod(field);
    std::getline(row, field, ',');
    e.win_rate = std::stod(field);
    std::getline(row, field, ',');
    e.seed = std::stoull(field);
    league.entries.push_back(std::move(e));
  }
  return league;
}

namespace {

// Win rate of `net` playing `color` against a uniform random opponent.
double eval_vs_random(const Network<float>& net, Color color, long games, std::uint64_t seed,
                      ThreadPool* pool) {
  const auto spec = MatchPolicySpec::network("league", net);
  const ArenaResult r = color == Color::White
                            ? run_match(spec, MatchPolicySpec::random(), games, seed, pool)
                            : run_match(MatchPolicySpec::random(), spec, games, seed, pool);
  const long wins = color == Color::White ? r.white_wins : r.black_wins;
  return static_cast<double>(wins) / static_cast<double>(r.games);
}

}  // namespace

LeagueState improve(LeagueState league, const SelfplayParams& params, const PpoConfig& ppo,
                    std::uint64_t seed, const MetricsSink& sink, ThreadPool* pool) {
  const int actions = ActionTable::instance().size();
  std::filesystem::create_directories(league.dir / "checkpoints");

  // Iteration 0: randomly initialized networks plus the white baseline row.
  for (Color color : {Color::White, Color::Black}) {
    const auto path = league.checkpoint_path(0, color);
    if (!std::filesystem::exists(path)) {
      auto net = Network<float>::initialized(params.net_channels, params.net_hidden, actions,
                                             params.net_dropout,
                                             mix_seed(seed, "init", static_cast<int>(color)));
      CheckpointMeta meta = meta_for(net);
      meta.color = color;
      meta.iteration = 0;
      meta.seed = seed;
      meta.phase = "init";
      save_checkpoint(Checkpoint{meta, std::move(net)}, path);
    }
  }
  if (!league.find(0, Color::White)) {
    const auto path = league.checkpoint_path(0, Color::White);
    const auto ckpt = load_checkpoint(path);
    LeagueEntry baseline;
    baseline.iteration = 0;
    baseline.color = Color::White;
    baseline.checkpoint = path.string();
    baseline.opponent = "-";
    baseline.epsilon = 0.0;
    baseline.seed = mix_seed(seed, "arena", 0);
    baseline.win_rate =
        eval_vs_random(ckpt.net, Color::White, params.eval_games, baseline.seed, pool);
    league.entries.push_back(std::move(baseline));
    save_manifest(league);
  }

  for (int k = 1; k <= params.iterations; ++k) {
    for (Color color : {Color::White, Color::Black}) {
      if (league.find(k, color)) continue;  // resume: already trained

      const Color opp_color = opponent(color);
      const auto own_prev_path = league.checkpoint_path(k - 1, color);
      const auto opp_path = league.checkpoint_path(k - 1, opp_color);
      auto learner = load_checkpoint(own_prev_path);
      const auto frozen = load_checkpoint(opp_path);

      const std::uint64_t train_seed =
          mix_seed(seed, color == Color::White ? "train-white" : "train-black", k);
      const OpponentSpec opp_spec = OpponentSpec::network(frozen.net, params.epsilon);
      train_iteration(learner.net, color, opp_spec, ppo, train_seed, k, sink);

      CheckpointMeta meta = meta_for(learner.net);
      meta.color = color;
      meta.iteration = static_cast<std::uint32_t>(k);
      meta.seed = train_seed;
      meta.phase = "train";
      meta.opponent = opp_path.string();
      meta.epsilon = params.epsilon;
      meta.train_steps = learner.meta.train_steps + static_cast<std::uint64_t>(ppo.iteration_steps);
      const auto out_path = league.checkpoint_path(k, color);
      save_checkpoint(Checkpoint{meta, std::move(learner.net)}, out_path);

      LeagueEntry entry;
      entry.iteration = k;
      entry.color = color;
      entry.checkpoint = out_path.string();
      entry.opponent = opp_path.string();
      entry.epsilon = params.epsilon;
      entry.seed = mix_seed(seed, color == Color::White ? "arena-white" : "arena-black", k);
      const auto produced = load_checkpoint(out_path);
      entry.win_rate = eval_vs_random(produced.net, color, params.eval_games, entry.seed, pool);
      league.entries.push_back(std::move(entry));
      save_manifest(league);
    }
  }
  return league;
}

ChampionPick select_champion(const LeagueState& league) {
  GARDNER_CHECK_MSG(league.completed_iterations() >= 1,
                    "champion selection needs at least one completed iteration");
  ChampionPick pick;
  bool have_white = false, have_black = false;
  for (const auto& e : league.entries) {
    if (e.color == Color::White) {
      if (!have_white || e.win_rate > pick.white.win_rate ||
          (e.win_rate == pick.white.win_rate && e.iteration > pick.white.iteration)) {
        pick.white = e;
        have_white = true;
      }
    } else {
      if (!have_black || e.win_rate > pick.black.win_rate ||
          (e.win_rate == pick.black.win_rate && e.iteration > pick.black.iteration)) {
        pick.black = e;
        have_black = true;
      }
    }
  }
  GARDNER_CHECK(have_white && have_black);
  return pick;
}

}  // namespace gardner
