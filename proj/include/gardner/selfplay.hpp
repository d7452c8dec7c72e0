#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gardner/parallel.hpp"
#include "gardner/ppo.hpp"

namespace gardner {

// One manifest record: a checkpoint produced at some iteration for one color,
// the frozen opponent it trained against, and its arena win rate vs random.
struct LeagueEntry {
  int iteration = 0;
  Color color = Color::White;
  std::string checkpoint;
  std::string opponent;  // "-" for the iteration-0 baseline
  double epsilon = 0.0;
  double win_rate = 0.0;  // the entry's own color winning vs random
  std::uint64_t seed = 0;
};

struct LeagueState {
  std::filesystem::path dir;
  std::vector<LeagueEntry> entries;

  std::filesystem::path manifest_path() const { return dir / "league.manifest"; }
  std::filesystem::path checkpoint_path(int iteration, Color color) const;
  const LeagueEntry* find(int iteration, Color color) const;
  int completed_iterations() const;
};

struct SelfplayParams {
  int iterations = 12;       // N
  double epsilon = 0.5;      // opponent random-move mixing
  long eval_games = 10000;   // arena games vs random per produced checkpoint
  int net_channels = 64;
  int net_hidden = 128;
  double net_dropout = 0.3;
};

// Loads an existing manifest (resume) or starts a fresh league in `dir`.
LeagueState load_league(const std::filesystem::path& dir);

// Runs the improvement loop up to params.iterations, training each color
// against the epsilon-randomized previous checkpoint of the other color.
// Completed iterations found in the manifest are skipped, so an interrupted
// run resumes to the identical result. Training metrics go to `sink`.
LeagueState improve(LeagueState league, const SelfplayParams& params, const PpoConfig& ppo,
                    std::uint64_t seed, const MetricsSink& sink = nullptr,
                    ThreadPool* pool = nullptr);

struct ChampionPick {
  LeagueEntry white;
  LeagueEntry black;
};

// Argmax of recorded win rate per color, ties broken toward the later
// iteration. Requires at least one completed iteration.
ChampionPick select_champion(const LeagueState&);

void save_manifest(const LeagueState&);

}  // namespace gardner
