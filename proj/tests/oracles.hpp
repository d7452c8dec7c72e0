#pragma once

// Independent reference implementations used only by tests. Each one is
// deliberately structured differently from the library code it checks:
// move enumeration validates every (from, to) pair from first principles,
// advantage estimation is a literal double loop, and position evaluation is
// an explicit max/min tree walk in a fixed perspective.

#include <cstdint>
#include <vector>

#include "gardner/board.hpp"
#include "gardner/rng.hpp"

namespace gardner::oracle {

// Every legal move for the side to move, found by testing all from/to pairs.
std::vector<Move> enumerate_moves(const Board&);

// Node count at exactly `depth` half-moves using only oracle machinery.
std::uint64_t perft(const Board&, int depth);

// A_t = sum_l (gamma*lambda)^l * delta_{t+l}, evaluated literally per index,
// restarting at episode ends.
struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};
GaeResult gae_double_loop(const std::vector<double>& rewards, const std::vector<double>& values,
                          const std::vector<std::uint8_t>& dones, double gamma, double lambda,
                          double bootstrap_value);

// Exhaustive fixed-depth tree evaluation, white's perspective at every node,
// with white maximizing and black minimizing.
double minimax_eval_white(const Board&, int depth);

// Plays `plies` random half-moves from the initial position (fewer if the
// game ends), returning the final position.
Board random_playout_position(Rng& rng, int plies);

}  // namespace gardner::oracle
