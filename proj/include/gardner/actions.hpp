#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "gardner/board.hpp"

namespace gardner {

// Moves are indexed in the mover's own frame: the mover always "plays up the
// board" the way white does, so black moves are rank-mirrored before lookup.
// This keeps one table covering both colors:
//   [0, 625)   dense from*25+to slot; promotions in this block are to queen
//   [625, 664) underpromotions (knight, bishop, rook), ordered by (from, to)
// The decoded descriptor carries no color; materializing an id against a
// position restores absolute coordinates and the promotion piece.
class ActionTable {
 public:
  static constexpr int kDenseSlots = kNumSquares * kNumSquares;
  static constexpr PieceKind kUnderpromotions[3] = {PieceKind::Knight, PieceKind::Bishop,
                                                    PieceKind::Rook};

  ActionTable();

  static const ActionTable& instance();

  int size() const { return size_; }

  int encode(const Move& move, Color mover) const;

  struct Descriptor {
    int from = 0;  // mover-relative squares
    int to = 0;
    std::optional<PieceKind> underpromotion;  // dense slots promote to queen when applicable
  };
  Descriptor descriptor(int action) const;

  // Absolute move for the side to move; promotion resolved from the board.
  Move materialize(int action, const Board&) const;

  // Audit dump: one "index from to promo" line per action.
  void dump(std::ostream&) const;

 private:
  int size_ = 0;
  std::array<std::int16_t, kDenseSlots> underpromo_base_{};  // -1 if not a promotion pair
  std::vector<std::int32_t> pair_of_slot_;                   // extra slot -> from*25+to
};

// Rank mirror between absolute and mover-relative coordinates (an involution;
// the identity for white).
int relative_square(int square, Color mover);
Move relative_move(const Move&, Color mover);

// Signed piece-value plane (white positive, /1000) plus the legal actions of
// the observed side, always in white's spatial orientation.
struct Observation {
  std::array<float, kNumSquares> plane{};
  std::vector<std::uint16_t> legal;  // sorted action ids
  int action_space = 0;

  std::vector<std::uint8_t> dense_mask() const;
  bool is_legal(int action) const;
};

Observation observe(const Board&, Color for_color);

// softmax(logits) restricted to mask==1 entries, renormalized to sum 1.
// Throws if the mask is all zero.
std::vector<double> mask_policy(std::span<const double> logits,
                                std::span<const std::uint8_t> mask);

// Same computation on the compact form: probabilities over `logits[i]`
// belonging to the i-th legal action.
std::vector<double> masked_probabilities(std::span<const float> legal_logits);

}  // namespace gardner
