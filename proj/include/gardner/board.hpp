#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gardner/check.hpp"

namespace gardner {

inline constexpr int kBoardSize = 5;
inline constexpr int kNumSquares = kBoardSize * kBoardSize;

// Games are hard-capped at this many half-moves and adjudicated as a draw.
inline constexpr int kHalfMoveCap = 150;

enum class Color : std::uint8_t { White = 0, Black = 1 };

constexpr Color opponent(Color c) { return c == Color::White ? Color::Black : Color::White; }

enum class PieceKind : std::uint8_t { Pawn = 0, Knight, Bishop, Rook, Queen, King };

constexpr int piece_value(PieceKind k) {
  constexpr int values[6] = {100, 300, 300, 500, 900, 60000};
  return values[static_cast<int>(k)];
}

struct Piece {
  Color color;
  PieceKind kind;
  friend constexpr bool operator==(Piece, Piece) = default;
};

struct Square {
  int file = 0;
  int rank = 0;
  constexpr int index() const { return rank * kBoardSize + file; }
  constexpr bool on_board() const {
    return file >= 0 && file < kBoardSize && rank >= 0 && rank < kBoardSize;
  }
  static constexpr Square from_index(int i) { return {i % kBoardSize, i / kBoardSize}; }
  friend constexpr bool operator==(Square, Square) = default;
};

std::string square_name(int index);       // "a1".."e5"
int square_from_name(const std::string&); // throws on malformed input

struct Move {
  int from = 0;
  int to = 0;
  std::optional<PieceKind> promotion;  // set iff a pawn reaches the far rank
  friend constexpr bool operator==(const Move&, const Move&) = default;
};

std::string move_name(const Move&);  // "a1a2", "d4e5q"

struct GameStatus {
  enum class Outcome : std::uint8_t { Ongoing = 0, WhiteWin, BlackWin, Draw };
  enum class Cause : std::uint8_t { None = 0, KingCaptured, Stalemate, MoveCapReached };
  Outcome outcome = Outcome::Ongoing;
  Cause cause = Cause::None;
  bool is_terminal() const { return outcome != Outcome::Ongoing; }
  friend constexpr bool operator==(GameStatus, GameStatus) = default;
};

std::string outcome_name(GameStatus::Outcome);
std::string cause_name(GameStatus::Cause);
GameStatus::Outcome outcome_from_name(const std::string&);
GameStatus::Cause cause_from_name(const std::string&);

// 5x5 piece grid plus side to move and half-move counter. Immutable in use:
// apply_move returns a new board.
class Board {
 public:
  static Board initial();

  std::optional<Piece> piece_at(int square) const {
    const std::int8_t c = cells_[square];
    if (c == 0) return std::nullopt;
    const Color color = c > 0 ? Color::White : Color::Black;
    const auto kind = static_cast<PieceKind>((c > 0 ? c : -c) - 1);
    return Piece{color, kind};
  }

  void set_piece(int square, std::optional<Piece> piece) {
    if (!piece) {
      cells_[square] = 0;
    } else {
      const std::int8_t code = static_cast<std::int8_t>(static_cast<int>(piece->kind) + 1);
      cells_[square] = piece->color == Color::White ? code : static_cast<std::int8_t>(-code);
    }
  }

  Color side_to_move() const { return stm_; }
  void set_side_to_move(Color c) { stm_ = c; }
  int half_move_count() const { return half_moves_; }
  void set_half_move_count(int n) { half_moves_ = n; }

  bool king_alive(Color c) const;
  int piece_count() const;

  friend bool operator==(const Board&, const Board&) = default;

 private:
  std::array<std::int8_t, kNumSquares> cells_{};
  Color stm_ = Color::White;
  std::int32_t half_moves_ = 0;
};

struct StepResult {
  Board board;
  GameStatus status;
  std::optional<PieceKind> captured;
};

// All moves of the side to move. King capture is the win condition, so
// legality is purely geometric: there is no check concept and moving into
// attack is allowed. Requires an ongoing position (both kings alive, below
// the half-move cap).
std::vector<Move> legal_moves(const Board&);

// Same generator for an arbitrary color, ignoring whose turn it is.
std::vector<Move> moves_for_color(const Board&, Color);

// Geometric validation of a single move for the side to move.
bool move_is_legal(const Board&, const Move&);

// Applies a legal move and adjudicates: king capture ends the game for the
// mover, then the half-move cap, then stalemate of the new side to move.
// Throws ContractError for moves that fail move_is_legal.
StepResult apply_move(const Board&, const Move&);

// Terminal detection on a bare position (used when replaying fixtures).
GameStatus position_status(const Board&);

// Sum of piece values for `color` minus the opponent's sum, in points.
int material_score(const Board&, Color color);

// Leaf count at exactly `depth` half-moves, not descending past terminals.
std::uint64_t perft(const Board&, int depth);

// Text form: five ranks (top line is rank 5, black's home), '.' for empty,
// uppercase white, then a trailing "<w|b> <half-move count>" line. The
// single-line form joins the same fields with '/' and spaces.
std::string board_to_text(const Board&);
std::string board_to_line(const Board&);
Board board_from_text(const std::string&);  // accepts both forms; throws on malformed input

}  // namespace gardner
