#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace gardner::oracle {

namespace {

bool squares_between_empty(const Board& b, Square a, Square c) {
  const int df = (c.file > a.file) - (c.file < a.file);
  const int dr = (c.rank > a.rank) - (c.rank < a.rank);
  Square s{a.file + df, a.rank + dr};
  while (!(s == c)) {
    if (b.piece_at(s.index())) return false;
    s = Square{s.file + df, s.rank + dr};
  }
  return true;
}

// First-principles legality of moving the piece on `from` to `to`,
// ignoring promotions (handled by the caller).
bool pair_is_legal(const Board& b, Color mover, Square from, Square to) {
  if (from == to) return false;
  const auto piece = b.piece_at(from.index());
  if (!piece || piece->color != mover) return false;
  const auto target = b.piece_at(to.index());
  if (target && target->color == mover) return false;

  const int adf = std::abs(to.file - from.file);
  const int adr = std::abs(to.rank - from.rank);

  switch (piece->kind) {
    case PieceKind::Pawn: {
      const int forward = mover == Color::White ? 1 : -1;
      if (to.rank - from.rank != forward) return false;
      if (adf == 0) return !target.has_value();
      if (adf == 1) return target.has_value();
      return false;
    }
    case PieceKind::Knight:
      return adf * adr == 2;
    case PieceKind::King:
      return adf <= 1 && adr <= 1;
    case PieceKind::Bishop:
      return adf == adr && squares_between_empty(b, from, to);
    case PieceKind::Rook:
      return (adf == 0 || adr == 0) && squares_between_empty(b, from, to);
    case PieceKind::Queen:
      return (adf == adr || adf == 0 || adr == 0) && squares_between_empty(b, from, to);
  }
  return false;
}

Board oracle_apply(const Board& b, const Move& m) {
  Board nb = b;
  Piece piece = *nb.piece_at(m.from);
  if (m.promotion) piece.kind = *m.promotion;
  nb.set_piece(m.from, std::nullopt);
  nb.set_piece(m.to, piece);
  nb.set_side_to_move(opponent(b.side_to_move()));
  nb.set_half_move_count(b.half_move_count() + 1);
  return nb;
}

bool oracle_terminal(const Board& b) {
  return !b.king_alive(Color::White) || !b.king_alive(Color::Black) ||
         b.half_move_count() >= kHalfMoveCap;
}

}  // namespace

std::vector<Move> enumerate_moves(const Board& b) {
  const Color mover = b.side_to_move();
  std::vector<Move> out;
  for (int from = 0; from < kNumSquares; ++from) {
    for (int to = 0; to < kNumSquares; ++to) {
      const Square f = Square::from_index(from);
      const Square t = Square::from_index(to);
      if (!pair_is_legal(b, mover, f, t)) continue;
      const auto piece = b.piece_at(from);
      const int last_rank = mover == Color::White ? kBoardSize - 1 : 0;
      if (piece->kind == PieceKind::Pawn && t.rank == last_rank) {
        for (PieceKind k :
             {PieceKind::Knight, PieceKind::Bishop, PieceKind::Rook, PieceKind::Queen}) {
          out.push_back(Move{from, to, k});
        }
      } else {
        out.push_back(Move{from, to, std::nullopt});
      }
    }
  }
  return out;
}

std::uint64_t perft(const Board& b, int depth) {
  if (depth == 0) return 1;
  if (oracle_terminal(b)) return 0;
  const auto moves = enumerate_moves(b);
  std::uint64_t total = 0;
  for (const Move& m : moves) {
    total += oracle::perft(oracle_apply(b, m), depth - 1);
  }
  return total;
}

GaeResult gae_double_loop(const std::vector<double>& rewards, const std::vector<double>& values,
                          const std::vector<std::uint8_t>& dones, double gamma, double lambda,
                          double bootstrap_value) {
  const std::size_t n = rewards.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  auto value_after = [&](std::size_t t) -> double {
    if (dones[t]) return 0.0;
    return t + 1 < n ? values[t + 1] : bootstrap_value;
  };
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    double weight = 1.0;
    for (std::size_t u = t; u < n; ++u) {
      const double delta = rewards[u] + gamma * value_after(u) - values[u];
      acc += weight * delta;
      if (dones[u]) break;  // episode boundary: no terms cross it
      weight *= gamma * lambda;
    }
    out.advantages[t] = acc;
    out.returns[t] = acc + values[t];
  }
  return out;
}

double minimax_eval_white(const Board& b, int depth) {
  if (!b.king_alive(Color::Black)) return 60.0;
  if (!b.king_alive(Color::White)) return -60.0;
  if (b.half_move_count() >= kHalfMoveCap) return 0.0;
  if (depth == 0) return material_score(b, Color::White) / 1000.0;
  const auto moves = enumerate_moves(b);
  if (moves.empty()) return 0.0;
  const bool maximizing = b.side_to_move() == Color::White;
  double best = maximizing ? -1e9 : 1e9;
  for (const Move& m : moves) {
    const double v = minimax_eval_white(oracle_apply(b, m), depth - 1);
    best = maximizing ? std::max(best, v) : std::min(best, v);
  }
  return best;
}

Board random_playout_position(Rng& rng, int plies) {
  Board b = Board::initial();
  for (int i = 0; i < plies; ++i) {
    const auto moves = legal_moves(b);
    const auto step = apply_move(b, moves[rng.next_index(static_cast<int>(moves.size()))]);
    if (step.status.is_terminal()) return b;  // keep the last ongoing position
    b = step.board;
  }
  return b;
}

}  // namespace gardner::oracle
