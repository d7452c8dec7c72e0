#include "gardner/board.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace gardner {

namespace {

constexpr char kPieceChars[6] = {'P', 'N', 'B', 'R', 'Q', 'K'};

char piece_char(Piece p) {
  const char c = kPieceChars[static_cast<int>(p.kind)];
  return p.color == Color::White ? c : static_cast<char>(std::tolower(c));
}

std::optional<Piece> piece_from_char(char c) {
  if (c == '.') return std::nullopt;
  const Color color = std::isupper(static_cast<unsigned char>(c)) ? Color::White : Color::Black;
  const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (int k = 0; k < 6; ++k) {
    if (kPieceChars[k] == u) return Piece{color, static_cast<PieceKind>(k)};
  }
  throw std::runtime_error(std::string("unknown piece character '") + c + "'");
}

constexpr int kKnightSteps[8][2] = {{1, 2},  {2, 1},  {2, -1}, {1, -2},
                                    {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}};
constexpr int kKingSteps[8][2] = {{1, 0},  {1, 1},  {0, 1},  {-1, 1},
                                  {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
constexpr int kBishopDirs[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
constexpr int kRookDirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

constexpr PieceKind kPromotions[4] = {PieceKind::Knight, PieceKind::Bishop, PieceKind::Rook,
                                      PieceKind::Queen};

void push_pawn_move(std::vector<Move>& out, int from, int to, int to_rank, Color mover) {
  const int last_rank = mover == Color::White ? kBoardSize - 1 : 0;
  if (to_rank == last_rank) {
    for (PieceKind k : kPromotions) out.push_back(Move{from, to, k});
  } else {
    out.push_back(Move{from, to, std::nullopt});
  }
}

void generate_for_piece(const Board& b, Square sq, Piece piece, std::vector<Move>& out) {
  const int from = sq.index();
  const Color us = piece.color;
  auto target_ok = [&](Square t) -> int {
    // 0: own piece / off board, 1: empty, 2: capture
    if (!t.on_board()) return 0;
    const auto p = b.piece_at(t.index());
    if (!p) return 1;
    return p->color == us ? 0 : 2;
  };

  switch (piece.kind) {
    case PieceKind::Pawn: {
      const int dir = us == Color::White ? 1 : -1;
      const Square fwd{sq.file, sq.rank + dir};
      if (fwd.on_board() && !b.piece_at(fwd.index())) {
        push_pawn_move(out, from, fwd.index(), fwd.rank, us);
      }
      for (int df : {-1, 1}) {
        const Square cap{sq.file + df, sq.rank + dir};
        if (cap.on_board()) {
          const auto p = b.piece_at(cap.index());
          if (p && p->color != us) push_pawn_move(out, from, cap.index(), cap.rank, us);
        }
      }
      break;
    }
    case PieceKind::Knight: {
      for (const auto& s : kKnightSteps) {
        const Square t{sq.file + s[0], sq.rank + s[1]};
        if (target_ok(t)) out.push_back(Move{from, t.index(), std::nullopt});
      }
      break;
    }
    case PieceKind::King: {
      for (const auto& s : kKingSteps) {
        const Square t{sq.file + s[0], sq.rank + s[1]};
        if (target_ok(t)) out.push_back(Move{from, t.index(), std::nullopt});
      }
      break;
    }
    case PieceKind::Bishop:
    case PieceKind::Rook:
    case PieceKind::Queen: {
      const bool diag = piece.kind != PieceKind::Rook;
      const bool ortho = piece.kind != PieceKind::Bishop;
      auto scan = [&](const int dirs[4][2]) {
        for (int d = 0; d < 4; ++d) {
          Square t{sq.file + dirs[d][0], sq.rank + dirs[d][1]};
          while (t.on_board()) {
            const int r = target_ok(t);
            if (r == 0) break;
            out.push_back(Move{from, t.index(), std::nullopt});
            if (r == 2) break;
            t = Square{t.file + dirs[d][0], t.rank + dirs[d][1]};
          }
        }
      };
      if (diag) scan(kBishopDirs);
      if (ortho) scan(kRookDirs);
      break;
    }
  }
}

// Move application without validation or adjudication; shared by apply_move,
// perft and search.
Board make_move_unchecked(const Board& b, const Move& m, std::optional<PieceKind>* captured) {
  Board nb = b;
  const auto moving = nb.piece_at(m.from);
  if (captured) {
    const auto target = nb.piece_at(m.to);
    *captured = target ? std::optional<PieceKind>(target->kind) : std::nullopt;
  }
  nb.set_piece(m.from, std::nullopt);
  nb.set_piece(m.to, m.promotion ? Piece{moving->color, *m.promotion} : *moving);
  nb.set_side_to_move(opponent(nb.side_to_move()));
  nb.set_half_move_count(nb.half_move_count() + 1);
  return nb;
}

std::uint64_t perft_inner(const Board& b, int depth) {
  const auto moves = legal_moves(b);
  if (depth == 1) return moves.size();
  std::uint64_t total = 0;
  for (const Move& m : moves) {
    std::optional<PieceKind> captured;
    const Board child = make_move_unchecked(b, m, &captured);
    if (captured == PieceKind::King || child.half_move_count() >= kHalfMoveCap) continue;
    total += perft_inner(child, depth - 1);
  }
  return total;
}

}  // namespace

std::string square_name(int index) {
  GARDNER_CHECK(index >= 0 && index < kNumSquares);
  const Square sq = Square::from_index(index);
  return {static_cast<char>('a' + sq.file), static_cast<char>('1' + sq.rank)};
}

int square_from_name(const std::string& name) {
  if (name.size() != 2 || name[0] < 'a' || name[0] > 'e' || name[1] < '1' || name[1] > '5') {
    throw std::runtime_error("bad square name '" + name + "'");
  }
  return (name[1] - '1') * kBoardSize + (name[0] - 'a');
}

std::string move_name(const Move& m) {
  std::string s = square_name(m.from) + square_name(m.to);
  if (m.promotion) {
    s += static_cast<char>(std::tolower(kPieceChars[static_cast<int>(*m.promotion)]));
  }
  return s;
}

std::string outcome_name(GameStatus::Outcome o) {
  switch (o) {
    case GameStatus::Outcome::Ongoing: return "Ongoing";
    case GameStatus::Outcome::WhiteWin: return "WhiteWin";
    case GameStatus::Outcome::BlackWin: return "BlackWin";
    case GameStatus::Outcome::Draw: return "Draw";
  }
  return "?";
}

std::string cause_name(GameStatus::Cause c) {
  switch (c) {
    case GameStatus::Cause::None: return "None";
    case GameStatus::Cause::KingCaptured: return "KingCaptured";
    case GameStatus::Cause::Stalemate: return "Stalemate";
    case GameStatus::Cause::MoveCapReached: return "MoveCapReached";
  }
  return "?";
}

GameStatus::Outcome outcome_from_name(const std::string& s) {
  if (s == "Ongoing") return GameStatus::Outcome::Ongoing;
  if (s == "WhiteWin") return GameStatus::Outcome::WhiteWin;
  if (s == "BlackWin") return GameStatus::Outcome::BlackWin;
  if (s == "Draw") return GameStatus::Outcome::Draw;
  throw std::runtime_error("bad outcome '" + s + "'");
}

GameStatus::Cause cause_from_name(const std::string& s) {
  if (s == "None") return GameStatus::Cause::None;
  if (s == "KingCaptured") return GameStatus::Cause::KingCaptured;
  if (s == "Stalemate") return GameStatus::Cause::Stalemate;
  if (s == "MoveCapReached") return GameStatus::Cause::MoveCapReached;
  throw std::runtime_error("bad cause '" + s + "'");
}

Board Board::initial() {
  Board b;
  constexpr PieceKind back[5] = {PieceKind::Rook, PieceKind::Knight, PieceKind::Bishop,
                                 PieceKind::Queen, PieceKind::King};
  for (int f = 0; f < kBoardSize; ++f) {
    b.set_piece(Square{f, 0}.index(), Piece{Color::White, back[f]});
    b.set_piece(Square{f, 1}.index(), Piece{Color::White, PieceKind::Pawn});
    b.set_piece(Square{f, 3}.index(), Piece{Color::Black, PieceKind::Pawn});
    b.set_piece(Square{f, 4}.index(), Piece{Color::Black, back[f]});
  }
  return b;
}

bool Board::king_alive(Color c) const {
  for (int i = 0; i < kNumSquares; ++i) {
    const auto p = piece_at(i);
    if (p && p->kind == PieceKind::King && p->color == c) return true;
  }
  return false;
}

int Board::piece_count() const {
  int n = 0;
  for (std::int8_t c : cells_) n += c != 0;
  return n;
}

std::vector<Move> legal_moves(const Board& b) {
  GARDNER_CHECK_MSG(b.king_alive(Color::White) && b.king_alive(Color::Black),
                    "moves requested on a finished position");
  GARDNER_CHECK_MSG(b.half_move_count() < kHalfMoveCap, "moves requested past the move cap");
  return moves_for_color(b, b.side_to_move());
}

std::vector<Move> moves_for_color(const Board& b, Color c) {
  std::vector<Move> out;
  out.reserve(32);
  for (int i = 0; i < kNumSquares; ++i) {
    const auto p = b.piece_at(i);
    if (p && p->color == c) generate_for_piece(b, Square::from_index(i), *p, out);
  }
  return out;
}

bool move_is_legal(const Board& b, const Move& m) {
  if (m.from < 0 || m.from >= kNumSquares || m.to < 0 || m.to >= kNumSquares || m.from == m.to) {
    return false;
  }
  const auto piece = b.piece_at(m.from);
  if (!piece || piece->color != b.side_to_move()) return false;
  const auto target = b.piece_at(m.to);
  if (target && target->color == piece->color) return false;

  const Square from = Square::from_index(m.from);
  const Square to = Square::from_index(m.to);
  const int df = to.file - from.file;
  const int dr = to.rank - from.rank;

  // Promotion must be present exactly when a pawn reaches the far rank.
  const int last_rank = piece->color == Color::White ? kBoardSize - 1 : 0;
  const bool promoting = piece->kind == PieceKind::Pawn && to.rank == last_rank;
  if (promoting != m.promotion.has_value()) return false;
  if (m.promotion && (*m.promotion == PieceKind::Pawn || *m.promotion == PieceKind::King)) {
    return false;
  }

  auto path_clear = [&]() {
    const int steps = std::max(std::abs(df), std::abs(dr));
    const int sf = (df > 0) - (df < 0);
    const int sr = (dr > 0) - (dr < 0);
    for (int i = 1; i < steps; ++i) {
      if (b.piece_at(Square{from.file + sf * i, from.rank + sr * i}.index())) return false;
    }
    return true;
  };

  switch (piece->kind) {
    case PieceKind::Pawn: {
      const int dir = piece->color == Color::White ? 1 : -1;
      if (dr != dir) return false;
      if (df == 0) return !target;
      if (df == 1 || df == -1) return target.has_value();
      return false;
    }
    case PieceKind::Knight:
      return (std::abs(df) == 1 && std::abs(dr) == 2) || (std::abs(df) == 2 && std::abs(dr) == 1);
    case PieceKind::King:
      return std::abs(df) <= 1 && std::abs(dr) <= 1;
    case PieceKind::Bishop:
      return std::abs(df) == std::abs(dr) && path_clear();
    case PieceKind::Rook:
      return (df == 0 || dr == 0) && path_clear();
    case PieceKind::Queen:
      return (std::abs(df) == std::abs(dr) || df == 0 || dr == 0) && path_clear();
  }
  return false;
}

StepResult apply_move(const Board& b, const Move& m) {
  GARDNER_CHECK_MSG(move_is_legal(b, m), "apply_move called with illegal move " + move_name(m));
  const Color mover = b.side_to_move();
  std::optional<PieceKind> captured;
  Board nb = make_move_unchecked(b, m, &captured);

  GameStatus status;
  if (captured == PieceKind::King) {
    status.outcome =
        mover == Color::White ? GameStatus::Outcome::WhiteWin : GameStatus::Outcome::BlackWin;
    status.cause = GameStatus::Cause::KingCaptured;
  } else if (nb.half_move_count() >= kHalfMoveCap) {
    status.outcome = GameStatus::Outcome::Draw;
    status.cause = GameStatus::Cause::MoveCapReached;
  } else if (legal_moves(nb).empty()) {
    status.outcome = GameStatus::Outcome::Draw;
    status.cause = GameStatus::Cause::Stalemate;
  }
  return StepResult{nb, status, captured};
}

GameStatus position_status(const Board& b) {
  GameStatus status;
  if (!b.king_alive(Color::Black)) {
    status.outcome = GameStatus::Outcome::WhiteWin;
    status.cause = GameStatus::Cause::KingCaptured;
  } else if (!b.king_alive(Color::White)) {
    status.outcome = GameStatus::Outcome::BlackWin;
    status.cause = GameStatus::Cause::KingCaptured;
  } else if (b.half_move_count() >= kHalfMoveCap) {
    status.outcome = GameStatus::Outcome::Draw;
    status.cause = GameStatus::Cause::MoveCapReached;
  } else if (legal_moves(b).empty()) {
    status.outcome = GameStatus::Outcome::Draw;
    status.cause = GameStatus::Cause::Stalemate;
  }
  return status;
}

int material_score(const Board& b, Color color) {
  int score = 0;
  for (int i = 0; i < kNumSquares; ++i) {
    const auto p = b.piece_at(i);
    if (!p) continue;
    score += p->color == color ? piece_value(p->kind) : -piece_value(p->kind);
  }
  return score;
}

std::uint64_t perft(const Board& b, int depth) {
  GARDNER_CHECK(depth >= 0);
  if (depth == 0) return 1;
  if (position_status(b).is_terminal()) return 0;
  return perft_inner(b, depth);
}

std::string board_to_text(const Board& b) {
  std::string out;
  for (int r = kBoardSize - 1; r >= 0; --r) {
    for (int f = 0; f < kBoardSize; ++f) {
      const auto p = b.piece_at(Square{f, r}.index());
      out += p ? piece_char(*p) : '.';
    }
    out += '\n';
  }
  out += b.side_to_move() == Color::White ? 'w' : 'b';
  out += ' ';
  out += std::to_string(b.half_move_count());
  return out;
}

std::string board_to_line(const Board& b) {
  std::string text = board_to_text(b);
  std::replace(text.begin(), text.end(), '\n', '/');
  return text;
}

Board board_from_text(const std::string& text) {
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), '/', '\n');
  std::istringstream in(normalized);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.size() != kBoardSize + 1) {
    throw std::runtime_error("board text must have 5 rank lines plus a status line");
  }
  Board b;
  for (int r = 0; r < kBoardSize; ++r) {
    const std::string& row = lines[kBoardSize - 1 - r];
    if (row.size() != kBoardSize) {
      throw std::runtime_error("rank line '" + row + "' must have 5 characters");
    }
    for (int f = 0; f < kBoardSize; ++f) {
      b.set_piece(Square{f, r}.index(), piece_from_char(row[f]));
    }
  }
  std::istringstream status(lines.back());
  std::string stm;
  int half_moves = 0;
  if (!(status >> stm >> half_moves) || (stm != "w" && stm != "b") || half_moves < 0) {
    throw std::runtime_error("bad status line '" + lines.back() + "'");
  }
  b.set_side_to_move(stm == "w" ? Color::White : Color::Black);
  b.set_half_move_count(half_moves);

  for (int f = 0; f < kBoardSize; ++f) {
    const auto w = b.piece_at(Square{f, 0}.index());
    const auto bl = b.piece_at(Square{f, kBoardSize - 1}.index());
    if ((w && w->color == Color::White && w->kind == PieceKind::Pawn) ||
        (bl && bl->color == Color::Black && bl->kind == PieceKind::Pawn)) {
      throw std::runtime_error("pawn on its own back rank");
    }
  }
  return b;
}

}  // namespace gardner
