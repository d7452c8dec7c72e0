#include "gardner/actions.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "gardner/check.hpp"

namespace gardner {

ActionTable::ActionTable() {
  underpromo_base_.fill(-1);
  // Promotion pairs in the mover frame: pawn on the fourth rank stepping or
  // capturing onto the fifth.
  int next = kDenseSlots;
  for (int from = 0; from < kNumSquares; ++from) {
    const Square f = Square::from_index(from);
    if (f.rank != kBoardSize - 2) continue;
    for (int df = -1; df <= 1; ++df) {
      const Square t{f.file + df, f.rank + 1};
      if (!t.on_board()) continue;
      const int pair = from * kNumSquares + t.index();
      underpromo_base_[pair] = static_cast<std::int16_t>(next);
      pair_of_slot_.push_back(pair);
      next += 3;
    }
  }
  size_ = next;
}

const ActionTable& ActionTable::instance() {
  static const ActionTable table;
  return table;
}

int relative_square(int square, Color mover) {
  if (mover == Color::White) return square;
  const Square sq = Square::from_index(square);
  return Square{sq.file, kBoardSize - 1 - sq.rank}.index();
}

Move relative_move(const Move& m, Color mover) {
  return Move{relative_square(m.from, mover), relative_square(m.to, mover), m.promotion};
}

int ActionTable::encode(const Move& move, Color mover) const {
  const Move rel = relative_move(move, mover);
  const int pair = rel.from * kNumSquares + rel.to;
  if (rel.promotion && *rel.promotion != PieceKind::Queen) {
    const int base = underpromo_base_[pair];
    GARDNER_CHECK_MSG(base >= 0, "not a promotion pair: " + move_name(move));
    for (int i = 0; i < 3; ++i) {
      if (kUnderpromotions[i] == *rel.promotion) return base + i;
    }
    GARDNER_CHECK_MSG(false, "bad promotion piece");
  }
  return pair;
}

ActionTable::Descriptor ActionTable::descriptor(int action) const {
  GARDNER_CHECK(action >= 0 && action < size_);
  if (action < kDenseSlots) {
    return Descriptor{action / kNumSquares, action % kNumSquares, std::nullopt};
  }
  const int extra = action - kDenseSlots;
  const int pair = pair_of_slot_[extra / 3];
  return Descriptor{pair / kNumSquares, pair % kNumSquares, kUnderpromotions[extra % 3]};
}

Move ActionTable::materialize(int action, const Board& b) const {
  const Color mover = b.side_to_move();
  const Descriptor d = descriptor(action);
  const int from = relative_square(d.from, mover);
  const int to = relative_square(d.to, mover);
  std::optional<PieceKind> promotion = d.underpromotion;
  if (!promotion) {
    const auto piece = b.piece_at(from);
    const int last_rank = mover == Color::White ? kBoardSize - 1 : 0;
    if (piece && piece->kind == PieceKind::Pawn &&
        Square::from_index(to).rank == last_rank) {
      promotion = PieceKind::Queen;
    }
  }
  return Move{from, to, promotion};
}

void ActionTable::dump(std::ostream& out) const {
  for (int a = 0; a < size_; ++a) {
    const Descriptor d = descriptor(a);
    out << a << ' ' << square_name(d.from) << ' ' << square_name(d.to) << ' ';
    if (d.underpromotion) {
      const char names[] = {'p', 'n', 'b', 'r', 'q', 'k'};
      out << names[static_cast<int>(*d.underpromotion)];
    } else {
      out << '-';
    }
    out << '\n';
  }
}

std::vector<std::uint8_t> Observation::dense_mask() const {
  std::vector<std::uint8_t> mask(action_space, 0);
  for (std::uint16_t a : legal) mask[a] = 1;
  return mask;
}

bool Observation::is_legal(int action) const {
  return std::binary_search(legal.begin(), legal.end(), static_cast<std::uint16_t>(action));
}

Observation observe(const Board& b, Color for_color) {
  const ActionTable& table = ActionTable::instance();
  Observation obs;
  obs.action_space = table.size();
  for (int i = 0; i < kNumSquares; ++i) {
    const auto p = b.piece_at(i);
    if (!p) continue;
    const float v = static_cast<float>(piece_value(p->kind)) / 1000.0f;
    obs.plane[i] = p->color == Color::White ? v : -v;
  }
  const auto moves = moves_for_color(b, for_color);
  obs.legal.reserve(moves.size());
  for (const Move& m : moves) {
    obs.legal.push_back(static_cast<std::uint16_t>(table.encode(m, for_color)));
  }
  std::sort(obs.legal.begin(), obs.legal.end());
  return obs;
}

std::vector<double> masked_probabilities(std::span<const float> legal_logits) {
  GARDNER_CHECK_MSG(!legal_logits.empty(), "policy evaluated with an all-zero action mask");
  double max_logit = legal_logits[0];
  for (float v : legal_logits) max_logit = std::max(max_logit, static_cast<double>(v));
  std::vector<double> probs(legal_logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < legal_logits.size(); ++i) {
    probs[i] = std::exp(static_cast<double>(legal_logits[i]) - max_logit);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

std::vector<double> mask_policy(std::span<const double> logits,
                                std::span<const std::uint8_t> mask) {
  GARDNER_CHECK(logits.size() == mask.size());
  std::vector<float> legal_logits;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      legal_logits.push_back(static_cast<float>(logits[i]));
      where.push_back(i);
    }
  }
  GARDNER_CHECK_MSG(!legal_logits.empty(), "policy evaluated with an all-zero action mask");
  // Work in double from the original logits for the dense form.
  double max_logit = -1e300;
  for (std::size_t i : where) max_logit = std::max(max_logit, logits[i]);
  std::vector<double> out(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t i : where) {
    out[i] = std::exp(logits[i] - max_logit);
    total += out[i];
  }
  for (std::size_t i : where) out[i] /= total;
  return out;
}

}  // namespace gardner
