#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>

#include "gardner/actions.hpp"
#include "gardner/rng.hpp"
#include "oracles.hpp"

using namespace gardner;

TEST_SUITE_BEGIN("actions");

TEST_CASE("table size is 625 dense slots plus 13 underpromotion pairs") {
  const ActionTable& table = ActionTable::instance();
  CHECK(table.size() == 664);

  // Count the promotion pairs independently: fourth-rank pawn squares times
  // reachable fifth-rank squares.
  int pairs = 0;
  for (int file = 0; file < kBoardSize; ++file) {
    for (int df = -1; df <= 1; ++df) {
      const int to_file = file + df;
      if (to_file >= 0 && to_file < kBoardSize) ++pairs;
    }
  }
  CHECK(pairs == 13);
  CHECK(table.size() == 625 + 3 * pairs);
}

TEST_CASE("white a1a2 encodes to index 5") {
  const ActionTable& table = ActionTable::instance();
  const Move m{square_from_name("a1"), square_from_name("a2"), std::nullopt};
  CHECK(table.encode(m, Color::White) == 5);
  const auto d = table.descriptor(5);
  CHECK(d.from == 0);
  CHECK(d.to == 5);
  CHECK(!d.underpromotion.has_value());
}

TEST_CASE("black moves are rank-mirrored into the mover frame") {
  const ActionTable& table = ActionTable::instance();
  // Black pawn push e4e3 looks like e2e3 from black's own side.
  const Move m{square_from_name("e4"), square_from_name("e3"), std::nullopt};
  const int id = table.encode(m, Color::Black);
  CHECK(id == square_from_name("e2") * 25 + square_from_name("e3"));
  // Mirroring twice is the identity.
  CHECK(relative_move(relative_move(m, Color::Black), Color::Black) == m);
  CHECK(relative_move(m, Color::White) == m);
}

TEST_CASE("round-trip through encode/materialize on random playouts") {
  const ActionTable& table = ActionTable::instance();
  Rng rng(501);
  int positions = 0, moves_checked = 0, promotions = 0, black_promotions = 0;
  while (positions < 2000) {
    const Board b = oracle::random_playout_position(rng, rng.next_index(90));
    ++positions;
    std::set<int> seen;
    for (const Move& m : legal_moves(b)) {
      const int id = table.encode(m, b.side_to_move());
      CHECK(id >= 0);
      CHECK(id < table.size());
      CHECK(seen.insert(id).second);  // ids are distinct per position
      const Move back = table.materialize(id, b);
      CHECK(back == m);
      ++moves_checked;
      if (m.promotion) {
        ++promotions;
        if (b.side_to_move() == Color::Black) ++black_promotions;
      }
    }
  }
  CHECK(moves_checked > 10000);
  // The sample must actually exercise promotion encoding for both colors.
  CHECK(promotions > 50);
  CHECK(black_promotions > 10);
}

TEST_CASE("observation of the initial board") {
  const Board b = Board::initial();
  const Observation white = observe(b, Color::White);
  const Observation black = observe(b, Color::Black);

  // Plane is independent of the observer.
  CHECK(white.plane == black.plane);
  for (int f = 0; f < kBoardSize; ++f) {
    CHECK(white.plane[Square{f, 1}.index()] == doctest::Approx(0.1));
    CHECK(white.plane[Square{f, 3}.index()] == doctest::Approx(-0.1));
  }
  CHECK(white.plane[Square{4, 0}.index()] == doctest::Approx(60.0));
  CHECK(white.plane[Square{4, 4}.index()] == doctest::Approx(-60.0));
  CHECK(white.plane[Square{3, 0}.index()] == doctest::Approx(0.9));

  CHECK(white.legal.size() == 7);
  CHECK(black.legal.size() == 7);
  const auto mask = white.dense_mask();
  int ones = 0;
  for (auto m : mask) ones += m;
  CHECK(ones == 7);
  CHECK(white.action_space == 664);
}

TEST_CASE("mask_policy: uniform logits spread evenly over legal actions") {
  std::vector<double> logits(10, 1.25);
  std::vector<std::uint8_t> mask(10, 0);
  mask[1] = mask[4] = mask[7] = mask[9] = 1;
  const auto p = mask_policy(logits, mask);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (mask[i]) {
      CHECK(p[i] == doctest::Approx(0.25).epsilon(1e-12));
    } else {
      CHECK(p[i] == 0.0);
    }
    sum += p[i];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mask_policy: single legal action gets probability one") {
  std::vector<double> logits = {-50.0, 3.0, 90.0};
  std::vector<std::uint8_t> mask = {0, 1, 0};
  const auto p = mask_policy(logits, mask);
  CHECK(p[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[0] == 0.0);
  CHECK(p[2] == 0.0);
}

TEST_CASE("mask_policy: logits (0, ln 3) give probabilities (0.25, 0.75)") {
  std::vector<double> logits = {0.0, std::log(3.0)};
  std::vector<std::uint8_t> mask = {1, 1};
  const auto p = mask_policy(logits, mask);
  CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("mask_policy invariants: normalization and shift invariance") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + rng.next_index(40);
    std::vector<double> logits(n);
    std::vector<std::uint8_t> mask(n, 0);
    for (int i = 0; i < n; ++i) logits[i] = (rng.next_double() - 0.5) * 20.0;
    const int legal = 1 + rng.next_index(n);
    for (int i = 0; i < legal; ++i) mask[rng.next_index(n)] = 1;
    mask[rng.next_index(n)] = 1;  // ensure at least one

    const auto p = mask_policy(logits, mask);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p[i] >= 0.0);
      if (!mask[i]) CHECK(p[i] == 0.0);
      sum += p[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);

    const double shift = (rng.next_double() - 0.5) * 200.0;
    std::vector<double> shifted = logits;
    for (double& v : shifted) v += shift;
    const auto q = mask_policy(shifted, mask);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) < 1e-9);
  }
}

TEST_CASE("mask_policy rejects an all-zero mask") {
  std::vector<double> logits = {0.0, 1.0};
  std::vector<std::uint8_t> mask = {0, 0};
  CHECK_THROWS_AS(mask_policy(logits, mask), ContractError);
}

TEST_CASE("sampled actions always materialize to applicable moves") {
  const ActionTable& table = ActionTable::instance();
  Rng rng(31337);
  for (int trial = 0; trial < 300; ++trial) {
    const Board b = oracle::random_playout_position(rng, rng.next_index(70));
    const Observation obs = observe(b, b.side_to_move());
    REQUIRE(!obs.legal.empty());
    const int pick = obs.legal[rng.next_index(static_cast<int>(obs.legal.size()))];
    const Move m = table.materialize(pick, b);
    CHECK_NOTHROW(apply_move(b, m));
  }
}

TEST_CASE("audit dump lists every action once") {
  const ActionTable& table = ActionTable::instance();
  std::ostringstream out;
  table.dump(out);
  std::istringstream in(out.str());
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    CHECK(!line.empty());
    ++count;
  }
  CHECK(count == table.size());
}

TEST_SUITE_END();
