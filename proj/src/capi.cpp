#include "gardner.h"

#include <cstring>
#include <string>

#include "json.hpp"

#include "gardner/board.hpp"
#include "gardner/runs.hpp"

namespace {

thread_local std::string g_last_error;

gardner_status fail(gardner_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
gardner_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const gardner::ContractError& e) {
    return fail(GARDNER_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(GARDNER_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(GARDNER_ERR_INTERNAL, "unknown error");
  }
}

gardner_status copy_out(const std::string& s, char* buffer, size_t capacity, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buffer || capacity == 0) return fail(GARDNER_ERR_BUFFER, "output buffer missing");
  if (s.size() + 1 > capacity) {
    buffer[0] = '\0';
    return fail(GARDNER_ERR_BUFFER,
                "buffer of " + std::to_string(capacity) + " bytes, need " +
                    std::to_string(s.size() + 1));
  }
  std::memcpy(buffer, s.c_str(), s.size() + 1);
  return GARDNER_OK;
}

gardner::Move to_move(gardner_move m) {
  std::optional<gardner::PieceKind> promo;
  switch (m.promotion) {
    case 0: break;
    case 'n': promo = gardner::PieceKind::Knight; break;
    case 'b': promo = gardner::PieceKind::Bishop; break;
    case 'r': promo = gardner::PieceKind::Rook; break;
    case 'q': promo = gardner::PieceKind::Queen; break;
    default: promo = gardner::PieceKind::King; break;  // rejected by move validation
  }
  return gardner::Move{m.from, m.to, promo};
}

gardner_move from_move(const gardner::Move& m) {
  gardner_move out;
  out.from = static_cast<uint8_t>(m.from);
  out.to = static_cast<uint8_t>(m.to);
  out.promotion = 0;
  if (m.promotion) {
    const char letters[] = {'p', 'n', 'b', 'r', 'q', 'k'};
    out.promotion = letters[static_cast<int>(*m.promotion)];
  }
  return out;
}

gardner::LogSink make_log(gardner_log_fn log, void* user) {
  if (!log) return nullptr;
  return [log, user](const std::string& line) { log(line.c_str(), user); };
}

}  // namespace

struct gardner_board {
  gardner::Board board;
};

struct gardner_config {
  gardner::RunConfig config;
};

extern "C" {

const char* gardner_version(void) { return "1.0.0"; }

const char* gardner_status_name(gardner_status status) {
  switch (status) {
    case GARDNER_OK: return "ok";
    case GARDNER_ERR_INVALID_ARGUMENT: return "invalid argument";
    case GARDNER_ERR_PARSE: return "parse error";
    case GARDNER_ERR_IO: return "io error";
    case GARDNER_ERR_ILLEGAL_MOVE: return "illegal move";
    case GARDNER_ERR_BUFFER: return "buffer too small";
    case GARDNER_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

const char* gardner_last_error(void) { return g_last_error.c_str(); }

int gardner_action_space_size(void) { return gardner::ActionTable::instance().size(); }

gardner_board* gardner_board_initial(void) {
  return new gardner_board{gardner::Board::initial()};
}

gardner_board* gardner_board_clone(const gardner_board* board) {
  if (!board) return nullptr;
  return new gardner_board{board->board};
}

void gardner_board_free(gardner_board* board) { delete board; }

gardner_status gardner_board_from_text(const char* text, gardner_board** out) {
  if (!text || !out) return fail(GARDNER_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&]() -> gardner_status {
    try {
      *out = new gardner_board{gardner::board_from_text(text)};
      return GARDNER_OK;
    } catch (const std::runtime_error& e) {
      return fail(GARDNER_ERR_PARSE, e.what());
    }
  });
}

gardner_status gardner_board_to_text(const gardner_board* board, char* buffer, size_t capacity,
                                     size_t* needed) {
  if (!board) return fail(GARDNER_ERR_INVALID_ARGUMENT, "null board");
  return guarded([&]() -> gardner_status {
    return copy_out(gardner::board_to_text(board->board), buffer, capacity, needed);
  });
}

gardner_color gardner_board_side_to_move(const gardner_board* board) {
  return board->board.side_to_move() == gardner::Color::White ? GARDNER_WHITE : GARDNER_BLACK;
}

int gardner_board_half_moves(const gardner_board* board) {
  return board->board.half_move_count();
}

int64_t gardner_board_material(const gardner_board* board, gardner_color color) {
  return gardner::material_score(
      board->board, color == GARDNER_WHITE ? gardner::Color::White : gardner::Color::Black);
}

gardner_status gardner_board_legal_moves(const gardner_board* board, gardner_move* moves,
                                         size_t capacity, size_t* count) {
  if (!board || !count) return fail(GARDNER_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> gardner_status {
    const auto legal = gardner::legal_moves(board->board);
    *count = legal.size();
    if (moves) {
      const size_t n = legal.size() < capacity ? legal.size() : capacity;
      for (size_t i = 0; i < n; ++i) moves[i] = from_move(legal[i]);
    }
    return GARDNER_OK;
  });
}

gardner_status gardner_board_apply(gardner_board* board, gardner_move move, int* outcome,
                                   char* captured) {
  if (!board) return fail(GARDNER_ERR_INVALID_ARGUMENT, "null board");
  return guarded([&]() -> gardner_status {
    const gardner::Move m = to_move(move);
    if (!gardner::move_is_legal(board->board, m)) {
      return fail(GARDNER_ERR_ILLEGAL_MOVE, "illegal move " + gardner::move_name(m));
    }
    const auto step = gardner::apply_move(board->board, m);
    board->board = step.board;
    if (outcome) *outcome = static_cast<int>(step.status.outcome);
    if (captured) {
      const char letters[] = {'p', 'n', 'b', 'r', 'q', 'k'};
      *captured = step.captured ? letters[static_cast<int>(*step.captured)] : 0;
    }
    return GARDNER_OK;
  });
}

gardner_status gardner_perft(const gardner_board* board, int depth, uint64_t* nodes) {
  if (!board || !nodes || depth < 0) {
    return fail(GARDNER_ERR_INVALID_ARGUMENT, "bad perft arguments");
  }
  return guarded([&]() -> gardner_status {
    *nodes = gardner::perft(board->board, depth);
    return GARDNER_OK;
  });
}

gardner_config* gardner_config_default(void) { return new gardner_config{}; }

gardner_status gardner_config_preset(const char* name, gardner_config** out) {
  if (!name || !out) return fail(GARDNER_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&]() -> gardner_status {
    try {
      *out = new gardner_config{gardner::make_preset(name)};
      return GARDNER_OK;
    } catch (const std::runtime_error& e) {
      return fail(GARDNER_ERR_INVALID_ARGUMENT, e.what());
    }
  });
}

gardner_status gardner_config_load(const char* path, gardner_config** out) {
  if (!path || !out) return fail(GARDNER_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&]() -> gardner_status {
    try {
      *out = new gardner_config{gardner::load_config(path)};
      return GARDNER_OK;
    } catch (const std::runtime_error& e) {
      return fail(GARDNER_ERR_PARSE, e.what());
    }
  });
}

gardner_status gardner_config_save(const gardner_config* config, const char* path) {
  if (!config || !path) return fail(GARDNER_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> gardner_status {
    gardner::save_config(config->config, path);
    return GARDNER_OK;
  });
}

gardner_status gardner_config_set(gardner_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return fail(GARDNER_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> gardner_status {
    // Route through the JSON form so parsing/validation stay in one place.
    auto j = nlohmann::json::parse(config->config.to_json_text());
    nlohmann::json* at = &j;
    std::string rest = key;
    for (std::size_t dot = rest.find('.'); dot != std::string::npos; dot = rest.find('.')) {
      const std::string head = rest.substr(0, dot);
      if (!at->contains(head)) return fail(GARDNER_ERR_INVALID_ARGUMENT, "unknown key " + std::string(key));
      at = &(*at)[head];
      rest = rest.substr(dot + 1);
    }
    if (!at->contains(rest)) return fail(GARDNER_ERR_INVALID_ARGUMENT, "unknown key " + std::string(key));
    nlohmann::json& slot = (*at)[rest];
    const std::string text = value;
    try {
      if (slot.is_string()) {
        slot = text;
      } else if (slot.is_boolean()) {
        if (text == "true" || text == "1") slot = true;
        else if (text == "false" || text == "0") slot = false;
        else return fail(GARDNER_ERR_PARSE, "expected boolean for " + std::string(key));
      } else if (slot.is_number_integer() || slot.is_number_unsigned()) {
        slot = static_cast<std::int64_t>(std::stoll(text));
      } else {
        slot = std::stod(text);
      }
      config->config = gardner::config_from_json_text(j.dump());
      return GARDNER_OK;
    } catch (const std::exception& e) {
      return fail(GARDNER_ERR_PARSE, e.what());
    }
  });
}

gardner_status gardner_config_get(const gardner_config* config, const char* key, char* buffer,
                                  size_t capacity, size_t* needed) {
  if (!config || !key) return fail(GARDNER_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> gardner_status {
    auto j = nlohmann::json::parse(config->config.to_json_text());
    const nlohmann::json* at = &j;
    std::string rest = key;
    for (std::size_t dot = rest.find('.'); dot != std::string::npos; dot = rest.find('.')) {
      const std::string head = rest.substr(0, dot);
      if (!at->contains(head)) return fail(GARDNER_ERR_INVALID_ARGUMENT, "unknown key " + std::string(key));
      at = &at->at(head);
      rest = rest.substr(dot + 1);
    }
    if (!at->contains(rest)) return fail(GARDNER_ERR_INVALID_ARGUMENT, "unknown key " + std::string(key));
    const nlohmann::json& slot = at->at(rest);
    const std::string text = slot.is_string() ? slot.get<std::string>() : slot.dump();
    return copy_out(text, buffer, capacity, needed);
  });
}

void gardner_config_free(gardner_config* config) { delete config; }

gardner_status gardner_run_train_single(const gardner_config* config, gardner_log_fn log,
                                        void* user, char* checkpoint_path, size_t capacity) {
  if (!config) return fail(GARDNER_ERR_INVALID_ARGUMENT, "null config");
  return guarded([&]() -> gardner_status {
    const auto path = gardner::run_train_single(config->config, make_log(log, user));
    if (checkpoint_path) return copy_out(path, checkpoint_path, capacity, nullptr);
    return GARDNER_OK;
  });
}

gardner_status gardner_run_selfplay(const gardner_config* config, gardner_log_fn log, void* user,
                                    char* white_checkpoint, size_t white_capacity,
                                    char* black_checkpoint, size_t black_capacity) {
  if (!config) return fail(GARDNER_ERR_INVALID_ARGUMENT, "null config");
  return guarded([&]() -> gardner_status {
    const auto out = gardner::run_selfplay(config->config, make_log(log, user));
    if (white_checkpoint) {
      const auto rc = copy_out(out.champion_white, white_checkpoint, white_capacity, nullptr);
      if (rc != GARDNER_OK) return rc;
    }
    if (black_checkpoint) {
      return copy_out(out.champion_black, black_checkpoint, black_capacity, nullptr);
    }
    return GARDNER_OK;
  });
}

gardner_status gardner_run_collect(const gardner_config* config, gardner_log_fn log, void* user,
                                   char* games_path, size_t capacity, int64_t* games,
                                   int64_t* positions) {
  if (!config) return fail(GARDNER_ERR_INVALID_ARGUMENT, "null config");
  return guarded([&]() -> gardner_status {
    const auto out = gardner::run_collect(config->config, make_log(log, user));
    if (games) *games = out.games;
    if (positions) *positions = out.positions;
    if (games_path) return copy_out(out.games_path, games_path, capacity, nullptr);
    return GARDNER_OK;
  });
}

gardner_status gardner_run_pretrain(const gardner_config* config, gardner_log_fn log, void* user,
                                    char* checkpoint_path, size_t capacity) {
  if (!config) return fail(GARDNER_ERR_INVALID_ARGUMENT, "null config");
  return guarded([&]() -> gardner_status {
    const auto out = gardner::run_pretrain(config->config, make_log(log, user));
    if (checkpoint_path) return copy_out(out.checkpoint_path, checkpoint_path, capacity, nullptr);
    return GARDNER_OK;
  });
}

gardner_status gardner_run_evaluate(const gardner_config* config, const char* white,
                                    const char* black, gardner_log_fn log, void* user,
                                    gardner_match_stats* stats) {
  if (!config || !white || !black) return fail(GARDNER_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> gardner_status {
    const auto r = gardner::run_evaluate(config->config, white, black, make_log(log, user));
    if (stats) {
      stats->games = r.games;
      stats->white_wins = r.white_wins;
      stats->black_wins = r.black_wins;
      stats->draws = r.draws;
      stats->white_win_rate = r.white_win_rate;
      stats->ci95 = r.ci95;
      stats->mean_episode_reward = r.mean_episode_reward;
      stats->mean_episode_length = r.mean_episode_length;
    }
    return GARDNER_OK;
  });
}

}  // extern "C"
