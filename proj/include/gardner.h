/*
 * C interface to the Gardner minichess training library.
 *
 * Every object is an opaque handle created and destroyed through this
 * header. Functions return GARDNER_OK on success; on failure they return an
 * error code and gardner_last_error() holds a thread-local message with the
 * details. String outputs are written into caller buffers and always
 * NUL-terminated; when the buffer is too small the call fails with
 * GARDNER_ERR_BUFFER and *needed (when present) carries the required size.
 */
#ifndef GARDNER_H
#define GARDNER_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gardner_status {
  GARDNER_OK = 0,
  GARDNER_ERR_INVALID_ARGUMENT = 1,
  GARDNER_ERR_PARSE = 2,
  GARDNER_ERR_IO = 3,
  GARDNER_ERR_ILLEGAL_MOVE = 4,
  GARDNER_ERR_BUFFER = 5,
  GARDNER_ERR_INTERNAL = 6
} gardner_status;

const char* gardner_version(void);
const char* gardner_status_name(gardner_status status);
const char* gardner_last_error(void);

/* Size of the fixed action space (the policy output dimension). */
int gardner_action_space_size(void);

/* ---- game state ---- */

typedef struct gardner_board gardner_board;

typedef enum gardner_color { GARDNER_WHITE = 0, GARDNER_BLACK = 1 } gardner_color;

typedef enum gardner_outcome {
  GARDNER_ONGOING = 0,
  GARDNER_WHITE_WIN = 1,
  GARDNER_BLACK_WIN = 2,
  GARDNER_DRAW = 3
} gardner_outcome;

typedef struct gardner_move {
  uint8_t from;      /* square index rank*5 + file, 0..24 */
  uint8_t to;        /* square index, 0..24 */
  char promotion;    /* 0 for none, else one of 'n','b','r','q' */
} gardner_move;

gardner_board* gardner_board_initial(void);
gardner_board* gardner_board_clone(const gardner_board* board);
void gardner_board_free(gardner_board* board);

gardner_status gardner_board_from_text(const char* text, gardner_board** out);
gardner_status gardner_board_to_text(const gardner_board* board, char* buffer, size_t capacity,
                                     size_t* needed);

gardner_color gardner_board_side_to_move(const gardner_board* board);
int gardner_board_half_moves(const gardner_board* board);
int64_t gardner_board_material(const gardner_board* board, gardner_color color);

/* Writes up to `capacity` legal moves; *count receives the total available. */
gardner_status gardner_board_legal_moves(const gardner_board* board, gardner_move* moves,
                                         size_t capacity, size_t* count);

/* Applies a legal move in place. Outputs are optional (may be NULL):
 * *outcome receives the resulting game status and *captured the letter of a
 * captured piece ('p','n','b','r','q','k') or 0. */
gardner_status gardner_board_apply(gardner_board* board, gardner_move move, int* outcome,
                                   char* captured);

gardner_status gardner_perft(const gardner_board* board, int depth, uint64_t* nodes);

/* ---- configuration ---- */

typedef struct gardner_config gardner_config;

gardner_config* gardner_config_default(void);
gardner_status gardner_config_preset(const char* name, gardner_config** out);
gardner_status gardner_config_load(const char* path, gardner_config** out);
gardner_status gardner_config_save(const gardner_config* config, const char* path);
/* Dotted keys ("ppo.gamma", "net.channels", "seed", ...); values are parsed
 * from their textual form. */
gardner_status gardner_config_set(gardner_config* config, const char* key, const char* value);
gardner_status gardner_config_get(const gardner_config* config, const char* key, char* buffer,
                                  size_t capacity, size_t* needed);
void gardner_config_free(gardner_config* config);

/* ---- command-level runs ---- */

/* Progress lines are delivered to the callback (pass NULL to silence). */
typedef void (*gardner_log_fn)(const char* line, void* user);

gardner_status gardner_run_train_single(const gardner_config* config, gardner_log_fn log,
                                        void* user, char* checkpoint_path, size_t capacity);

gardner_status gardner_run_selfplay(const gardner_config* config, gardner_log_fn log, void* user,
                                    char* white_checkpoint, size_t white_capacity,
                                    char* black_checkpoint, size_t black_capacity);

gardner_status gardner_run_collect(const gardner_config* config, gardner_log_fn log, void* user,
                                   char* games_path, size_t capacity, int64_t* games,
                                   int64_t* positions);

gardner_status gardner_run_pretrain(const gardner_config* config, gardner_log_fn log, void* user,
                                    char* checkpoint_path, size_t capacity);

typedef struct gardner_match_stats {
  int64_t games;
  int64_t white_wins;
  int64_t black_wins;
  int64_t draws;
  double white_win_rate;
  double ci95;
  double mean_episode_reward;
  double mean_episode_length;
} gardner_match_stats;

/* `white` and `black` are "random" or checkpoint paths. */
gardner_status gardner_run_evaluate(const gardner_config* config, const char* white,
                                    const char* black, gardner_log_fn log, void* user,
                                    gardner_match_stats* stats);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GARDNER_H */
