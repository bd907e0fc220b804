#ifndef INFOWAR_H
#define INFOWAR_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum InfowarStatus {
  INFOWAR_STATUS_OK = 0,
  INFOWAR_STATUS_NULL_POINTER = 1,
  INFOWAR_STATUS_INVALID_UTF8 = 2,
  INFOWAR_STATUS_INVALID_CONFIG = 3,
  INFOWAR_STATUS_INVALID_NETWORK = 4,
  INFOWAR_STATUS_INVALID_AGENT = 5,
  INFOWAR_STATUS_RUN_FAILED = 6,
  INFOWAR_STATUS_INTERNAL = 7,
} InfowarStatus;

typedef enum InfowarAgentKind {
  INFOWAR_AGENT_KIND_HEURISTIC = 0,
  INFOWAR_AGENT_KIND_SILENT = 1,
  /**
   * Replays a JSONL script of `{"message":..,"potency":..}` lines.
   */
  INFOWAR_AGENT_KIND_SCRIPTED = 2,
} InfowarAgentKind;

typedef enum InfowarOutcome {
  INFOWAR_OUTCOME_RED_MAJORITY = 0,
  INFOWAR_OUTCOME_BLUE_MAJORITY = 1,
  INFOWAR_OUTCOME_STALEMATE = 2,
} InfowarOutcome;

typedef struct InfowarConfig InfowarConfig;

typedef struct InfowarNetwork InfowarNetwork;

typedef struct InfowarRun InfowarRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Owned by the
 * library and valid until the next call on this thread.
 */
const char *infowar_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void infowar_string_free(char *s);

/**
 * Parses and validates a JSON config. Omitted keys take defaults.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum InfowarStatus infowar_config_from_json(const char *json, struct InfowarConfig **out);

/**
 * Overrides the master seed.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum InfowarStatus infowar_config_set_seed(struct InfowarConfig *config, uint64_t seed);

/**
 * # Safety
 * `config` must be null or a handle from this library, freed once.
 */
void infowar_config_free(struct InfowarConfig *config);

/**
 * Generates a network. `kind` is one of `complete`, `erdos_renyi`,
 * `barabasi_albert`, `watts_strogatz`; parameters the kind does not use are
 * ignored.
 *
 * # Safety
 * `kind` must be a NUL-terminated string; `out` must be writable.
 */
enum InfowarStatus infowar_network_generate(const char *kind,
                                            size_t n,
                                            double p,
                                            size_t m,
                                            size_t k,
                                            double beta,
                                            uint64_t seed,
                                            struct InfowarNetwork **out);

/**
 * Loads a `u,v` edge list. `n` of 0 infers the node count.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum InfowarStatus infowar_network_from_edge_list(const char *text,
                                                  size_t n,
                                                  struct InfowarNetwork **out);

/**
 * # Safety
 * `network` must be a live handle; the out pointers must be writable.
 */
enum InfowarStatus infowar_network_size(const struct InfowarNetwork *network,
                                        size_t *nodes,
                                        size_t *edges);

/**
 * # Safety
 * `network` must be null or a handle from this library, freed once.
 */
void infowar_network_free(struct InfowarNetwork *network);

/**
 * Runs a simulation to termination. `red_script` and `blue_script` are
 * read only for `INFOWAR_AGENT_KIND_SCRIPTED` and may be null otherwise.
 *
 * # Safety
 * Handles must be live, strings NUL-terminated, `out` writable.
 */
enum InfowarStatus infowar_run(const struct InfowarConfig *config,
                               const struct InfowarNetwork *network,
                               enum InfowarAgentKind red_kind,
                               const char *red_script,
                               enum InfowarAgentKind blue_kind,
                               const char *blue_script,
                               struct InfowarRun **out);

/**
 * # Safety
 * `run` must be a live handle; the out pointers must be writable.
 */
enum InfowarStatus infowar_run_outcome(const struct InfowarRun *run,
                                       enum InfowarOutcome *outcome,
                                       uint32_t *round);

/**
 * Remaining Blue energy in hundredths.
 *
 * # Safety
 * `run` must be a live handle; `cents` must be writable.
 */
enum InfowarStatus infowar_run_blue_energy_cents(const struct InfowarRun *run, int64_t *cents);

/**
 * # Safety
 * `run` must be a live handle; free the result with `infowar_string_free`.
 */
enum InfowarStatus infowar_run_rounds_csv(const struct InfowarRun *run, char **out);

/**
 * # Safety
 * `run` must be a live handle; free the result with `infowar_string_free`.
 */
enum InfowarStatus infowar_run_messages_jsonl(const struct InfowarRun *run, char **out);

/**
 * # Safety
 * `run` must be a live handle; free the result with `infowar_string_free`.
 */
enum InfowarStatus infowar_run_states_csv(const struct InfowarRun *run, char **out);

/**
 * # Safety
 * `run` must be a live handle; free the result with `infowar_string_free`.
 */
enum InfowarStatus infowar_run_metrics_csv(const struct InfowarRun *run, char **out);

/**
 * # Safety
 * `run` must be null or a handle from this library, freed once.
 */
void infowar_run_free(struct InfowarRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INFOWAR_H */
