#ifndef MATLQL_H
#define MATLQL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MatlqlStatus {
  MATLQL_STATUS_OK = 0,
  MATLQL_STATUS_NULL_POINTER = 1,
  MATLQL_STATUS_INVALID_UTF8 = 2,
  MATLQL_STATUS_CONFIG = 3,
  MATLQL_STATUS_PARSE = 4,
  MATLQL_STATUS_DOMAIN = 5,
  MATLQL_STATUS_CONTRACT = 6,
  MATLQL_STATUS_IO = 7,
  /**
   * Any other library error; see the message.
   */
  MATLQL_STATUS_FAILED = 8,
  MATLQL_STATUS_PANIC = 9,
  MATLQL_STATUS_OUT_OF_RANGE = 10,
} MatlqlStatus;

/**
 * Parsed experiment configuration.
 */
typedef struct MatlqlConfig MatlqlConfig;

/**
 * One arm's agents and environment, stepping episode by episode.
 */
typedef struct MatlqlTrainer MatlqlTrainer;

typedef struct MatlqlBoundInputs {
  double covering_time;
  double q_max;
  double state_count;
  double action_product;
  double delta;
  double epsilon;
  double gamma;
  double omega;
  double psi;
} MatlqlBoundInputs;

typedef struct MatlqlBounds {
  double ln_polynomial;
  double ln_linear;
  uint64_t iterations;
} MatlqlBounds;

typedef struct MatlqlWelch {
  double t;
  double df;
  double p;
  /**
   * Nonzero when both samples have zero variance.
   */
  int32_t degenerate;
} MatlqlWelch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last failure message on this thread. Returns the buffer size needed
 * including the NUL; `buf` may be null to query it. Empty after a success.
 *
 * # Safety
 * `buf` is null or valid for `len` bytes.
 */
uintptr_t matlql_last_error_message(char *buf, uintptr_t len);

/**
 * Parse config text. Relative paths inside it resolve against `base_dir`
 * (which may be null for the current directory).
 *
 * # Safety
 * String arguments are null or NUL-terminated; `out` is a valid pointer.
 */
enum MatlqlStatus matlql_config_parse(const char *text,
                                      const char *base_dir,
                                      struct MatlqlConfig **out_config);

/**
 * # Safety
 * `path` is NUL-terminated; `out_config` is a valid pointer.
 */
enum MatlqlStatus matlql_config_load(const char *path, struct MatlqlConfig **out_config);

/**
 * # Safety
 * `config` is null or came from `matlql_config_parse`/`_load` and is not used again.
 */
void matlql_config_free(struct MatlqlConfig *config);

/**
 * Number of arms, or 0 for a null handle.
 *
 * # Safety
 * `config` is null or a live handle.
 */
uintptr_t matlql_config_arm_count(const struct MatlqlConfig *config);

/**
 * Number of seeds, or 0 for a null handle.
 *
 * # Safety
 * `config` is null or a live handle.
 */
uintptr_t matlql_config_seed_count(const struct MatlqlConfig *config);

/**
 * Run every arm and seed and write the full output directory.
 *
 * # Safety
 * `config` is a live handle; `out_dir` is NUL-terminated.
 */
enum MatlqlStatus matlql_run(const struct MatlqlConfig *config, const char *out_dir);

/**
 * Replay the scripted toy trace; `*out_passed` is 1 when every value matches.
 *
 * # Safety
 * `out_passed` is a valid pointer.
 */
enum MatlqlStatus matlql_golden_trace(int32_t *out_passed);

/**
 * Both convergence-time bounds (as natural logs) and the iteration count.
 *
 * # Safety
 * `inputs` and `out_bounds` are valid pointers.
 */
enum MatlqlStatus matlql_bounds(const struct MatlqlBoundInputs *inputs,
                                struct MatlqlBounds *out_bounds);

/**
 * # Safety
 * `out_iterations` is a valid pointer.
 */
enum MatlqlStatus matlql_iterations_for_accuracy(double q_max,
                                                 double beta,
                                                 double eps,
                                                 uint64_t *out_iterations);

/**
 * Two-sided Welch t-test of two samples.
 *
 * # Safety
 * `a` and `b` point to `na` and `nb` doubles; `out_result` is valid.
 */
enum MatlqlStatus matlql_welch_t_test(const double *a,
                                      uintptr_t na,
                                      const double *b,
                                      uintptr_t nb,
                                      struct MatlqlWelch *out_result);

/**
 * Build the learners and environment of arm `arm` for `seed`.
 *
 * # Safety
 * `config` is a live handle; `out_trainer` is a valid pointer.
 */
enum MatlqlStatus matlql_trainer_new(const struct MatlqlConfig *config,
                                     uintptr_t arm,
                                     uint64_t seed,
                                     struct MatlqlTrainer **out_trainer);

/**
 * # Safety
 * `trainer` is null or a live handle not used again.
 */
void matlql_trainer_free(struct MatlqlTrainer *trainer);

/**
 * # Safety
 * `trainer` is null or a live handle.
 */
uintptr_t matlql_trainer_num_agents(const struct MatlqlTrainer *trainer);

/**
 * Play one episode, learning when `training` is nonzero. Writes each
 * agent's return into `out_returns`, which holds `len` doubles and must
 * fit every agent.
 *
 * # Safety
 * `trainer` is a live handle; `out_returns` is valid for `len` doubles.
 */
enum MatlqlStatus matlql_trainer_run_episode(struct MatlqlTrainer *trainer,
                                             int32_t training,
                                             double *out_returns,
                                             uintptr_t len);

/**
 * Agent `agent`'s table checkpoint as text. `*out_needed` receives the
 * size including the NUL; the text is copied only if `len` suffices.
 *
 * # Safety
 * `trainer` is a live handle; `buf` is null or valid for `len` bytes;
 * `out_needed` is valid.
 */
enum MatlqlStatus matlql_trainer_checkpoint(const struct MatlqlTrainer *trainer,
                                            uintptr_t agent,
                                            char *buf,
                                            uintptr_t len,
                                            uintptr_t *out_needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MATLQL_H */
