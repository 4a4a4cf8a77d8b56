#ifndef LDPSQ_H
#define LDPSQ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LdpsqBackend {
  LDPSQ_BACKEND_PER_SAMPLE = 0,
  LDPSQ_BACKEND_AGGREGATE = 1,
} LdpsqBackend;

typedef enum LdpsqMode {
  LDPSQ_MODE_DISTRIBUTION_FREE = 0,
  LDPSQ_MODE_KNOWN_DISTRIBUTION = 1,
} LdpsqMode;

typedef enum LdpsqOracle {
  LDPSQ_ORACLE_EXACT = 0,
  LDPSQ_ORACLE_LDP = 1,
  LDPSQ_ORACLE_COMM = 2,
} LdpsqOracle;

typedef enum LdpsqStatus {
  LDPSQ_STATUS_OK = 0,
  // Null pointer, bad UTF-8, or an out-of-range enum value.
  LDPSQ_STATUS_INVALID_ARGUMENT = 1,
  LDPSQ_STATUS_INVALID_INPUT = 2,
  LDPSQ_STATUS_EVALUATION = 3,
  LDPSQ_STATUS_CONTRACT = 4,
  LDPSQ_STATUS_BUDGET_EXCEEDED = 5,
  LDPSQ_STATUS_PROTOCOL = 6,
  LDPSQ_STATUS_SIZING = 7,
  LDPSQ_STATUS_PRECONDITION = 8,
  LDPSQ_STATUS_LEARNING_FAILURE = 9,
  LDPSQ_STATUS_SOLVER = 10,
  LDPSQ_STATUS_IO = 11,
  LDPSQ_STATUS_JSON = 12,
  LDPSQ_STATUS_PANIC = 13,
} LdpsqStatus;

// A learned halfspace hypothesis.
typedef struct LdpsqHypothesis LdpsqHypothesis;

// A labeled finite source.
typedef struct LdpsqSource LdpsqSource;

typedef struct LdpsqLearnerConfig {
  double gamma;
  double alpha;
  double delta;
  // An `LdpsqMode` value.
  int32_t mode;
  // An `LdpsqOracle` value.
  int32_t oracle;
  double epsilon;
  uint64_t seed;
  uint64_t max_iters;
  double sim_tau;
  // An `LdpsqBackend` value.
  int32_t backend;
} LdpsqLearnerConfig;

typedef struct LdpsqLearnerSummary {
  size_t d;
  size_t d_prime;
  uint64_t iterations;
  size_t rounds;
  size_t label_dependent_queries;
  bool label_non_adaptive;
  // Zero under the exact oracle.
  uint64_t samples;
  double error;
} LdpsqLearnerSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Owned by the
// library and valid until the next failing call on the same thread.
const char *ldpsq_last_error(void);

// # Safety
// `s` must be null or a string returned by this library.
void ldpsq_string_free(char *s);

// Parses a source from its JSON form `{"dim", "support", "probs", "target"}`.
//
// # Safety
// `json` must be a nul-terminated string; `out` must be writable.
enum LdpsqStatus ldpsq_source_from_json(const char *json, struct LdpsqSource **out);

// A random source in dimension `d` separated with margin `gamma`.
//
// # Safety
// `out` must be writable.
enum LdpsqStatus ldpsq_source_margin(size_t d,
                                     double gamma,
                                     size_t support,
                                     uint64_t seed_root,
                                     struct LdpsqSource **out);

// # Safety
// `src` must be a live handle.
size_t ldpsq_source_dim(const struct LdpsqSource *src);

// # Safety
// `src` must be a live handle.
size_t ldpsq_source_support_len(const struct LdpsqSource *src);

// # Safety
// `src` must be null or a handle not yet freed.
void ldpsq_source_free(struct LdpsqSource *src);

// Defaults for everything except the margin and accuracy targets.
struct LdpsqLearnerConfig ldpsq_learner_config_default(double gamma, double alpha, double delta);

// Learns a halfspace from `src`. `summary` may be null.
//
// # Safety
// `src` and `cfg` must be valid; `out` must be writable.
enum LdpsqStatus ldpsq_learn_halfspace(const struct LdpsqSource *src,
                                       const struct LdpsqLearnerConfig *cfg,
                                       struct LdpsqHypothesis **out,
                                       struct LdpsqLearnerSummary *summary);

// Writes `+1` or `-1` to `label`.
//
// # Safety
// `x` must point to `len` doubles.
enum LdpsqStatus ldpsq_hypothesis_classify(const struct LdpsqHypothesis *h,
                                           const double *x,
                                           size_t len,
                                           int8_t *label);

// Exact classification error of `h` on `src`.
//
// # Safety
// Handles must be live; `error` must be writable.
enum LdpsqStatus ldpsq_hypothesis_error(const struct LdpsqHypothesis *h,
                                        const struct LdpsqSource *src,
                                        double *error);

// JSON form of the hypothesis; release with `ldpsq_string_free`.
//
// # Safety
// `h` must be live; `out` must be writable.
enum LdpsqStatus ldpsq_hypothesis_to_json(const struct LdpsqHypothesis *h, char **out);

// # Safety
// `h` must be null or a handle not yet freed.
void ldpsq_hypothesis_free(struct LdpsqHypothesis *h);

// Examples per query needed to answer `t` queries within `tau` with
// failure probability `delta` under `epsilon`-LDP randomized response.
uint64_t ldpsq_ldp_batch_size(double epsilon, double tau, uint64_t t, double delta);

// Worst-case likelihood ratio of randomized response for a query using
// the full `[-1, 1]` range, computed over its extremal inputs.
//
// # Safety
// `ratio` must be writable.
enum LdpsqStatus ldpsq_rr_privacy_ratio(double epsilon, double *ratio);

// Runs an experiment from its JSON config and writes its artifacts to
// `out_dir`. `check_passed` (may be null) receives 1, 0, or -1 when the
// command has no check.
//
// # Safety
// Strings must be nul-terminated.
enum LdpsqStatus ldpsq_run_experiment(const char *config_json,
                                      const char *out_dir,
                                      int32_t *check_passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LDPSQ_H */
