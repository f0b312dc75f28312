#ifndef FOGSIM_H
#define FOGSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FogStatus {
  FOG_STATUS_OK = 0,
  FOG_STATUS_NULL_POINTER = 1,
  FOG_STATUS_INVALID_ARGUMENT = 2,
  FOG_STATUS_CONFIG = 3,
  FOG_STATUS_IO = 4,
  FOG_STATUS_SIMULATION = 5,
  FOG_STATUS_PANIC = 6,
} FogStatus;

// Opaque list of run summaries, in the order the sweep produced them.
typedef struct FogSummaries FogSummaries;

// Opaque network topology.
typedef struct FogTopology FogTopology;

// Headline numbers of run `index`. Metrics that are undefined for the run
// (no completed loop, no ELECTRE decision) are written as NaN.
typedef struct FogRunStats {
  uint64_t seed;
  uint64_t duration;
  uint64_t generated;
  uint64_t served;
  uint64_t outstanding;
  double mean_loop_transfer_rate;
  double mean_loop_execution_delay;
  double mean_total_response;
  double tie_rate;
} FogRunStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Owned by the
// library and valid until the next failing call on the same thread.
const char *fogsim_last_error(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void fogsim_string_free(char *s);

// The fixed three-tier topology with three fog nodes.
//
// # Safety
// `out` must be a valid pointer.
enum FogStatus fogsim_topology_generic(struct FogTopology **out);

// A random AS-like topology with about `nodes` nodes.
//
// # Safety
// `out` must be a valid pointer.
enum FogStatus fogsim_topology_random(uint64_t seed, size_t nodes, struct FogTopology **out);

// Parses a topology from its JSON form.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum FogStatus fogsim_topology_from_json(const char *json, struct FogTopology **out);

// Number of nodes, or 0 for a null handle.
//
// # Safety
// `t` must be null or a live handle.
size_t fogsim_topology_node_count(const struct FogTopology *t);

// Serializes the topology. Free the result with `fogsim_string_free`.
//
// # Safety
// `t` must be a live handle and `out` a valid pointer.
enum FogStatus fogsim_topology_to_json(const struct FogTopology *t, char **out);

// # Safety
// `t` must be null or a handle not yet freed.
void fogsim_topology_free(struct FogTopology *t);

// Picks one of `n` candidates with ELECTRE III.
//
// `costs` is row-major, `n_criteria` rows of `n` values, lower is better.
// `weights` holds `n_criteria` values or is null for equal weights.
// `hops` and `propagation` break ties towards the nearest candidate. The
// chosen id is written to `out_chosen`.
//
// # Safety
// Every non-null array must have the stated length.
enum FogStatus fogsim_electre_select(const size_t *ids,
                                     size_t n,
                                     const double *costs,
                                     size_t n_criteria,
                                     const double *weights,
                                     const size_t *hops,
                                     const double *propagation,
                                     size_t *out_chosen);

// Runs a sweep described by a JSON experiment config (same keys as the
// CLI `--config` file). Nothing is written to disk unless `out_dir` is set.
//
// # Safety
// `config_json` must be a NUL-terminated string and `out` a valid pointer.
enum FogStatus fogsim_run(const char *config_json, struct FogSummaries **out);

// Number of runs, or 0 for a null handle.
//
// # Safety
// `s` must be null or a live handle.
size_t fogsim_summaries_len(const struct FogSummaries *s);

// # Safety
// `s` must be a live handle and `out` a valid pointer.
enum FogStatus fogsim_summaries_stats(const struct FogSummaries *s,
                                      size_t index,
                                      struct FogRunStats *out);

// Policy name of run `index`. Free with `fogsim_string_free`.
//
// # Safety
// `s` must be a live handle and `out` a valid pointer.
enum FogStatus fogsim_summaries_policy(const struct FogSummaries *s, size_t index, char **out);

// Full summary of run `index` as JSON. Free with `fogsim_string_free`.
//
// # Safety
// `s` must be a live handle and `out` a valid pointer.
enum FogStatus fogsim_summaries_json(const struct FogSummaries *s, size_t index, char **out);

// # Safety
// `s` must be null or a handle not yet freed.
void fogsim_summaries_free(struct FogSummaries *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOGSIM_H */
