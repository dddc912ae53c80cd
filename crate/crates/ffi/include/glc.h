/* Generated by cbindgen from crates/ffi. Do not edit. */

#ifndef GLC_H
#define GLC_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define GLC_MODE_GLC 0

#define GLC_MODE_CHEMLAMBDA 1

#define GLC_STRATEGY_PRIORITY 0

#define GLC_STRATEGY_RANDOM 1

#define GLC_SCHEDULER_ROUND_ROBIN 0

#define GLC_SCHEDULER_RANDOM 1

/**
 * Result of every fallible call.
 */
typedef enum GlcStatus {
  GLC_STATUS_OK = 0,
  GLC_STATUS_NULL_ARGUMENT = 1,
  GLC_STATUS_INVALID_UTF8 = 2,
  GLC_STATUS_INVALID_ARGUMENT = 3,
  GLC_STATUS_PARSE_ERROR = 4,
  GLC_STATUS_DOMAIN_ERROR = 5,
  GLC_STATUS_LIMIT_EXCEEDED = 6,
  GLC_STATUS_PANIC = 7,
} GlcStatus;

/**
 * Opaque port graph.
 */
typedef struct GlcGraph GlcGraph;

/**
 * Opaque knot diagram.
 */
typedef struct GlcKnot GlcKnot;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Error message of the most recent call on this thread, or NULL when that
 * call succeeded. The caller owns the returned string.
 */
char *glc_last_error_message(void);

/**
 * Release a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void glc_string_free(char *s);

/**
 * Parse molecule text into a new graph.
 *
 * # Safety
 * `mol` must be a NUL-terminated string; `out` must be writable.
 */
enum GlcStatus glc_graph_from_mol(const char *mol, struct GlcGraph **out);

/**
 * Translate a lambda term into a new graph.
 *
 * # Safety
 * `term` must be a NUL-terminated string; `out` must be writable.
 */
enum GlcStatus glc_graph_from_term(const char *term, struct GlcGraph **out);

/**
 * # Safety
 * `g` must be NULL or a graph from this library, not used afterwards.
 */
void glc_graph_free(struct GlcGraph *g);

/**
 * # Safety
 * `g` must be a live graph; `out` must be writable.
 */
enum GlcStatus glc_graph_node_count(const struct GlcGraph *g, uintptr_t *out);

/**
 * Canonical molecule text of the graph.
 *
 * # Safety
 * `g` must be a live graph; `out` must be writable.
 */
enum GlcStatus glc_graph_to_mol(const struct GlcGraph *g, char **out);

/**
 * Graphviz text of the graph.
 *
 * # Safety
 * `g` must be a live graph; `out` must be writable.
 */
enum GlcStatus glc_graph_to_dot(const struct GlcGraph *g, char **out);

/**
 * Lambda term read back from the graph.
 *
 * # Safety
 * `g` must be a live graph; `out` must be writable.
 */
enum GlcStatus glc_graph_readback(const struct GlcGraph *g, char **out);

/**
 * # Safety
 * `a` and `b` must be live graphs; `out` must be writable.
 */
enum GlcStatus glc_graph_isomorphic(const struct GlcGraph *a, const struct GlcGraph *b, bool *out);

/**
 * Reduce the graph in place. `seed` is used by the random strategy only.
 * On `LimitExceeded` the graph holds the partial result. `steps` and
 * `trace_jsonl` may be NULL.
 *
 * # Safety
 * `g` must be a live graph; non-NULL out pointers must be writable.
 */
enum GlcStatus glc_reduce(struct GlcGraph *g,
                          uint32_t mode_id,
                          uint32_t strategy,
                          uint64_t seed,
                          uintptr_t max_steps,
                          uintptr_t *steps,
                          char **trace_jsonl);

/**
 * Run the actor simulation on a copy of `g`. The partition is either the
 * text `partition` (lines `node-id actor-name`) or, when it is NULL, an
 * automatic split into `auto_actors` actors. Writes the final graph to
 * `out` (also on `LimitExceeded`) and the event log to `log_jsonl` if it is
 * not NULL.
 *
 * # Safety
 * `g` must be a live graph; `partition` NULL or NUL-terminated; `out`
 * writable; `log_jsonl` NULL or writable.
 */
enum GlcStatus glc_actors_run(const struct GlcGraph *g,
                              const char *partition,
                              uintptr_t auto_actors,
                              uint32_t mode_id,
                              uint32_t scheduler,
                              uint64_t seed,
                              uintptr_t max_events,
                              struct GlcGraph **out,
                              char **log_jsonl);

/**
 * Parse PD text into a new knot diagram.
 *
 * # Safety
 * `pd` must be NUL-terminated; `out` must be writable.
 */
enum GlcStatus glc_knot_from_pd(const char *pd, struct GlcKnot **out);

/**
 * # Safety
 * `k` must be NULL or a diagram from this library, not used afterwards.
 */
void glc_knot_free(struct GlcKnot *k);

/**
 * Kauffman bracket, printed with descending exponents.
 *
 * # Safety
 * `k` must be a live diagram; `out` must be writable.
 */
enum GlcStatus glc_knot_bracket(const struct GlcKnot *k, char **out);

/**
 * Crossing relations, one per line.
 *
 * # Safety
 * `k` must be a live diagram; `out` must be writable.
 */
enum GlcStatus glc_knot_relations(const struct GlcKnot *k, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GLC_H */
