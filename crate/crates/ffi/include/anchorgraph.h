#ifndef ANCHORGRAPH_H
#define ANCHORGRAPH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AgStatus {
  AG_STATUS_OK = 0,
  AG_STATUS_NULL_ARGUMENT = 1,
  AG_STATUS_INVALID_UTF8 = 2,
  AG_STATUS_INVALID_ANCHOR_ID = 3,
  AG_STATUS_UNKNOWN_NODE = 10,
  AG_STATUS_UNKNOWN_ANCHOR = 11,
  AG_STATUS_UNKNOWN_TARGET = 12,
  AG_STATUS_EMPTY_SELECTION = 13,
  AG_STATUS_EMPTY_LABEL = 14,
  AG_STATUS_FORBIDDEN_CHARACTER = 15,
  AG_STATUS_DUPLICATE_ANCHOR = 16,
  AG_STATUS_PARSE_ERROR = 20,
  AG_STATUS_SCHEMA_ERROR = 21,
  AG_STATUS_CONSISTENCY_ERROR = 22,
  AG_STATUS_BAD_MUTATION = 23,
  AG_STATUS_MISSING_DIRECTORY = 30,
  AG_STATUS_THUMB_SIZE_TOO_SMALL = 31,
  AG_STATUS_IO = 32,
  AG_STATUS_PANIC = 99,
} AgStatus;

// Opaque graph handle.
typedef struct AgGraph AgGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL. Valid until
// the next failing call on the same thread.
const char *ag_last_error_message(void);

// Empty graph at revision 0.
struct AgGraph *ag_graph_new(void);

// # Safety
// `graph` must come from this library and not be used afterwards. NULL is a no-op.
void ag_graph_free(struct AgGraph *graph);

// Parses a graph document from `len` bytes at `bytes`.
//
// # Safety
// `bytes` must be readable for `len` bytes; `out_graph` must be writable.
enum AgStatus ag_graph_import(const uint8_t *bytes, uintptr_t len, struct AgGraph **out_graph);

// Builds a graph from the image files directly inside `dataset_dir`.
//
// # Safety
// `dataset_dir` must be a NUL-terminated string; `out_graph` must be writable.
enum AgStatus ag_graph_ingest_folder(const char *dataset_dir, struct AgGraph **out_graph);

// Writes missing or stale thumbnails for every picture in `graph` under
// `<dataset_dir>/.thumbs`. `out_encoded` may be NULL.
//
// # Safety
// Pointer arguments must be valid as described.
enum AgStatus ag_graph_generate_thumbnails(const struct AgGraph *graph,
                                           const char *dataset_dir,
                                           uint32_t thumb_max_edge,
                                           uintptr_t *out_encoded);

// Canonical graph document.
//
// # Safety
// `out_json` must be writable; free the result with `ag_string_free`.
enum AgStatus ag_graph_export(const struct AgGraph *graph, char **out_json);

// Per-picture label table as CSV.
//
// # Safety
// `out_csv` must be writable; free the result with `ag_string_free`.
enum AgStatus ag_graph_export_labels(const struct AgGraph *graph, char **out_csv);

// # Safety
// `s` must come from this library or be NULL.
void ag_string_free(char *s);

// # Safety
// `ids` and `len` must be exactly as returned by this library, or `ids` NULL.
void ag_ids_free(uint64_t *ids, uintptr_t len);

// Creates a cluster over `ids`. `label` may be NULL for the default label.
// `out_anchor` receives the new anchor id and may be NULL.
//
// # Safety
// `ids` must be readable for `len` elements.
enum AgStatus ag_graph_create_cluster(struct AgGraph *graph,
                                      const uint64_t *ids,
                                      uintptr_t len,
                                      const char *label,
                                      char **out_anchor);

// # Safety
// String arguments must be NUL-terminated.
enum AgStatus ag_graph_rename_anchor(struct AgGraph *graph, const char *anchor, const char *label);

// # Safety
// `label` must be NUL-terminated.
enum AgStatus ag_graph_rename_picture(struct AgGraph *graph, uint64_t id, const char *label);

// # Safety
// `anchor` must be NUL-terminated; `ids` readable for `len` elements.
enum AgStatus ag_graph_add_members(struct AgGraph *graph,
                                   const char *anchor,
                                   const uint64_t *ids,
                                   uintptr_t len);

// # Safety
// `anchor` must be NUL-terminated; `ids` readable for `len` elements.
enum AgStatus ag_graph_remove_members(struct AgGraph *graph,
                                      const char *anchor,
                                      const uint64_t *ids,
                                      uintptr_t len);

// # Safety
// `anchor` must be NUL-terminated.
enum AgStatus ag_graph_delete_cluster(struct AgGraph *graph, const char *anchor);

// # Safety
// `ids` must be readable for `len` elements.
enum AgStatus ag_graph_delete_pictures(struct AgGraph *graph, const uint64_t *ids, uintptr_t len);

// Applies a mutation given in its wire JSON form. `out_resolved` receives
// the resolved mutation as JSON and may be NULL.
//
// # Safety
// `mutation_json` must be NUL-terminated.
enum AgStatus ag_graph_apply_mutation_json(struct AgGraph *graph,
                                           const char *mutation_json,
                                           char **out_resolved);

// Ids of pictures without any membership, ascending. Free with `ag_ids_free`.
//
// # Safety
// `out_ids` and `out_len` must be writable.
enum AgStatus ag_graph_unlabeled(const struct AgGraph *graph,
                                 uint64_t **out_ids,
                                 uintptr_t *out_len);

// # Safety
// `graph` must be valid or NULL (returns 0).
uintptr_t ag_graph_node_count(const struct AgGraph *graph);

// # Safety
// `graph` must be valid or NULL (returns 0).
uintptr_t ag_graph_cluster_count(const struct AgGraph *graph);

// # Safety
// `graph` must be valid or NULL (returns 0).
uintptr_t ag_graph_edge_count(const struct AgGraph *graph);

// Applied mutations since creation, import or ingest.
//
// # Safety
// `graph` must be valid or NULL (returns 0).
uint64_t ag_graph_revision(const struct AgGraph *graph);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANCHORGRAPH_H */
