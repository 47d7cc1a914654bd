#ifndef OPTOUT_H
#define OPTOUT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OptoutStatus {
  OPTOUT_STATUS_OK = 0,
  OPTOUT_STATUS_NULL_ARGUMENT = 1,
  OPTOUT_STATUS_INVALID_UTF8 = 2,
  OPTOUT_STATUS_PARSE_ERROR = 3,
  OPTOUT_STATUS_VALIDATION_FAILED = 4,
  OPTOUT_STATUS_STALE_WRITE = 5,
  OPTOUT_STATUS_EMPTY_REGION = 6,
  OPTOUT_STATUS_IO_ERROR = 7,
  OPTOUT_STATUS_HASH_MISMATCH = 8,
  OPTOUT_STATUS_INVALID_BUNDLE = 9,
  OPTOUT_STATUS_PANIC = 10,
} OptoutStatus;

/**
 * Opaque record store handle.
 */
typedef struct OptoutDb OptoutDb;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *optout_version(void);

/**
 * Message for the last failed call on this thread, or NULL. The caller
 * owns the returned string.
 */
char *optout_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void optout_string_free(char *s);

/**
 * Plans an opt-out for serialized notice text with the rule planner and
 * writes the plan text (empty when the notice offers no opt-out).
 *
 * # Safety
 * `serialized` must be a NUL-terminated string; `out_plan` must be writable.
 */
enum OptoutStatus optout_plan_rules(const char *serialized, char **out_plan);

/**
 * Writes the semantic class of a control label, e.g. `REJECT_ALL`.
 *
 * # Safety
 * `label` must be a NUL-terminated string; `out_class` must be writable.
 */
enum OptoutStatus optout_classify_label(const char *label, char **out_class);

/**
 * Writes the built-in classifier's notice probability for `text`.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out_score` must be writable.
 */
enum OptoutStatus optout_classify_text(const char *text, double *out_score);

/**
 * Opens a record store at `path`, or an in-memory one when `path` is NULL.
 *
 * # Safety
 * `path` must be NULL or a NUL-terminated string; `out_db` must be writable.
 */
enum OptoutStatus optout_db_open(const char *path, struct OptoutDb **out_db);

/**
 * Upserts one record given as JSON.
 *
 * # Safety
 * `db` must come from [`optout_db_open`]; `record_json` must be a
 * NUL-terminated string.
 */
enum OptoutStatus optout_db_put_json(struct OptoutDb *db, const char *record_json);

/**
 * Writes the bundle JSON for `region`.
 *
 * # Safety
 * `db` must come from [`optout_db_open`]; `region` must be a
 * NUL-terminated string; `out_bundle` must be writable.
 */
enum OptoutStatus optout_db_export(const struct OptoutDb *db,
                                   const char *region,
                                   char **out_bundle);

/**
 * Releases a store. NULL is ignored.
 *
 * # Safety
 * `db` must come from [`optout_db_open`] and not have been freed.
 */
void optout_db_free(struct OptoutDb *db);

/**
 * Verifies bundle bytes and writes the number of records they hold.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; `out_record_count` must be
 * NULL or writable.
 */
enum OptoutStatus optout_bundle_verify(const uint8_t *bytes,
                                       size_t len,
                                       uint64_t *out_record_count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPTOUT_H */
