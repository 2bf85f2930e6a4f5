#ifndef COVERLESS_H
#define COVERLESS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CoverlessStatus {
  COVERLESS_STATUS_OK = 0,
  COVERLESS_STATUS_INVALID_ARGUMENT = 1,
  COVERLESS_STATUS_PARSE = 2,
  COVERLESS_STATUS_VALIDATION = 3,
  COVERLESS_STATUS_FORMAT = 4,
  COVERLESS_STATUS_NO_USABLE_IMAGES = 5,
  COVERLESS_STATUS_NOT_IN_DICTIONARY = 6,
  COVERLESS_STATUS_UNMATCHABLE_MESSAGE = 7,
  COVERLESS_STATUS_EMPTY_MESSAGE = 8,
  COVERLESS_STATUS_PROTOCOL = 9,
  COVERLESS_STATUS_FRAMING = 10,
  COVERLESS_STATUS_AUTHENTICATION = 11,
  COVERLESS_STATUS_IO = 12,
  COVERLESS_STATUS_PANIC = 13,
} CoverlessStatus;

typedef struct CoverlessDictionary CoverlessDictionary;

typedef struct CoverlessHideResult CoverlessHideResult;

typedef struct CoverlessIndex CoverlessIndex;

typedef struct CoverlessKey CoverlessKey;

// Heap bytes owned by the caller after return.
typedef struct CoverlessBuffer {
  uint8_t *data;
  size_t len;
} CoverlessBuffer;

// Library version as a static NUL-terminated string.
const char *coverless_version(void);

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call into the library on this thread.
const char *coverless_last_error(void);

// # Safety
// `buffer.data` must come from this library and not have been freed.
void coverless_buffer_free(struct CoverlessBuffer buffer);

// Builds a dictionary from a detection interchange document.
//
// # Safety
// `json` must point to `json_len` readable bytes; `out` must be writable.
enum CoverlessStatus coverless_dictionary_build(const uint8_t *json,
                                                size_t json_len,
                                                double min_area,
                                                double min_conf,
                                                bool descending,
                                                struct CoverlessDictionary **out);

// # Safety
// `json` must point to `json_len` readable bytes; `out` must be writable.
enum CoverlessStatus coverless_dictionary_from_json(const uint8_t *json,
                                                    size_t json_len,
                                                    struct CoverlessDictionary **out);

// # Safety
// `dict` must be a live handle; `out` must be writable.
enum CoverlessStatus coverless_dictionary_to_json(const struct CoverlessDictionary *dict,
                                                  struct CoverlessBuffer *out);

// Number of labels, or 0 for NULL.
//
// # Safety
// `dict` must be NULL or a live handle.
size_t coverless_dictionary_len(const struct CoverlessDictionary *dict);

// # Safety
// `dict` must be NULL or a handle from this library, not yet freed.
void coverless_dictionary_free(struct CoverlessDictionary *dict);

// # Safety
// `out` must be writable.
enum CoverlessStatus coverless_key_derive(uint64_t receiver_id,
                                          uint32_t t,
                                          struct CoverlessKey **out);

// Loads a `CSSK` sequence key file.
//
// # Safety
// `data` must point to `len` readable bytes; `out` must be writable.
enum CoverlessStatus coverless_key_from_file_bytes(const uint8_t *data,
                                                   size_t len,
                                                   struct CoverlessKey **out);

// # Safety
// `key` must be a live handle; `out` must be writable.
enum CoverlessStatus coverless_key_to_file_bytes(const struct CoverlessKey *key,
                                                 struct CoverlessBuffer *out);

// # Safety
// `key` must be NULL or a live handle.
size_t coverless_key_len(const struct CoverlessKey *key);

// # Safety
// `key` must be NULL or a handle from this library, not yet freed.
void coverless_key_free(struct CoverlessKey *key);

// Builds the per-receiver image database from a detection corpus.
//
// # Safety
// `json` must point to `json_len` readable bytes; handles must be live; `out` must be writable.
enum CoverlessStatus coverless_index_build(const uint8_t *json,
                                           size_t json_len,
                                           const struct CoverlessDictionary *dict,
                                           const struct CoverlessKey *key,
                                           double min_area,
                                           double min_conf,
                                           struct CoverlessIndex **out);

// # Safety
// `index` must be NULL or a live handle.
size_t coverless_index_factor_count(const struct CoverlessIndex *index);

// # Safety
// `index` must be NULL or a handle from this library, not yet freed.
void coverless_index_free(struct CoverlessIndex *index);

// Hides `message` (bytes, expanded MSB first). Image choice is seeded when
// `use_seed` is true, random otherwise.
//
// # Safety
// `index` must be live; `message` must point to `message_len` bytes; `out` must be writable.
enum CoverlessStatus coverless_hide(const struct CoverlessIndex *index,
                                    const uint8_t *message,
                                    size_t message_len,
                                    bool use_seed,
                                    uint64_t seed,
                                    struct CoverlessHideResult **out);

// Number of stego images (and position keys).
//
// # Safety
// `result` must be NULL or a live handle.
size_t coverless_hide_result_count(const struct CoverlessHideResult *result);

// Image id at transmission position `i`, owned by the result; NULL if out of range.
//
// # Safety
// `result` must be NULL or a live handle.
const char *coverless_hide_result_image_id(const struct CoverlessHideResult *result, size_t i);

// # Safety
// `result` must be live; `start` and `length` must be writable.
enum CoverlessStatus coverless_hide_result_position_key(const struct CoverlessHideResult *result,
                                                        size_t i,
                                                        uint32_t *start,
                                                        uint32_t *length);

// Stego manifest JSON in transmission order.
//
// # Safety
// `result` must be live; `out` must be writable.
enum CoverlessStatus coverless_hide_result_manifest_json(const struct CoverlessHideResult *result,
                                                         struct CoverlessBuffer *out);

// Seals the result's position keys with a 32-byte pre-shared secret.
//
// # Safety
// `result` must be live; `secret` must point to 32 bytes; `out` must be writable.
enum CoverlessStatus coverless_hide_result_seal_keys(const struct CoverlessHideResult *result,
                                                     const uint8_t *secret,
                                                     struct CoverlessBuffer *out);

// # Safety
// `result` must be NULL or a handle from this library, not yet freed.
void coverless_hide_result_free(struct CoverlessHideResult *result);

// Seals `count` position keys from parallel arrays.
//
// # Safety
// `starts` and `lengths` must each hold `count` values; `secret` must point to 32 bytes.
enum CoverlessStatus coverless_seal_keys(const uint32_t *starts,
                                         const uint32_t *lengths,
                                         size_t count,
                                         const uint8_t *secret,
                                         struct CoverlessBuffer *out);

// Opens a sealed keyfile into a buffer of little-endian `(start, length)` u32 pairs.
// Nothing is written on authentication failure.
//
// # Safety
// `file` must point to `file_len` bytes; `secret` must point to 32 bytes; `out` must be writable.
enum CoverlessStatus coverless_open_keys(const uint8_t *file,
                                         size_t file_len,
                                         const uint8_t *secret,
                                         struct CoverlessBuffer *out);

// Recovers message bytes from stego detections (nulls for lost images) and
// opened position keys. Lost segments are zero padded; `padded_bits` may be NULL.
//
// # Safety
// `json` must point to `json_len` bytes; `starts`/`lengths` must hold `count`
// values; handles must be live; `out` must be writable.
enum CoverlessStatus coverless_extract(const uint8_t *json,
                                       size_t json_len,
                                       const uint32_t *starts,
                                       const uint32_t *lengths,
                                       size_t count,
                                       const struct CoverlessDictionary *dict,
                                       const struct CoverlessKey *key,
                                       double min_area,
                                       double min_conf,
                                       struct CoverlessBuffer *out,
                                       size_t *padded_bits);

#endif  /* COVERLESS_H */
