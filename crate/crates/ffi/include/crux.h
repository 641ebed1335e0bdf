#ifndef CRUX_H
#define CRUX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CruxStatus {
  CRUX_STATUS_OK = 0,
  CRUX_STATUS_NULL_POINTER = 1,
  CRUX_STATUS_INVALID_UTF8 = 2,
  CRUX_STATUS_INVALID_ARGUMENT = 3,
  CRUX_STATUS_INVALID_ANSWER = 4,
  CRUX_STATUS_INVALID_CONFIG = 5,
  CRUX_STATUS_POOL_TOO_SMALL = 6,
  CRUX_STATUS_NO_SOLUTION = 7,
  CRUX_STATUS_IO = 8,
  CRUX_STATUS_PANIC = 99,
} CruxStatus;

typedef enum CruxExportFormat {
  CRUX_EXPORT_FORMAT_JSON = 0,
  CRUX_EXPORT_FORMAT_TEXT = 1,
} CruxExportFormat;

/**
 * Answer pool for layout.
 */
typedef struct CruxPool CruxPool;

/**
 * A laid-out, numbered puzzle.
 */
typedef struct CruxPuzzle CruxPuzzle;

/**
 * Search parameters; see `crux_config_default` for the defaults.
 */
typedef struct CruxGenerationConfig {
  uint32_t width;
  uint32_t height;
  uint32_t min_words;
  double min_fill_ratio;
  uint32_t max_restarts;
  double max_seconds;
  double preferred_weight;
  double removal_probability;
  uint64_t seed;
  /**
   * Non-zero to measure fill against the whole work area.
   */
  uint8_t fr_work_area;
} CruxGenerationConfig;

typedef struct CruxScore {
  uint32_t fw;
  uint32_t ll;
  double fr;
  double lr;
  double score;
} CruxScore;

typedef struct CruxMetrics {
  double accuracy;
  double precision;
  double recall;
  double f1;
  uint64_t tp;
  uint64_t fp;
  uint64_t tn;
  uint64_t fn_;
} CruxMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the last failure on this thread, or null. The pointer is
 * valid until the next crux call on the same thread.
 */
const char *crux_last_error(void);

/**
 * Library version as a static string.
 */
const char *crux_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void crux_string_free(char *s);

/**
 * Grid form of an answer (uppercase A-Z, accents folded).
 *
 * # Safety
 * `raw` must be a nul-terminated string; `out` a valid pointer.
 */
enum CruxStatus crux_normalize_answer(const char *raw, char **out);

struct CruxPool *crux_pool_new(void);

/**
 * # Safety
 * `pool` must be null or a handle from `crux_pool_new`/`crux_pool_load`.
 */
void crux_pool_free(struct CruxPool *pool);

/**
 * Adds one answer with its clue. `lang` is "it" or "en".
 *
 * # Safety
 * `pool` must be a live handle; the strings nul-terminated.
 */
enum CruxStatus crux_pool_add(struct CruxPool *pool,
                              const char *answer,
                              const char *clue,
                              const char *lang);

/**
 * Loads a TSV pair table into a new pool. Malformed rows are skipped.
 *
 * # Safety
 * `path` must be nul-terminated; `out` a valid pointer.
 */
enum CruxStatus crux_pool_load_tsv(const char *path, struct CruxPool **out);

/**
 * # Safety
 * `pool` must be null or a live handle.
 */
size_t crux_pool_len(const struct CruxPool *pool);

struct CruxGenerationConfig crux_config_default(void);

/**
 * Lays out a puzzle from `pool`. `preferred` holds `n_preferred` answers
 * and may be null when `n_preferred` is 0; `config` may be null for the
 * defaults.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum CruxStatus crux_generate(const struct CruxPool *pool,
                              const struct CruxGenerationConfig *config,
                              const char *const *preferred,
                              size_t n_preferred,
                              struct CruxPuzzle **out);

/**
 * # Safety
 * `puzzle` must be null or a handle from `crux_generate`.
 */
void crux_puzzle_free(struct CruxPuzzle *puzzle);

/**
 * # Safety
 * `puzzle` must be a live handle; `out` a valid pointer.
 */
enum CruxStatus crux_puzzle_score(const struct CruxPuzzle *puzzle, struct CruxScore *out);

/**
 * Letter grid with `.` for empty cells, one line per row.
 *
 * # Safety
 * `puzzle` must be a live handle; `out` a valid pointer.
 */
enum CruxStatus crux_puzzle_grid(const struct CruxPuzzle *puzzle, char **out);

/**
 * # Safety
 * `puzzle` must be a live handle; `out` a valid pointer.
 */
enum CruxStatus crux_puzzle_export(const struct CruxPuzzle *puzzle,
                                   enum CruxExportFormat format,
                                   char **out);

/**
 * Confusion-matrix metrics; non-zero entries count as acceptable.
 *
 * # Safety
 * `predictions` and `labels` must point to `len` bytes; `out` valid.
 */
enum CruxStatus crux_compute_metrics(const uint8_t *predictions,
                                     const uint8_t *labels,
                                     size_t len,
                                     struct CruxMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRUX_H */
