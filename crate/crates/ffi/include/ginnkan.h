/* C API for the ginnkan interpretable-network library.
 *
 * Feature matrices are feature-major: features[f * n_rows + r] is row r of
 * feature f. All fallible calls return a status code; gk_last_error()
 * gives the message for the most recent failure on the calling thread.
 *
 * Kept in sync with crates/ffi/src/lib.rs by hand (no cbindgen in the
 * build); regenerate with `cbindgen --crate ginnkan-ffi` if available.
 */

#ifndef GINNKAN_H
#define GINNKAN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define GK_OK 0
/* A required pointer argument was null. */
#define GK_ERR_NULL 1
/* Invalid argument (bad model kind, empty data, non-UTF-8 string, ...). */
#define GK_ERR_INVALID 2
/* The operation itself failed (training, extraction, I/O). */
#define GK_ERR_RUNTIME 3

/* Opaque trained-model handle. */
typedef struct GkModel GkModel;

/* Message for the most recent error on this thread; valid until the next
 * failing call from the same thread. Never null. */
const char *gk_last_error(void);

/* Trains a fresh model of `kind` ("fc", "ginn", "kan", "ginn-kan") on the
 * given data and writes the handle to `out`. max_steps == 0 keeps the
 * library default (2000); lr <= 0 keeps the default (0.01). */
int32_t gk_train(const char *kind,
                 const double *features,
                 size_t n_features,
                 size_t n_rows,
                 const double *targets,
                 size_t max_steps,
                 double lr,
                 uint64_t seed,
                 GkModel **out);

/* Evaluates the model on n_rows points; writes n_rows predictions. */
int32_t gk_predict(const GkModel *model,
                   const double *features,
                   size_t n_features,
                   size_t n_rows,
                   double *out);

/* Writes the recovered symbolic equation as a NUL-terminated string.
 * `needed` (optional) receives the full length including the NUL; if the
 * buffer is too small the text is truncated and GK_OK is still returned,
 * so call again with a larger buffer when *needed > buf_len. */
int32_t gk_extract(const GkModel *model,
                   char *buf,
                   size_t buf_len,
                   size_t *needed);

/* Saves the model (with its training configuration) as a JSON checkpoint. */
int32_t gk_save(const GkModel *model, const char *path);

/* Loads a JSON checkpoint into a fresh handle. */
int32_t gk_load(const char *path, GkModel **out);

/* Releases a handle. Null is a no-op. */
void gk_free(GkModel *model);

#ifdef __cplusplus
}
#endif

#endif /* GINNKAN_H */
