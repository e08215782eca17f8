#ifndef HDRINTERP_H
#define HDRINTERP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HdriBackend {
  HDRI_BACKEND_BLEND = 0,
  HDRI_BACKEND_FLOW = 1,
} HdriBackend;

typedef enum HdriStatus {
  HDRI_STATUS_OK = 0,
  HDRI_STATUS_NULL_POINTER = 1,
  HDRI_STATUS_INVALID_ARGUMENT = 2,
  HDRI_STATUS_SHAPE_MISMATCH = 3,
  HDRI_STATUS_FORMAT = 4,
  HDRI_STATUS_IO = 5,
  HDRI_STATUS_OUT_OF_RANGE = 6,
  HDRI_STATUS_INTERNAL = 7,
} HdriStatus;

typedef enum HdriTag {
  HDRI_TAG_HIGH = 0,
  HDRI_TAG_LOW = 1,
} HdriTag;

// Opaque LDR frame.
typedef struct HdriLdrFrame HdriLdrFrame;

// Opaque radiance frame.
typedef struct HdriRadianceFrame HdriRadianceFrame;

// Opaque reconstructed HDR sequence.
typedef struct HdriSequence HdriSequence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *hdri_last_error(void);

// Creates an LDR frame from values in `[0, 1]`. `bits` is 8, 16, or 0 for
// unquantized data.
//
// # Safety
// `data` must point to `width * height * 3` readable doubles; `out` must be writable.
enum HdriStatus hdri_ldr_frame_new(size_t width,
                                   size_t height,
                                   const double *data,
                                   double exposure_time,
                                   enum HdriTag tag,
                                   uint32_t bits,
                                   struct HdriLdrFrame **out);

// # Safety
// `frame` must be null or a handle from this library not yet freed.
void hdri_ldr_frame_free(struct HdriLdrFrame *frame);

// # Safety
// `frame` must be a live handle; `width` and `height` must be writable.
enum HdriStatus hdri_ldr_frame_dims(const struct HdriLdrFrame *frame,
                                    size_t *width,
                                    size_t *height);

// Copies the pixels into `out`, which holds `len` doubles.
//
// # Safety
// `frame` must be a live handle; `out` must point to `len` writable doubles.
enum HdriStatus hdri_ldr_frame_pixels(const struct HdriLdrFrame *frame, double *out, size_t len);

// Creates a radiance frame from non-negative values.
//
// # Safety
// `data` must point to `width * height * 3` readable doubles; `out` must be writable.
enum HdriStatus hdri_radiance_frame_new(size_t width,
                                        size_t height,
                                        const double *data,
                                        struct HdriRadianceFrame **out);

// # Safety
// `frame` must be null or a handle from this library not yet freed.
void hdri_radiance_frame_free(struct HdriRadianceFrame *frame);

// # Safety
// `frame` must be a live handle; `width` and `height` must be writable.
enum HdriStatus hdri_radiance_frame_dims(const struct HdriRadianceFrame *frame,
                                         size_t *width,
                                         size_t *height);

// # Safety
// `frame` must be a live handle; `out` must point to `len` writable doubles.
enum HdriStatus hdri_radiance_frame_pixels(const struct HdriRadianceFrame *frame,
                                           double *out,
                                           size_t len);

// Maps an LDR frame to radiance through the power-law response `gamma`.
//
// # Safety
// `frame` must be a live handle; `out` must be writable.
enum HdriStatus hdri_ldr_to_radiance(const struct HdriLdrFrame *frame,
                                     double gamma,
                                     struct HdriRadianceFrame **out);

// Synthesizes the frame at fraction `tau` in `(0, 1)` between `a` and `b`.
//
// # Safety
// `a` and `b` must be live handles; `out` must be writable.
enum HdriStatus hdri_interpolate(const struct HdriLdrFrame *a,
                                 const struct HdriLdrFrame *b,
                                 double tau,
                                 enum HdriBackend method,
                                 struct HdriLdrFrame **out);

// Fuses a long/short exposure pair into one radiance frame.
//
// # Safety
// `a` and `b` must be live handles; `out` must be writable.
enum HdriStatus hdri_merge(const struct HdriLdrFrame *a,
                           const struct HdriLdrFrame *b,
                           double gamma,
                           struct HdriRadianceFrame **out);

// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum HdriStatus hdri_read_pfm(const char *path, struct HdriRadianceFrame **out);

// Writes a little-endian PFM.
//
// # Safety
// `path` must be a NUL-terminated string; `frame` must be a live handle.
enum HdriStatus hdri_write_pfm(const char *path, const struct HdriRadianceFrame *frame);

// μ-law PSNR in dB between two radiance frames.
//
// # Safety
// `pred` and `gt` must be live handles; `out` must be writable.
enum HdriStatus hdri_mu_psnr(const struct HdriRadianceFrame *pred,
                             const struct HdriRadianceFrame *gt,
                             double mu,
                             double *out);

// Reconstructs an HDR sequence from `count` alternating-exposure frames at
// `2^factor_log2` times the input rate. A `factor_log2` of 0 gives one
// output per interior input frame.
//
// # Safety
// `frames` must point to `count` live handles; `out` must be writable.
enum HdriStatus hdri_reconstruct(const struct HdriLdrFrame *const *frames,
                                 size_t count,
                                 uint32_t factor_log2,
                                 enum HdriBackend method,
                                 double gamma,
                                 struct HdriSequence **out);

// # Safety
// `seq` must be null or a handle from this library not yet freed.
void hdri_sequence_free(struct HdriSequence *seq);

// Number of frames, or 0 for a null handle.
//
// # Safety
// `seq` must be null or a live handle.
size_t hdri_sequence_len(const struct HdriSequence *seq);

// Timestamp of frame `index` as `numerator / denominator` input frame
// intervals, and its synthesis level (-1 for frames built from a captured
// input).
//
// # Safety
// `seq` must be a live handle; the output pointers must be writable.
enum HdriStatus hdri_sequence_timestamp(const struct HdriSequence *seq,
                                        size_t index,
                                        int64_t *numerator,
                                        uint64_t *denominator,
                                        int32_t *level);

// Copies frame `index` out as a new radiance handle.
//
// # Safety
// `seq` must be a live handle; `out` must be writable.
enum HdriStatus hdri_sequence_frame(const struct HdriSequence *seq,
                                    size_t index,
                                    struct HdriRadianceFrame **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HDRINTERP_H */
