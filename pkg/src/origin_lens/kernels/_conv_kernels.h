#ifndef ORIGIN_LENS_CONV_KERNELS_H
#define ORIGIN_LENS_CONV_KERNELS_H

#include <stddef.h>

/* 3x3 stride-1 cross-correlation over a zero-padded BHWC input.
 * xp: (B, H+2, W+2, Ci) contiguous; w: (3, 3, Ci, Co); bias: (Co,);
 * y: (B, H, W, Co). The input gradient is this same kernel applied to the
 * padded output gradient with flipped, channel-transposed weights.
 */
void ol_conv3x3_fwd_f32(const float *xp, const float *w, const float *bias,
                        float *y, ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,
                        ptrdiff_t Ci, ptrdiff_t Co);
void ol_conv3x3_fwd_f64(const double *xp, const double *w, const double *bias,
                        double *y, ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,
                        ptrdiff_t Ci, ptrdiff_t Co);

/* Weight gradient: gw[ki,kj,ci,co] += sum_{b,oh,ow} xp[b,oh+ki,ow+kj,ci] * gy[b,oh,ow,co].
 * gw must be zeroed by the caller.
 */
void ol_conv3x3_gw_f32(const float *xp, const float *gy, float *gw,
                       ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,
                       ptrdiff_t Ci, ptrdiff_t Co);
void ol_conv3x3_gw_f64(const double *xp, const double *gy, double *gw,
                       ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,
                       ptrdiff_t Ci, ptrdiff_t Co);

#endif
