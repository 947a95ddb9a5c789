/* Direct-loop 3x3 convolution kernels for BHWC tensors.
 *
 * Layout trick: for a fixed padded input row, the nine taps of one output
 * pixel collapse to three contiguous spans of 3*Ci floats, and w[ki] is a
 * matching contiguous (3*Ci, Co) matrix. Every inner loop is therefore a
 * sequential-access axpy over output channels.
 *
 * The f32 path has an AVX-512 register-tile variant (4 pixels x 32 channels)
 * used when Co is a multiple of 32; everything else goes through the generic
 * C microkernel, which GCC vectorizes via the simd pragmas. f64 exists for
 * finite-difference gradient checks and is not performance-critical.
 */

#include "_conv_kernels.h"

#include <stdlib.h>
#include <string.h>

#ifdef _OPENMP
#include <omp.h>
#else
static int omp_get_max_threads(void) { return 1; }
static int omp_get_thread_num(void) { return 0; }
#endif

#if defined(__AVX512F__)
#include <immintrin.h>
#define OL_HAVE_AVX512 1
#else
#define OL_HAVE_AVX512 0
#endif

/* ------------------------------------------------------------------ */
/* generic microkernels (type-punned via macros)                      */

#define OL_DEFINE_GENERIC(SUFFIX, REAL)                                        \
static void ol_conv_fwd_generic_##SUFFIX(                                      \
    const REAL *restrict xp, const REAL *restrict w, const REAL *restrict bias,\
    REAL *restrict y, ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,                   \
    ptrdiff_t Ci, ptrdiff_t Co)                                                \
{                                                                              \
    const ptrdiff_t Wp = W + 2, Hp = H + 2, span = 3 * Ci;                     \
    _Pragma("omp parallel for schedule(static)")                               \
    for (ptrdiff_t bo = 0; bo < B * H; bo++) {                                 \
        const ptrdiff_t b = bo / H, oh = bo % H;                               \
        REAL *yrow = y + (b * H + oh) * W * Co;                                \
        REAL acc0[2048], acc1[2048];                                           \
        ptrdiff_t ow = 0;                                                      \
        for (; ow + 2 <= W; ow += 2) {                                         \
            for (ptrdiff_t co = 0; co < Co; co++) {                            \
                acc0[co] = bias[co];                                           \
                acc1[co] = bias[co];                                           \
            }                                                                  \
            for (int ki = 0; ki < 3; ki++) {                                   \
                const REAL *xr = xp + ((b * Hp + oh + ki) * Wp + ow) * Ci;     \
                const REAL *wk = w + (ptrdiff_t)ki * span * Co;                \
                for (ptrdiff_t t = 0; t < span; t++) {                         \
                    const REAL xv0 = xr[t], xv1 = xr[t + Ci];                  \
                    const REAL *wv = wk + t * Co;                              \
                    _Pragma("omp simd")                                        \
                    for (ptrdiff_t co = 0; co < Co; co++) {                    \
                        acc0[co] += xv0 * wv[co];                              \
                        acc1[co] += xv1 * wv[co];                              \
                    }                                                          \
                }                                                              \
            }                                                                  \
            memcpy(yrow + ow * Co, acc0, (size_t)Co * sizeof(REAL));           \
            memcpy(yrow + (ow + 1) * Co, acc1, (size_t)Co * sizeof(REAL));     \
        }                                                                      \
        for (; ow < W; ow++) {                                                 \
            for (ptrdiff_t co = 0; co < Co; co++) acc0[co] = bias[co];         \
            for (int ki = 0; ki < 3; ki++) {                                   \
                const REAL *xr = xp + ((b * Hp + oh + ki) * Wp + ow) * Ci;     \
                const REAL *wk = w + (ptrdiff_t)ki * span * Co;                \
                for (ptrdiff_t t = 0; t < span; t++) {                         \
                    const REAL xv = xr[t];                                     \
                    const REAL *wv = wk + t * Co;                              \
                    _Pragma("omp simd")                                        \
                    for (ptrdiff_t co = 0; co < Co; co++) acc0[co] += xv * wv[co]; \
                }                                                              \
            }                                                                  \
            memcpy(yrow + ow * Co, acc0, (size_t)Co * sizeof(REAL));           \
        }                                                                      \
    }                                                                          \
}                                                                              \
                                                                               \
static void ol_conv_gw_generic_##SUFFIX(                                       \
    const REAL *restrict xp, const REAL *restrict gy, REAL *restrict gw,       \
    ptrdiff_t B, ptrdiff_t H, ptrdiff_t W, ptrdiff_t Ci, ptrdiff_t Co)         \
{                                                                              \
    const ptrdiff_t Wp = W + 2, Hp = H + 2, span = 3 * Ci;                     \
    const ptrdiff_t gw_sz = 9 * Ci * Co;                                       \
    const int nth = omp_get_max_threads();                                     \
    REAL *priv = calloc((size_t)nth * gw_sz, sizeof(REAL));                    \
    _Pragma("omp parallel")                                                    \
    {                                                                          \
        REAL *gwp = priv + (ptrdiff_t)omp_get_thread_num() * gw_sz;            \
        REAL acc[2048];                                                        \
        _Pragma("omp for schedule(static)")                                    \
        for (ptrdiff_t bo = 0; bo < B * H; bo++) {                             \
            const ptrdiff_t b = bo / H, oh = bo % H;                           \
            const REAL *gyr = gy + (b * H + oh) * W * Co;                      \
            for (int ki = 0; ki < 3; ki++) {                                   \
                const REAL *xr = xp + ((b * Hp + oh + ki) * Wp) * Ci;          \
                REAL *gwk = gwp + (ptrdiff_t)ki * span * Co;                   \
                for (ptrdiff_t t = 0; t < span; t++) {                         \
                    REAL *gwrow = gwk + t * Co;                                \
                    const REAL *xcol = xr + t;                                 \
                    memcpy(acc, gwrow, (size_t)Co * sizeof(REAL));             \
                    for (ptrdiff_t ow = 0; ow < W; ow++) {                     \
                        const REAL xv = xcol[ow * Ci];                         \
                        const REAL *gv = gyr + ow * Co;                        \
                        _Pragma("omp simd")                                    \
                        for (ptrdiff_t co = 0; co < Co; co++) acc[co] += xv * gv[co]; \
                    }                                                          \
                    memcpy(gwrow, acc, (size_t)Co * sizeof(REAL));             \
                }                                                              \
            }                                                                  \
        }                                                                      \
    }                                                                          \
    for (int th = 0; th < nth; th++) {                                         \
        const REAL *gwp = priv + (ptrdiff_t)th * gw_sz;                        \
        _Pragma("omp simd")                                                    \
        for (ptrdiff_t i = 0; i < gw_sz; i++) gw[i] += gwp[i];                 \
    }                                                                          \
    free(priv);                                                                \
}

OL_DEFINE_GENERIC(f32, float)
OL_DEFINE_GENERIC(f64, double)

/* ------------------------------------------------------------------ */
/* AVX-512 f32 register-tile variants (require Co % 32 == 0)           */

#if OL_HAVE_AVX512

static void ol_conv_fwd_f32_avx512(const float *restrict xp, const float *restrict w,
                                   const float *restrict bias, float *restrict y,
                                   ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,
                                   ptrdiff_t Ci, ptrdiff_t Co)
{
    const ptrdiff_t Wp = W + 2, Hp = H + 2, span = 3 * Ci;
    #pragma omp parallel for schedule(static)
    for (ptrdiff_t bo = 0; bo < B * H; bo++) {
        const ptrdiff_t b = bo / H, oh = bo % H;
        float *yrow = y + (b * H + oh) * W * Co;
        ptrdiff_t ow = 0;
        for (; ow + 4 <= W; ow += 4) {
            for (ptrdiff_t cb = 0; cb < Co; cb += 32) {
                __m512 a00 = _mm512_loadu_ps(bias + cb), a01 = _mm512_loadu_ps(bias + cb + 16);
                __m512 a10 = a00, a11 = a01, a20 = a00, a21 = a01, a30 = a00, a31 = a01;
                for (int ki = 0; ki < 3; ki++) {
                    const float *xr = xp + ((b * Hp + oh + ki) * Wp + ow) * Ci;
                    const float *wk = w + (ptrdiff_t)ki * span * Co + cb;
                    for (ptrdiff_t t = 0; t < span; t++) {
                        const __m512 w0 = _mm512_loadu_ps(wk + t * Co);
                        const __m512 w1 = _mm512_loadu_ps(wk + t * Co + 16);
                        __m512 xv;
                        xv = _mm512_set1_ps(xr[t]);
                        a00 = _mm512_fmadd_ps(xv, w0, a00);
                        a01 = _mm512_fmadd_ps(xv, w1, a01);
                        xv = _mm512_set1_ps(xr[t + Ci]);
                        a10 = _mm512_fmadd_ps(xv, w0, a10);
                        a11 = _mm512_fmadd_ps(xv, w1, a11);
                        xv = _mm512_set1_ps(xr[t + 2 * Ci]);
                        a20 = _mm512_fmadd_ps(xv, w0, a20);
                        a21 = _mm512_fmadd_ps(xv, w1, a21);
                        xv = _mm512_set1_ps(xr[t + 3 * Ci]);
                        a30 = _mm512_fmadd_ps(xv, w0, a30);
                        a31 = _mm512_fmadd_ps(xv, w1, a31);
                    }
                }
                _mm512_storeu_ps(yrow + ow * Co + cb, a00);
                _mm512_storeu_ps(yrow + ow * Co + cb + 16, a01);
                _mm512_storeu_ps(yrow + (ow + 1) * Co + cb, a10);
                _mm512_storeu_ps(yrow + (ow + 1) * Co + cb + 16, a11);
                _mm512_storeu_ps(yrow + (ow + 2) * Co + cb, a20);
                _mm512_storeu_ps(yrow + (ow + 2) * Co + cb + 16, a21);
                _mm512_storeu_ps(yrow + (ow + 3) * Co + cb, a30);
                _mm512_storeu_ps(yrow + (ow + 3) * Co + cb + 16, a31);
            }
        }
        for (; ow < W; ow++) {
            for (ptrdiff_t cb = 0; cb < Co; cb += 32) {
                __m512 a0 = _mm512_loadu_ps(bias + cb), a1 = _mm512_loadu_ps(bias + cb + 16);
                for (int ki = 0; ki < 3; ki++) {
                    const float *xr = xp + ((b * Hp + oh + ki) * Wp + ow) * Ci;
                    const float *wk = w + (ptrdiff_t)ki * span * Co + cb;
                    for (ptrdiff_t t = 0; t < span; t++) {
                        const __m512 xv = _mm512_set1_ps(xr[t]);
                        a0 = _mm512_fmadd_ps(xv, _mm512_loadu_ps(wk + t * Co), a0);
                        a1 = _mm512_fmadd_ps(xv, _mm512_loadu_ps(wk + t * Co + 16), a1);
                    }
                }
                _mm512_storeu_ps(yrow + ow * Co + cb, a0);
                _mm512_storeu_ps(yrow + ow * Co + cb + 16, a1);
            }
        }
    }
}

static void ol_conv_gw_f32_avx512(const float *restrict xp, const float *restrict gy,
                                  float *restrict gw,
                                  ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,
                                  ptrdiff_t Ci, ptrdiff_t Co)
{
    const ptrdiff_t Wp = W + 2, Hp = H + 2, span = 3 * Ci;
    const ptrdiff_t gw_sz = 9 * Ci * Co;
    const int nth = omp_get_max_threads();
    float *priv = calloc((size_t)nth * gw_sz, sizeof(float));
    #pragma omp parallel
    {
        float *gwp = priv + (ptrdiff_t)omp_get_thread_num() * gw_sz;
        #pragma omp for schedule(static)
        for (ptrdiff_t bo = 0; bo < B * H; bo++) {
            const ptrdiff_t b = bo / H, oh = bo % H;
            const float *gyr = gy + (b * H + oh) * W * Co;
            for (int ki = 0; ki < 3; ki++) {
                const float *xr = xp + ((b * Hp + oh + ki) * Wp) * Ci;
                float *gwk = gwp + (ptrdiff_t)ki * span * Co;
                ptrdiff_t t = 0;
                for (; t + 4 <= span; t += 4) {
                    for (ptrdiff_t cb = 0; cb < Co; cb += 32) {
                        float *g0 = gwk + t * Co + cb;
                        __m512 a00 = _mm512_loadu_ps(g0), a01 = _mm512_loadu_ps(g0 + 16);
                        __m512 a10 = _mm512_loadu_ps(g0 + Co), a11 = _mm512_loadu_ps(g0 + Co + 16);
                        __m512 a20 = _mm512_loadu_ps(g0 + 2 * Co), a21 = _mm512_loadu_ps(g0 + 2 * Co + 16);
                        __m512 a30 = _mm512_loadu_ps(g0 + 3 * Co), a31 = _mm512_loadu_ps(g0 + 3 * Co + 16);
                        for (ptrdiff_t ow = 0; ow < W; ow++) {
                            const float *xv = xr + ow * Ci + t;
                            const __m512 gv0 = _mm512_loadu_ps(gyr + ow * Co + cb);
                            const __m512 gv1 = _mm512_loadu_ps(gyr + ow * Co + cb + 16);
                            __m512 xb;
                            xb = _mm512_set1_ps(xv[0]);
                            a00 = _mm512_fmadd_ps(xb, gv0, a00);
                            a01 = _mm512_fmadd_ps(xb, gv1, a01);
                            xb = _mm512_set1_ps(xv[1]);
                            a10 = _mm512_fmadd_ps(xb, gv0, a10);
                            a11 = _mm512_fmadd_ps(xb, gv1, a11);
                            xb = _mm512_set1_ps(xv[2]);
                            a20 = _mm512_fmadd_ps(xb, gv0, a20);
                            a21 = _mm512_fmadd_ps(xb, gv1, a21);
                            xb = _mm512_set1_ps(xv[3]);
                            a30 = _mm512_fmadd_ps(xb, gv0, a30);
                            a31 = _mm512_fmadd_ps(xb, gv1, a31);
                        }
                        _mm512_storeu_ps(g0, a00);
                        _mm512_storeu_ps(g0 + 16, a01);
                        _mm512_storeu_ps(g0 + Co, a10);
                        _mm512_storeu_ps(g0 + Co + 16, a11);
                        _mm512_storeu_ps(g0 + 2 * Co, a20);
                        _mm512_storeu_ps(g0 + 2 * Co + 16, a21);
                        _mm512_storeu_ps(g0 + 3 * Co, a30);
                        _mm512_storeu_ps(g0 + 3 * Co + 16, a31);
                    }
                }
                for (; t < span; t++) {
                    for (ptrdiff_t cb = 0; cb < Co; cb += 32) {
                        float *g0 = gwk + t * Co + cb;
                        __m512 a0 = _mm512_loadu_ps(g0), a1 = _mm512_loadu_ps(g0 + 16);
                        for (ptrdiff_t ow = 0; ow < W; ow++) {
                            const __m512 xb = _mm512_set1_ps(xr[ow * Ci + t]);
                            a0 = _mm512_fmadd_ps(xb, _mm512_loadu_ps(gyr + ow * Co + cb), a0);
                            a1 = _mm512_fmadd_ps(xb, _mm512_loadu_ps(gyr + ow * Co + cb + 16), a1);
                        }
                        _mm512_storeu_ps(g0, a0);
                        _mm512_storeu_ps(g0 + 16, a1);
                    }
                }
            }
        }
    }
    for (int th = 0; th < nth; th++) {
        const float *gwp = priv + (ptrdiff_t)th * gw_sz;
        #pragma omp simd
        for (ptrdiff_t i = 0; i < gw_sz; i++) gw[i] += gwp[i];
    }
    free(priv);
}

#endif /* OL_HAVE_AVX512 */

/* ------------------------------------------------------------------ */
/* public entry points                                                 */

void ol_conv3x3_fwd_f32(const float *xp, const float *w, const float *bias,
                        float *y, ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,
                        ptrdiff_t Ci, ptrdiff_t Co)
{
#if OL_HAVE_AVX512
    if (Co % 32 == 0) {
        ol_conv_fwd_f32_avx512(xp, w, bias, y, B, H, W, Ci, Co);
        return;
    }
#endif
    ol_conv_fwd_generic_f32(xp, w, bias, y, B, H, W, Ci, Co);
}

void ol_conv3x3_fwd_f64(const double *xp, const double *w, const double *bias,
                        double *y, ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,
                        ptrdiff_t Ci, ptrdiff_t Co)
{
    ol_conv_fwd_generic_f64(xp, w, bias, y, B, H, W, Ci, Co);
}

void ol_conv3x3_gw_f32(const float *xp, const float *gy, float *gw,
                       ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,
                       ptrdiff_t Ci, ptrdiff_t Co)
{
#if OL_HAVE_AVX512
    if (Co % 32 == 0) {
        ol_conv_gw_f32_avx512(xp, gy, gw, B, H, W, Ci, Co);
        return;
    }
#endif
    ol_conv_gw_generic_f32(xp, gy, gw, B, H, W, Ci, Co);
}

void ol_conv3x3_gw_f64(const double *xp, const double *gy, double *gw,
                       ptrdiff_t B, ptrdiff_t H, ptrdiff_t W,
                       ptrdiff_t Ci, ptrdiff_t Co)
{
    ol_conv_gw_generic_f64(xp, gy, gw, B, H, W, Ci, Co);
}
