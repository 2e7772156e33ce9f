/* Innermost loops for the matrix-free Hamiltonian apply.
 *
 * The apply is tiled: all terms accumulate into an L1-resident block of the
 * output before it is written back.  Every term (single-bit flip or
 * two-bit coupler flip) is one pass of 8-wide blocks: the partner block is
 * src_tile + (pb ^ slow), elements are permuted within the block by the low
 * three mask bits, and the coupler coefficient (ceq where the two coupled
 * bits agree, cne where they differ) is selected by the parity of the
 * flipped bits, split across within-block / block-level / tile-level bit
 * ranges.  Per element this is exactly one multiply-add per term, and the
 * term order is fixed by the caller, so results are independent of tiling.
 *
 * The 8-wide path uses GNU vector extensions; a scalar twin with identical
 * per-element arithmetic covers other compilers and tiny dimensions.
 */
#ifndef SRTANNEAL_SWEEPS_H
#define SRTANNEAL_SWEEPS_H

#include <stddef.h>

#define SRT_TILE 1024

static inline void srt_axpy(double *restrict o, double c,
                            const double *restrict v, ptrdiff_t m)
{
    ptrdiff_t r;
    for (r = 0; r < m; r++)
        o[r] += c * v[r];
}

static inline void srt_copy(double *restrict o, const double *restrict v,
                            ptrdiff_t m)
{
    ptrdiff_t r;
    for (r = 0; r < m; r++)
        o[r] = v[r];
}

static inline int srt_parity(long long x)
{
#if defined(__GNUC__)
    return __builtin_parityll(x);
#else
    x ^= x >> 32; x ^= x >> 16; x ^= x >> 8;
    x ^= x >> 4; x ^= x >> 2; x ^= x >> 1;
    return (int)(x & 1);
#endif
}

#if defined(__GNUC__) && !defined(__clang__)
#define SRT_VECTOR_PATH 1

typedef double srt_v8df __attribute__((vector_size(64), aligned(8)));
typedef long long srt_v8di __attribute__((vector_size(64), aligned(8)));

/* acc[pb + k] += coef(pb, k) * src_tile[(pb ^ slow) + (k ^ mlow3)] */
static inline void srt_term_v(double *restrict acc,
                              const double *restrict src_tile,
                              ptrdiff_t slow, ptrdiff_t sel_bits,
                              srt_v8df cb0, srt_v8df cb1, srt_v8di perm,
                              ptrdiff_t tile)
{
    ptrdiff_t pb;
    for (pb = 0; pb < tile; pb += 8) {
        const double *sb = src_tile + (pb ^ slow);
        srt_v8df sv = *(const srt_v8df *)sb;
        sv = __builtin_shuffle(sv, perm);
        srt_v8df cv = srt_parity(pb & sel_bits) ? cb1 : cb0;
        srt_v8df av = *(const srt_v8df *)(acc + pb);
        av += cv * sv;
        *(srt_v8df *)(acc + pb) = av;
    }
}

/* one output tile [ts, ts+tile): diagonal first, then singles, then edges */
static inline void srt_apply_tile_v(double *restrict out,
                                    const double *restrict psi,
                                    const double *restrict diag,
                                    double b, double eref, double a,
                                    const long long *restrict mask_i,
                                    const long long *restrict mask_j,
                                    const double *restrict ceq,
                                    const double *restrict cne,
                                    ptrdiff_t n_edges, ptrdiff_t n,
                                    ptrdiff_t ts, ptrdiff_t tile,
                                    double *restrict acc)
{
    ptrdiff_t k, i, e;
    const double *restrict ps = psi + ts;
    const double *restrict dg = diag + ts;
    for (k = 0; k < tile; k++)
        acc[k] = (b * dg[k] - eref) * ps[k];
    if (a != 0.0) {
        double c = -0.5 * a;
        srt_v8df cc = {c, c, c, c, c, c, c, c};
        for (i = 0; i < n; i++) {
            ptrdiff_t m = (ptrdiff_t)1 << i;
            ptrdiff_t mhi = m & ~(tile - 1);
            ptrdiff_t mlo = m & (tile - 1);
            ptrdiff_t m3 = mlo & 7;
            srt_v8di perm = {0 ^ m3, 1 ^ m3, 2 ^ m3, 3 ^ m3,
                             4 ^ m3, 5 ^ m3, 6 ^ m3, 7 ^ m3};
            srt_term_v(acc, psi + (ts ^ mhi), mlo & ~7, 0, cc, cc, perm, tile);
        }
        for (e = 0; e < n_edges; e++) {
            ptrdiff_t mm = (ptrdiff_t)(mask_i[e] | mask_j[e]);
            double sc_eq = a * ceq[e];
            double sc_ne = a * cne[e];
            ptrdiff_t mhi = mm & ~(tile - 1);
            ptrdiff_t mlo = mm & (tile - 1);
            ptrdiff_t m3 = mlo & 7;
            srt_v8di perm = {0 ^ m3, 1 ^ m3, 2 ^ m3, 3 ^ m3,
                             4 ^ m3, 5 ^ m3, 6 ^ m3, 7 ^ m3};
            /* base parity from the tile-level flipped bits */
            int swap = srt_parity(ts & mhi);
            double c0 = swap ? sc_ne : sc_eq;
            double c1 = swap ? sc_eq : sc_ne;
            srt_v8df cb0, cb1;
            for (k = 0; k < 8; k++) {
                int p = srt_parity(k & m3);
                cb0[k] = p ? c1 : c0;
                cb1[k] = p ? c0 : c1;
            }
            srt_term_v(acc, psi + (ts ^ mhi), mlo & ~7, mlo & ~7, cb0, cb1,
                       perm, tile);
        }
    }
    srt_copy(out + ts, acc, tile);
}
#endif /* SRT_VECTOR_PATH */

/* two output tiles at once: plane 2 uses the negated coefficients, which
 * realises k_re = +2 pi (M y_im), k_im = -2 pi (M y_re) in a single pass
 * with shared per-term setup */
static inline void srt_apply_pair_tile_v(double *restrict out1,
                                         double *restrict out2,
                                         const double *restrict src1,
                                         const double *restrict src2,
                                         const double *restrict diag,
                                         double b, double eref, double a,
                                         const long long *restrict mask_i,
                                         const long long *restrict mask_j,
                                         const double *restrict ceq,
                                         const double *restrict cne,
                                         ptrdiff_t n_edges, ptrdiff_t n,
                                         ptrdiff_t ts, ptrdiff_t tile,
                                         double *restrict acc1,
                                         double *restrict acc2)
{
    ptrdiff_t k, i, e;
    const double *restrict p1 = src1 + ts;
    const double *restrict p2 = src2 + ts;
    const double *restrict dg = diag + ts;
    for (k = 0; k < tile; k++) {
        double d = b * dg[k] - eref;
        acc1[k] = d * p1[k];
        acc2[k] = -d * p2[k];
    }
    if (a != 0.0) {
        double c = -0.5 * a;
        srt_v8df cc = {c, c, c, c, c, c, c, c};
        srt_v8df ncc = -cc;
        for (i = 0; i < n; i++) {
            ptrdiff_t m = (ptrdiff_t)1 << i;
            ptrdiff_t mhi = m & ~(tile - 1);
            ptrdiff_t mlo = m & (tile - 1);
            ptrdiff_t m3 = mlo & 7;
            srt_v8di perm = {0 ^ m3, 1 ^ m3, 2 ^ m3, 3 ^ m3,
                             4 ^ m3, 5 ^ m3, 6 ^ m3, 7 ^ m3};
            srt_term_v(acc1, src1 + (ts ^ mhi), mlo & ~7, 0, cc, cc, perm, tile);
            srt_term_v(acc2, src2 + (ts ^ mhi), mlo & ~7, 0, ncc, ncc, perm, tile);
        }
        for (e = 0; e < n_edges; e++) {
            ptrdiff_t mm = (ptrdiff_t)(mask_i[e] | mask_j[e]);
            double sc_eq = a * ceq[e];
            double sc_ne = a * cne[e];
            ptrdiff_t mhi = mm & ~(tile - 1);
            ptrdiff_t mlo = mm & (tile - 1);
            ptrdiff_t m3 = mlo & 7;
            srt_v8di perm = {0 ^ m3, 1 ^ m3, 2 ^ m3, 3 ^ m3,
                             4 ^ m3, 5 ^ m3, 6 ^ m3, 7 ^ m3};
            int swap = srt_parity(ts & mhi);
            double c0 = swap ? sc_ne : sc_eq;
            double c1 = swap ? sc_eq : sc_ne;
            srt_v8df cb0, cb1;
            for (k = 0; k < 8; k++) {
                int p = srt_parity(k & m3);
                cb0[k] = p ? c1 : c0;
                cb1[k] = p ? c0 : c1;
            }
            srt_term_v(acc1, src1 + (ts ^ mhi), mlo & ~7, mlo & ~7, cb0, cb1,
                       perm, tile);
            srt_term_v(acc2, src2 + (ts ^ mhi), mlo & ~7, mlo & ~7, -cb0, -cb1,
                       perm, tile);
        }
    }
    srt_copy(out1 + ts, acc1, tile);
    srt_copy(out2 + ts, acc2, tile);
}

/* scalar twin, also used for dimensions below 16 */
static inline void srt_apply_scalar(double *restrict out,
                                    const double *restrict psi,
                                    const double *restrict diag,
                                    double b, double eref, double a,
                                    const long long *restrict mask_i,
                                    const long long *restrict mask_j,
                                    const double *restrict ceq,
                                    const double *restrict cne,
                                    ptrdiff_t n_edges, ptrdiff_t n,
                                    ptrdiff_t dim)
{
    ptrdiff_t r, i, e;
    for (r = 0; r < dim; r++)
        out[r] = (b * diag[r] - eref) * psi[r];
    if (a != 0.0) {
        double c = -0.5 * a;
        for (i = 0; i < n; i++) {
            ptrdiff_t m = (ptrdiff_t)1 << i;
            for (r = 0; r < dim; r++)
                out[r] += c * psi[r ^ m];
        }
        for (e = 0; e < n_edges; e++) {
            ptrdiff_t mm = (ptrdiff_t)(mask_i[e] | mask_j[e]);
            double sc_eq = a * ceq[e];
            double sc_ne = a * cne[e];
            for (r = 0; r < dim; r++)
                out[r] += (srt_parity(r & mm) ? sc_ne : sc_eq) * psi[r ^ mm];
        }
    }
}

static inline void srt_apply_one(double *restrict out,
                                 const double *restrict psi,
                                 const double *restrict diag,
                                 double b, double eref, double a,
                                 const long long *restrict mask_i,
                                 const long long *restrict mask_j,
                                 const double *restrict ceq,
                                 const double *restrict cne,
                                 ptrdiff_t n_edges, ptrdiff_t n, ptrdiff_t dim)
{
#ifdef SRT_VECTOR_PATH
    if (dim >= 16) {
        double acc[SRT_TILE] __attribute__((aligned(64)));
        ptrdiff_t tile = dim < SRT_TILE ? dim : SRT_TILE;
        ptrdiff_t ts;
        for (ts = 0; ts < dim; ts += tile)
            srt_apply_tile_v(out, psi, diag, b, eref, a, mask_i, mask_j,
                             ceq, cne, n_edges, n, ts, tile, acc);
        return;
    }
#endif
    srt_apply_scalar(out, psi, diag, b, eref, a, mask_i, mask_j, ceq, cne,
                     n_edges, n, dim);
}

/* rhs helper: out1 = +S M src1, out2 = -S M src2 where S folds the 2 pi
 * scaling into (a, b, eref); per-element arithmetic matches two calls of
 * srt_apply_one with signed coefficients */
static inline void srt_apply_pair(double *restrict out1, double *restrict out2,
                                  const double *restrict src1,
                                  const double *restrict src2,
                                  const double *restrict diag,
                                  double b, double eref, double a,
                                  const long long *restrict mask_i,
                                  const long long *restrict mask_j,
                                  const double *restrict ceq,
                                  const double *restrict cne,
                                  ptrdiff_t n_edges, ptrdiff_t n,
                                  ptrdiff_t dim)
{
#ifdef SRT_VECTOR_PATH
    if (dim >= 16) {
        double acc1[SRT_TILE] __attribute__((aligned(64)));
        double acc2[SRT_TILE] __attribute__((aligned(64)));
        ptrdiff_t tile = dim < SRT_TILE ? dim : SRT_TILE;
        ptrdiff_t ts;
        for (ts = 0; ts < dim; ts += tile)
            srt_apply_pair_tile_v(out1, out2, src1, src2, diag, b, eref, a,
                                  mask_i, mask_j, ceq, cne, n_edges, n,
                                  ts, tile, acc1, acc2);
        return;
    }
#endif
    srt_apply_scalar(out1, src1, diag, b, eref, a, mask_i, mask_j, ceq, cne,
                     n_edges, n, dim);
    srt_apply_scalar(out2, src2, diag, -b, -eref, -a, mask_i, mask_j, ceq, cne,
                     n_edges, n, dim);
}

/* out[r] = base[r] + c0 s0[r] + ... (fixed arities so the compiler can
 * vectorize; base == out for the accumulation passes) */
static inline void srt_fma4(double *restrict out, const double *restrict base,
                            double c0, const double *restrict s0,
                            double c1, const double *restrict s1,
                            double c2, const double *restrict s2,
                            double c3, const double *restrict s3, ptrdiff_t m)
{
    ptrdiff_t r;
    for (r = 0; r < m; r++)
        out[r] = base[r] + c0 * s0[r] + c1 * s1[r] + c2 * s2[r] + c3 * s3[r];
}

static inline void srt_fma2(double *restrict out, const double *restrict base,
                            double c0, const double *restrict s0,
                            double c1, const double *restrict s1, ptrdiff_t m)
{
    ptrdiff_t r;
    for (r = 0; r < m; r++)
        out[r] = base[r] + c0 * s0[r] + c1 * s1[r];
}

static inline void srt_fma1(double *restrict out, const double *restrict base,
                            double c0, const double *restrict s0, ptrdiff_t m)
{
    ptrdiff_t r;
    for (r = 0; r < m; r++)
        out[r] = base[r] + c0 * s0[r];
}

static inline void srt_fma8(double *restrict out, const double *restrict base,
                            double c0, const double *restrict s0,
                            double c1, const double *restrict s1,
                            double c2, const double *restrict s2,
                            double c3, const double *restrict s3,
                            double c4, const double *restrict s4,
                            double c5, const double *restrict s5,
                            double c6, const double *restrict s6,
                            double c7, const double *restrict s7, ptrdiff_t m)
{
    ptrdiff_t r;
    for (r = 0; r < m; r++)
        out[r] = base[r] + c0 * s0[r] + c1 * s1[r] + c2 * s2[r] + c3 * s3[r]
                 + c4 * s4[r] + c5 * s5[r] + c6 * s6[r] + c7 * s7[r];
}

/* out[r] = base[r] + h * sum_j coefs[j] * srcs[j][r] in bounded-arity passes */
static inline void srt_combo(double *restrict out, const double *restrict base,
                             double h, const double *const *srcs,
                             const double *restrict coefs, int nsrc,
                             ptrdiff_t m)
{
    const double *cur = base;
    int j = 0;
    while (nsrc - j >= 8) {
        srt_fma8(out, cur, h * coefs[j], srcs[j], h * coefs[j + 1], srcs[j + 1],
                 h * coefs[j + 2], srcs[j + 2], h * coefs[j + 3], srcs[j + 3],
                 h * coefs[j + 4], srcs[j + 4], h * coefs[j + 5], srcs[j + 5],
                 h * coefs[j + 6], srcs[j + 6], h * coefs[j + 7], srcs[j + 7], m);
        cur = out;
        j += 8;
    }
    if (nsrc - j >= 4) {
        srt_fma4(out, cur, h * coefs[j], srcs[j], h * coefs[j + 1], srcs[j + 1],
                 h * coefs[j + 2], srcs[j + 2], h * coefs[j + 3], srcs[j + 3], m);
        cur = out;
        j += 4;
    }
    if (nsrc - j >= 2) {
        srt_fma2(out, cur, h * coefs[j], srcs[j], h * coefs[j + 1], srcs[j + 1], m);
        cur = out;
        j += 2;
    }
    if (nsrc - j == 1) {
        srt_fma1(out, cur, h * coefs[j], srcs[j], m);
        cur = out;
        j += 1;
    }
    if (cur != out)
        srt_copy(out, cur, m);
}

/* max-norm of the scaled embedded error estimate from pre-combined
 * estimate vectors.  mode 1 combines 5th and 3rd order estimates (8(5,3)
 * pair); mode 0 uses ev5 alone. */
static inline double srt_err_scale_max(const double *restrict ev5,
                                       const double *restrict ev3,
                                       const double *restrict y,
                                       const double *restrict ynew,
                                       double h, double atol, double rtol,
                                       int mode, ptrdiff_t m)
{
    ptrdiff_t r;
    double emax = 0.0;
    for (r = 0; r < m; r++) {
        double err, denom, ay, ayn, sc;
        double a5 = ev5[r] < 0 ? -ev5[r] : ev5[r];
        if (mode == 1) {
            double a3 = ev3[r] < 0 ? -ev3[r] : ev3[r];
            denom = a5 * a5 + 0.01 * a3 * a3;
            err = denom > 0.0 ? h * a5 * a5 / __builtin_sqrt(denom) : 0.0;
        } else {
            err = h * a5;
        }
        ay = y[r] < 0 ? -y[r] : y[r];
        ayn = ynew[r] < 0 ? -ynew[r] : ynew[r];
        sc = err / (atol + rtol * (ay > ayn ? ay : ayn));
        if (sc > emax)
            emax = sc;
    }
    return emax;
}

#endif
