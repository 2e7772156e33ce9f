"""Pure-NumPy implementation of the hot kernels.

This is the fallback used when the compiled extension is unavailable; it is
also the behavioral reference the extension is tested against.  All kernels
keep a fixed term order (diagonal, single-bit flips by qubit index, coupler
flips by edge index) so that runs related by a spin-reversal transform
produce bitwise-permuted intermediate states within one implementation.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..errors import IntegrationError

IMPL_NAME = "python"

_TWO_PI = 2.0 * np.pi


@lru_cache(maxsize=4096)
def _perm(dim: int, mask: int) -> np.ndarray:
    idx = np.arange(dim, dtype=np.intp)
    return idx ^ mask


@lru_cache(maxsize=4096)
def _edge_coef(dim: int, mi: int, mj: int, ceq: float, cne: float) -> np.ndarray:
    # ceq applies between basis states whose bits at i and j agree,
    # cne where they differ (both endpoints of a double flip agree on this)
    idx = np.arange(dim, dtype=np.int64)
    eq = ((idx & mi) != 0) == ((idx & mj) != 0)
    return np.where(eq, ceq, cne)


def matvec_real(out, psi, diag_cl, b, eref, a, mask_i, mask_j, ceq, cne, n):
    """out = (a H_D + b H_P - eref) psi for a real vector psi.

    H_D is -(1/2) sum_i sigma^x_i plus per-edge double-flip terms whose
    equal-bit/unequal-bit matrix elements are ceq[e] and cne[e]; H_P is the
    diagonal of classical energies diag_cl.
    """
    dim = psi.shape[0]
    np.multiply(b * diag_cl - eref, psi, out=out)
    if a != 0.0:
        c = -0.5 * a
        for i in range(n):
            out += c * psi[_perm(dim, 1 << i)]
        for e in range(mask_i.shape[0]):
            mi = int(mask_i[e])
            mj = int(mask_j[e])
            coef = _edge_coef(dim, mi, mj, float(ceq[e]), float(cne[e]))
            out += (a * coef) * psi[_perm(dim, mi | mj)]
    return out


def rhs(k, y, diag_cl, b, eref, a, mask_i, mask_j, ceq, cne, n):
    """k = -2*pi*i (a H_D + b H_P - eref) y with y stored as [re | im]."""
    dim = diag_cl.shape[0]
    yre, yim = y[:dim], y[dim:]
    kre, kim = k[:dim], k[dim:]
    matvec_real(kre, yim, diag_cl, b, eref, a, mask_i, mask_j, ceq, cne, n)
    matvec_real(kim, yre, diag_cl, b, eref, a, mask_i, mask_j, ceq, cne, n)
    kre *= _TWO_PI
    kim *= -_TWO_PI
    return k


def _hermite_scalar(knots, vals, slopes, s):
    m = knots.shape[0]
    if s <= knots[0]:
        return float(vals[0] + slopes[0] * (s - knots[0]))
    if s >= knots[m - 1]:
        return float(vals[m - 1] + slopes[m - 1] * (s - knots[m - 1]))
    hi = int(np.searchsorted(knots, s, side="right"))
    lo = hi - 1
    w = knots[hi] - knots[lo]
    x = (s - knots[lo]) / w
    h00 = (1 + 2 * x) * (1 - x) ** 2
    h10 = x * (1 - x) ** 2
    h01 = x * x * (3 - 2 * x)
    h11 = x * x * (x - 1)
    return float(
        h00 * vals[lo] + h10 * w * slopes[lo] + h01 * vals[hi] + h11 * w * slopes[hi]
    )


def _norm(y):
    # pairwise summation in numpy keeps this reproducible and accurate
    return float(np.sqrt(np.dot(y, y)))


_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 6.0
_EREF_QUANTUM = 1.0 / 64.0  # GHz; coarse so gauge-paired runs agree exactly


def evolve_adaptive(
    y0,
    diag_cl,
    mask_i,
    mask_j,
    ceq,
    cne,
    n,
    sched_knots,
    sched_av,
    sched_ad,
    sched_bv,
    sched_bd,
    t_a,
    atol,
    rtol,
    drift_budget,
    lam_driver,
    diag_min,
    diag_max,
    tableau,
    eref0,
    checkpoint_times=None,
    ground_indices=None,
    max_steps=100_000_000,
):
    """Adaptive embedded-RK integration of i dpsi/dt = 2 pi (H(t/t_a) - eref) psi.

    The reference energy eref tracks the instantaneous mean energy (updated
    after every accepted step, quantized to a coarse grid); it only changes
    the global phase, never probabilities or norms.  Step sizes are limited
    by three controls: the embedded local error estimate in the max norm, a
    stability cap derived from a rigorous bound on the spectral radius of
    the shifted Hamiltonian, and a norm-drift budget spent uniformly over
    the remaining integration time.

    Returns (y_final, stats dict).
    """
    dim = diag_cl.shape[0]
    y = np.array(y0, dtype=float)
    ns = tableau.n_stages
    a_mat = tableau.a
    b_vec = tableau.b
    c_vec = tableau.c
    K = np.empty((ns + 1, 2 * dim))

    def sched_a(s):
        return _hermite_scalar(sched_knots, sched_av, sched_ad, s)

    def sched_b(s):
        return _hermite_scalar(sched_knots, sched_bv, sched_bd, s)

    eref = float(eref0)

    def lam_bound(s):
        aa = sched_a(s)
        bb = sched_b(s)
        spread = max(abs(bb * diag_max - eref), abs(bb * diag_min - eref))
        return _TWO_PI * (aa * lam_driver + spread) + 1e-30

    def eval_rhs(k, yv, t):
        s = min(t / t_a, 1.0)
        rhs(k, yv, diag_cl, sched_b(s), eref, sched_a(s), mask_i, mask_j, ceq, cne, n)

    t = 0.0
    eval_rhs(K[0], y, 0.0)
    nrm_prev = _norm(y)
    drift_used = 0.0
    max_norm_dev = abs(nrm_prev - 1.0)
    stab = tableau.imag_stability * 0.96
    h = min(0.1 * stab / lam_bound(0.0), t_a)
    n_accepted = 0
    n_rej_err = 0
    n_rej_drift = 0
    rejected_last = False
    cp_rows = []
    cp_idx = 0
    cp_times = checkpoint_times if checkpoint_times is not None else np.empty(0)

    exponent = tableau.error_exponent
    tmp = np.empty(2 * dim)

    while t < t_a:
        if n_accepted + n_rej_err + n_rej_drift > max_steps:
            raise IntegrationError(f"step limit exceeded at t={t}", last_good_t=t)
        h = min(h, t_a - t)
        cap = stab / max(lam_bound(t / t_a), lam_bound(min((t + h) / t_a, 1.0)))
        h = min(h, cap)
        if h < 1e-14 * max(t_a, 1.0):
            raise IntegrationError(f"step size underflow at t={t}", last_good_t=t)

        for i in range(1, ns):
            np.multiply(h * a_mat[i, 0], K[0], out=tmp)
            for j in range(1, i):
                aij = a_mat[i, j]
                if aij != 0.0:
                    tmp += (h * aij) * K[j]
            tmp += y
            eval_rhs(K[i], tmp, t + c_vec[i] * h)

        y_new = y + h * np.tensordot(b_vec, K[:ns], axes=1)
        t_new = t + h
        eval_rhs(K[ns], y_new, t_new)

        if tableau.error_mode == "dop853":
            err5 = np.tensordot(tableau.e5, K, axes=1)
            err3 = np.tensordot(tableau.e3, K, axes=1)
            denom = np.hypot(np.abs(err5), 0.1 * np.abs(err3))
            corr = np.divide(
                np.abs(err5), denom, out=np.ones_like(err5), where=denom > 0.0
            )
            errvec = h * err5 * corr
        else:
            errvec = h * np.tensordot(tableau.e, K, axes=1)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        ratio = float(np.max(np.abs(errvec) / scale))

        if ratio > 1.0:
            n_rej_err += 1
            rejected_last = True
            h *= max(_MIN_FACTOR, _SAFETY * ratio**exponent)
            continue

        nrm_new = _norm(y_new)
        step_drift = abs(nrm_new - nrm_prev)
        remaining_steps = max(1.0, np.ceil((t_a - t_new) / h) + 1.0)
        budget_step = max((drift_budget - drift_used) / remaining_steps, 1e-16)
        if step_drift > max(2.0 * budget_step, 1e-14):
            n_rej_drift += 1
            rejected_last = True
            h *= 0.5
            continue

        # accepted
        n_accepted += 1
        drift_used += step_drift
        nrm_prev = nrm_new
        max_norm_dev = max(max_norm_dev, abs(nrm_new - 1.0))
        y, t = y_new, t_new

        # retune the phase reference toward the instantaneous mean energy
        yre, yim = y[:dim], y[dim:]
        kre, kim = K[ns][:dim], K[ns][dim:]
        mean_shift = (np.dot(yim, kre) - np.dot(yre, kim)) / (_TWO_PI * nrm_new**2)
        q = np.round(mean_shift / _EREF_QUANTUM) * _EREF_QUANTUM
        if q != 0.0:
            eref += q
            kre -= (_TWO_PI * q) * yim
            kim += (_TWO_PI * q) * yre
        K[0] = K[ns]

        while cp_idx < cp_times.shape[0] and t >= cp_times[cp_idx] - 1e-12:
            if ground_indices is not None:
                p_inst = float(
                    np.sum(yre[ground_indices] ** 2 + yim[ground_indices] ** 2)
                ) / nrm_new**2
            else:
                p_inst = float("nan")
            cp_rows.append((t, min(t / t_a, 1.0), p_inst, nrm_new))
            cp_idx += 1

        if ratio == 0.0:
            factor = _MAX_FACTOR
        else:
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * ratio**exponent))
        if rejected_last:
            factor = min(1.0, factor)
            rejected_last = False
        h *= factor

    stats = {
        "steps": n_accepted,
        "rejected_error": n_rej_err,
        "rejected_drift": n_rej_drift,
        "drift_used": drift_used,
        "final_norm": nrm_prev,
        "max_norm_dev": max_norm_dev,
        "eref_final": eref,
        "checkpoints": cp_rows,
    }
    return y, stats
