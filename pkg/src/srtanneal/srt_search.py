"""Selecting spin-reversal transforms by minimizing the average coupling.

The objective J(alpha) = (1/N_J) sum Jz_ij alpha_i alpha_j is itself an
Ising problem in alpha (it is the coupler part of the classical energy), so
exhaustive search is exponential and a greedy single-flip descent is
provided for larger systems.  The global sign of alpha is quotiented out
(alpha[0] = +1): the objective and every simulated observable are invariant
under it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .model import ProblemInstance, SpinReversalTransform

__all__ = [
    "SrtCandidate",
    "exhaustive_srt_search",
    "greedy_descent_srt",
    "random_srt",
    "EXHAUSTIVE_MAX_QUBITS",
]

EXHAUSTIVE_MAX_QUBITS = 24


@dataclass(frozen=True)
class SrtCandidate:
    """One transform with its average-coupling value and minimality flags."""

    alpha: SpinReversalTransform
    jbar: float
    gap_to_opt: float
    is_global_min: bool
    is_local_min: bool


def _alpha_matrix(n: int, codes: np.ndarray) -> np.ndarray:
    """Decode canonical alpha vectors (alpha[0] = +1) from integer codes.

    Bit k of the code flips qubit k + 1.
    """
    alphas = np.ones((codes.shape[0], n), dtype=np.int8)
    for k in range(n - 1):
        alphas[:, k + 1] = 1 - 2 * ((codes >> k) & 1).astype(np.int8)
    return alphas


def _jbar_values(problem: ProblemInstance, alphas: np.ndarray) -> np.ndarray:
    ei, ej = problem.graph.edge_arrays()
    prod = alphas[:, ei].astype(float) * alphas[:, ej].astype(float)
    return prod @ problem.jz / problem.graph.n_edges


def _local_min_mask(problem: ProblemInstance, alphas: np.ndarray, jbar: np.ndarray) -> np.ndarray:
    """True where no single-coordinate flip strictly decreases the objective.

    Flipping alpha_k changes N_J * jbar by -2 alpha_k sum_(k,j in E) Jz alpha_j,
    so a candidate is a local minimum iff every such change is >= 0.
    """
    n = problem.n_qubits
    ei, ej = problem.graph.edge_arrays()
    n_j = problem.graph.n_edges
    ok = np.ones(alphas.shape[0], dtype=bool)
    for k in range(n):
        field = np.zeros(alphas.shape[0])
        sel_i = ei == k
        sel_j = ej == k
        if sel_i.any():
            field += (alphas[:, ej[sel_i]].astype(float) @ problem.jz[sel_i])
        if sel_j.any():
            field += (alphas[:, ei[sel_j]].astype(float) @ problem.jz[sel_j])
        delta = -2.0 * alphas[:, k].astype(float) * field / n_j
        ok &= delta >= 0.0
    return ok


def exhaustive_srt_search(problem: ProblemInstance) -> list[SrtCandidate]:
    """Enumerate all canonical transforms, flag global and local minima.

    Returns candidates sorted by (jbar, code); ties for the global minimum
    are all flagged.
    """
    n = problem.n_qubits
    if n > EXHAUSTIVE_MAX_QUBITS:
        raise CapacityError(
            f"exhaustive transform search limited to {EXHAUSTIVE_MAX_QUBITS} qubits"
        )
    codes = np.arange(1 << (n - 1), dtype=np.int64)
    alphas = _alpha_matrix(n, codes)
    jbar = _jbar_values(problem, alphas)
    local = _local_min_mask(problem, alphas, jbar)
    j_opt = float(jbar.min())
    order = np.lexsort((codes, jbar))
    out = []
    for idx in order:
        out.append(
            SrtCandidate(
                alpha=SpinReversalTransform(alphas[idx].astype(np.int64)),
                jbar=float(jbar[idx]),
                gap_to_opt=float(jbar[idx] - j_opt),
                is_global_min=bool(jbar[idx] == j_opt),
                is_local_min=bool(local[idx]),
            )
        )
    return out


def greedy_descent_srt(
    problem: ProblemInstance,
    start: SpinReversalTransform,
    rng_seed: int = 0,
) -> SrtCandidate:
    """Steepest single-flip descent of the average coupling.

    Deterministic: the flip with the largest strict decrease is taken, ties
    broken by lowest qubit index, until no flip decreases the objective.
    The seed is accepted for interface parity with randomized strategies;
    the descent itself draws nothing.
    """
    n = problem.n_qubits
    ei, ej = problem.graph.edge_arrays()
    n_j = problem.graph.n_edges
    alpha = start.alpha.astype(np.int64).copy()
    while True:
        field = np.zeros(n)
        np.add.at(field, ei, problem.jz * alpha[ej])
        np.add.at(field, ej, problem.jz * alpha[ei])
        delta = -2.0 * alpha * field / n_j
        k = int(np.argmin(delta))
        if delta[k] >= 0.0:
            break
        alpha[k] = -alpha[k]
    srt = SpinReversalTransform.from_signs(alpha)
    jbar = _jbar_values(problem, srt.alpha[None, :])[0]
    return SrtCandidate(
        alpha=srt,
        jbar=float(jbar),
        gap_to_opt=float("nan"),
        is_global_min=False,
        is_local_min=True,
    )


def random_srt(n: int, rng_seed: int) -> SpinReversalTransform:
    """Fair independent +-1 entries from a seeded generator, canonicalized."""
    rng = np.random.default_rng(rng_seed)
    signs = rng.integers(0, 2, size=n) * 2 - 1
    return SpinReversalTransform.from_signs(signs)
