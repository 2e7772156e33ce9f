"""Matrix-free Hamiltonian H(s) = A(s) H_D + B(s) H_P in the computational basis.

Basis convention
----------------
Bit ``b_i = (1 - S_i) / 2`` of the basis index encodes the spin of qubit i:
bit 0 is spin up (sigma^z eigenvalue +1).  The basis index is
``sum_i b_i 2^i``.  With this convention:

* ``sigma^x_i`` flips bit i (matrix element 1);
* ``sigma^z_i`` contributes +1 for bit 0 and -1 for bit 1 on the diagonal;
* ``sigma^x_i sigma^x_j`` connects states differing in bits i and j with
  element +1;
* ``sigma^y_i sigma^y_j`` connects the same pairs with element -1 where the
  two bits agree and +1 where they differ.

Every matrix element is therefore real and the operator is real symmetric;
time evolution still produces complex amplitudes.  Energies are in GHz: the
dimensionless problem/driver parameters are scaled by the envelopes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import CapacityError, DimensionError
from .model import AnnealSchedule, DriverSpec, ProblemInstance, SpinConfig

__all__ = [
    "MAX_QUBITS",
    "DENSE_MAX_QUBITS",
    "CompiledSystem",
    "HamiltonianAt",
    "compile_system",
    "evaluate",
    "apply_h",
    "dense_matrix",
    "is_stoquastic",
    "classical_energies",
    "classical_ground_set",
    "classical_ground_indices",
    "operator_norm_estimate",
]

MAX_QUBITS = 20
DENSE_MAX_QUBITS = 12

_CHUNK = 1 << 20


def classical_energies(problem: ProblemInstance) -> np.ndarray:
    """Classical energy of every basis configuration, indexed by basis index.

    Term order (biases by qubit, then couplings by edge) is fixed so that
    spin-reversal-transformed problems produce exactly permuted arrays.
    """
    n = problem.n_qubits
    if n > 24:
        raise CapacityError(f"exhaustive energy table limited to 24 qubits, got {n}")
    dim = 1 << n
    ei, ej = problem.graph.edge_arrays()
    out = np.zeros(dim)
    for start in range(0, dim, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, dim), dtype=np.int64)
        chunk = np.zeros(idx.shape[0])
        for i in range(n):
            zi = 1.0 - 2.0 * ((idx >> i) & 1)
            chunk += problem.h[i] * zi
        for e in range(len(problem.graph.edges)):
            i, j = int(ei[e]), int(ej[e])
            zz = 1.0 - 2.0 * (((idx >> i) ^ (idx >> j)) & 1)
            chunk += problem.jz[e] * zz
        out[start : start + idx.shape[0]] = chunk
    return out


def classical_ground_set(problem: ProblemInstance) -> tuple[float, list[SpinConfig]]:
    """Exhaustive minimum of the classical energy and every attaining config.

    Degeneracy is preserved (exact float equality on the canonical-order
    energy sums); configurations are ordered by basis index.
    """
    energies = classical_energies(problem)
    emin = float(energies.min())
    idx = np.flatnonzero(energies == emin)
    return emin, [SpinConfig.from_index(int(k), problem.n_qubits) for k in idx]


def classical_ground_indices(problem: ProblemInstance) -> tuple[float, np.ndarray]:
    """Ground energy and basis indices of the degenerate classical ground set."""
    energies = classical_energies(problem)
    emin = float(energies.min())
    return emin, np.flatnonzero(energies == emin).astype(np.int64)


@dataclass(frozen=True)
class CompiledSystem:
    """Precomputed arrays driving the matrix-free kernels for one (problem, driver)."""

    problem: ProblemInstance
    driver: DriverSpec
    n: int
    dim: int
    diag_cl: np.ndarray
    mask_i: np.ndarray
    mask_j: np.ndarray
    ceq: np.ndarray
    cne: np.ndarray
    _lam_driver: list = field(default_factory=list, repr=False, compare=False)

    @property
    def diag_min(self) -> float:
        return float(self.diag_cl.min())

    @property
    def diag_max(self) -> float:
        return float(self.diag_cl.max())

    def driver_radius_bound(self) -> float:
        """Upper estimate of the driver spectral radius (triangle bound refined
        by a power iteration)."""
        if self._lam_driver:
            return self._lam_driver[0]
        triangle = 0.5 * self.n + float(
            np.sum(np.maximum(np.abs(self.ceq), np.abs(self.cne)))
        )
        est = triangle
        if self.dim >= 4:
            v = np.random.default_rng(0xC0FFEE).standard_normal(self.dim)
            v /= np.linalg.norm(v)
            out = np.empty_like(v)
            rho = 0.0
            for _ in range(60):
                kernels.matvec_real(
                    out, v, self.diag_cl, 0.0, 0.0, 1.0,
                    self.mask_i, self.mask_j, self.ceq, self.cne, self.n,
                )
                rho = float(np.linalg.norm(out))
                if rho == 0.0:
                    break
                v = out / rho
            if rho > 0.0:
                est = min(triangle, 1.15 * rho)
        self._lam_driver.append(est)
        return est


def compile_system(problem: ProblemInstance, driver: DriverSpec) -> CompiledSystem:
    """Build the kernel-side representation of H_D and H_P."""
    n = problem.n_qubits
    if n > MAX_QUBITS:
        raise CapacityError(f"state-vector simulation limited to {MAX_QUBITS} qubits, got {n}")
    if driver.graph != problem.graph:
        raise DimensionError("problem and driver must share one graph")
    diag = classical_energies(problem)
    ei, ej = problem.graph.edge_arrays()
    active = np.flatnonzero((driver.jx != 0.0) | (driver.jy != 0.0))
    mask_i = (np.int64(1) << ei[active]).astype(np.int64)
    mask_j = (np.int64(1) << ej[active]).astype(np.int64)
    # equal-bit and unequal-bit double-flip elements per active edge
    ceq = driver.jx[active] - driver.jy[active]
    cne = driver.jx[active] + driver.jy[active]
    return CompiledSystem(
        problem=problem,
        driver=driver,
        n=n,
        dim=1 << n,
        diag_cl=diag,
        mask_i=np.ascontiguousarray(mask_i),
        mask_j=np.ascontiguousarray(mask_j),
        ceq=np.ascontiguousarray(ceq, dtype=float),
        cne=np.ascontiguousarray(cne, dtype=float),
    )


@dataclass(frozen=True)
class HamiltonianAt:
    """H(s) with frozen envelope values A, B (GHz)."""

    system: CompiledSystem
    s: float
    a: float
    b: float

    @property
    def dim(self) -> int:
        return self.system.dim


def evaluate(
    problem_or_system,
    driver: DriverSpec = None,
    schedule: AnnealSchedule = None,
    s: float = 0.0,
) -> HamiltonianAt:
    """Evaluate H at annealing parameter s with the schedule's envelopes."""
    if isinstance(problem_or_system, CompiledSystem):
        system = problem_or_system
    else:
        system = compile_system(problem_or_system, driver)
    if schedule is None:
        schedule = AnnealSchedule()
    return HamiltonianAt(system, float(s), float(schedule.a(s)), float(schedule.b(s)))


def apply_h(ham: HamiltonianAt, psi: np.ndarray) -> np.ndarray:
    """Matrix-free H(s) psi for a complex (or real) state vector."""
    sysm = ham.system
    psi = np.asarray(psi)
    if psi.shape != (sysm.dim,):
        raise DimensionError(f"state must have shape ({sysm.dim},), got {psi.shape}")
    if np.iscomplexobj(psi):
        out = np.empty(sysm.dim, dtype=complex)
        re = np.ascontiguousarray(psi.real)
        im = np.ascontiguousarray(psi.imag)
        buf = np.empty(sysm.dim)
        kernels.matvec_real(
            buf, re, sysm.diag_cl, ham.b, 0.0, ham.a,
            sysm.mask_i, sysm.mask_j, sysm.ceq, sysm.cne, sysm.n,
        )
        out.real = buf
        kernels.matvec_real(
            buf, im, sysm.diag_cl, ham.b, 0.0, ham.a,
            sysm.mask_i, sysm.mask_j, sysm.ceq, sysm.cne, sysm.n,
        )
        out.imag = buf
        return out
    out = np.empty(sysm.dim)
    kernels.matvec_real(
        out, np.ascontiguousarray(psi, dtype=float), sysm.diag_cl, ham.b, 0.0, ham.a,
        sysm.mask_i, sysm.mask_j, sysm.ceq, sysm.cne, sysm.n,
    )
    return out


def dense_matrix(ham: HamiltonianAt) -> np.ndarray:
    """Explicit real symmetric matrix of H(s); capped at 12 qubits."""
    sysm = ham.system
    if sysm.n > DENSE_MAX_QUBITS:
        raise CapacityError(
            f"dense matrix limited to {DENSE_MAX_QUBITS} qubits, got {sysm.n}"
        )
    dim = sysm.dim
    idx = np.arange(dim)
    h = np.zeros((dim, dim))
    h[idx, idx] = ham.b * sysm.diag_cl
    if ham.a != 0.0:
        for i in range(sysm.n):
            h[idx, idx ^ (1 << i)] += -0.5 * ham.a
        for e in range(sysm.mask_i.shape[0]):
            mi = int(sysm.mask_i[e])
            mj = int(sysm.mask_j[e])
            eq = ((idx & mi) != 0) == ((idx & mj) != 0)
            coef = np.where(eq, sysm.ceq[e], sysm.cne[e])
            h[idx, idx ^ (mi | mj)] += ham.a * coef
    return h


def is_stoquastic(ham: HamiltonianAt, tol: float = 1e-12) -> bool:
    """True iff no off-diagonal element exceeds tol in the computational basis.

    Classification is basis-dependent and refers to this basis only.  The
    single-flip elements are -A/2 <= 0; an edge contributes elements
    A (Jx - Jy) and A (Jx + Jy), so any nonzero Jy (either sign) or positive
    Jx makes the operator nonstoquastic once A > 0.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    candidates = [-0.5 * ham.a]
    if ham.system.mask_i.shape[0]:
        candidates.append(float(np.max(ham.a * ham.system.ceq)))
        candidates.append(float(np.max(ham.a * ham.system.cne)))
    return max(candidates) <= tol


def operator_norm_estimate(ham: HamiltonianAt, iterations: int = 20) -> float:
    """Power-method estimate of the spectral norm (fixed, reproducible start)."""
    sysm = ham.system
    v = np.random.default_rng(0xC0FFEE).standard_normal(sysm.dim)
    v /= np.linalg.norm(v)
    out = np.empty_like(v)
    rho = 0.0
    for _ in range(iterations):
        kernels.matvec_real(
            out, v, sysm.diag_cl, ham.b, 0.0, ham.a,
            sysm.mask_i, sysm.mask_j, sysm.ceq, sysm.cne, sysm.n,
        )
        rho = float(np.linalg.norm(out))
        if rho == 0.0:
            return 0.0
        v = out / rho
    return rho
