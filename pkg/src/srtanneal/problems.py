"""Instance generators: the crafted small-gap problem and random filtered sets.

Crafted 16-qubit problem
------------------------
Eight inner qubits form a fully ferromagnetic complete-bipartite cell; each
of the eight outer qubits couples ferromagnetically to one distinct inner
qubit, and the outer qubits form four ferromagnetic pairs.  Four outer
qubits carry bias +1, three inner qubits carry bias -1, and one inner site
is explicitly zero (the eight drawn biases: four positive, three negative,
one zero).  The inner-outer couplers have half magnitude so that flipping a
coupled outer pair out of the all-up state trades the satisfied bias
exactly against the two violated couplers.  Consequences, verified by full
enumeration at construction time:

* the all-down configuration is the unique classical ground state;
* the first excited classical level is exactly the 16 states obtained from
  all-up by flipping any subset of the four outer pairs (energy +2), with
  the next level at +3.

At the avoided crossing the ground state switches between the cluster
superposition and all-down, separated by 8 to 16 spin flips, which makes
the minimum gap very small.  Three named spin-reversal transforms turn the
outer pairs (b), the inner cell (c), or both (d) antiferromagnetic.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, ValidationError
from .hamiltonian import classical_energies
from .model import (
    AnnealSchedule,
    DriverSpec,
    ProblemInstance,
    QubitGraph,
    SpinReversalTransform,
    chimera_graph,
)
from .spectrum import gap_profile

__all__ = [
    "CraftedProblem",
    "RandomProblemSpec",
    "GeneratedInstance",
    "VALUE_GRID",
    "build_crafted",
    "crafted_srt_variants",
    "generate_random",
]

# 16 evenly spaced coupling values on [-1, 1] including the endpoints
VALUE_GRID = tuple(-1.0 + 2.0 * k / 15.0 for k in range(16))

_INNER = tuple(range(8))
_OUTER = tuple(range(8, 16))
_PAIRS = ((8, 9), (10, 11), (12, 13), (14, 15))
_PRIMARY_OUTER = (8, 10, 12, 14)
_NEGATIVE_INNER = (0, 2, 4)
_ZERO_SITE = 6


@dataclass(frozen=True)
class CraftedProblem:
    """The frozen small-gap instance with its named transform variants."""

    instance: ProblemInstance
    inner: tuple
    outer: tuple
    pairs: tuple
    drawn_biases: tuple  # the eight figure-designated bias sites

    def content_hash(self) -> str:
        """Regression pin over the exact instance content."""
        payload = json.dumps(self.instance.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


def build_crafted() -> CraftedProblem:
    """Construct and verify the crafted problem (enumeration of all 2^16 states)."""
    jz = {}
    for u in range(4):
        for v in range(4, 8):
            jz[(u, v)] = -1.0
    for i in range(8):
        jz[(i, 8 + i)] = -0.5
    for e in _PAIRS:
        jz[e] = -1.0
    h = np.zeros(16)
    for q in _PRIMARY_OUTER:
        h[q] = 1.0
    for q in _NEGATIVE_INNER:
        h[q] = -1.0
    graph = QubitGraph.from_edges(16, list(jz))
    instance = ProblemInstance(graph, h, jz)

    energies = classical_energies(instance)
    e0 = float(energies.min())
    ground = np.flatnonzero(energies == e0)
    if ground.tolist() != [(1 << 16) - 1]:
        raise ConstructionError("crafted problem lost its unique all-down ground state")
    e1 = float(energies[energies > e0].min())
    level1 = set(np.flatnonzero(energies == e1).tolist())
    cluster = set()
    masks = [(1 << a) | (1 << b) for a, b in _PAIRS]
    for k in range(16):
        m = 0
        for bit in range(4):
            if (k >> bit) & 1:
                m |= masks[bit]
        cluster.add(m)
    if level1 != cluster:
        raise ConstructionError(
            "crafted first excited level is not the outer-pair-flip cluster"
        )

    drawn = tuple(_PRIMARY_OUTER) + tuple(_NEGATIVE_INNER) + (_ZERO_SITE,)
    return CraftedProblem(
        instance=instance,
        inner=_INNER,
        outer=_OUTER,
        pairs=_PAIRS,
        drawn_biases=drawn,
    )


def crafted_srt_variants(cp: CraftedProblem) -> dict[str, SpinReversalTransform]:
    """Named transforms: (a) identity, (b) outer pairs AFM, (c) inner cell AFM,
    (d) both."""
    n = cp.instance.n_qubits

    def flip(qubits):
        alpha = np.ones(n, dtype=np.int64)
        for q in qubits:
            alpha[q] = -1
        return SpinReversalTransform(alpha)

    second_members = tuple(b for _, b in cp.pairs)
    second_shore = tuple(q for q in cp.inner if q >= 4)
    return {
        "a": SpinReversalTransform.identity(n),
        "b": flip(second_members),
        "c": flip(second_shore),
        "d": flip(second_shore + second_members),
    }


@dataclass(frozen=True)
class RandomProblemSpec:
    """Random-instance generator settings (couplings drawn from VALUE_GRID)."""

    graph: QubitGraph
    bias_mode: str = "random"  # or "zero"
    gap_filter_ghz: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        if self.bias_mode not in ("random", "zero"):
            raise ValidationError("bias_mode must be 'random' or 'zero'")


@dataclass(frozen=True)
class GeneratedInstance:
    """Accepted random instance with its filter metadata."""

    problem: ProblemInstance
    problem_id: str
    draw_index: int
    min_gap_ghz: float
    s_star: float
    sector: str


def _draw(spec: RandomProblemSpec, index: int) -> ProblemInstance:
    rng = np.random.default_rng([spec.rng_seed, index])
    grid = np.asarray(VALUE_GRID)
    jz = grid[rng.integers(0, 16, size=spec.graph.n_edges)]
    # the grid excludes zero, so couplers never silently vanish; guard anyway
    while np.any(jz == 0.0):
        jz[jz == 0.0] = grid[rng.integers(0, 16, size=int(np.sum(jz == 0.0)))]
    if spec.bias_mode == "random":
        h = grid[rng.integers(0, 16, size=spec.graph.n_qubits)]
    else:
        h = np.zeros(spec.graph.n_qubits)
    return ProblemInstance(spec.graph, h, jz)


def _filter_gap(problem: ProblemInstance, schedule: AnnealSchedule, grid_points: int):
    """Bare-driver minimum gap used by the acceptance filter.

    Zero-bias problems are evaluated in the even parity sector, where the
    dynamics lives; the full spectrum would show a spurious zero gap from
    the exactly degenerate classical ground pair at the end of the anneal.
    """
    prof = gap_profile(
        problem,
        DriverSpec.bare(problem.graph),
        schedule,
        grid_points=grid_points,
        sector="auto",
    )
    return prof.min_gap, prof.s_star, prof.sector


def generate_random(
    spec: RandomProblemSpec,
    count: int,
    schedule: AnnealSchedule = None,
    grid_points: int = 201,
    max_consecutive_rejects: int = 100_000,
    map_fn=map,
) -> list[GeneratedInstance]:
    """Draw instances and keep those whose bare-driver minimum gap is small.

    Acceptance is deterministic given (seed, count): instances are drawn at
    increasing draw indices and accepted in index order until ``count`` pass
    the filter.  ``map_fn`` may be a parallel map; chunks are evaluated
    together but acceptance order never depends on completion order.
    """
    if count < 1:
        raise ValidationError("count must be >= 1")
    if schedule is None:
        schedule = AnnealSchedule()
    accepted: list[GeneratedInstance] = []
    index = 0
    consecutive_rejects = 0
    chunk = 8
    while len(accepted) < count:
        problems = [_draw(spec, index + k) for k in range(chunk)]
        results = list(
            map_fn(lambda p: _filter_gap(p, schedule, grid_points), problems)
        )
        for k, (gap, s_star, sector) in enumerate(results):
            if len(accepted) >= count:
                break
            if gap < spec.gap_filter_ghz:
                accepted.append(
                    GeneratedInstance(
                        problem=problems[k],
                        problem_id=f"rnd{spec.rng_seed}-{spec.bias_mode}-{index + k:05d}",
                        draw_index=index + k,
                        min_gap_ghz=float(gap),
                        s_star=float(s_star),
                        sector=sector,
                    )
                )
                consecutive_rejects = 0
            else:
                consecutive_rejects += 1
                if consecutive_rejects > max_consecutive_rejects:
                    raise ConstructionError(
                        f"gap filter rejected {consecutive_rejects} consecutive draws"
                    )
        index += chunk
    return accepted
