"""Core data model: problems, drivers, schedules, spin-reversal transforms.

Conventions used throughout the package:

* Qubits are indexed ``0 .. N-1``; edges are unordered pairs stored as
  ``(i, j)`` with ``i < j`` in a fixed sorted order.  Every per-edge map
  (``Jz``, ``Jx``, ``Jy``) is an array aligned with that edge list.
* Biases ``h`` and couplings ``J`` are dimensionless and restricted to
  ``[-1, 1]``; the annealing envelopes carry the energy unit (GHz).
* A spin configuration ``S`` has entries +-1; basis index bit convention is
  ``b_i = (1 - S_i) / 2`` (bit 0 means spin up, eigenvalue +1 of sigma^z).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, UndefinedObjectiveError, ValidationError

__all__ = [
    "QubitGraph",
    "ProblemInstance",
    "DriverSpec",
    "AnnealSchedule",
    "SpinReversalTransform",
    "SpinConfig",
    "apply_srt",
    "untransform_solution",
    "average_coupling",
    "chimera_graph",
]


@dataclass(frozen=True)
class QubitGraph:
    """Undirected coupling graph on ``n_qubits`` vertices.

    Edges are canonicalized to ``i < j`` and sorted lexicographically; all
    per-edge arrays in the package share this ordering.
    """

    n_qubits: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError(f"n_qubits must be positive, got {self.n_qubits}")
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValidationError(f"self-loop on qubit {i}")
            if not (0 <= i < j < self.n_qubits):
                raise ValidationError(f"edge ({i}, {j}) out of range or not canonical")
            if (i, j) in seen:
                raise ValidationError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))

    @classmethod
    def from_edges(cls, n_qubits: int, edges) -> "QubitGraph":
        """Build a graph from an iterable of pairs in any order."""
        canon = sorted((min(i, j), max(i, j)) for i, j in edges)
        return cls(n_qubits, tuple(canon))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e: k for k, e in enumerate(self.edges)}

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint index arrays (ei, ej) aligned with the edge list."""
        if not self.edges:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        arr = np.asarray(self.edges, dtype=np.int64)
        return arr[:, 0].copy(), arr[:, 1].copy()


def _edge_values(graph: QubitGraph, values, name: str) -> np.ndarray:
    """Normalize a per-edge map (dict keyed by edge, or array) to an array."""
    if values is None:
        return np.zeros(graph.n_edges)
    if isinstance(values, dict):
        index = graph.edge_index()
        out = np.zeros(graph.n_edges)
        for key, v in values.items():
            i, j = min(key), max(key)
            if (i, j) not in index:
                raise ValidationError(f"{name} key ({i}, {j}) is not a graph edge")
            out[index[(i, j)]] = v
        return out
    out = np.asarray(values, dtype=float)
    if out.shape != (graph.n_edges,):
        raise DimensionError(
            f"{name} must have one value per edge ({graph.n_edges}), got shape {out.shape}"
        )
    return out.copy()


@dataclass(frozen=True)
class ProblemInstance:
    """Classical Ising problem: biases ``h`` and ZZ couplings on a graph.

    Energy of a configuration S is ``sum_i h_i S_i + sum_(i<j) Jz_ij S_i S_j``.
    """

    graph: QubitGraph
    h: np.ndarray
    jz: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        jz = _edge_values(self.graph, self.jz, "Jz")
        if h.shape != (self.graph.n_qubits,):
            raise DimensionError(
                f"h must have length {self.graph.n_qubits}, got shape {h.shape}"
            )
        if np.any(np.abs(h) > 1 + 1e-12):
            raise ValidationError("bias magnitudes must satisfy |h_i| <= 1")
        if np.any(np.abs(jz) > 1 + 1e-12):
            raise ValidationError("coupling magnitudes must satisfy |Jz_ij| <= 1")
        h.setflags(write=False)
        jz.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "jz", jz)

    @property
    def n_qubits(self) -> int:
        return self.graph.n_qubits

    def energy(self, spins: "SpinConfig") -> float:
        """Classical energy of one configuration."""
        s = spins.s
        if s.shape != (self.n_qubits,):
            raise DimensionError("configuration length mismatch")
        ei, ej = self.graph.edge_arrays()
        return float(self.h @ s + self.jz @ (s[ei] * s[ej]))

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.graph.n_qubits,
            "edges": [list(e) for e in self.graph.edges],
            "h": self.h.tolist(),
            "jz": self.jz.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemInstance":
        graph = QubitGraph.from_edges(data["n_qubits"], data["edges"])
        return cls(graph, np.asarray(data["h"], dtype=float), np.asarray(data["jz"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ProblemInstance":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DriverSpec:
    """Driver-side couplings: XX and YY terms on the problem graph.

    The single-qubit transverse-field term is always present with the fixed
    coefficient -1/2 per qubit; only the two-qubit couplings vary.
    """

    graph: QubitGraph
    jx: np.ndarray = None
    jy: np.ndarray = None

    def __post_init__(self):
        jx = _edge_values(self.graph, self.jx, "Jx")
        jy = _edge_values(self.graph, self.jy, "Jy")
        jx.setflags(write=False)
        jy.setflags(write=False)
        object.__setattr__(self, "jx", jx)
        object.__setattr__(self, "jy", jy)

    @classmethod
    def bare(cls, graph: QubitGraph) -> "DriverSpec":
        """Transverse field only."""
        return cls(graph)

    @classmethod
    def uniform_yy(cls, graph: QubitGraph, jy: float = 0.5) -> "DriverSpec":
        """YY coupling of equal strength on every edge."""
        return cls(graph, jy=np.full(graph.n_edges, float(jy)))

    @classmethod
    def uniform_xx(cls, graph: QubitGraph, jx: float = -0.5) -> "DriverSpec":
        """XX coupling of equal strength on every edge."""
        return cls(graph, jx=np.full(graph.n_edges, float(jx)))

    def to_dict(self) -> dict:
        return {"jx": self.jx.tolist(), "jy": self.jy.tolist()}


def _default_schedule_functions():
    # smooth monotone envelopes with A(1) = 0 and B(0) = 0, crossing near
    # s ~ 0.31; stands in for hardware envelope curves
    def a_of_s(s):
        return 8.0 * (1.0 - s) ** 2

    def b_of_s(s):
        return 12.0 * s

    return a_of_s, b_of_s


@dataclass(frozen=True)
class AnnealSchedule:
    """Envelope functions A(s), B(s) in GHz plus the total anneal time.

    ``kind`` is either ``"builtin-default"`` (A = 8 (1-s)^2, B = 12 s) or
    ``"tabulated"`` with a monotone table interpolated by a monotone cubic.
    """

    kind: str = "builtin-default"
    table: tuple = None
    t_a_ns: float = 1000.0
    _interp: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.t_a_ns <= 0:
            raise ValidationError("total anneal time must be positive")
        if self.kind == "builtin-default":
            if self.table is not None:
                raise ValidationError("builtin schedule takes no table")
        elif self.kind == "tabulated":
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 2 or tab.shape[1] != 3 or tab.shape[0] < 2:
                raise ValidationError("schedule table must be rows of (s, A_GHz, B_GHz)")
            s, a, b = tab[:, 0], tab[:, 1], tab[:, 2]
            if not (np.all(np.diff(s) > 0) and s[0] == 0.0 and s[-1] == 1.0):
                raise ValidationError("s values must strictly increase and span [0, 1]")
            if np.any(a < 0) or np.any(b < 0):
                raise ValidationError("A(s) and B(s) must be non-negative")
            if np.any(np.diff(a) > 1e-12):
                raise ValidationError("A(s) must be non-increasing")
            if np.any(np.diff(b) < -1e-12):
                raise ValidationError("B(s) must be non-decreasing")
            object.__setattr__(self, "table", tuple(map(tuple, tab)))
            from scipy.interpolate import PchipInterpolator

            object.__setattr__(
                self,
                "_interp",
                (PchipInterpolator(s, a), PchipInterpolator(s, b)),
            )
        else:
            raise ValidationError(f"unknown schedule kind {self.kind!r}")

    def a(self, s):
        """Driver envelope A(s) in GHz."""
        if self.kind == "builtin-default":
            return _default_schedule_functions()[0](np.asarray(s, dtype=float))
        return self._interp[0](s)

    def b(self, s):
        """Problem envelope B(s) in GHz."""
        if self.kind == "builtin-default":
            return _default_schedule_functions()[1](np.asarray(s, dtype=float))
        return self._interp[1](s)

    def hermite_data(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Knots, values and slopes of both envelopes for compiled evaluation.

        The builtin quadratic/linear envelopes are reproduced exactly by a
        single cubic Hermite segment.
        """
        if self.kind == "builtin-default":
            knots = np.array([0.0, 1.0])
            av = np.array([8.0, 0.0])
            ad = np.array([-16.0, 0.0])
            bv = np.array([0.0, 12.0])
            bd = np.array([12.0, 12.0])
            return knots, av, ad, bv, bd
        s = np.array([row[0] for row in self.table])
        pa, pb = self._interp
        return s, pa(s), pa.derivative()(s), pb(s), pb.derivative()(s)

    @classmethod
    def from_csv(cls, path, t_a_ns: float = 1000.0) -> "AnnealSchedule":
        """Load a tabulated schedule from a CSV file with header s,A_GHz,B_GHz."""
        with open(path, newline="") as fh:
            return cls._from_csv_file(fh, t_a_ns)

    @classmethod
    def from_csv_text(cls, text: str, t_a_ns: float = 1000.0) -> "AnnealSchedule":
        return cls._from_csv_file(io.StringIO(text), t_a_ns)

    @classmethod
    def _from_csv_file(cls, fh, t_a_ns: float) -> "AnnealSchedule":
        reader = csv.reader(fh)
        header = next(reader)
        if [c.strip() for c in header] != ["s", "A_GHz", "B_GHz"]:
            raise ValidationError("schedule CSV must have header s,A_GHz,B_GHz")
        rows = [(float(r[0]), float(r[1]), float(r[2])) for r in reader if r]
        return cls(kind="tabulated", table=tuple(rows), t_a_ns=t_a_ns)

    def with_t_a(self, t_a_ns: float) -> "AnnealSchedule":
        return AnnealSchedule(kind=self.kind, table=self.table, t_a_ns=t_a_ns)


def _pm_one_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValidationError(f"{name} must be a non-empty 1-d array")
    if not np.all(np.abs(arr) == 1):
        raise ValidationError(f"{name} entries must be exactly +-1")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SpinReversalTransform:
    """Gauge choice alpha with entries +-1, canonicalized to alpha[0] = +1.

    alpha and -alpha act identically on every observable (the classical
    problem is quadratic in alpha and the flipped Hamiltonians are related
    by the global bit-flip symmetry), so the global sign is quotiented out.
    """

    alpha: np.ndarray

    def __post_init__(self):
        arr = _pm_one_array(self.alpha, "alpha")
        if arr[0] != 1:
            raise ValidationError(
                "alpha must be canonical (alpha[0] = +1); use from_signs() to canonicalize"
            )
        object.__setattr__(self, "alpha", arr)

    @classmethod
    def from_signs(cls, values) -> "SpinReversalTransform":
        """Canonicalize an arbitrary +-1 vector by a global flip if needed."""
        arr = _pm_one_array(values, "alpha").copy()
        if arr[0] == -1:
            arr = -arr
        return cls(arr)

    @classmethod
    def identity(cls, n: int) -> "SpinReversalTransform":
        return cls(np.ones(n, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.alpha.size

    def is_identity(self) -> bool:
        return bool(np.all(self.alpha == 1))

    def flip_mask(self) -> int:
        """Basis-index XOR mask of the induced bit-flip permutation."""
        mask = 0
        for i, a in enumerate(self.alpha):
            if a == -1:
                mask |= 1 << i
        return mask

    def to_dict(self) -> dict:
        return {"alpha": self.alpha.tolist()}


@dataclass(frozen=True)
class SpinConfig:
    """A classical configuration with entries +-1."""

    s: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", _pm_one_array(self.s, "s"))

    @classmethod
    def from_index(cls, index: int, n: int) -> "SpinConfig":
        """Decode a basis index with the bit convention b_i = (1 - S_i)/2."""
        bits = (index >> np.arange(n)) & 1
        return cls(1 - 2 * bits)

    def to_index(self) -> int:
        bits = (1 - self.s) // 2
        return int(bits @ (1 << np.arange(self.s.size, dtype=np.int64)))


def apply_srt(
    problem: ProblemInstance, driver: DriverSpec, srt: SpinReversalTransform
) -> tuple[ProblemInstance, DriverSpec]:
    """Apply a spin-reversal transform to the classical parameters.

    Returns a new (problem, driver) pair with ``h' = alpha h`` and
    ``Jz' = alpha_i alpha_j Jz``; the driver couplings Jx and Jy are returned
    unchanged (only the classical part transforms).
    """
    if srt.n != problem.n_qubits:
        raise DimensionError(
            f"alpha length {srt.n} does not match problem size {problem.n_qubits}"
        )
    if driver.graph is not problem.graph and driver.graph != problem.graph:
        raise DimensionError("problem and driver must share one graph")
    alpha = srt.alpha.astype(float)
    ei, ej = problem.graph.edge_arrays()
    new_h = alpha * problem.h
    new_jz = alpha[ei] * alpha[ej] * problem.jz
    return ProblemInstance(problem.graph, new_h, new_jz), driver


def untransform_solution(
    solution: SpinConfig, srt: SpinReversalTransform
) -> SpinConfig:
    """Map a solution of the transformed problem back to the original frame."""
    if solution.s.size != srt.n:
        raise DimensionError("solution and alpha lengths differ")
    return SpinConfig(srt.alpha * solution.s)


def average_coupling(problem: ProblemInstance, srt: SpinReversalTransform) -> float:
    """Mean transformed ZZ coupling: (1/N_J) sum_(ij) Jz_ij alpha_i alpha_j.

    More negative values mean more ferromagnetic transformed couplings; this
    is the objective minimized when selecting a transform.
    """
    if problem.graph.n_edges == 0:
        raise UndefinedObjectiveError("average coupling is undefined without edges")
    if srt.n != problem.n_qubits:
        raise DimensionError("alpha length mismatch")
    alpha = srt.alpha.astype(float)
    ei, ej = problem.graph.edge_arrays()
    return float(problem.jz @ (alpha[ei] * alpha[ej])) / problem.graph.n_edges


def chimera_graph(rows: int, cols: int, shore: int = 4) -> QubitGraph:
    """Standard Chimera connectivity with complete-bipartite unit cells.

    Qubit numbering is cell-major (row-major over cells), left shore before
    right shore, index order within a shore.  Vertical neighbors couple
    corresponding left-shore qubits, horizontal neighbors corresponding
    right-shore qubits.
    """
    if rows < 1 or cols < 1:
        raise ValidationError("rows and cols must be >= 1")
    if not 1 <= shore <= 4:
        raise ValidationError("shore size must be in [1, 4]")
    edges = []

    def base(r, c):
        return (r * cols + c) * 2 * shore

    for r in range(rows):
        for c in range(cols):
            b = base(r, c)
            for u in range(shore):
                for v in range(shore):
                    edges.append((b + u, b + shore + v))
            if r + 1 < rows:
                b2 = base(r + 1, c)
                for u in range(shore):
                    edges.append((b + u, b2 + u))
            if c + 1 < cols:
                b2 = base(r, c + 1)
                for u in range(shore):
                    edges.append((b + shore + u, b2 + shore + u))
    return QubitGraph.from_edges(rows * cols * 2 * shore, edges)
