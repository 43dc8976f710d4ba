"""A-priori load balancing over SFC-ordered subtrees.

The tree is cut at a granularity level ``k``: each of the ``4**k`` level-``k``
cells, together with all of its descendants, forms one *unit*. Cells above
``k`` are small and are replicated on every rank. Units are first cut into
contiguous Morton-order chunks and then improved by a local search on

    J = max_r (work owned by rank r) + lam * (total bytes exchanged)
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .costmodel import (
    CommEstimate,
    CommStructure,
    CostParams,
    estimate_work,
)
from .errors import DomainError
from .quadtree import MortonKey, Quadtree, morton_decode_array, morton_encode_array

DEFAULT_K = 3
DEFAULT_LAMBDA = 0.01
BRUTE_FORCE_LIMIT = 10**7


@dataclass(frozen=True)
class SubtreeUnit:
    root: MortonKey
    work: float
    particle_count: int


@dataclass(frozen=True)
class ObjectiveWeights:
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise DomainError("communication weight must be finite and >= 0")


@dataclass(frozen=True)
class Partition:
    """Rank of every unit, listed in Morton order."""

    k: int
    ranks: int
    assignment: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(r) for r in self.assignment)
        object.__setattr__(self, "assignment", a)
        if self.ranks < 1:
            raise DomainError("need at least one rank")
        if any(r < 0 or r >= self.ranks for r in a):
            raise DomainError("assignment refers to a rank outside [0, ranks)")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.assignment, dtype=np.int64)

    def to_json(self) -> dict:
        return {"k": self.k, "ranks": self.ranks, "assignment": list(self.assignment)}

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, d: dict | str) -> Partition:
        if isinstance(d, str):
            d = json.loads(d)
        return cls(int(d["k"]), int(d["ranks"]), tuple(d["assignment"]))


class LoadModel:
    """What the partitioner needs to know about a workload.

    Subclasses provide per-unit ``unit_work``, the replicated ``coarse_work``,
    spatial ``neighbors`` per unit and a ``comm`` pricing function.
    """

    k: int
    unit_work: np.ndarray
    coarse_work: float
    neighbors: list[tuple[int, ...]]

    @property
    def n_units(self) -> int:
        return len(self.unit_work)

    @property
    def total_work(self) -> float:
        return float(self.unit_work.sum()) + self.coarse_work

    def rank_work(self, assignment, ranks: int) -> np.ndarray:
        """Balanced (non-replicated) work owned by each rank."""
        return np.bincount(np.asarray(assignment), weights=self.unit_work, minlength=ranks)

    def comm(self, assignment, ranks: int) -> CommEstimate:
        raise NotImplementedError

    def comm_bytes(self, assignment, ranks: int) -> int:
        return self.comm(assignment, ranks).total_bytes


class TreeLoadModel(LoadModel):
    """Load model of an FMM evaluation on a concrete quadtree."""

    def __init__(self, tree: Quadtree, p: int, params: CostParams | None = None,
                 k: int = DEFAULT_K):
        if not 2 <= k <= tree.depth:
            raise DomainError(f"granularity level {k} outside [2, {tree.depth}]")
        self.tree, self.p, self.k = tree, p, k
        self.params = params or CostParams()
        self.work = estimate_work(tree, p, self.params)
        n_units = 4**k
        uw = np.zeros(n_units)
        for level in range(k, tree.depth + 1):
            idx = tree.nonempty(level)[0]
            np.add.at(uw, idx >> (2 * (level - k)), self.work.level_totals(level))
        self.unit_work = uw
        self.coarse_work = float(sum(self.work.level_totals(l).sum() for l in range(k)))
        idx, starts, stops = tree.nonempty(k)
        counts = np.zeros(n_units, dtype=np.int64)
        counts[idx] = stops - starts
        self.unit_count = counts
        self._comm = CommStructure(tree, k)
        self.neighbors = _grid_neighbors(k)

    def units(self) -> list[SubtreeUnit]:
        return [SubtreeUnit(MortonKey(self.k, i), float(w), int(c))
                for i, (w, c) in enumerate(zip(self.unit_work, self.unit_count))]

    def comm(self, assignment, ranks: int) -> CommEstimate:
        return self._comm.price(np.asarray(assignment), ranks, self.p)


class SyntheticLoadModel(LoadModel):
    """Hand-specified unit works with symmetric pairwise traffic.

    ``edges`` maps unordered unit pairs ``(u, v)`` to the bytes each sends the
    other when they sit on different ranks. Edge partners count as spatial
    neighbors.
    """

    def __init__(self, works, edges: dict | None = None, coarse_work: float = 0.0,
                 k: int = 0):
        self.unit_work = np.asarray(works, dtype=np.float64)
        if np.any(self.unit_work < 0):
            raise DomainError("unit works must be nonnegative")
        self.coarse_work = float(coarse_work)
        self.k = k
        self.edges = {tuple(sorted(e)): int(b) for e, b in (edges or {}).items()}
        nbrs = [set() for _ in range(len(self.unit_work))]
        for u, v in self.edges:
            nbrs[u].add(v)
            nbrs[v].add(u)
        self.neighbors = [tuple(sorted(s)) for s in nbrs]

    def comm(self, assignment, ranks: int) -> CommEstimate:
        a = np.asarray(assignment)
        est = CommEstimate.zeros(ranks)
        for (u, v), b in self.edges.items():
            ru, rv = a[u], a[v]
            if ru != rv and b > 0:
                est.bytes_particles[ru, rv] += b
                est.bytes_particles[rv, ru] += b
                est.message_count[ru, rv] = 1
                est.message_count[rv, ru] = 1
        return est

    def comm_bytes(self, assignment, ranks: int) -> int:
        a = np.asarray(assignment)
        return sum(2 * b for (u, v), b in self.edges.items() if a[u] != a[v])


def _grid_neighbors(k: int) -> list[tuple[int, ...]]:
    side = 1 << k
    idx = np.arange(4**k)
    ix, iy = morton_decode_array(idx)
    out = [[] for _ in idx]
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            jx, jy = ix + dx, iy + dy
            ok = (jx >= 0) & (jx < side) & (jy >= 0) & (jy < side)
            j = morton_encode_array(jx[ok], jy[ok])
            for u, v in zip(idx[ok], j):
                out[u].append(int(v))
    return [tuple(sorted(n)) for n in out]


def sfc_units(tree: Quadtree, k: int, p: int = 12,
              params: CostParams | None = None) -> list[SubtreeUnit]:
    """The ``4**k`` level-``k`` subtrees in Morton order, with aggregated work."""
    return TreeLoadModel(tree, p, params, k).units()


def _as_works(units) -> np.ndarray:
    if isinstance(units, LoadModel):
        return units.unit_work
    return np.asarray([u.work if isinstance(u, SubtreeUnit) else u for u in units],
                      dtype=np.float64)


def initial_partition(units, ranks: int, k: int | None = None) -> Partition:
    """Contiguous SFC chunks.

    Each rank in turn takes the shortest prefix of the remaining units whose
    work reaches ``remaining_work / remaining_ranks``; the last rank takes
    the rest.
    """
    if ranks < 1:
        raise DomainError("need at least one rank")
    works = _as_works(units)
    if k is None:
        k = units.k if isinstance(units, LoadModel) else _infer_k(units)
    n = len(works)
    assignment = np.full(n, ranks - 1, dtype=np.int64)
    remaining = float(works.sum())
    i = 0
    for r in range(ranks - 1):
        target = remaining / (ranks - r)
        acc = 0.0
        start = i
        while i < n and acc < target:
            acc += works[i]
            i += 1
        assignment[start:i] = r
        remaining -= acc
    return Partition(k, ranks, tuple(assignment))


def _infer_k(units) -> int:
    if len(units) and isinstance(units[0], SubtreeUnit):
        return units[0].root.level
    return 0


def objective(model: LoadModel, partition: Partition,
              weights: ObjectiveWeights = ObjectiveWeights()) -> float:
    """Bottleneck balanced work plus ``lam`` times total bytes exchanged."""
    return _objective(model, partition.as_array(), partition.ranks, weights.lam)


def _objective(model: LoadModel, a: np.ndarray, ranks: int, lam: float) -> float:
    J = float(model.rank_work(a, ranks).max())
    if lam:
        J += lam * model.comm_bytes(a, ranks)
    return J


@dataclass
class RefineTrace:
    accepted: int = 0
    objective: list = field(default_factory=list)


def refine_partition(model: LoadModel, partition: Partition,
                     weights: ObjectiveWeights = ObjectiveWeights(),
                     max_iters: int = 1000, trace: RefineTrace | None = None) -> Partition:
    """Greedy first-improvement local search over single-unit moves.

    A unit is a candidate if a Morton-order or spatial neighbor lives on a
    different rank; it may move to any such rank. A rank that owns nothing
    borders every unit, so the search can still populate ranks left empty by
    the initial cut. Candidates are scanned by
    (unit index, destination rank) and the first strictly improving move is
    taken, after which the scan restarts. ``max_iters`` bounds the number of
    accepted moves.
    """
    if max_iters < 0:
        raise DomainError("max_iters must be >= 0")
    if len(partition.assignment) != model.n_units:
        raise DomainError("partition and load model disagree on the unit count")
    P, lam = partition.ranks, weights.lam
    a = partition.as_array().copy()
    n = len(a)
    J = _objective(model, a, P, lam)
    if trace is not None:
        trace.objective.append(J)
    for _ in range(max_iters):
        moved = False
        empty = set(range(P)) - set(a.tolist())
        for u in range(n):
            dests = set(empty)
            for v in (u - 1, u + 1):
                if 0 <= v < n and a[v] != a[u]:
                    dests.add(int(a[v]))
            for v in model.neighbors[u]:
                if a[v] != a[u]:
                    dests.add(int(a[v]))
            for r in sorted(dests):
                old = a[u]
                a[u] = r
                J_new = _objective(model, a, P, lam)
                if J_new < J:
                    J = J_new
                    moved = True
                    break
                a[u] = old
            if moved:
                break
        if not moved:
            break
        if trace is not None:
            trace.accepted += 1
            trace.objective.append(J)
    return Partition(partition.k, P, tuple(a))


def brute_force_partition(model: LoadModel, ranks: int,
                          weights: ObjectiveWeights = ObjectiveWeights()) -> Partition:
    """Exhaustive minimizer of J; ties go to the lexicographically smallest assignment."""
    n = model.n_units
    if ranks < 1:
        raise DomainError("need at least one rank")
    if ranks**n > BRUTE_FORCE_LIMIT:
        raise DomainError(f"{ranks}**{n} assignments exceed the search limit")
    best, best_J = None, np.inf
    for cand in itertools.product(range(ranks), repeat=n):
        J = _objective(model, np.asarray(cand, dtype=np.int64), ranks, weights.lam)
        if J < best_J:
            best, best_J = cand, J
    return Partition(model.k, ranks, best)


def work_imbalance(model: LoadModel, partition: Partition) -> float:
    """max / mean of balanced work over ranks (1.0 when perfectly even)."""
    w = model.rank_work(partition.as_array(), partition.ranks)
    mean = w.mean()
    return float(w.max() / mean) if mean > 0 else 1.0
