"""Analytic work, communication and memory estimates for one FMM evaluation.

Work is counted in abstract flop units per cell:

* leaf ``c`` with ``n`` particles: ``p2m = c_p2m*n*(p+1)``, ``l2p = c_l2p*n*(p+1)``,
  ``p2p = c_p2p * n * sum(n_d)`` over ``c`` itself and its non-empty neighbors;
* cell at level 2..L-1: ``m2m`` and ``l2l`` cost ``c*(p+1)**2`` per non-empty child
  (the translations that build this cell's multipole and push its local down);
* every cell: ``m2l = c_m2l*(p+1)**2`` per non-empty interaction-list member.

Levels 0 and 1 carry no expansion work because the evaluator never forms
expansions there. Far-field conversion and near-field sums are charged to the
*target* cell.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import DomainError
from .quadtree import MortonKey, Quadtree, interaction_pairs, neighbor_pairs

COMPONENTS = ("p2m", "m2m", "m2l", "l2l", "l2p", "p2p")

BYTES_PER_COEFF = 16
BYTES_PER_PARTICLE = 24
BYTES_PER_RESULT = 16


@dataclass(frozen=True)
class CostParams:
    c_p2m: float = 1.0
    c_m2m: float = 1.0
    c_m2l: float = 1.0
    c_l2l: float = 1.0
    c_l2p: float = 1.0
    c_p2p: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{f.name} must be positive and finite, got {v!r}")

    @classmethod
    def from_dict(cls, d: dict) -> CostParams:
        names = {f.name for f in fields(cls)}
        return cls(**{k: float(v) for k, v in d.items() if k in names})

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CellWork:
    p2m: float = 0.0
    m2m: float = 0.0
    m2l: float = 0.0
    l2l: float = 0.0
    l2p: float = 0.0
    p2p: float = 0.0

    @property
    def total(self) -> float:
        return self.p2m + self.m2m + self.m2l + self.l2l + self.l2p + self.p2p


class WorkEstimate:
    """Per-cell work for every non-empty cell of a tree.

    ``levels[l]`` is an ``(n_l, 6)`` array, rows aligned with
    ``tree.nonempty(l)`` and columns in :data:`COMPONENTS` order.
    """

    def __init__(self, tree: Quadtree, levels: list[np.ndarray]):
        self.tree = tree
        self.levels = levels

    def cell(self, key: MortonKey) -> CellWork:
        idx = self.tree.nonempty(key.level)[0]
        pos = np.searchsorted(idx, key.index)
        if pos < len(idx) and idx[pos] == key.index:
            return CellWork(*map(float, self.levels[key.level][pos]))
        return CellWork()

    def level_totals(self, level: int) -> np.ndarray:
        """``w_total`` per non-empty cell at ``level``."""
        return self.levels[level].sum(axis=1)

    def component_total(self, name: str) -> float:
        c = COMPONENTS.index(name)
        return float(sum(w[:, c].sum() for w in self.levels))

    @property
    def total(self) -> float:
        return float(sum(w.sum() for w in self.levels))


def estimate_work(tree: Quadtree, p: int, params: CostParams | None = None) -> WorkEstimate:
    params = params or CostParams()
    L = tree.depth
    op = float((p + 1) ** 2)
    levels = []
    for level in range(L + 1):
        idx, starts, stops = tree.nonempty(level)
        n = (stops - starts).astype(np.float64)
        w = np.zeros((len(idx), len(COMPONENTS)))
        if level >= 2:
            tgt, _ = interaction_pairs(tree, level)
            w[:, 2] = params.c_m2l * op * np.bincount(tgt, minlength=len(idx))
        if level == L:
            w[:, 0] = params.c_p2m * n * (p + 1)
            w[:, 4] = params.c_l2p * n * (p + 1)
            tgt, src = neighbor_pairs(tree, level)
            near = n + np.bincount(tgt, weights=n[src], minlength=len(idx))
            w[:, 5] = params.c_p2p * n * near
        elif level >= 2:
            child_idx = tree.nonempty(level + 1)[0]
            nchild = np.bincount(np.searchsorted(idx, child_idx >> 2), minlength=len(idx))
            w[:, 1] = params.c_m2m * op * nchild
            w[:, 3] = params.c_l2l * op * nchild
        levels.append(w)
    return WorkEstimate(tree, levels)


@dataclass(frozen=True)
class CommEstimate:
    """Traffic between ranks; entry ``[s, r]`` is data sent by ``s`` to ``r``."""

    bytes_multipole: np.ndarray
    bytes_particles: np.ndarray
    message_count: np.ndarray

    @property
    def ranks(self) -> int:
        return self.bytes_multipole.shape[0]

    @property
    def total_bytes_multipole(self) -> int:
        return int(self.bytes_multipole.sum())

    @property
    def total_bytes_particles(self) -> int:
        return int(self.bytes_particles.sum())

    @property
    def total_bytes(self) -> int:
        return self.total_bytes_multipole + self.total_bytes_particles

    @property
    def total_messages(self) -> int:
        return int(self.message_count.sum())

    @property
    def bytes(self) -> np.ndarray:
        return self.bytes_multipole + self.bytes_particles

    @classmethod
    def zeros(cls, ranks: int) -> CommEstimate:
        z = np.zeros((ranks, ranks), dtype=np.int64)
        return cls(z, z.copy(), z.copy())


class CommStructure:
    """Cross-unit dependencies of a tree at SFC granularity level ``k``.

    Enumerated once, then priced for any unit-to-rank assignment. Only pairs
    of non-empty cells matter: an empty target computes nothing and an empty
    source has nothing to send, which also keeps the traffic pattern
    symmetric.
    """

    def __init__(self, tree: Quadtree, k: int):
        if not 0 <= k <= tree.depth:
            raise DomainError(f"granularity level {k} outside [0, {tree.depth}]")
        self.tree = tree
        self.k = k
        self.n_units = 4**k
        L = tree.depth
        src_id, src_unit, dst_unit, lvl = [], [], [], []
        offset = 0
        for level in range(k, L + 1):
            idx = tree.nonempty(level)[0]
            unit = idx >> (2 * (level - k))
            tgt, src = interaction_pairs(tree, level)
            src_id.append(src + offset)
            src_unit.append(unit[src])
            dst_unit.append(unit[tgt])
            lvl.append(np.full(len(tgt), level))
            offset += len(idx)
        self.mp_src = np.concatenate(src_id)
        self.mp_src_unit = np.concatenate(src_unit)
        self.mp_dst_unit = np.concatenate(dst_unit)
        self.mp_level = np.concatenate(lvl)

        idx, starts, stops = tree.nonempty(L)
        unit = idx >> (2 * (L - k))
        tgt, src = neighbor_pairs(tree, L)
        self.pt_src = src
        self.pt_src_unit = unit[src]
        self.pt_dst_unit = unit[tgt]
        self.pt_count = (stops - starts)[src]
        self.leaf_level = L

    def price(self, assignment: np.ndarray, ranks: int, p: int) -> CommEstimate:
        a = np.asarray(assignment)
        if len(a) != self.n_units:
            raise DomainError(f"assignment covers {len(a)} units, expected {self.n_units}")
        if np.any((a < 0) | (a >= ranks)):
            raise DomainError("assignment refers to a rank outside [0, ranks)")
        P = ranks
        b_mp = np.zeros((P, P), dtype=np.int64)
        b_pt = np.zeros((P, P), dtype=np.int64)
        level_traffic = []

        rs, rd = a[self.mp_src_unit], a[self.mp_dst_unit]
        cross = rs != rd
        # one copy of each source expansion per receiving rank
        key = self.mp_src[cross] * P + rd[cross]
        _, first = np.unique(key, return_index=True)
        s, r = rs[cross][first], rd[cross][first]
        np.add.at(b_mp, (s, r), BYTES_PER_COEFF * (p + 1))
        level_traffic.append((self.mp_level[cross][first], s, r))

        rs, rd = a[self.pt_src_unit], a[self.pt_dst_unit]
        cross = rs != rd
        key = self.pt_src[cross] * P + rd[cross]
        _, first = np.unique(key, return_index=True)
        s, r = rs[cross][first], rd[cross][first]
        np.add.at(b_pt, (s, r), BYTES_PER_PARTICLE * self.pt_count[cross][first])
        level_traffic.append((np.full(len(s), self.leaf_level), s, r))

        # one aggregated message per (level, sender, receiver) with traffic
        lv = np.concatenate([t[0] for t in level_traffic])
        s = np.concatenate([t[1] for t in level_traffic])
        r = np.concatenate([t[2] for t in level_traffic])
        msgs = np.zeros((P, P), dtype=np.int64)
        if len(lv):
            trip = np.unique(np.stack([lv, s, r], axis=1), axis=0)
            np.add.at(msgs, (trip[:, 1], trip[:, 2]), 1)
        return CommEstimate(b_mp, b_pt, msgs)


def estimate_comm(tree: Quadtree, p: int, partition) -> CommEstimate:
    """Traffic implied by ``partition`` (anything with ``k``, ``ranks``, ``assignment``)."""
    return CommStructure(tree, partition.k).price(
        np.asarray(partition.assignment), partition.ranks, p)


@dataclass(frozen=True)
class MemoryEstimate:
    bytes_cells: int
    bytes_particles: int
    bytes_results: int

    @property
    def bytes_total(self) -> int:
        return self.bytes_cells + self.bytes_particles + self.bytes_results

    def as_dict(self) -> dict:
        d = asdict(self)
        d["bytes_total"] = self.bytes_total
        return d


def estimate_memory(tree: Quadtree, p: int) -> MemoryEstimate:
    """Two complex expansions per non-empty cell plus particle and result arrays."""
    n_cells = sum(len(tree.nonempty(l)[0]) for l in range(tree.depth + 1))
    n = tree.n_particles
    return MemoryEstimate(
        bytes_cells=n_cells * 2 * (p + 1) * BYTES_PER_COEFF,
        bytes_particles=n * BYTES_PER_PARTICLE,
        bytes_results=n * BYTES_PER_RESULT,
    )
