"""Uniform quadtree over a square root box, keyed by Morton (Z-order) indices.

Cell ``(level, index)`` covers the half-open square ``[x0, x1) x [y0, y1)``
obtained by splitting the root box ``level`` times. ``index`` interleaves the
integer cell coordinates with ``ix`` in the even bits and ``iy`` in the odd
bits, so sorting by index walks the Z-shaped space-filling curve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DomainError

MAX_DEPTH = 16
DEFAULT_S_TARGET = 30
_REL_MARGIN = 1e-9
_ABS_MARGIN = 1e-12


class MortonKey(NamedTuple):
    level: int
    index: int


def _check_level(level: int) -> None:
    if level < 0 or level > 2 * MAX_DEPTH:
        raise DomainError(f"level {level} out of range")


def morton_encode(level: int, ix: int, iy: int) -> MortonKey:
    _check_level(level)
    side = 1 << level
    if not (0 <= ix < side and 0 <= iy < side):
        raise DomainError(f"cell ({ix}, {iy}) outside a level-{level} grid")
    index = 0
    for bit in range(level):
        index |= ((ix >> bit) & 1) << (2 * bit)
        index |= ((iy >> bit) & 1) << (2 * bit + 1)
    return MortonKey(level, index)


def morton_decode(key: MortonKey) -> tuple[int, int]:
    level, index = key
    _check_level(level)
    if not 0 <= index < 4**level:
        raise DomainError(f"index {index} invalid at level {level}")
    ix = iy = 0
    for bit in range(level):
        ix |= ((index >> (2 * bit)) & 1) << bit
        iy |= ((index >> (2 * bit + 1)) & 1) << bit
    return ix, iy


def _spread_bits(v: np.ndarray) -> np.ndarray:
    # 16-bit integers -> even bit positions of a 32-bit word
    v = v.astype(np.uint64) & np.uint64(0xFFFF)
    v = (v | (v << np.uint64(8))) & np.uint64(0x00FF00FF)
    v = (v | (v << np.uint64(4))) & np.uint64(0x0F0F0F0F)
    v = (v | (v << np.uint64(2))) & np.uint64(0x33333333)
    v = (v | (v << np.uint64(1))) & np.uint64(0x55555555)
    return v


def _compact_bits(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.uint64) & np.uint64(0x55555555)
    v = (v | (v >> np.uint64(1))) & np.uint64(0x33333333)
    v = (v | (v >> np.uint64(2))) & np.uint64(0x0F0F0F0F)
    v = (v | (v >> np.uint64(4))) & np.uint64(0x00FF00FF)
    v = (v | (v >> np.uint64(8))) & np.uint64(0x0000FFFF)
    return v


def morton_encode_array(ix: np.ndarray, iy: np.ndarray) -> np.ndarray:
    """Vectorized interleave for levels up to 16; returns int64 indices."""
    return (_spread_bits(ix) | (_spread_bits(iy) << np.uint64(1))).astype(np.int64)


def morton_decode_array(index: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    index = np.asarray(index, dtype=np.uint64)
    ix = _compact_bits(index).astype(np.int64)
    iy = _compact_bits(index >> np.uint64(1)).astype(np.int64)
    return ix, iy


def parent(key: MortonKey) -> MortonKey:
    if key.level == 0:
        raise DomainError("the root cell has no parent")
    return MortonKey(key.level - 1, key.index >> 2)


def children(key: MortonKey) -> tuple[MortonKey, ...]:
    return tuple(MortonKey(key.level + 1, 4 * key.index + c) for c in range(4))


def parent_and_children(key: MortonKey) -> tuple[MortonKey, tuple[MortonKey, ...]]:
    return parent(key), children(key)


@lru_cache(maxsize=1 << 16)
def neighbor_list(key: MortonKey) -> tuple[MortonKey, ...]:
    """Same-level cells sharing an edge or a corner with ``key``, in Morton order."""
    ix, iy = morton_decode(key)
    side = 1 << key.level
    out = []
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            jx, jy = ix + dx, iy + dy
            if 0 <= jx < side and 0 <= jy < side:
                out.append(morton_encode(key.level, jx, jy))
    return tuple(sorted(out))


@lru_cache(maxsize=1 << 16)
def interaction_list(key: MortonKey) -> tuple[MortonKey, ...]:
    """Children of the parent's neighbors that are not adjacent to ``key``.

    Returned in Morton order. Empty for levels 0 and 1.
    """
    if key.level < 2:
        return ()
    near = set(neighbor_list(key))
    out = []
    for pn in neighbor_list(parent(key)):
        for c in children(pn):
            if c not in near and c != key:
                out.append(c)
    return tuple(sorted(out))


@dataclass(frozen=True)
class RootBox:
    center: tuple[float, float]
    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise DomainError("half_width must be positive")

    @property
    def lower(self) -> tuple[float, float]:
        return (self.center[0] - self.half_width, self.center[1] - self.half_width)

    @classmethod
    def bounding(cls, x: np.ndarray, y: np.ndarray) -> RootBox:
        """Tight bounding square, widened so no particle sits on the outer edge."""
        xmin, xmax = float(x.min()), float(x.max())
        ymin, ymax = float(y.min()), float(y.max())
        half = 0.5 * max(xmax - xmin, ymax - ymin)
        half += max(_REL_MARGIN * half, _ABS_MARGIN)
        return cls((0.5 * (xmin + xmax), 0.5 * (ymin + ymax)), half)


@dataclass(frozen=True)
class Cell:
    key: MortonKey
    start: int
    stop: int

    @property
    def particle_range(self) -> range:
        return range(self.start, self.stop)

    @property
    def count(self) -> int:
        return self.stop - self.start


def auto_depth(n: int, s_target: float = DEFAULT_S_TARGET) -> int:
    """``max(2, round(log4(n / s_target)))``, rounding halves up, capped at 16."""
    if n < 1:
        raise DomainError("need at least one particle")
    if s_target <= 0:
        raise DomainError("s_target must be positive")
    d = math.floor(math.log(n / s_target, 4) + 0.5)
    return min(max(2, d), MAX_DEPTH)


class Quadtree:
    """Level-complete quadtree over a set of charged particles.

    Particles are stored sorted (stably) by leaf Morton index; ``order`` maps
    sorted position back to the caller's input index. Every cell, at every
    level, owns a contiguous slice of the sorted arrays. Only non-empty cells
    are materialized, but any key can be queried.
    """

    def __init__(self, z, q, depth, root_box: RootBox):
        self.root_box = root_box
        self.depth = depth
        x0, y0 = root_box.lower
        side = 1 << depth
        h = 2.0 * root_box.half_width / side
        ix = np.clip(np.floor((z.real - x0) / h).astype(np.int64), 0, side - 1)
        iy = np.clip(np.floor((z.imag - y0) / h).astype(np.int64), 0, side - 1)
        leaf = morton_encode_array(ix, iy)
        order = np.argsort(leaf, kind="stable")
        self.order = order
        self.leaf_index = leaf[order]
        self.z = z[order]
        self.q = q[order]
        for arr in (self.order, self.leaf_index, self.z, self.q):
            arr.flags.writeable = False

        self._levels = []
        for level in range(depth + 1):
            keys = self.leaf_index >> (2 * (depth - level))
            idx, starts = np.unique(keys, return_index=True)
            stops = np.append(starts[1:], len(keys))
            self._levels.append((idx, starts, stops))
        self._pair_cache: dict = {}

    @property
    def n_particles(self) -> int:
        return len(self.z)

    def nonempty(self, level: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Morton indices of non-empty cells at ``level`` with their slice bounds."""
        return self._levels[level]

    def particle_range(self, key: MortonKey) -> tuple[int, int]:
        shift = 2 * (self.depth - key.level)
        lo = np.searchsorted(self.leaf_index, key.index << shift, side="left")
        hi = np.searchsorted(self.leaf_index, (key.index + 1) << shift, side="left")
        return int(lo), int(hi)

    def cell(self, key: MortonKey) -> Cell:
        if not (0 <= key.level <= self.depth and 0 <= key.index < 4**key.level):
            raise DomainError(f"{key} is not a cell of a depth-{self.depth} tree")
        return Cell(key, *self.particle_range(key))

    def count(self, key: MortonKey) -> int:
        lo, hi = self.particle_range(key)
        return hi - lo

    def cell_width(self, level: int) -> float:
        return 2.0 * self.root_box.half_width / (1 << level)

    def cell_center(self, key: MortonKey) -> complex:
        ix, iy = morton_decode(key)
        w = self.cell_width(key.level)
        x0, y0 = self.root_box.lower
        return complex(x0 + (ix + 0.5) * w, y0 + (iy + 0.5) * w)

    def cell_centers(self, level: int, indices: np.ndarray) -> np.ndarray:
        ix, iy = morton_decode_array(indices)
        w = self.cell_width(level)
        x0, y0 = self.root_box.lower
        return (x0 + (ix + 0.5) * w) + 1j * (y0 + (iy + 0.5) * w)

    def leaves(self) -> list[Cell]:
        idx, starts, stops = self._levels[self.depth]
        return [Cell(MortonKey(self.depth, int(i)), int(a), int(b))
                for i, a, b in zip(idx, starts, stops)]

    def unsort(self, values: np.ndarray) -> np.ndarray:
        """Scatter per-particle values from tree order back to input order."""
        out = np.empty_like(values)
        out[self.order] = values
        return out


def as_complex_positions(positions) -> np.ndarray:
    """Accept an (N, 2) real array or an (N,) complex array."""
    arr = np.asarray(positions)
    if np.iscomplexobj(arr):
        z = arr.astype(np.complex128).ravel()
    else:
        arr = arr.astype(np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise DomainError("positions must have shape (N, 2) or be complex")
        z = arr[:, 0] + 1j * arr[:, 1]
    return z


def build_tree(positions, strengths=None, depth: int | str = "auto",
               s_target: float = DEFAULT_S_TARGET, root_box: RootBox | None = None) -> Quadtree:
    """Sort particles into a uniform quadtree.

    Parameters
    ----------
    positions : (N, 2) float array or (N,) complex array
    strengths : (N,) real or complex, optional
        Defaults to unit strengths.
    depth : int or "auto"
        Leaf level. ``"auto"`` picks ``max(2, round(log4(N / s_target)))``.
    root_box : RootBox, optional
        Fixed domain instead of the bounding square; must contain every
        particle in its half-open extent.
    """
    z = as_complex_positions(positions)
    n = len(z)
    if n == 0:
        raise DomainError("cannot build a tree over zero particles")
    if not np.all(np.isfinite(z)):
        raise DomainError("particle coordinates must be finite")
    if strengths is None:
        q = np.ones(n, dtype=np.complex128)
    else:
        q = np.asarray(strengths).astype(np.complex128).ravel()
        if len(q) != n:
            raise DomainError("strengths and positions differ in length")
        if not np.all(np.isfinite(q)):
            raise DomainError("strengths must be finite")
    if depth == "auto":
        depth = auto_depth(n, s_target)
    elif isinstance(depth, (int, np.integer)):
        depth = int(depth)
        if not 1 <= depth <= MAX_DEPTH:
            raise DomainError(f"depth must lie in [1, {MAX_DEPTH}]")
    else:
        raise DomainError(f"bad depth {depth!r}")
    if root_box is None:
        root_box = RootBox.bounding(z.real, z.imag)
    else:
        (x0, y0), w = root_box.lower, 2.0 * root_box.half_width
        inside = (z.real >= x0) & (z.real < x0 + w) & (z.imag >= y0) & (z.imag < y0 + w)
        if not np.all(inside):
            raise DomainError("root_box does not contain every particle")
    return Quadtree(z, q, depth, root_box)


def _level_pairs(tree: Quadtree, level: int, far: bool) -> tuple[np.ndarray, np.ndarray]:
    cached = tree._pair_cache.get((level, far))
    if cached is None:
        cached = _enumerate_pairs(tree, level, far)
        for arr in cached:
            arr.flags.writeable = False
        tree._pair_cache[(level, far)] = cached
    return cached


def _enumerate_pairs(tree: Quadtree, level: int, far: bool) -> tuple[np.ndarray, np.ndarray]:
    idx = tree.nonempty(level)[0]
    if level == 0 or (far and level < 2):
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    ix, iy = morton_decode_array(idx)
    side = 1 << level
    span = 3 if far else 1
    rows = np.arange(len(idx))
    tgt, src = [], []
    for dy in range(-span, span + 1):
        for dx in range(-span, span + 1):
            cheb = max(abs(dx), abs(dy))
            if cheb == 0 or (far and cheb < 2):
                continue
            jx, jy = ix + dx, iy + dy
            keep = (jx >= 0) & (jx < side) & (jy >= 0) & (jy < side)
            if far:
                keep &= (np.abs((jx >> 1) - (ix >> 1)) <= 1) & (np.abs((jy >> 1) - (iy >> 1)) <= 1)
            j = morton_encode_array(jx[keep], jy[keep])
            pos = np.searchsorted(idx, j)
            pos_c = np.minimum(pos, len(idx) - 1)
            hit = idx[pos_c] == j
            tgt.append(rows[keep][hit])
            src.append(pos_c[hit])
    tgt = np.concatenate(tgt)
    src = np.concatenate(src)
    order = np.lexsort((src, tgt))
    return tgt[order], src[order]


def interaction_pairs(tree: Quadtree, level: int) -> tuple[np.ndarray, np.ndarray]:
    """All (target, source) pairs of non-empty cells with source in the target's
    interaction list, as row positions into ``tree.nonempty(level)``.

    Sorted by target then source, i.e. Morton order on both.
    """
    return _level_pairs(tree, level, far=True)


def neighbor_pairs(tree: Quadtree, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Like :func:`interaction_pairs` for adjacent (near-field) cells."""
    return _level_pairs(tree, level, far=False)
