"""FMM driver and the direct-summation reference it is checked against."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .expansions import (
    check_mode,
    check_order,
    eval_local_coeffs,
    l2l_coeffs,
    m2l_coeffs,
    m2m_coeffs,
    p2m_coeffs,
    p2p_direct,
)
from .quadtree import Quadtree, interaction_pairs, morton_decode_array, neighbor_pairs


@dataclass
class FMMState:
    """Per-level expansion coefficients for the non-empty cells of a tree.

    ``multipole[l]`` and ``local[l]`` are ``(n_l, p + 1)`` arrays whose rows
    follow ``tree.nonempty(l)``. Levels below 2 are never populated.
    """

    tree: Quadtree
    p: int
    multipole: list
    local: list
    centers: list


def _parent_rows(tree: Quadtree, level: int) -> np.ndarray:
    """Row of each non-empty level-``level`` cell's parent in level ``level - 1``."""
    idx = tree.nonempty(level)[0]
    pidx = tree.nonempty(level - 1)[0]
    return np.searchsorted(pidx, idx >> 2)


def upward_pass(tree: Quadtree, p: int) -> FMMState:
    L = tree.depth
    centers = [tree.cell_centers(l, tree.nonempty(l)[0]) for l in range(L + 1)]
    multipole = [None] * (L + 1)
    local = [None] * (L + 1)
    if L < 2:
        return FMMState(tree, p, multipole, local, centers)

    idx, starts, stops = tree.nonempty(L)
    a = np.empty((len(idx), p + 1), dtype=np.complex128)
    for row, (s, e) in enumerate(zip(starts, stops)):
        a[row] = p2m_coeffs(tree.z[s:e], tree.q[s:e], centers[L][row], p)
    multipole[L] = a

    for level in range(L - 1, 1, -1):
        child = multipole[level + 1]
        prow = _parent_rows(tree, level + 1)
        a = np.zeros((len(centers[level]), p + 1), dtype=np.complex128)
        # children of one parent are adjacent rows, visited in Morton order
        for crow, pr in enumerate(prow):
            a[pr] += m2m_coeffs(child[crow], centers[level][pr] - centers[level + 1][crow])
        multipole[level] = a
    return FMMState(tree, p, multipole, local, centers)


def _m2l_sequential(state: FMMState, level: int) -> np.ndarray:
    centers = state.centers[level]
    a = state.multipole[level]
    b = np.zeros_like(a)
    tgt, src = interaction_pairs(state.tree, level)
    for t, s in zip(tgt.tolist(), src.tolist()):
        b[t] += m2l_coeffs(a[s], centers[t] - centers[s])
    return b


def _m2l_batched(state: FMMState, level: int) -> np.ndarray:
    # Group pairs by integer cell offset; each group shares one M2L matrix.
    tree, p = state.tree, state.p
    a = state.multipole[level]
    b = np.zeros_like(a)
    tgt, src = interaction_pairs(tree, level)
    if len(tgt) == 0:
        return b
    idx = tree.nonempty(level)[0]
    ix, iy = morton_decode_array(idx)
    dx = ix[tgt] - ix[src]
    dy = iy[tgt] - iy[src]
    code = (dx + 3) * 7 + (dy + 3)
    width = tree.cell_width(level)
    eye = np.eye(p + 1, dtype=np.complex128)
    for c in np.unique(code):
        sel = code == c
        shift = complex((c // 7 - 3) * width, (c % 7 - 3) * width)
        K = np.stack([m2l_coeffs(eye[k], shift) for k in range(p + 1)], axis=1)
        np.add.at(b, tgt[sel], a[src[sel]] @ K.T)
    return b


def translation_and_downward_pass(state: FMMState, reproducible: bool = True) -> None:
    tree, L = state.tree, state.tree.depth
    m2l = _m2l_sequential if reproducible else _m2l_batched
    for level in range(2, L + 1):
        b = m2l(state, level)
        if level > 2:
            parent_b = state.local[level - 1]
            prow = _parent_rows(tree, level)
            pc = state.centers[level - 1]
            cc = state.centers[level]
            for crow, pr in enumerate(prow):
                b[crow] += l2l_coeffs(parent_b[pr], cc[crow] - pc[pr])
        state.local[level] = b


def near_and_local_pass(state: FMMState, mode: str) -> np.ndarray:
    """Local-expansion evaluation plus direct near-field sums, in tree order."""
    tree, L = state.tree, state.tree.depth
    idx, starts, stops = tree.nonempty(L)
    out = np.zeros(tree.n_particles, dtype=np.complex128)
    tgt, src = neighbor_pairs(tree, L)
    nb_start = np.searchsorted(tgt, np.arange(len(idx) + 1))
    local = state.local[L]
    for row in range(len(idx)):
        s, e = starts[row], stops[row]
        zt = tree.z[s:e]
        far = (eval_local_coeffs(local[row], state.centers[L][row], zt, mode)
               if local is not None else 0.0)
        rows = np.sort(np.append(src[nb_start[row]:nb_start[row + 1]], row))
        sz = np.concatenate([tree.z[starts[r]:stops[r]] for r in rows])
        sq = np.concatenate([tree.q[starts[r]:stops[r]] for r in rows])
        out[s:e] = far + p2p_direct(zt, sz, sq, mode)
    return out


def fmm_solve(tree: Quadtree, p: int = 12, mode: str = "potential",
              reproducible: bool = True) -> np.ndarray:
    """Evaluate all pairwise interactions of the tree's particles by the FMM.

    Returns one complex value per particle, in the caller's original input
    order. In ``"potential"`` mode only the real part is physically
    meaningful (the imaginary part depends on log branch cuts).

    With ``reproducible=False`` the far-field conversion is batched by cell
    offset, which is faster but reassociates floating-point sums.
    """
    p = check_order(p)
    mode = check_mode(mode)
    state = upward_pass(tree, p)
    translation_and_downward_pass(state, reproducible)
    return tree.unsort(near_and_local_pass(state, mode))


def direct_solve(z, q, mode: str = "potential") -> np.ndarray:
    """O(N^2) sum over all distinct pairs; coincident pairs contribute nothing."""
    mode = check_mode(mode)
    z = np.asarray(z, dtype=np.complex128).ravel()
    return p2p_direct(z, z, q, mode)


@dataclass(frozen=True)
class ErrorReport:
    max_abs: float
    max_rel: float
    rms_rel: float

    def as_dict(self) -> dict:
        return {"max_abs": self.max_abs, "max_rel": self.max_rel, "rms_rel": self.rms_rel}


def error_report(approx, exact) -> ErrorReport:
    """Error of ``approx`` against ``exact``, normalized by ``max |exact|``.

    Pass real parts when comparing potentials.
    """
    approx = np.asarray(approx)
    exact = np.asarray(exact)
    if approx.shape != exact.shape:
        raise DomainError(f"length mismatch: {approx.shape} vs {exact.shape}")
    if approx.size == 0:
        return ErrorReport(0.0, 0.0, 0.0)
    diff = np.abs(approx - exact)
    max_abs = float(diff.max())
    rms = float(np.sqrt(np.mean(diff**2)))
    scale = float(np.abs(exact).max())
    if scale == 0.0:
        rel = 0.0 if max_abs == 0.0 else float("inf")
        rms_rel = 0.0 if rms == 0.0 else float("inf")
        return ErrorReport(max_abs, rel, rms_rel)
    return ErrorReport(max_abs, max_abs / scale, rms / scale)
