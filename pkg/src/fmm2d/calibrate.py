"""Fit cost-model constants to measured operator timings.

Each operator class is run over a real tree exactly as the evaluator would
run it, timed in isolation, and divided by its unit count from the cost
model (the work estimate with all constants set to 1). Multiplying by the
machine flop rate expresses the result in the model's flop units.
"""
from __future__ import annotations

import time

import numpy as np

from .costmodel import CostParams, estimate_work
from .evaluator import _parent_rows, upward_pass, translation_and_downward_pass
from .expansions import (
    eval_local_coeffs,
    l2l_coeffs,
    m2l_coeffs,
    m2m_coeffs,
    p2m_coeffs,
    p2p_direct,
)
from .parsim import MachineModel
from .quadtree import Quadtree, interaction_pairs, neighbor_pairs


def measure_seconds(tree: Quadtree, p: int, mode: str = "potential") -> dict[str, float]:
    """Wall-clock seconds spent in each operator class for one evaluation."""
    L = tree.depth
    clock = time.perf_counter
    state = upward_pass(tree, p)
    translation_and_downward_pass(state)
    out = dict.fromkeys(("p2m", "m2m", "m2l", "l2l", "l2p", "p2p"), 0.0)
    idx, starts, stops = tree.nonempty(L)
    cen = state.centers

    t0 = clock()
    for row, (s, e) in enumerate(zip(starts, stops)):
        p2m_coeffs(tree.z[s:e], tree.q[s:e], cen[L][row], p)
    out["p2m"] = clock() - t0

    for level in range(2, L + 1):
        a = state.multipole[level]
        tgt, src = interaction_pairs(tree, level)
        t0 = clock()
        for t, s in zip(tgt.tolist(), src.tolist()):
            m2l_coeffs(a[s], cen[level][t] - cen[level][s])
        out["m2l"] += clock() - t0
        if level > 2:
            prow = _parent_rows(tree, level)
            t0 = clock()
            for crow, pr in enumerate(prow):
                m2m_coeffs(a[crow], cen[level - 1][pr] - cen[level][crow])
            out["m2m"] += clock() - t0
            b = state.local[level - 1]
            t0 = clock()
            for crow, pr in enumerate(prow):
                l2l_coeffs(b[pr], cen[level][crow] - cen[level - 1][pr])
            out["l2l"] += clock() - t0

    if L >= 2:
        t0 = clock()
        for row, (s, e) in enumerate(zip(starts, stops)):
            eval_local_coeffs(state.local[L][row], cen[L][row], tree.z[s:e], mode)
        out["l2p"] = clock() - t0

    tgt, src = neighbor_pairs(tree, L)
    nb_start = np.searchsorted(tgt, np.arange(len(idx) + 1))
    t0 = clock()
    for row in range(len(idx)):
        rows = np.sort(np.append(src[nb_start[row]:nb_start[row + 1]], row))
        sz = np.concatenate([tree.z[starts[r]:stops[r]] for r in rows])
        sq = np.concatenate([tree.q[starts[r]:stops[r]] for r in rows])
        p2p_direct(tree.z[starts[row]:stops[row]], sz, sq, mode)
    out["p2p"] = clock() - t0
    return out


def calibrate(tree: Quadtree, p: int, machine: MachineModel = MachineModel(),
              mode: str = "potential", repeats: int = 3) -> tuple[CostParams, dict]:
    """Return fitted ``CostParams`` and the raw per-class measurements.

    The fastest of ``repeats`` timings is used for each class. Classes that
    never ran on this tree keep the default constant of 1.
    """
    units = estimate_work(tree, p, CostParams())
    best = None
    for _ in range(max(1, repeats)):
        sec = measure_seconds(tree, p, mode)
        best = sec if best is None else {k: min(best[k], sec[k]) for k in sec}
    fitted, raw = {}, {}
    for name, seconds in best.items():
        count = units.component_total(name)
        raw[name] = {"seconds": seconds, "units": count}
        if count > 0 and seconds > 0:
            fitted[f"c_{name}"] = seconds / count * machine.flop_rate
    return CostParams.from_dict(fitted), raw
