"""Bulk-synchronous timeline prediction for a partitioned FMM evaluation.

Every rank computes its balanced work plus the replicated coarse-level
work, then exchanges data; there is no overlap of the two phases. Message
time is ``latency * messages + bytes / bandwidth`` summed over everything a
rank sends and receives.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import DomainError
from .partition import (
    LoadModel,
    ObjectiveWeights,
    Partition,
    initial_partition,
    refine_partition,
)

SWEEP_COLUMNS = ("P", "makespan_s", "compute_max_s", "comm_max_s", "speedup",
                 "efficiency", "imbalance", "comm_bytes_total")


@dataclass(frozen=True)
class MachineModel:
    flop_rate: float = 1e9
    latency: float = 1e-6
    bandwidth: float = 1e9

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{f.name} must be positive and finite, got {v!r}")

    @classmethod
    def from_dict(cls, d: dict) -> MachineModel:
        names = {f.name for f in fields(cls)}
        return cls(**{k: float(v) for k, v in d.items() if k in names})

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Timeline:
    compute_time: np.ndarray
    comm_time: np.ndarray
    serial_time: float
    comm_bytes_total: int

    @property
    def ranks(self) -> int:
        return len(self.compute_time)

    @property
    def total_time(self) -> np.ndarray:
        return self.compute_time + self.comm_time

    @property
    def makespan(self) -> float:
        return float(self.total_time.max())

    @property
    def speedup(self) -> float:
        return self.serial_time / self.makespan

    @property
    def efficiency(self) -> float:
        return self.speedup / self.ranks

    @property
    def imbalance(self) -> float:
        return self.makespan / float(self.total_time.mean())

    def record(self) -> dict:
        return {
            "P": self.ranks,
            "makespan_s": self.makespan,
            "compute_max_s": float(self.compute_time.max()),
            "comm_max_s": float(self.comm_time.max()),
            "speedup": self.speedup,
            "efficiency": self.efficiency,
            "imbalance": self.imbalance,
            "comm_bytes_total": self.comm_bytes_total,
        }


def simulate(model: LoadModel, partition: Partition,
             machine: MachineModel = MachineModel()) -> Timeline:
    P = partition.ranks
    a = partition.as_array()
    work = model.rank_work(a, P) + model.coarse_work
    compute = work / machine.flop_rate
    comm = model.comm(a, P)
    msgs = comm.message_count + comm.message_count.T
    nbytes = comm.bytes + comm.bytes.T
    comm_time = (machine.latency * msgs.sum(axis=1) + nbytes.sum(axis=1) / machine.bandwidth)
    serial = model.total_work / machine.flop_rate
    return Timeline(compute, comm_time.astype(np.float64), serial, comm.total_bytes)


@dataclass(frozen=True)
class SweepRecord:
    ranks: int
    timeline: Timeline
    initial_timeline: Timeline
    partition: Partition
    initial: Partition


def sweep(model: LoadModel, ranks: list[int],
          weights: ObjectiveWeights = ObjectiveWeights(),
          machine: MachineModel = MachineModel(), max_iters: int = 1000) -> list[SweepRecord]:
    """Initial cut, refinement and simulation for each rank count.

    Speedups are relative to the single-rank run of the same model.
    """
    if not ranks:
        raise DomainError("ranks list is empty")
    if any(P < 1 for P in ranks):
        raise DomainError("rank counts must be >= 1")
    out = []
    for P in ranks:
        init = initial_partition(model, P)
        ref = refine_partition(model, init, weights, max_iters)
        out.append(SweepRecord(P, simulate(model, ref, machine),
                               simulate(model, init, machine), ref, init))
    return out


def sweep_csv(records: list[SweepRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for rec in records:
        row = rec.timeline.record()
        w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c]
                    for c in SWEEP_COLUMNS])
    return buf.getvalue()
