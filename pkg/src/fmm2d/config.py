"""Run configuration shared by the command-line front end."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

from .costmodel import CostParams
from .errors import DomainError
from .expansions import check_order
from .generate import MASK64
from .parsim import MachineModel
from .partition import DEFAULT_K, DEFAULT_LAMBDA
from .quadtree import DEFAULT_S_TARGET, MAX_DEPTH

_COST_KEYS = {f.name for f in fields(CostParams)}
_MACHINE_KEYS = {f.name for f in fields(MachineModel)}


@dataclass(frozen=True)
class RunConfig:
    p: int = 12
    depth: int | str = "auto"
    s_target: float = DEFAULT_S_TARGET
    ranks: int = 1
    lam: float = DEFAULT_LAMBDA
    k: int = DEFAULT_K
    seed: int = 0
    mode: str = "potential"
    max_iters: int = 1000
    reproducible: bool = True
    cost: CostParams = field(default_factory=CostParams)
    machine: MachineModel = field(default_factory=MachineModel)

    def __post_init__(self):
        check_order(self.p)
        if self.depth != "auto" and not (isinstance(self.depth, int) and 1 <= self.depth <= MAX_DEPTH):
            raise DomainError(f"depth must be 'auto' or an integer in [1, {MAX_DEPTH}]")
        if not self.s_target > 0:
            raise DomainError("s_target must be positive")
        if self.ranks < 1:
            raise DomainError("ranks must be >= 1")
        if not self.lam >= 0:
            raise DomainError("lambda must be >= 0")
        if self.k < 2:
            raise DomainError("granularity level k must be >= 2")
        if not 0 <= self.seed <= MASK64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.mode not in ("potential", "field"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.max_iters < 0:
            raise DomainError("max_iters must be >= 0")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["cost"] = self.cost.as_dict()
        d["machine"] = self.machine.as_dict()
        return d

    def updated(self, values: dict) -> RunConfig:
        """Overlay ``values``; cost and machine keys may be flat or nested."""
        values = dict(values)
        cost = self.cost.as_dict()
        machine = self.machine.as_dict()
        cost.update(values.pop("cost", {}) or {})
        machine.update(values.pop("machine", {}) or {})
        for key in list(values):
            if key in _COST_KEYS:
                cost[key] = values.pop(key)
            elif key in _MACHINE_KEYS:
                machine[key] = values.pop(key)
        if "lambda" in values:
            values["lam"] = values.pop("lambda")
        known = {f.name for f in fields(self)}
        unknown = set(values) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return replace(self, **values, cost=CostParams.from_dict(cost),
                       machine=MachineModel.from_dict(machine))


def load_json(path) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise DomainError(f"{path} must hold a JSON object")
    return data
