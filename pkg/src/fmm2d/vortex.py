"""Point-vortex dynamics with Biot-Savart velocities from the FMM or direct sums.

For vortices of circulation ``G_j`` at ``z_j`` the conjugate velocity is

    u - i v = sum_{j != i} G_j / (2 pi i (z_i - z_j))

which is the field of charges ``q_j = G_j / (2 pi i)``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .evaluator import direct_solve, fmm_solve
from .quadtree import DEFAULT_S_TARGET, build_tree


@dataclass(frozen=True)
class Backend:
    """``kind`` is ``"direct"`` or ``"fmm"``; ``p`` and ``depth`` apply to the FMM."""

    kind: str = "direct"
    p: int = 12
    depth: int | str = "auto"
    s_target: float = DEFAULT_S_TARGET
    reproducible: bool = True

    def __post_init__(self):
        if self.kind not in ("direct", "fmm"):
            raise DomainError(f"unknown backend {self.kind!r}")


DIRECT = Backend("direct")


@dataclass(frozen=True)
class Vortices:
    positions: np.ndarray  # (N, 2)
    gamma: np.ndarray      # (N,)

    def __post_init__(self):
        x = np.array(self.positions, dtype=np.float64)
        g = np.array(self.gamma, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != 2 or g.shape != (x.shape[0],):
            raise DomainError("positions must be (N, 2) and gamma (N,)")
        if len(g) == 0:
            raise DomainError("need at least one vortex")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(g))):
            raise DomainError("vortex data must be finite")
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "gamma", g)

    def __len__(self) -> int:
        return len(self.gamma)

    @property
    def z(self) -> np.ndarray:
        return self.positions[:, 0] + 1j * self.positions[:, 1]


def velocities(vortices: Vortices, backend: Backend = DIRECT) -> np.ndarray:
    """(N, 2) array of induced velocities ``(u, v)``."""
    q = vortices.gamma / (2j * np.pi)
    z = vortices.z
    if backend.kind == "direct":
        w = direct_solve(z, q, "field")
    else:
        tree = build_tree(z, q, backend.depth, backend.s_target)
        w = fmm_solve(tree, backend.p, "field", backend.reproducible)
    return np.column_stack([w.real, -w.imag])


def step(vortices: Vortices, dt: float, backend: Backend = DIRECT,
         vel: np.ndarray | None = None) -> Vortices:
    """One forward-Euler convection step. Circulations are left untouched.

    ``vel`` may carry velocities already computed for this state.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    if vel is None:
        vel = velocities(vortices, backend)
    return replace(vortices, positions=vortices.positions + dt * vel)


def total_circulation(vortices: Vortices) -> float:
    return float(vortices.gamma.sum())


def linear_impulse(vortices: Vortices) -> np.ndarray:
    """``(sum G x, sum G y)``."""
    return vortices.gamma @ vortices.positions
