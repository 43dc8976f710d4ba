"""Deterministic particle sets driven by splitmix64.

splitmix64, for a 64-bit state ``s``::

    s = s + 0x9E3779B97F4A7C15                  (mod 2**64)
    z = s
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9    (mod 2**64)
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB    (mod 2**64)
    out = z ^ (z >> 31)

The seed is the initial state. Output ``u`` maps to ``u / 2**64``. Since the
i-th state is ``seed + i * gamma``, the stream is computed in one vectorized
shot.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1

N_BLOBS = 8
BLOB_SIGMA = 0.02


def splitmix64_scalar(state: int) -> tuple[int, int]:
    """One step; returns ``(new_state, output)``. Reference for the vector form."""
    state = (state + GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return state, z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        if not 0 <= seed <= MASK64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        self.state = seed

    def next_u64(self, n: int) -> np.ndarray:
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
        self.state = (self.state + n * GAMMA) & MASK64
        return z ^ (z >> np.uint64(31))

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles ``u / 2**64``."""
        return self.next_u64(n).astype(np.float64) * 2.0**-64


def uniform_particles(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """``n`` points in the unit square with unit strengths.

    Draws are consumed as x0, y0, x1, y1, ...
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    u = SplitMix64(seed).uniform(2 * n)
    return u.reshape(n, 2), np.ones(n)


def clustered_particles(n: int, seed: int, blobs: int = N_BLOBS,
                        sigma: float = BLOB_SIGMA) -> tuple[np.ndarray, np.ndarray]:
    """``n`` points in ``blobs`` Gaussian clusters with unit strengths.

    Centers take the first ``2 * blobs`` draws, uniform in ``[0.1, 0.9]^2``.
    Particle ``i`` joins blob ``i % blobs``; its offset uses Box-Muller on the
    next two draws ``(u1, u2)``: radius ``sigma * sqrt(-2 ln(1 - u1))``,
    angle ``2 pi u2``.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = SplitMix64(seed)
    centers = 0.1 + 0.8 * rng.uniform(2 * blobs).reshape(blobs, 2)
    u = rng.uniform(2 * n).reshape(n, 2)
    # u/2**64 can round up to exactly 1.0
    r = sigma * np.sqrt(-2.0 * np.log1p(-np.minimum(u[:, 0], 1.0 - 2.0**-53)))
    theta = 2.0 * np.pi * u[:, 1]
    c = centers[np.arange(n) % blobs]
    pts = np.column_stack([c[:, 0] + r * np.cos(theta), c[:, 1] + r * np.sin(theta)])
    return pts, np.ones(n)


def generate(dist: str, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if dist == "uniform":
        return uniform_particles(n, seed)
    if dist == "cluster":
        return clustered_particles(n, seed)
    raise DomainError(f"unknown distribution {dist!r}")
