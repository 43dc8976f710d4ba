"""Series expansions for the 2D logarithmic kernel in complex form.

Conventions
-----------
A set of charges ``q_j`` at ``z_j`` induces the complex potential
``phi(z) = sum_j q_j log(z - z_j)``; the physical potential is ``Re phi`` and
the field is ``w(z) = dphi/dz = sum_j q_j / (z - z_j)``.

Multipole about ``zM`` (valid outside the source disk)::

    phi(z) ~ a_0 log(z - zM) + sum_{k=1..p} a_k (z - zM)^-k
    a_0 = sum q_j,   a_k = -sum q_j (z_j - zM)^k / k

Local about ``zL`` (valid inside the target disk)::

    phi(z) ~ sum_{l=0..p} b_l (z - zL)^l

Translations (``d`` always points from the old center to the new one,
``d = new - old``):

* M2M: ``b_0 = a_0``;
  ``b_l = -a_0 (-d)^l / l + sum_{k=1..l} a_k (-d)^(l-k) C(l-1, k-1)``
* M2L with ``d = zL - zM``: ``b_0 = a_0 log(d) + sum_k a_k d^-k``;
  ``b_l = (-d)^-l [-a_0 / l + sum_k a_k d^-k C(l+k-1, k-1)]``
* L2L: ``c_l = sum_{k>=l} b_k C(k, l) d^(k-l)`` (exact).

The principal branch of ``log`` is used throughout. Only ``Re phi`` and ``w``
are branch independent, so accuracy statements refer to those.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .errors import DomainError

MAX_ORDER = 40

Mode = Literal["potential", "field"]


def check_order(p) -> int:
    if not isinstance(p, (int, np.integer)) or isinstance(p, bool):
        raise DomainError(f"order must be an integer, got {p!r}")
    if not 0 <= p <= MAX_ORDER:
        raise DomainError(f"order {p} outside [0, {MAX_ORDER}]")
    return int(p)


def check_mode(mode: str) -> str:
    if mode not in ("potential", "field"):
        raise DomainError(f"mode must be 'potential' or 'field', got {mode!r}")
    return mode


@lru_cache(maxsize=None)
def binomial_table(n: int) -> np.ndarray:
    """``C(i, j)`` for ``0 <= i, j <= n`` as float64 (zero above the diagonal)."""
    table = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        for j in range(i + 1):
            table[i, j] = float(math.comb(i, j))
    table.flags.writeable = False
    return table


@lru_cache(maxsize=None)
def _m2m_matrix(p: int) -> np.ndarray:
    # M[l, k] = C(l-1, k-1) for 1 <= k <= l <= p
    C = binomial_table(2 * p + 1)
    M = np.zeros((p + 1, p + 1))
    for l in range(1, p + 1):
        for k in range(1, l + 1):
            M[l, k] = C[l - 1, k - 1]
    M.flags.writeable = False
    return M


@lru_cache(maxsize=None)
def _m2l_matrix(p: int) -> np.ndarray:
    # M[l-1, k-1] = C(l+k-1, k-1) for l, k in 1..p
    C = binomial_table(2 * p + 1)
    M = np.zeros((p, p))
    for l in range(1, p + 1):
        for k in range(1, p + 1):
            M[l - 1, k - 1] = C[l + k - 1, k - 1]
    M.flags.writeable = False
    return M


@lru_cache(maxsize=None)
def _inv_l(p: int) -> np.ndarray:
    v = 1.0 / np.arange(1, p + 1, dtype=np.float64)
    v.flags.writeable = False
    return v


@lru_cache(maxsize=None)
def _gap_index(p: int) -> tuple[np.ndarray, np.ndarray]:
    # gap[l, k] = l - k clipped at 0; mask selects k <= l
    l, k = np.indices((p + 1, p + 1))
    gap = np.clip(l - k, 0, None)
    mask = (k <= l).astype(np.float64)
    gap.flags.writeable = False
    mask.flags.writeable = False
    return gap, mask


def _powers(x: complex, p: int) -> np.ndarray:
    """``[1, x, x^2, ..., x^p]`` by repeated multiplication."""
    out = np.empty(p + 1, dtype=np.complex128)
    out[0] = 1.0
    if p:
        out[1:] = x
        np.cumprod(out[1:], out=out[1:])
    return out


# Coefficient-level kernels. The evaluator calls these directly to avoid
# wrapping every intermediate in an Expansion.

def p2m_coeffs(z: np.ndarray, q: np.ndarray, center: complex, p: int) -> np.ndarray:
    a = np.empty(p + 1, dtype=np.complex128)
    a[0] = q.sum()
    if p:
        d = z - center
        pw = np.repeat(d[:, None], p, axis=1)
        np.cumprod(pw, axis=1, out=pw)
        a[1:] = -(q @ pw) * _inv_l(p)
    return a


def m2m_coeffs(a: np.ndarray, shift: complex) -> np.ndarray:
    """Re-center a multipole by ``shift = new_center - old_center``."""
    p = len(a) - 1
    t = -shift
    if p == 0 or t == 0:
        return a.copy()
    tp = _powers(t, p)
    gap, mask = _gap_index(p)
    b = np.empty_like(a)
    b[0] = a[0]
    # lower triangle: a_k t^(l-k) C(l-1, k-1)
    b[1:] = -a[0] * tp[1:] * _inv_l(p) + ((_m2m_matrix(p) * tp[gap] * mask) @ a)[1:]
    return b


def m2l_coeffs(a: np.ndarray, shift: complex) -> np.ndarray:
    """Convert a multipole to a local expansion; ``shift = local - multipole``."""
    p = len(a) - 1
    if shift == 0:
        raise DomainError("multipole and local centers coincide")
    inv = 1.0 / shift
    ip = _powers(inv, p)
    b = np.empty_like(a)
    s = a[1:] * ip[1:]
    b[0] = a[0] * np.log(shift) + s.sum()
    if p:
        sign = np.where(np.arange(1, p + 1) % 2 == 0, 1.0, -1.0)
        b[1:] = sign * ip[1:] * (-a[0] * _inv_l(p) + _m2l_matrix(p) @ s)
    return b


def l2l_coeffs(b: np.ndarray, shift: complex) -> np.ndarray:
    """Re-center a local expansion by ``shift = new_center - old_center``."""
    p = len(b) - 1
    if p == 0 or shift == 0:
        return b.copy()
    tp = _powers(shift, p)
    gap, mask = _gap_index(p)
    # upper triangle: c_l = sum_k C(k, l) shift^(k-l) b_k
    T = binomial_table(p).T * tp[gap.T] * mask.T
    return T @ b


def eval_multipole_coeffs(a: np.ndarray, center: complex, z, mode: str):
    u = np.asarray(z, dtype=np.complex128) - center
    if np.any(u == 0):
        raise DomainError("cannot evaluate a multipole at its center")
    p = len(a) - 1
    inv = 1.0 / u
    if mode == "potential":
        acc = np.zeros_like(inv)
        for k in range(p, 0, -1):
            acc = (acc + a[k]) * inv
        return a[0] * np.log(u) + acc
    # d/dz: a_0 / u - sum k a_k u^(-k-1)
    acc = np.zeros_like(inv)
    for k in range(p, 0, -1):
        acc = (acc - k * a[k]) * inv
    return (a[0] + acc) * inv


def eval_local_coeffs(b: np.ndarray, center: complex, z, mode: str):
    w = np.asarray(z, dtype=np.complex128) - center
    p = len(b) - 1
    if mode == "potential":
        acc = np.full_like(w, b[p])
        for l in range(p - 1, -1, -1):
            acc = acc * w + b[l]
        return acc
    if p == 0:
        return np.zeros_like(w)
    acc = np.full_like(w, p * b[p])
    for l in range(p - 1, 0, -1):
        acc = acc * w + l * b[l]
    return acc


@dataclass(frozen=True)
class Expansion:
    """Truncated multipole or local series: ``kind``, ``center``, ``p + 1`` coefficients."""

    kind: Literal["multipole", "local"]
    center: complex
    coeffs: np.ndarray

    def __post_init__(self):
        if self.kind not in ("multipole", "local"):
            raise DomainError(f"unknown expansion kind {self.kind!r}")
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or len(c) < 1:
            raise DomainError("coefficients must be a non-empty vector")
        check_order(len(c) - 1)
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "center", complex(self.center))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1


def _require(e: Expansion, kind: str) -> None:
    if e.kind != kind:
        raise DomainError(f"expected a {kind} expansion, got {e.kind}")


def p2m(z, q, center: complex, p: int) -> Expansion:
    """Multipole expansion of charges ``q`` at positions ``z`` about ``center``."""
    p = check_order(p)
    z = np.asarray(z, dtype=np.complex128).ravel()
    q = np.asarray(q, dtype=np.complex128).ravel()
    if len(z) != len(q):
        raise DomainError("positions and strengths differ in length")
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(q))):
        raise DomainError("charges must be finite")
    return Expansion("multipole", center, p2m_coeffs(z, q, complex(center), p))


def m2m(src: Expansion, new_center: complex) -> Expansion:
    _require(src, "multipole")
    return Expansion("multipole", new_center,
                     m2m_coeffs(src.coeffs, complex(new_center) - src.center))


def m2l(src: Expansion, local_center: complex) -> Expansion:
    """Far-field conversion. Well-separatedness is the caller's responsibility."""
    _require(src, "multipole")
    return Expansion("local", local_center,
                     m2l_coeffs(src.coeffs, complex(local_center) - src.center))


def l2l(src: Expansion, new_center: complex) -> Expansion:
    _require(src, "local")
    return Expansion("local", new_center,
                     l2l_coeffs(src.coeffs, complex(new_center) - src.center))


def evaluate_multipole(e: Expansion, z, mode: Mode = "potential"):
    _require(e, "multipole")
    out = eval_multipole_coeffs(e.coeffs, e.center, z, check_mode(mode))
    return out[()] if np.ndim(z) == 0 else out


def evaluate_local(e: Expansion, z, mode: Mode = "potential"):
    _require(e, "local")
    out = eval_local_coeffs(e.coeffs, e.center, z, check_mode(mode))
    return out[()] if np.ndim(z) == 0 else out


def p2p_direct(target_z, source_z, source_q, mode: Mode = "potential",
               chunk: int = 256) -> np.ndarray:
    """Sum every source onto every target, skipping coincident pairs.

    Rows are processed in blocks of ``chunk`` targets to bound memory.
    """
    check_mode(mode)
    tz = np.atleast_1d(np.asarray(target_z, dtype=np.complex128))
    sz = np.atleast_1d(np.asarray(source_z, dtype=np.complex128))
    sq = np.atleast_1d(np.asarray(source_q, dtype=np.complex128))
    if len(sz) != len(sq):
        raise DomainError("source positions and strengths differ in length")
    out = np.zeros(len(tz), dtype=np.complex128)
    if len(sz) == 0:
        return out
    for lo in range(0, len(tz), chunk):
        d = tz[lo:lo + chunk, None] - sz[None, :]
        same = d == 0
        d[same] = 1.0
        if mode == "potential":
            # principal log, split by hand: numpy's complex log is much slower
            k = np.log(np.abs(d)) + 1j * np.angle(d)
        else:
            k = 1.0 / d
        k[same] = 0.0
        out[lo:lo + chunk] = k @ sq
    return out
