"""Group parameters, points and the dilation/reflection maps.

A Heisenberg group H(K, A) is described by block dimensions
``k = (k_1, ..., k_l)`` and frequencies ``0 < a_1 < ... < a_l = 1``.  Heat
kernel and distance depend on a point only through the block moduli
``r_j = |z_j|`` and the vertical coordinate ``t``, so most of the library
works with :class:`RadialPoint`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "GroupSignature",
    "RadialPoint",
    "FullPoint",
    "dilate",
    "reflect_t",
    "reduce_point",
    "signature_preset",
    "PRESETS",
]


@dataclass(frozen=True)
class GroupSignature:
    """Parameters (K, A) of H(K, A).

    Parameters
    ----------
    k : sequence of int
        Complex dimensions of the blocks, all >= 1.
    a : sequence of float
        Strictly increasing frequencies with last entry exactly 1.
    """

    k: tuple
    a: tuple

    def __post_init__(self):
        k = tuple(int(v) for v in self.k)
        a = tuple(float(v) for v in self.a)
        if len(k) == 0 or len(k) != len(a):
            raise DomainError("k and a must be non-empty and of equal length")
        if any(kv < 1 for kv in k):
            raise DomainError(f"block dimensions must be >= 1, got {k}")
        if any(kv != kr for kv, kr in zip(k, self.k)):
            raise DomainError(f"block dimensions must be integers, got {self.k}")
        if not all(math.isfinite(v) for v in a) or a[0] <= 0.0:
            raise DomainError(f"frequencies must be finite and positive, got {a}")
        if any(a[i] >= a[i + 1] for i in range(len(a) - 1)):
            raise DomainError(f"frequencies must be strictly increasing, got {a}")
        if a[-1] != 1.0:
            raise DomainError(f"last frequency must equal 1, got {a[-1]!r}")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "a", a)

    @property
    def l(self) -> int:
        return len(self.k)

    @property
    def n(self) -> int:
        return sum(self.k)

    @property
    def Q(self) -> int:
        return 2 * self.n + 2

    @property
    def isotropic(self) -> bool:
        return self.l == 1

    @property
    def k_arr(self) -> np.ndarray:
        return np.asarray(self.k, dtype=float)

    @property
    def a_arr(self) -> np.ndarray:
        return np.asarray(self.a, dtype=float)

    @property
    def eps0(self) -> float:
        """Small-angle threshold (1/16) min{1, (1 - a_{l-1}) pi / a_{l-1}}."""
        if self.l == 1:
            return 1.0 / 16.0
        al = self.a[-2]
        return min(1.0, (1.0 - al) * math.pi / al) / 16.0

    @classmethod
    def isotropic_group(cls, n: int) -> "GroupSignature":
        return cls((n,), (1.0,))

    @classmethod
    def from_record(cls, rec: dict) -> "GroupSignature":
        """Build from a flat record ``{l, k: [...], a: [...]}``."""
        try:
            k = rec["k"]
            a = rec["a"]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"signature record needs fields k and a: {rec!r}") from exc
        if not isinstance(k, (list, tuple)) or not isinstance(a, (list, tuple)):
            raise DomainError("signature fields k and a must be lists")
        sig = cls(tuple(k), tuple(a))
        if "l" in rec and int(rec["l"]) != sig.l:
            raise DomainError(f"field l={rec['l']} does not match len(k)={sig.l}")
        return sig

    def to_record(self) -> dict:
        return {"l": self.l, "k": list(self.k), "a": list(self.a)}

    def __str__(self):
        if self.isotropic:
            return f"H({self.n},1)"
        return f"H({self.k},{self.a})"


@dataclass(frozen=True)
class RadialPoint:
    """Reduced coordinates ``(r_1, ..., r_l; t)`` with ``r_j = |z_j|``."""

    r: tuple
    t: float

    def __post_init__(self):
        r = tuple(float(v) for v in np.atleast_1d(self.r))
        if any(not math.isfinite(v) or v < 0.0 for v in r):
            raise DomainError(f"block moduli must be finite and >= 0, got {r}")
        t = float(self.t)
        if not math.isfinite(t):
            raise DomainError("t must be finite")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "t", t)

    @property
    def r_arr(self) -> np.ndarray:
        return np.asarray(self.r, dtype=float)

    @property
    def r_total_sq(self) -> float:
        return float(sum(v * v for v in self.r))

    @property
    def r_total(self) -> float:
        return math.sqrt(self.r_total_sq)

    @property
    def is_origin(self) -> bool:
        return self.t == 0.0 and all(v == 0.0 for v in self.r)

    def check(self, sig: GroupSignature) -> "RadialPoint":
        if len(self.r) != sig.l:
            raise DomainError(f"point has {len(self.r)} moduli but {sig} has {sig.l} blocks")
        return self


@dataclass(frozen=True)
class FullPoint:
    """Full coordinates: one real array ``(x, y)`` pair per block and ``t``.

    ``x[j]`` and ``y[j]`` have length ``k_j``.
    """

    x: tuple
    y: tuple
    t: float

    def __post_init__(self):
        x = tuple(np.asarray(v, dtype=float).reshape(-1) for v in self.x)
        y = tuple(np.asarray(v, dtype=float).reshape(-1) for v in self.y)
        if len(x) != len(y) or any(a.shape != b.shape for a, b in zip(x, y)):
            raise DomainError("x and y blocks must have matching shapes")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "t", float(self.t))

    def check(self, sig: GroupSignature) -> "FullPoint":
        if tuple(len(v) for v in self.x) != sig.k:
            raise DomainError(f"block sizes {tuple(len(v) for v in self.x)} do not match {sig.k}")
        return self

    def to_vector(self) -> np.ndarray:
        """Flatten to ``(x_1, y_1, x_2, y_2, ..., t)`` with blocks in order."""
        parts = []
        for xb, yb in zip(self.x, self.y):
            parts.extend([xb, yb])
        parts.append(np.array([self.t]))
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, sig: GroupSignature, v: Sequence[float]) -> "FullPoint":
        v = np.asarray(v, dtype=float)
        xs, ys, pos = [], [], 0
        for kj in sig.k:
            xs.append(v[pos:pos + kj])
            ys.append(v[pos + kj:pos + 2 * kj])
            pos += 2 * kj
        return cls(tuple(xs), tuple(ys), float(v[pos]))


def reduce_point(fp: FullPoint) -> RadialPoint:
    """Block moduli of a full point."""
    r = tuple(float(np.sqrt(np.sum(xb**2) + np.sum(yb**2))) for xb, yb in zip(fp.x, fp.y))
    return RadialPoint(r, fp.t)


def dilate(p, rho: float):
    """Apply the dilation ``(z, t) -> (rho z, rho^2 t)``.

    Works for both radial and full points.
    """
    rho = float(rho)
    if not (rho > 0.0) or not math.isfinite(rho):
        raise DomainError(f"dilation factor must be positive, got {rho}")
    if isinstance(p, FullPoint):
        return FullPoint(tuple(rho * v for v in p.x), tuple(rho * v for v in p.y), rho * rho * p.t)
    return RadialPoint(tuple(rho * v for v in p.r), rho * rho * p.t)


def reflect_t(p):
    """Negate the vertical coordinate."""
    if isinstance(p, FullPoint):
        return FullPoint(p.x, p.y, -p.t)
    return RadialPoint(p.r, -p.t)


PRESETS = {
    "h11": ((1,), (1.0,)),
    "h21": ((2,), (1.0,)),
    "h31": ((3,), (1.0,)),
    "h5": ((1, 1), (0.5, 1.0)),
    "h7": ((1, 2), (0.5, 1.0)),
}


def signature_preset(name: str) -> GroupSignature:
    """Named signatures used by the CLI and the test-suite."""
    try:
        k, a = PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown signature preset {name!r}; known: {sorted(PRESETS)}") from None
    return GroupSignature(k, a)
