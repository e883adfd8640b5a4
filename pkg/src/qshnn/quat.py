"""Quaternion algebra on (s, x, y, z) arrays.

All functions broadcast over leading axes, so a batch of quaternions is just
an array of shape ``(..., 4)``.  :class:`Quaternion` is a thin immutable
wrapper for single values and interoperates with every function here through
``__array__``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Quaternion",
    "quat_mul",
    "left_mult_matrix",
    "right_mult_matrix",
    "conj",
    "norm",
    "inverse",
    "rotate",
    "ghr_derivative",
    "BASIS",
    "BASIS_MATRICES",
]


def _as_quat(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape[-1:] != (4,):
        raise ValueError(f"expected trailing dimension 4, got shape {q.shape}")
    return q


def quat_mul(a, b) -> np.ndarray:
    """Hamilton product ``a ∘ b``."""
    a = _as_quat(a)
    b = _as_quat(b)
    s1, x1, y1, z1 = np.moveaxis(a, -1, 0)
    s2, x2, y2, z2 = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            s1 * s2 - x1 * x2 - y1 * y2 - z1 * z2,
            s1 * x2 + s2 * x1 + y1 * z2 - y2 * z1,
            s1 * y2 + s2 * y1 + z1 * x2 - z2 * x1,
            s1 * z2 + s2 * z1 + x1 * y2 - x2 * y1,
        ],
        axis=-1,
    )


def left_mult_matrix(q) -> np.ndarray:
    """Real 4x4 matrix ``L(q)`` with ``L(q) @ p == q ∘ p``."""
    s, x, y, z = np.moveaxis(_as_quat(q), -1, 0)
    rows = [
        [s, -x, -y, -z],
        [x, s, -z, y],
        [y, z, s, -x],
        [z, -y, x, s],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def right_mult_matrix(q) -> np.ndarray:
    """Real 4x4 matrix ``R(q)`` with ``R(q) @ p == p ∘ q``.

    Only used as a cross-check; the network uses the left form throughout.
    """
    s, x, y, z = np.moveaxis(_as_quat(q), -1, 0)
    rows = [
        [s, -x, -y, -z],
        [x, s, z, -y],
        [y, -z, s, x],
        [z, y, -x, s],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def conj(q) -> np.ndarray:
    return _as_quat(q) * np.array([1.0, -1.0, -1.0, -1.0])


def norm(q) -> np.ndarray:
    return np.sqrt(np.sum(_as_quat(q) ** 2, axis=-1))


def inverse(q) -> np.ndarray:
    """``q† / |q|²``; raises ``ValueError`` for a zero quaternion."""
    q = _as_quat(q)
    n2 = np.sum(q**2, axis=-1, keepdims=True)
    if np.any(n2 == 0.0):
        raise ValueError("zero quaternion has no inverse")
    return conj(q) / n2


def rotate(q, mu) -> np.ndarray:
    """``mu ∘ q ∘ mu⁻¹`` (rotation of the vector part; involution for pure unit mu)."""
    return quat_mul(quat_mul(mu, q), inverse(mu))


ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])
BASIS = np.stack([ONE, I, J, K])
# L(1), L(i), L(j), L(k), derived from the multiplication rule
BASIS_MATRICES = left_mult_matrix(BASIS)


def ghr_derivative(
    f: Callable[[np.ndarray], np.ndarray],
    q,
    mu=ONE,
    conjugate: bool = False,
) -> np.ndarray:
    """Left GHR derivative of ``f`` at ``q`` w.r.t. ``q^mu`` (or ``q^mu†``).

    The four component partials are taken by central differences with step
    ``1e-6 * max(1, |q|)``.  ``f`` may return a real scalar, which is treated
    as a real quaternion.
    """
    q = _as_quat(q)
    mu = _as_quat(mu)
    if norm(mu) == 0.0:
        raise ValueError("rotation factor mu must be nonzero")
    h = 1e-6 * max(1.0, float(norm(q)))

    def fq(p):
        v = np.asarray(f(p), dtype=float)
        if v.ndim == 0:
            v = v * ONE
        if not np.all(np.isfinite(v)):
            raise FloatingPointError(f"non-finite value of f at {p}")
        return v

    partials = []
    for e in BASIS:
        partials.append((fq(q + h * e) - fq(q - h * e)) / (2.0 * h))
    sign = 1.0 if conjugate else -1.0
    out = partials[0].copy()
    for d, e in zip(partials[1:], BASIS[1:]):
        out = out + sign * quat_mul(d, rotate(e, mu))
    return out / 4.0


@dataclass(frozen=True)
class Quaternion:
    s: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        s, x, y, z = (float(v) for v in _as_quat(a))
        return cls(s, x, y, z)

    def __array__(self, dtype=None, copy=None):
        return np.array([self.s, self.x, self.y, self.z], dtype=dtype or float)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion.from_array(quat_mul(self, other))
        return Quaternion.from_array(np.asarray(self) * float(other))

    def __rmul__(self, other):
        return Quaternion.from_array(np.asarray(self) * float(other))

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion.from_array(np.asarray(self) + np.asarray(other))

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion.from_array(np.asarray(self) - np.asarray(other))

    def __neg__(self) -> "Quaternion":
        return Quaternion.from_array(-np.asarray(self))

    def conj(self) -> "Quaternion":
        return Quaternion.from_array(conj(self))

    def norm(self) -> float:
        return float(norm(self))

    def inverse(self) -> "Quaternion":
        return Quaternion.from_array(inverse(self))

    def matrix(self) -> np.ndarray:
        return left_mult_matrix(self)
