"""Frobenius projection onto the left-multiplication matrices ``{L(q)}``.

The basis ``L(1), L(i), L(j), L(k)`` is orthogonal under the Frobenius inner
product with ``||L(mu)||_F = 2``, so the least-squares coefficients are plain
inner products divided by 4.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .quat import BASIS_MATRICES

__all__ = [
    "ProjectionCoefficients",
    "project_block",
    "block_view",
    "from_blocks",
    "block_coefficients",
    "project_weight_matrix",
    "quaternionicity_residual",
]


class ProjectionCoefficients(NamedTuple):
    c1: float
    ci: float
    cj: float
    ck: float


def project_block(M) -> tuple[np.ndarray, ProjectionCoefficients]:
    M = np.asarray(M, dtype=float)
    if M.shape != (4, 4):
        raise ValueError(f"expected a 4x4 block, got {M.shape}")
    c = np.einsum("ij,mij->m", M, BASIS_MATRICES) / 4.0
    return np.einsum("m,mij->ij", c, BASIS_MATRICES), ProjectionCoefficients(*map(float, c))


def _check_shape(W: np.ndarray) -> int:
    if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] % 4:
        raise ValueError(f"weight matrix must be 4n x 4n, got {W.shape}")
    return W.shape[0] // 4


def block_view(W) -> np.ndarray:
    """Return blocks as an ``(n, n, 4, 4)`` array; ``[i, j]`` is rows 4i.., cols 4j.."""
    W = np.asarray(W, dtype=float)
    n = _check_shape(W)
    return W.reshape(n, 4, n, 4).transpose(0, 2, 1, 3)


def from_blocks(blocks: np.ndarray) -> np.ndarray:
    n = blocks.shape[0]
    return np.ascontiguousarray(blocks.transpose(0, 2, 1, 3).reshape(4 * n, 4 * n))


def block_coefficients(W) -> np.ndarray:
    """Quaternion coordinates ``(n, n, 4)`` of each block's projection."""
    return np.einsum("abij,mij->abm", block_view(W), BASIS_MATRICES) / 4.0


def project_weight_matrix(W) -> np.ndarray:
    coeffs = block_coefficients(W)
    return from_blocks(np.einsum("abm,mij->abij", coeffs, BASIS_MATRICES))


def quaternionicity_residual(W) -> float:
    """``||W - P(W)||_F``; zero iff every 4x4 block is a left-multiplication matrix."""
    W = np.asarray(W, dtype=float)
    return float(np.linalg.norm(W - project_weight_matrix(W)))
