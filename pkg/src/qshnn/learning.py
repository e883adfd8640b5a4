"""Equilibrium-matching training with periodic block projection.

Each iteration drives the network to its equilibrium ``q*``, takes one
gradient step on ``0.5 ||q* - d||^2`` using the implicit-function gradient
through the steady-state equation, and (in QSHNN mode) every ``P`` iterations
snaps each 4x4 weight block back onto the quaternion left-multiplication
matrices.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    NetworkConfig,
    activation,
    activation_derivative,
    check_constraints,
    find_equilibrium,
    normalize_weights,
    repair_weights,
)
from .errors import DivergenceError, GradientError, NonConvergenceError
from .manifold import project_weight_matrix, quaternionicity_residual
from .quat import ghr_derivative

log = logging.getLogger(__name__)

__all__ = [
    "TrainConfig",
    "TrainingReport",
    "sensitivity_matrix",
    "weight_gradient",
    "accuracy",
    "mse",
    "ghr_loss_gradient",
    "initial_weights",
    "train",
    "rng_for",
]

QSHNN = "qshnn"
SHNN = "shnn"


@dataclass
class TrainConfig:
    eta: float = 0.05
    eta_min: float = 0.001
    eta_max: float = 0.2
    projection_period: int = 10
    t_max_iters: int | None = None  # None -> 30000 for QSHNN, 10000 for SHNN
    tau: float = 1e-6
    mode: str = QSHNN
    seed: int = 0
    epsilon: float = 1e-12
    # keep ||W||_inf < 1 during training by lazy re-normalization
    renormalize: bool = False
    # divide the gradient by E = 0.5 ||delta||_2 (singular at convergence, off by default)
    inverse_loss_scaling: bool = False
    eq_tol: float = 1e-9
    eq_t_max: float = 100.0
    dt: float = 0.01

    def __post_init__(self):
        self.mode = self.mode.lower()
        if self.mode not in (QSHNN, SHNN):
            raise ValueError(f"mode must be qshnn or shnn, got {self.mode!r}")
        if not (self.eta > 0 and self.tau > 0 and self.projection_period >= 1):
            raise ValueError("need eta > 0, tau > 0, projection_period >= 1")
        if not (0 < self.eta_min <= self.eta_max):
            raise ValueError("need 0 < eta_min <= eta_max")

    @property
    def max_iters(self) -> int:
        if self.t_max_iters is not None:
            return self.t_max_iters
        return 30000 if self.mode == QSHNN else 10000


@dataclass
class TrainingReport:
    mode: str
    seed: int
    stop_reason: str  # converged | max_iters | divergence
    iterations_used: int
    final_weights: np.ndarray
    final_equilibrium: np.ndarray
    targets: np.ndarray
    initial_weights: np.ndarray
    loss_history: list[float] = field(default_factory=list)
    accuracy_history: list[float] = field(default_factory=list)
    quaternionicity_history: list[float] = field(default_factory=list)
    eta_history: list[float] = field(default_factory=list)
    renormalizations: int = 0
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.stop_reason == "converged"

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1] if self.loss_history else float("nan")

    @property
    def final_accuracy(self) -> float:
        return self.accuracy_history[-1] if self.accuracy_history else float("nan")


def rng_for(seed: int, stream: int) -> np.random.Generator:
    """Philox (counter-based) generator for ``(seed, stream)``.

    Stream 0 draws targets, 1 initial weights, 2 and up are free for test states.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


def sensitivity_matrix(W, q_star, cfg: NetworkConfig) -> np.ndarray:
    """``S = I - (mu/gamma) W diag(phi'(q*))``."""
    q_star = np.asarray(q_star, dtype=float)
    W = np.asarray(W, dtype=float)
    return np.eye(q_star.size) - (cfg.mu / cfg.gamma) * W * activation_derivative(q_star, cfg)[None, :]


def weight_gradient(W, q_star, q_d, cfg: NetworkConfig, inverse_loss_scaling: bool = False) -> np.ndarray:
    """Gradient of ``0.5 ||q*(W) - q_d||^2`` with respect to every entry of ``W``.

    ``dq*/dw_ij = (mu/gamma) phi(q*_j) S⁻¹ e_i``, so the whole matrix is the outer
    product ``(mu/gamma) y phi(q*)^T`` with ``S^T y = delta``.
    """
    q_star = np.asarray(q_star, dtype=float)
    delta = q_star - np.asarray(q_d, dtype=float)
    S = sensitivity_matrix(W, q_star, cfg)
    try:
        y = np.linalg.solve(S.T, delta)
    except np.linalg.LinAlgError as exc:
        raise GradientError("sensitivity matrix is singular") from exc
    if not np.all(np.isfinite(y)):
        raise GradientError("sensitivity solve produced non-finite values")
    G = (cfg.mu / cfg.gamma) * np.outer(y, activation(q_star, cfg))
    if inverse_loss_scaling:
        E = 0.5 * np.linalg.norm(delta)
        G = G / E if E > 0 else np.zeros_like(G)
    return G


def accuracy(q_star, q_d, tau: float) -> float:
    """Fraction of components with ``|q*_i - d_i| < tau``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    err = np.abs(np.asarray(q_star, dtype=float) - np.asarray(q_d, dtype=float))
    return float(np.mean(err < tau))


def mse(q_star, q_d) -> float:
    return float(np.mean((np.asarray(q_star, dtype=float) - np.asarray(q_d, dtype=float)) ** 2))


def ghr_loss_gradient(q_star, q_d, conjugate: bool = True, mu=(1.0, 0.0, 0.0, 0.0)) -> np.ndarray:
    """Per-neuron left GHR derivative of ``E = sum_k |q_k - d_k|^2``, shape ``(n, 4)``.

    A validation utility only; training uses the real-valued gradient.
    """
    q = np.asarray(q_star, dtype=float).reshape(-1, 4)
    d = np.asarray(q_d, dtype=float).reshape(-1, 4)
    out = np.empty_like(q)
    for k in range(q.shape[0]):
        out[k] = ghr_derivative(lambda p, d=d[k]: np.sum((p - d) ** 2), q[k], mu, conjugate)
    return out


def initial_weights(cfg: NetworkConfig, seed: int, epsilon: float = 1e-12) -> np.ndarray:
    """Uniform(-1, 1) entries, row-sum normalized, then rescaled if a constraint still fails."""
    W = rng_for(seed, 1).uniform(-1.0, 1.0, size=(cfg.dim, cfg.dim))
    W = normalize_weights(W, epsilon)
    W, repaired = repair_weights(W, cfg, epsilon)
    if repaired:
        log.debug("seed %d: initial weights rescaled to satisfy both constraints", seed)
    return W


def _equilibrium(W, cfg, q0, tc: TrainConfig):
    return find_equilibrium(W, cfg, q0, tol=tc.eq_tol, t_max=tc.eq_t_max, dt=tc.dt)


def train(cfg: NetworkConfig, tc: TrainConfig, targets, W0=None) -> TrainingReport:
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (cfg.dim,) or not np.all(np.isfinite(targets)):
        raise ValueError(f"targets must be {cfg.dim} finite values")
    if np.any(np.abs(targets) >= 1.0):
        raise ValueError("target components must lie in (-1, 1)")

    W = initial_weights(cfg, tc.seed, tc.epsilon) if W0 is None else np.array(W0, dtype=float)
    report = TrainingReport(
        mode=tc.mode, seed=tc.seed, stop_reason="max_iters", iterations_used=0,
        final_weights=W, final_equilibrium=np.zeros(cfg.dim), targets=targets,
        initial_weights=W.copy(),
    )
    project = tc.mode == QSHNN
    P = tc.projection_period

    try:
        q = _equilibrium(W, cfg, np.zeros(cfg.dim), tc)
    except (NonConvergenceError, DivergenceError) as exc:
        report.stop_reason, report.message = "divergence", str(exc)
        return report
    loss = 0.5 * float(np.sum((q - targets) ** 2))
    eta = tc.eta

    for it in range(1, tc.max_iters + 1):
        try:
            G = weight_gradient(W, q, targets, cfg, tc.inverse_loss_scaling)
        except GradientError as exc:
            report.stop_reason, report.message = "divergence", str(exc)
            break

        # step, halving eta and retrying while the loss goes up
        while True:
            W_try = W - eta * G
            if tc.renormalize and np.linalg.norm(W_try, np.inf) >= 1.0:
                W_try = normalize_weights(W_try, tc.epsilon)
                report.renormalizations += 1
            try:
                q_try = _equilibrium(W_try, cfg, q, tc)
                loss_try = 0.5 * float(np.sum((q_try - targets) ** 2))
            except (NonConvergenceError, DivergenceError):
                loss_try = np.inf
            if loss_try <= loss or eta <= tc.eta_min:
                break
            eta = max(0.5 * eta, tc.eta_min)
        if not np.isfinite(loss_try):
            report.stop_reason = "divergence"
            report.message = f"no finite equilibrium after step at iteration {it}"
            break
        if loss_try < loss:
            eta = min(1.05 * eta, tc.eta_max)
        W, q, loss = W_try, q_try, loss_try

        check_now = (not project) or it % P == 0
        if project and it % P == 0:
            W = project_weight_matrix(W)
            try:
                q = _equilibrium(W, cfg, q, tc)
            except (NonConvergenceError, DivergenceError) as exc:
                report.stop_reason, report.message = "divergence", str(exc)
                break
            loss = 0.5 * float(np.sum((q - targets) ** 2))

        acc = accuracy(q, targets, tc.tau)
        report.loss_history.append(mse(q, targets))
        report.accuracy_history.append(acc)
        report.quaternionicity_history.append(quaternionicity_residual(W))
        report.eta_history.append(eta)
        report.iterations_used = it

        if check_now and 2.0 * loss < tc.tau and acc == 1.0:
            report.stop_reason = "converged"
            break
        if not np.isfinite(loss):
            report.stop_reason = "divergence"
            break

    report.final_weights = W
    report.final_equilibrium = q
    if report.stop_reason != "converged":
        log.info("seed %d (%s): %s after %d iterations", tc.seed, tc.mode,
                 report.stop_reason, report.iterations_used)
    return report


def constraint_summary(W, cfg: NetworkConfig) -> dict:
    rep = check_constraints(W, cfg)
    return {
        "max_constraint1": float(rep.constraint1_margins.max()),
        "max_constraint2": float(rep.constraint2_margins.max()),
        "satisfied1": rep.satisfied1,
        "satisfied2": rep.satisfied2,
        "lambda": rep.lam,
    }
