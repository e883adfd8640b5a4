"""Continuous-time quaternion Hopfield dynamics.

State layout: ``q`` is a real vector of length ``4n`` holding neuron ``k``'s
quaternion (s, x, y, z) at ``q[4k:4k+4]``.  The network evolves as

    dq/dt = -gamma q + mu W tanh(q) + mu b

with ``W`` a real ``4n x 4n`` matrix whose 4x4 blocks are the quaternion
connection weights in left-multiplication form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, NonConvergenceError, SingularCoefficientError
from .quat import inverse, quat_mul

__all__ = [
    "NetworkConfig",
    "Trajectory",
    "StabilityReport",
    "EnvelopeReport",
    "activation",
    "activation_derivative",
    "rhs",
    "rhs_jacobian",
    "integrate_rk4",
    "find_equilibrium",
    "closed_form_linear",
    "check_constraints",
    "normalize_weights",
    "repair_weights",
    "second_derivative",
    "finite_difference_second_derivative",
    "curvature_profile",
    "error_decay_envelope",
]


@dataclass
class NetworkConfig:
    n: int = 4
    gamma: float = 1.0
    mu: float = 1.0
    bias: float | list[float] = 0.15
    # "linear" exists only as a test hook for the closed-form single-neuron solution
    activation: str = "tanh"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (self.gamma > 0 and self.mu > 0):
            raise ValueError("gamma and mu must be positive")
        if self.activation not in ("tanh", "linear"):
            raise ValueError(f"unknown activation {self.activation!r}")
        b = np.asarray(self.bias, dtype=float)
        if b.ndim and b.shape != (4 * self.n,):
            raise ValueError(f"bias must be scalar or length {4 * self.n}")

    @property
    def dim(self) -> int:
        return 4 * self.n

    @property
    def b(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.bias, dtype=float), (self.dim,)).copy()


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass
class StabilityReport:
    constraint1_margins: np.ndarray
    constraint2_margins: np.ndarray
    satisfied1: bool
    satisfied2: bool
    lam: float

    @property
    def satisfied(self) -> bool:
        return self.satisfied1 and self.satisfied2


@dataclass
class EnvelopeReport:
    applicable: bool
    worst_ratio: float          # max_t |e(t)| / (|e(0)| exp(-2 lam t)); <= 1 means the bound holds
    worst_ratio_single: float   # same against exp(-lam t)
    observed_rate: float        # -log(|e(T)|/|e(0)|)/T
    lam: float
    ratios: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    @property
    def satisfied(self) -> bool:
        return (not self.applicable) or self.worst_ratio <= 1.0 + 1e-9


def activation(q: np.ndarray, cfg: NetworkConfig) -> np.ndarray:
    return q if cfg.activation == "linear" else np.tanh(q)


def activation_derivative(q: np.ndarray, cfg: NetworkConfig) -> np.ndarray:
    if cfg.activation == "linear":
        return np.ones_like(q)
    return 1.0 - np.tanh(q) ** 2


def _check_dims(q: np.ndarray, W: np.ndarray) -> None:
    if W.shape != (q.shape[-1], q.shape[-1]):
        raise ValueError(f"state length {q.shape[-1]} does not match W {W.shape}")


def rhs(q, W, cfg: NetworkConfig) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    W = np.asarray(W, dtype=float)
    _check_dims(q, W)
    return -cfg.gamma * q + cfg.mu * (activation(q, cfg) @ W.T) + cfg.mu * cfg.b


def rhs_jacobian(q, W, cfg: NetworkConfig) -> np.ndarray:
    """``d rhs / d q = -gamma I + mu W diag(phi'(q))``."""
    q = np.asarray(q, dtype=float)
    return -cfg.gamma * np.eye(q.size) + cfg.mu * W * activation_derivative(q, cfg)[None, :]


def integrate_rk4(q0, W, cfg: NetworkConfig, dt: float = 0.01, t_end: float = 10.0) -> Trajectory:
    """Classical fixed-step RK4 from ``t = 0`` to ``t_end``; records every step."""
    if dt <= 0 or t_end < dt:
        raise ValueError("need dt > 0 and t_end >= dt")
    W = np.asarray(W, dtype=float)
    q = np.array(q0, dtype=float)
    _check_dims(q, W)
    steps = int(round(t_end / dt))
    states = np.empty((steps + 1, q.size))
    derivs = np.empty_like(states)
    f = _rhs_closure(W, cfg)
    states[0] = q
    k1 = derivs[0] = f(q)
    # blow-up is reported as DivergenceError, not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, steps + 1):
            k2 = f(q + 0.5 * dt * k1)
            k3 = f(q + 0.5 * dt * k2)
            k4 = f(q + dt * k3)
            q = q + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(q)):
                raise DivergenceError(k)
            states[k] = q
            k1 = derivs[k] = f(q)
    return Trajectory(np.arange(steps + 1) * dt, states, derivs)


def _rhs_closure(W: np.ndarray, cfg: NetworkConfig):
    g, m, mb, WT = cfg.gamma, cfg.mu, cfg.mu * cfg.b, W.T.copy()
    if cfg.activation == "linear":
        return lambda q: -g * q + m * (q @ WT) + mb
    return lambda q: -g * q + m * (np.tanh(q) @ WT) + mb


def _is_stable(q, W, cfg) -> bool:
    return bool(np.max(np.linalg.eigvals(rhs_jacobian(q, W, cfg)).real) < 0.0)


def _newton_polish(q, W, cfg, tol, max_jump, max_iter=12):
    start = q
    for _ in range(max_iter):
        F = rhs(q, W, cfg)
        if np.max(np.abs(F)) < tol:
            break
        try:
            q = q - np.linalg.solve(rhs_jacobian(q, W, cfg), F)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(q)) or np.max(np.abs(q - start)) > max_jump:
            return None
    else:
        if np.max(np.abs(rhs(q, W, cfg))) >= tol:
            return None
    # only accept an attracting equilibrium; the flow never settles on a saddle
    return q if _is_stable(q, W, cfg) else None


def find_equilibrium(
    W,
    cfg: NetworkConfig,
    q0=None,
    tol: float = 1e-9,
    t_max: float = 100.0,
    dt: float = 0.01,
    polish: bool = True,
    polish_below: float = 1e-2,
    max_jump: float = 0.05,
) -> np.ndarray:
    """Integrate with RK4 until ``||rhs(q)||_inf < tol`` and return the state.

    With ``polish`` the RK4 flow is used to reach the basin of the attracting
    equilibrium and, once the residual falls below ``polish_below``, Newton's
    method on ``rhs(q) = 0`` finishes the job.  A Newton result is kept only if
    it lies within ``max_jump`` of the flow's current point and is linearly
    stable; otherwise integration continues.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    W = np.asarray(W, dtype=float)
    q = np.zeros(cfg.dim) if q0 is None else np.array(q0, dtype=float)
    _check_dims(q, W)
    f = _rhs_closure(W, cfg)
    steps = int(np.ceil(t_max / dt))
    next_polish = 0
    r = np.inf
    for k in range(steps + 1):
        k1 = f(q)
        r = float(np.max(np.abs(k1)))
        if r < tol:
            return q
        if not np.isfinite(r):
            raise DivergenceError(k)
        if polish and r < polish_below and k >= next_polish:
            p = _newton_polish(q, W, cfg, tol, max_jump)
            if p is not None:
                return p
            next_polish = k + 100
        if k == steps:
            break
        k2 = f(q + 0.5 * dt * k1)
        k3 = f(q + 0.5 * dt * k2)
        k4 = f(q + dt * k3)
        q = q + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    raise NonConvergenceError(r, t_max)


def closed_form_linear(omega, b, q0, cfg: NetworkConfig, t):
    """Exact response of one neuron with identity activation.

    Solves ``dq/dt = chi ∘ q + mu b`` with ``chi = -gamma + mu omega``:
    ``q(t) = e(t) ∘ q0 + mu chi⁻¹ ∘ (e(t) - 1) ∘ b`` where ``e(t)`` is the
    quaternion exponential of ``chi t``.  Accepts scalar or array ``t``.
    """
    omega = np.asarray(omega, dtype=float)
    b = np.asarray(b, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    chi = cfg.mu * omega
    chi = chi + np.array([-cfg.gamma, 0.0, 0.0, 0.0])
    t = np.asarray(t, dtype=float)
    tt = t[..., None]
    alpha = float(np.linalg.norm(chi[1:]))
    if alpha < 1e-8:
        sinc = tt  # sin(alpha t)/alpha -> t
    else:
        sinc = np.sin(alpha * tt) / alpha
    qe = np.exp(chi[0] * tt) * np.concatenate([np.cos(alpha * tt), chi[1:] * sinc], axis=-1)
    out = quat_mul(qe, q0)
    if np.any(b != 0.0):
        if np.linalg.norm(chi) == 0.0:
            raise SingularCoefficientError("chi = -gamma + mu*omega vanishes with nonzero bias")
        one = np.array([1.0, 0.0, 0.0, 0.0])
        out = out + cfg.mu * quat_mul(inverse(chi), quat_mul(qe - one, b))
    return out


def check_constraints(W, cfg: NetworkConfig, lipschitz=None) -> StabilityReport:
    """Weight-constraint margins for equilibrium uniqueness and asymptotic stability.

    ``constraint1_margins[j] = (mu/gamma) sum_i L_i |w_ij|`` (column sums) and
    ``constraint2_margins[j] = (mu/2gamma) sum_i (|w_ji| + |w_ij|)``; each holds
    when every margin is below 1.  ``lam = gamma - (mu/2) max_j sum_i(...)`` is the
    exponential decay coefficient, positive only when the second one holds.
    """
    A = np.abs(np.asarray(W, dtype=float))
    L = np.ones(A.shape[0]) if lipschitz is None else np.asarray(lipschitz, dtype=float)
    if np.any(L <= 0):
        raise ValueError("Lipschitz constants must be positive")
    ratio = cfg.mu / cfg.gamma
    c1 = ratio * (L[:, None] * A).sum(axis=0)
    both = A.sum(axis=1) + A.sum(axis=0)
    c2 = 0.5 * ratio * both
    lam = cfg.gamma - 0.5 * cfg.mu * float(both.max())
    return StabilityReport(c1, c2, bool(np.all(c1 < 1)), bool(np.all(c2 < 1)), lam)


def normalize_weights(W, epsilon: float = 1e-12) -> np.ndarray:
    """``W / (epsilon + ||W||_inf)``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    W = np.asarray(W, dtype=float)
    return W / (epsilon + np.linalg.norm(W, np.inf))


def repair_weights(W, cfg: NetworkConfig, epsilon: float = 1e-12, lipschitz=None):
    """Rescale so both weight constraints hold; returns ``(W, rescaled)``.

    Row-sum normalization alone leaves column sums unbounded, so when either
    constraint fails the matrix is divided by ``(mu/gamma) L_max max(||W||_inf, ||W||_1) + epsilon``.
    """
    W = np.asarray(W, dtype=float)
    if check_constraints(W, cfg, lipschitz).satisfied:
        return W, False
    lmax = 1.0 if lipschitz is None else float(np.max(lipschitz))
    scale = (cfg.mu / cfg.gamma) * lmax * max(np.linalg.norm(W, np.inf), np.linalg.norm(W, 1))
    return W / (scale + epsilon), True


def second_derivative(traj: Trajectory, W, cfg: NetworkConfig) -> np.ndarray:
    """Analytic ``q'' = J(q) q'`` along the trajectory, J the Jacobian of the right-hand side."""
    W = np.asarray(W, dtype=float)
    qd = traj.derivatives
    return -cfg.gamma * qd + cfg.mu * (activation_derivative(traj.states, cfg) * qd) @ W.T


def finite_difference_second_derivative(traj: Trajectory) -> np.ndarray:
    """Central differences of the recorded derivatives at interior samples."""
    return (traj.derivatives[2:] - traj.derivatives[:-2]) / (2.0 * traj.dt)


def curvature_profile(traj: Trajectory, W, cfg: NetworkConfig) -> np.ndarray:
    """Per-component curvature ``|q_i''| (1 + q_i'^2)^(-3/2)``, shape ``(T, 4n)``."""
    if len(traj) < 3:
        raise ValueError("need at least 3 samples")
    qdd = second_derivative(traj, W, cfg)
    return np.abs(qdd) * (1.0 + traj.derivatives**2) ** -1.5


def error_decay_envelope(traj: Trajectory, q_d, lam: float, floor: float = 1e-9) -> EnvelopeReport:
    """Compare ``|q(t) - q_d|`` against ``|q(0) - q_d| exp(-2 lam t)``.

    Bounds smaller than ``floor`` are clamped to it, since the integrated
    state cannot approach the equilibrium more closely than solver accuracy.
    With ``lam <= 0`` the bound does not apply and the report says so.
    """
    err = np.linalg.norm(traj.states - np.asarray(q_d, dtype=float), axis=1)
    t = traj.times
    e0 = err[0]
    if e0 == 0.0:
        ratios = np.zeros_like(err)
        ratios_single = ratios
        rate = np.inf
    else:
        ratios = err / np.maximum(e0 * np.exp(-2.0 * lam * t), floor)
        ratios_single = err / np.maximum(e0 * np.exp(-lam * t), floor)
        above = np.nonzero(err > floor)[0]
        last = above[-1] if above.size else 0
        rate = float(-np.log(err[last] / e0) / t[last]) if last > 0 else np.inf
    return EnvelopeReport(
        applicable=lam > 0,
        worst_ratio=float(ratios.max()),
        worst_ratio_single=float(ratios_single.max()),
        observed_rate=rate,
        lam=float(lam),
        ratios=ratios,
    )
