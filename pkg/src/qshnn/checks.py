"""Fast numerical self-checks behind ``qshnn validate``.

Each check returns ``(name, passed, detail)``.  These are smoke-sized versions
of the invariants the test suite asserts in full.
"""
from __future__ import annotations

import numpy as np

from .dynamics import (
    NetworkConfig,
    check_constraints,
    closed_form_linear,
    find_equilibrium,
    integrate_rk4,
    normalize_weights,
    repair_weights,
)
from .learning import rng_for, weight_gradient
from .manifold import project_weight_matrix, quaternionicity_residual
from .quat import BASIS, left_mult_matrix, norm, quat_mul, rotate


def check_algebra(rng, cases=2000):
    a, b, c = rng.normal(size=(3, cases, 4))
    assoc = np.abs(quat_mul(quat_mul(a, b), c) - quat_mul(a, quat_mul(b, c))).max()
    hom = np.abs(left_mult_matrix(quat_mul(a, b)) - left_mult_matrix(a) @ left_mult_matrix(b)).max()
    normmul = np.abs(norm(quat_mul(a, b)) - norm(a) * norm(b)).max()
    rot = np.abs(norm(rotate(a, b)) - norm(a)).max()
    worst = max(assoc, hom, normmul, rot)
    ijk = quat_mul(quat_mul(BASIS[1], BASIS[2]), BASIS[3])
    return "quaternion algebra", worst < 1e-12 and np.allclose(ijk, [-1, 0, 0, 0]), f"max error {worst:.2e}"


def check_projection(rng, cases=200):
    worst = 0.0
    for _ in range(cases):
        M = rng.normal(size=(4, 4))
        P = project_weight_matrix(M)
        A = left_mult_matrix(rng.normal(size=4))
        gap = np.linalg.norm(M - P) - np.linalg.norm(M - A)
        worst = max(worst, gap)
    W = rng.normal(size=(16, 16))
    res = quaternionicity_residual(project_weight_matrix(W))
    return "projection optimality", worst <= 1e-12 and res < 1e-12, f"worst gap {worst:.2e}, residual {res:.2e}"


def check_rk4(rng):
    cfg = NetworkConfig(n=1, bias=rng.uniform(-0.5, 0.5, 4).tolist(), activation="linear")
    omega, q0 = rng.uniform(-1, 1, (2, 4))
    errs = []
    for dt in (0.01, 0.005):
        traj = integrate_rk4(q0, left_mult_matrix(omega), cfg, dt, 10.0)
        exact = closed_form_linear(omega, cfg.b, q0, cfg, traj.times)
        errs.append(np.abs(traj.states - exact).max())
    ratio = errs[0] / errs[1]
    return "rk4 vs closed form", errs[0] < 1e-6 and 12 <= ratio <= 20, f"error {errs[0]:.2e}, halving ratio {ratio:.1f}"


def check_uniqueness(rng, starts=10):
    cfg = NetworkConfig(n=4)
    W = normalize_weights(rng.uniform(-1, 1, (16, 16)))
    W, _ = repair_weights(W, cfg)
    rep = check_constraints(W, cfg)
    eqs = [find_equilibrium(W, cfg, q0) for q0 in rng.uniform(-1, 1, (starts, 16))]
    spread = max(np.linalg.norm(e - eqs[0]) for e in eqs)
    return "equilibrium uniqueness", rep.satisfied and spread < 1e-6, f"spread {spread:.2e}"


def check_gradient(rng, h=1e-5):
    cfg = NetworkConfig(n=1)
    W = repair_weights(normalize_weights(rng.uniform(-1, 1, (4, 4))), cfg)[0]
    d = rng.uniform(-0.5, 0.5, 4)

    def loss(Wm):
        q = find_equilibrium(Wm, cfg, tol=1e-13)
        return 0.5 * np.sum((q - d) ** 2)

    q = find_equilibrium(W, cfg, tol=1e-13)
    G = weight_gradient(W, q, d, cfg)
    F = np.zeros_like(W)
    for i in range(4):
        for j in range(4):
            E = np.zeros_like(W)
            E[i, j] = h
            F[i, j] = (loss(W + E) - loss(W - E)) / (2 * h)
    rel = np.linalg.norm(G - F) / np.linalg.norm(F)
    return "gradient vs finite differences", rel < 1e-3, f"relative error {rel:.2e}"


def run_all(seed: int = 0):
    rng = rng_for(seed, 7)
    return [
        check_algebra(rng),
        check_projection(rng),
        check_rk4(rng),
        check_uniqueness(rng),
        check_gradient(rng),
    ]
