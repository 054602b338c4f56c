"""Weighted-L1 quadratic minimization.

Problems have the form::

    minimize  b' Psi b - 2 q' b + sum_l gamma_l |b_l|

with ``Psi`` symmetric positive definite. Note the squared term carries no
1/2 factor, so the per-coordinate soft-threshold level is ``gamma_l / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadraticL1Problem:
    Psi: np.ndarray
    q: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        Psi = np.asarray(self.Psi, dtype=float)
        q = np.asarray(self.q, dtype=float).reshape(-1)
        gamma = np.asarray(self.gamma, dtype=float).reshape(-1)
        m = q.size
        if Psi.shape != (m, m) or gamma.shape != (m,):
            raise ValueError(f"shape mismatch: Psi{Psi.shape} q{q.shape} gamma{gamma.shape}")
        scale = max(1.0, float(np.max(np.abs(Psi)))) if m else 1.0
        if np.max(np.abs(Psi - Psi.T), initial=0.0) > 1e-10 * scale:
            raise ValueError("Psi is not symmetric")
        if np.any(np.diag(Psi) <= 0):
            raise ValueError("Psi must have a strictly positive diagonal")
        if np.any(gamma < 0) or not np.all(np.isfinite(gamma)):
            raise ValueError("gamma must be finite and >= 0")
        object.__setattr__(self, "Psi", Psi)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "gamma", gamma)

    @property
    def m(self) -> int:
        return self.q.size

    def objective(self, beta) -> float:
        beta = np.asarray(beta, dtype=float)
        return float(beta @ self.Psi @ beta - 2.0 * self.q @ beta + self.gamma @ np.abs(beta))


@dataclass
class SolveReport:
    beta: np.ndarray
    iterations: int
    kkt_residual: float
    converged: bool


def soft_threshold(z, gamma):
    """``sign(z) * max(|z| - gamma, 0)``; works elementwise on arrays."""
    return np.sign(z) * np.maximum(np.abs(z) - gamma, 0.0)


def kkt_residual(p: QuadraticL1Problem, beta) -> float:
    """Largest violation of ``0 in 2(Psi b - q) + gamma * d|b|``."""
    beta = np.asarray(beta, dtype=float)
    g = 2.0 * (p.Psi @ beta - p.q)
    res = np.where(beta != 0, np.abs(g + p.gamma * np.sign(beta)), np.maximum(np.abs(g) - p.gamma, 0.0))
    return float(np.max(res, initial=0.0))


def kkt_tolerance(p: QuadraticL1Problem, rel: float = 1e-8) -> float:
    return rel * (1.0 + float(np.linalg.norm(p.q)))


def _polish(p: QuadraticL1Problem, beta: list[float], signs: tuple[int, ...]) -> list[float] | None:
    # exact minimizer on the current orthant face; rejected if any sign flips
    S = [l for l, s in enumerate(signs) if s]
    if not S:
        return None
    s = np.array([signs[l] for l in S], dtype=float)
    try:
        bS = np.linalg.solve(p.Psi[np.ix_(S, S)], p.q[S] - 0.5 * p.gamma[S] * s)
    except np.linalg.LinAlgError:
        return None
    if not np.array_equal(np.sign(bS), s):
        return None
    out = [0.0] * p.m
    for k, l in enumerate(S):
        out[l] = float(bS[k])
    if p.objective(out) > p.objective(beta):
        return None
    return out


def coordinate_descent(
    p: QuadraticL1Problem,
    beta0=None,
    tol: float = 1e-10,
    max_iters: int = 100_000,
    kkt_rel: float = 1e-8,
    callback=None,
) -> SolveReport:
    """Cyclic coordinate descent with exact soft-threshold updates.

    Each sweep updates ``b_l <- S(q_l - sum_{s != l} Psi_ls b_s, gamma_l / 2) / Psi_ll``
    for every coordinate in order. When two consecutive sweeps end with the
    same sign pattern the solver also tries the exact solution restricted to
    that pattern, which removes the slow tail on ill-conditioned problems.

    Stops once a sweep moves no coordinate by more than ``tol``. Thresholded
    coordinates are exact zeros. ``callback(beta)`` is called after every
    sweep.
    """
    m = p.m
    P = p.Psi.tolist()
    q = p.q.tolist()
    half = (0.5 * p.gamma).tolist()
    b = [0.0] * m if beta0 is None else [float(v) for v in np.asarray(beta0, dtype=float)]
    # residual r = q - Psi b, kept in sync with b
    r = (p.q - p.Psi @ np.array(b)).tolist()
    prev_signs = None
    it = 0
    done = False
    while it < max_iters:
        it += 1
        biggest = 0.0
        for l in range(m):
            row = P[l]
            d = row[l]
            z = r[l] + d * b[l]
            h = half[l]
            if z > h:
                nb = (z - h) / d
            elif z < -h:
                nb = (z + h) / d
            else:
                nb = 0.0
            delta = nb - b[l]
            if delta != 0.0:
                b[l] = nb
                for s in range(m):
                    r[s] -= row[s] * delta
                if abs(delta) > biggest:
                    biggest = abs(delta)
        if callback is not None:
            callback(np.array(b))
        if biggest <= tol:
            done = True
            break
        signs = tuple((v > 0) - (v < 0) for v in b)
        if signs == prev_signs:
            polished = _polish(p, b, signs)
            if polished is not None:
                b = polished
                r = (p.q - p.Psi @ np.array(b)).tolist()
        prev_signs = signs
    beta = np.array(b)
    res = kkt_residual(p, beta)
    return SolveReport(beta=beta, iterations=it, kkt_residual=res, converged=done and res <= kkt_tolerance(p, kkt_rel))


def prox_gradient_oracle(
    p: QuadraticL1Problem,
    beta0=None,
    tol: float = 1e-13,
    max_iters: int = 1_000_000,
    kkt_rel: float = 1e-8,
    accelerate: bool = True,
) -> SolveReport:
    """Proximal-gradient solver used to cross-check :func:`coordinate_descent`.

    The smooth part ``b' Psi b - 2 q' b`` has gradient Lipschitz constant
    ``L = 2 lambda_max(Psi)``, giving the step
    ``b <- S(b - (2 Psi b - 2 q) / L, gamma / L)``. With ``accelerate`` the
    step is taken from a Nesterov extrapolation point, restarted whenever
    the objective goes up.
    """
    L = 2.0 * float(np.linalg.eigvalsh(p.Psi)[-1])
    thresh = p.gamma / L
    beta = np.zeros(p.m) if beta0 is None else np.array(beta0, dtype=float)
    y = beta.copy()
    tk = 1.0
    f_prev = p.objective(beta)
    done = False
    it = 0
    while it < max_iters:
        it += 1
        new = soft_threshold(y - (2.0 * (p.Psi @ y) - 2.0 * p.q) / L, thresh)
        step = float(np.max(np.abs(new - beta), initial=0.0))
        if accelerate:
            f_new = p.objective(new)
            if f_new > f_prev and y is not beta:
                # restart momentum and retake a plain step from beta
                tk = 1.0
                y = beta
                continue
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
            y = new + ((tk - 1.0) / t_next) * (new - beta)
            tk = t_next
            f_prev = f_new
        else:
            y = new
        beta = new
        if step <= tol:
            done = True
            break
    res = kkt_residual(p, beta)
    return SolveReport(beta=beta, iterations=it, kkt_residual=res, converged=done and res <= kkt_tolerance(p, kkt_rel))
