"""Distributed least squares and distributed adaptive-LASSO recursions.

State is kept in information form: each sensor holds ``P_inv`` (the weighted
Gram matrix of everything it has heard, plus the initial ``P0^{-1}``) and the
matching information vector ``q``, so the least-squares estimate solves
``P_inv @ theta_ls = q``. One round is bulk-synchronous: every sensor reads
only its neighbors' previous-round state.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .graph import NetworkGraph
from .solver import QuadraticL1Problem, SolverError, coordinate_descent

log = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    """A sensor's information matrix lost positive definiteness."""

    def __init__(self, sensor: int, condition: float, message: str = ""):
        self.sensor = sensor
        self.condition = condition
        super().__init__(message or f"sensor {sensor}: Cholesky failed (condition estimate {condition:.3e})")


@dataclass(frozen=True)
class SensorState:
    P_inv: np.ndarray
    q: np.ndarray
    theta_ls: np.ndarray
    xi: np.ndarray
    H: frozenset
    alpha: float


@dataclass(frozen=True)
class NetworkState:
    """Stacked per-sensor state after ``t`` rounds.

    Arrays are indexed by sensor along the first axis: ``P_inv`` is
    (n, m, m), ``q``, ``theta_ls`` and ``xi`` are (n, m), ``alpha`` and
    ``clamped`` are (n,). ``clamped[i]`` flags that the estimate-inflation
    term of sensor ``i`` hit its log floor this round.
    """

    P_inv: np.ndarray
    q: np.ndarray
    theta_ls: np.ndarray
    xi: np.ndarray
    alpha: np.ndarray
    t: int
    clamped: np.ndarray

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def m(self) -> int:
        return self.q.shape[1]

    def zero_set(self, i: int) -> frozenset[int]:
        return frozenset(int(l) for l in np.flatnonzero(self.xi[i] == 0))

    def sensor(self, i: int) -> SensorState:
        return SensorState(
            P_inv=self.P_inv[i].copy(),
            q=self.q[i].copy(),
            theta_ls=self.theta_ls[i].copy(),
            xi=self.xi[i].copy(),
            H=self.zero_set(i),
            alpha=float(self.alpha[i]),
        )


@dataclass(frozen=True)
class SparseSettings:
    """Weighting schedule ``alpha = c * lambda_min(P_inv) ** p`` and solver knobs."""

    c: float = 1.0
    p: float = 0.75
    log_floor: float = 1e-6
    tol: float = 1e-10
    max_iters: int = 100_000
    kkt_rel: float = 1e-8


def _per_sensor(arr, n: int, shape: tuple) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if arr.shape == shape:
        return np.broadcast_to(arr, (n, *shape)).copy()
    if arr.shape == (n, *shape):
        return arr.copy()
    raise ValueError(f"expected shape {shape} or {(n, *shape)}, got {arr.shape}")


def init_state(n: int, m: int, P0, theta0) -> NetworkState:
    """Start every sensor from ``P_inv = P0^{-1}`` and ``q = P0^{-1} theta0``.

    ``P0`` may be one (m, m) matrix shared by all sensors or a stack of
    (n, m, m); ``theta0`` likewise (m,) or (n, m).
    """
    P0 = _per_sensor(P0, n, (m, m))
    theta0 = _per_sensor(theta0, n, (m,))
    P_inv = np.empty_like(P0)
    for i in range(n):
        if not np.allclose(P0[i], P0[i].T, rtol=0, atol=1e-12 * max(1.0, np.abs(P0[i]).max())):
            raise ValueError(f"P0 for sensor {i} is not symmetric")
        try:
            cho_factor(P0[i])
        except LinAlgError:
            raise ValueError(f"P0 for sensor {i} is not positive definite") from None
        inv = np.linalg.inv(P0[i])
        P_inv[i] = 0.5 * (inv + inv.T)
    q = np.einsum("ikl,il->ik", P_inv, theta0)
    return NetworkState(
        P_inv=P_inv,
        q=q,
        theta_ls=theta0.copy(),
        xi=theta0.copy(),
        alpha=np.zeros(n),
        t=0,
        clamped=np.zeros(n, dtype=bool),
    )


def _solve_spd(M: np.ndarray, v: np.ndarray, sensor: int) -> np.ndarray:
    try:
        return cho_solve(cho_factor(M), v)
    except LinAlgError:
        raise NumericalError(sensor, float(np.linalg.cond(M))) from None


def _weights(g) -> np.ndarray:
    return g.adjacency if isinstance(g, NetworkGraph) else np.asarray(g, dtype=float)


def dls_round(net: NetworkState, g, phis, ys) -> NetworkState:
    """One synchronous round of distributed least squares.

    Each sensor averages its neighbors' ``P_inv + phi phi'`` and
    ``q + phi y`` with the graph weights, then re-solves for ``theta_ls``.
    ``xi`` and ``alpha`` are carried over unchanged.

    Raises
    ------
    NumericalError
        If an updated ``P_inv`` is not numerically positive definite.
    """
    A = _weights(g)
    phis = np.asarray(phis, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if phis.shape != (net.n, net.m) or ys.shape != (net.n,):
        raise ValueError(f"need phis ({net.n}, {net.m}) and ys ({net.n},), got {phis.shape} and {ys.shape}")
    local_P = net.P_inv + phis[:, :, None] * phis[:, None, :]
    local_q = net.q + phis * ys[:, None]
    P_inv = np.einsum("ij,jkl->ikl", A, local_P)
    P_inv = 0.5 * (P_inv + P_inv.transpose(0, 2, 1))
    q = A @ local_q
    theta = np.empty_like(q)
    for i in range(net.n):
        theta[i] = _solve_spd(P_inv[i], q[i], i)
    return replace(net, P_inv=P_inv, q=q, theta_ls=theta, t=net.t + 1)


def extreme_eigenvalues(M: np.ndarray) -> tuple[float, float]:
    ev = np.linalg.eigvalsh(M)
    return float(ev[0]), float(ev[-1])


def alpha_schedule(P_inv, c: float = 1.0, p: float = 0.75) -> float:
    """Penalty level ``c * lambda_min(P_inv) ** p``."""
    lam_min, _ = extreme_eigenvalues(np.asarray(P_inv, dtype=float))
    return c * lam_min**p


def _inflation(P_inv: np.ndarray, log_floor: float, eig=None) -> tuple[float, bool]:
    lam_min, lam_max = extreme_eigenvalues(P_inv) if eig is None else eig
    lg = np.log(lam_max)
    clamped = lg < log_floor
    return float(np.sqrt(max(lg, log_floor) / lam_min)), bool(clamped)


def theta_hat(theta_ls, P_inv, log_floor: float = 1e-6) -> np.ndarray:
    """Push every LS coordinate away from zero by ``sqrt(log lambda_max / lambda_min)``.

    The sign of zero counts as positive. While ``lambda_max <= 1`` the log
    is floored at ``log_floor`` so the result stays bounded away from zero.
    """
    theta_ls = np.asarray(theta_ls, dtype=float)
    bonus, clamped = _inflation(np.asarray(P_inv, dtype=float), log_floor)
    if clamped:
        log.debug("lambda_max(P_inv) <= exp(log_floor); inflation term floored")
    return theta_ls + np.where(theta_ls >= 0, 1.0, -1.0) * bonus


def penalty_weights(theta_ls, P_inv, alpha: float, log_floor: float = 1e-6) -> np.ndarray:
    return alpha / np.abs(theta_hat(theta_ls, P_inv, log_floor))


def plain_sparse_objective(P_inv, q, alpha: float, beta) -> float:
    """``beta' P_inv beta - 2 q' beta + alpha * ||beta||_1``."""
    beta = np.asarray(beta, dtype=float)
    return float(beta @ np.asarray(P_inv) @ beta - 2.0 * np.asarray(q) @ beta + alpha * np.abs(beta).sum())


def build_problem(P_inv, q, theta_ls, settings: SparseSettings, eig=None) -> tuple[QuadraticL1Problem, float, bool]:
    """Assemble the adaptively weighted problem for one sensor.

    ``eig`` optionally supplies precomputed ``(lambda_min, lambda_max)``.
    Returns the problem, the penalty level ``alpha`` and whether the
    inflation term was floored.
    """
    eig = extreme_eigenvalues(P_inv) if eig is None else eig
    alpha = settings.c * eig[0] ** settings.p
    bonus, clamped = _inflation(P_inv, settings.log_floor, eig)
    that = theta_ls + np.where(theta_ls >= 0, 1.0, -1.0) * bonus
    return QuadraticL1Problem(P_inv, q, alpha / np.abs(that)), alpha, clamped


def _sparse_step(args):
    i, P_inv, q, theta_ls, warm, settings, eig = args
    problem, alpha, clamped = build_problem(P_inv, q, theta_ls, settings, eig)
    rep = coordinate_descent(problem, warm, tol=settings.tol, max_iters=settings.max_iters, kkt_rel=settings.kkt_rel)
    if not rep.converged:
        raise SolverError(
            f"sensor {i}: coordinate descent did not converge after {rep.iterations} sweeps "
            f"(KKT residual {rep.kkt_residual:.3e})"
        )
    return rep.beta, alpha, clamped, problem, rep


def sparse_round(
    net: NetworkState,
    g,
    phis,
    ys,
    settings: SparseSettings = SparseSettings(),
    workers: int = 1,
    debug: list | None = None,
) -> NetworkState:
    """One round of the distributed adaptive-LASSO estimator.

    Runs :func:`dls_round`, then for every sensor minimizes
    ``b' P_inv b - 2 q' b + alpha * sum_l |b_l| / |theta_hat_l|`` warm-started
    at the previous sparse estimate. Sensors are independent within the
    round and may be solved on ``workers`` threads; results do not depend on
    the worker count.

    If ``debug`` is a list, ``(sensor, problem, report)`` tuples are
    appended to it.
    """
    nxt = dls_round(net, g, phis, ys)
    ev = np.linalg.eigvalsh(nxt.P_inv)
    jobs = [
        (i, nxt.P_inv[i], nxt.q[i], nxt.theta_ls[i], net.xi[i], settings, (float(ev[i, 0]), float(ev[i, -1])))
        for i in range(net.n)
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sparse_step, jobs))
    else:
        results = [_sparse_step(job) for job in jobs]
    xi = np.array([r[0] for r in results])
    alpha = np.array([r[1] for r in results])
    clamped = np.array([r[2] for r in results], dtype=bool)
    if debug is not None:
        debug.extend((i, r[3], r[4]) for i, r in enumerate(results))
    return replace(nxt, xi=xi, alpha=alpha, clamped=clamped)


def state_rows(net: NetworkState) -> list[list]:
    """Snapshot rows ``t, i, theta_ls..., xi..., alpha, lambda_min, lambda_max``
    (sensor numbers 1-based)."""
    rows = []
    for i in range(net.n):
        lam_min, lam_max = extreme_eigenvalues(net.P_inv[i])
        rows.append([net.t, i + 1, *net.theta_ls[i], *net.xi[i], float(net.alpha[i]), lam_min, lam_max])
    return rows


def state_header(m: int) -> list[str]:
    return (
        ["t", "i"]
        + [f"theta_ls_{l}" for l in range(1, m + 1)]
        + [f"xi_{l}" for l in range(1, m + 1)]
        + ["alpha", "lambda_min", "lambda_max"]
    )
