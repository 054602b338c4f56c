"""Run diagnostics: errors, regret, excitation and the error-bound monitor."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np


def regret_increment(xi_prev, phis, theta) -> float:
    """Network-wide squared prediction excess for one round.

    ``xi_prev`` must be the estimates held *before* the round's outputs were
    observed, i.e. the ones used to predict them.
    """
    err = np.asarray(xi_prev, dtype=float) - np.asarray(theta, dtype=float)
    return float(np.sum(np.einsum("ik,ik->i", np.asarray(phis, dtype=float), err) ** 2))


def cooperative_excitation_ratio(r: float, lam: float) -> float:
    """``(r / lam) * sqrt(log(r) / lam)``; ``inf`` when ``lam <= 0``."""
    if lam <= 0:
        return math.inf
    return (r / lam) * math.sqrt(max(math.log(r), 0.0) / lam)


def error_bound_scale(P_inv, alpha: float, r: float) -> float:
    """``alpha / lambda_min(P_inv) + sqrt(log(r) / lambda_min(P_inv))``, the
    shape of the sparse-estimate error bound up to an unknown constant."""
    lam = float(np.linalg.eigvalsh(np.asarray(P_inv, dtype=float))[0])
    return _bound(lam, alpha, r)


def _bound(lam: float, alpha: float, r: float) -> float:
    return alpha / lam + math.sqrt(max(math.log(r), 0.0) / lam)


def zero_set_agreement(xi, theta) -> np.ndarray:
    """Per-sensor flag: the sensor's zero set equals that of ``theta``."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    truth = np.asarray(theta) == 0
    return np.all((xi == 0) == truth, axis=1)


@dataclass
class ExcitationLedger:
    """Running excitation quantities for the whole network.

    ``r`` is ``max_i lambda_max(P0_i^{-1})`` plus the total squared norm of
    every regressor seen. ``window_gram`` is ``sum_i P0_i^{-1}`` plus the
    outer products of regressors from rounds ``k <= t - D + 1``, where ``t``
    is the newest round and ``D`` the graph diameter (taken as 1 for a
    single node); the last ``D - 1`` rounds wait in a buffer. ``solo_grams``
    track each sensor's own undelayed Gram matrix.
    """

    r: float
    window_gram: np.ndarray
    solo_grams: np.ndarray
    D: int
    rounds: int = 0
    _pending: deque = field(default_factory=deque, repr=False)

    @classmethod
    def start(cls, P0_inv, diameter: int) -> "ExcitationLedger":
        """``P0_inv`` is the (n, m, m) stack of initial information matrices."""
        P0_inv = np.asarray(P0_inv, dtype=float)
        r0 = max(float(np.linalg.eigvalsh(M)[-1]) for M in P0_inv)
        return cls(r=r0, window_gram=P0_inv.sum(axis=0), solo_grams=P0_inv.copy(), D=max(1, int(diameter)))

    @property
    def lambda_min(self) -> float:
        return float(np.linalg.eigvalsh(self.window_gram)[0])

    def solo_lambda_min(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.solo_grams)[:, 0]

    @property
    def ratio(self) -> float:
        return cooperative_excitation_ratio(self.r, self.lambda_min)

    def update(self, phis) -> "ExcitationLedger":
        """Ingest one round of regressors (shape (n, m)); returns ``self``."""
        phis = np.asarray(phis, dtype=float)
        outer = phis[:, :, None] * phis[:, None, :]
        self.r += float(np.sum(phis * phis))
        self.solo_grams += outer
        self._pending.append(outer.sum(axis=0))
        while len(self._pending) > self.D - 1:
            self.window_gram = self.window_gram + self._pending.popleft()
        self.rounds += 1
        return self


def excitation_update(ledger: ExcitationLedger, phis) -> ExcitationLedger:
    return ledger.update(phis)


@dataclass
class RunRecord:
    """Time series of one seeded run.

    Row ``k`` describes the network after ``t[k]`` rounds: ``theta_err`` and
    ``xi_err`` (shape (T, n)) are the LS and sparse estimate errors at that
    time, ``zero_mask`` (T, n, m) marks exact zeros of the sparse estimates,
    and ``bound`` (T, n) is :func:`error_bound_scale` evaluated with that
    row's ``r``. ``regret``, ``r``, ``lambda_n`` and ``coop_ratio`` are
    accumulated over every round observed so far, so they lag the estimate
    index by one.
    """

    n: int
    m: int
    theta: np.ndarray
    t: list = field(default_factory=list)
    regret: list = field(default_factory=list)
    r: list = field(default_factory=list)
    lambda_n: list = field(default_factory=list)
    coop_ratio: list = field(default_factory=list)
    theta_err: list = field(default_factory=list)
    xi_err: list = field(default_factory=list)
    bound: list = field(default_factory=list)
    zero_mask: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    lambda_min_P: list = field(default_factory=list)
    solo_lambda_min: list = field(default_factory=list)
    xi: list = field(default_factory=list)

    def append(self, *, t, regret, ledger: ExcitationLedger, net) -> None:
        if self.regret and regret < self.regret[-1]:
            raise AssertionError("cumulative regret decreased")
        if self.r and ledger.r < self.r[-1]:
            raise AssertionError("r_t decreased")
        lam = ledger.lambda_min
        if self.lambda_n and lam < self.lambda_n[-1] * (1 - 1e-12):
            raise AssertionError("cooperative lambda_min decreased")
        self.t.append(int(t))
        self.regret.append(float(regret))
        self.r.append(ledger.r)
        self.lambda_n.append(lam)
        self.coop_ratio.append(cooperative_excitation_ratio(ledger.r, lam))
        self.theta_err.append(np.linalg.norm(net.theta_ls - self.theta, axis=1))
        self.xi_err.append(np.linalg.norm(net.xi - self.theta, axis=1))
        lam_P = np.linalg.eigvalsh(net.P_inv)[:, 0]
        self.bound.append(np.array([_bound(lam_P[i], net.alpha[i], ledger.r) for i in range(self.n)]))
        self.zero_mask.append(net.xi == 0)
        self.alpha.append(net.alpha.copy())
        self.lambda_min_P.append(lam_P)
        self.solo_lambda_min.append(ledger.solo_lambda_min())
        self.xi.append(net.xi.copy())

    def at(self, t: int) -> int:
        """Row index for time ``t``."""
        return self.t.index(t)

    def agreement(self) -> np.ndarray:
        """(T, n) flags: sensor's zero set equals the true one."""
        truth = self.theta == 0
        return np.all(np.array(self.zero_mask) == truth, axis=2)

    def first_agreement(self) -> list[int | None]:
        """Per sensor, the earliest recorded time from which the zero set is
        correct at every later recorded time; ``None`` if it is wrong at the
        end of the run."""
        agree = self.agreement()
        out: list[int | None] = []
        for i in range(self.n):
            col = agree[:, i]
            if not col[-1]:
                out.append(None)
                continue
            k = len(col) - 1
            while k > 0 and col[k - 1]:
                k -= 1
            out.append(self.t[k])
        return out

    # --- CSV -----------------------------------------------------------------

    def header(self) -> list[str]:
        cols = ["t", "R_t", "r_t", "lambda_n_t_min", "coop_ratio"]
        for i in range(1, self.n + 1):
            cols += [f"theta_err_{i}", f"xi_err_{i}", f"bound_{i}", f"zero_set_{i}", f"agree_{i}"]
        return cols

    def rows(self) -> list[list]:
        agree = self.agreement()
        out = []
        for k, t in enumerate(self.t):
            row = [t, self.regret[k], self.r[k], self.lambda_n[k], self.coop_ratio[k]]
            for i in range(self.n):
                zs = " ".join(str(l + 1) for l in np.flatnonzero(self.zero_mask[k][i]))
                row += [self.theta_err[k][i], self.xi_err[k][i], self.bound[k][i], zs, int(agree[k, i])]
            out.append(row)
        return out
