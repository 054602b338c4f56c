"""Per-sensor observation streams for the linear regression model.

Each sensor owns two random substreams (regressor excitation and observation
noise) derived from the run seed, so a sensor's draws never depend on what
the other sensors are configured to do.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

REGRESSOR_STREAM = 0
NOISE_STREAM = 1


def substream(seed: int, sensor: int, purpose: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, sensor, purpose)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(sensor), int(purpose)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class TrueParameter:
    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(-1)
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def m(self) -> int:
        return self.theta.size

    @property
    def zero_set(self) -> frozenset[int]:
        return frozenset(int(l) for l in np.flatnonzero(self.theta == 0))

    @property
    def d(self) -> int:
        return self.m - len(self.zero_set)


# --- noise sources -----------------------------------------------------------


@dataclass(frozen=True)
class GaussianNoise:
    variance: float

    def draw(self, rng: np.random.Generator) -> float:
        return float(np.sqrt(self.variance) * rng.standard_normal())


@dataclass(frozen=True)
class UniformNoise:
    """Zero-mean uniform noise on ``[-h, h]`` with ``h = sqrt(3 * variance)``."""

    variance: float

    def draw(self, rng: np.random.Generator) -> float:
        h = np.sqrt(3.0 * self.variance)
        return float(rng.uniform(-h, h))


def make_noise(kind: str, variance: float):
    if kind == "gaussian":
        return GaussianNoise(variance)
    if kind == "uniform":
        return UniformNoise(variance)
    raise ValueError(f"unknown noise kind {kind!r}")


# --- regressor generators ----------------------------------------------------


@dataclass
class StateSpaceRegressor:
    """Linear state-space regressor ``x <- A x + B eps``, ``phi = C x``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    x: np.ndarray
    eps_variance: float

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.B = np.asarray(self.B, dtype=float).reshape(-1)
        self.C = np.asarray(self.C, dtype=float)
        self.x = np.array(self.x, dtype=float).reshape(-1)
        m = self.x.size
        if self.A.shape != (m, m) or self.B.shape != (m,) or self.C.shape[1] != m:
            raise ValueError(
                f"state-space shapes disagree: A{self.A.shape} B{self.B.shape} C{self.C.shape} x{self.x.shape}"
            )
        if self.eps_variance < 0:
            raise ValueError("eps_variance must be >= 0")

    def step(self, rng: np.random.Generator) -> np.ndarray:
        return step_regressor(self, rng)


def step_regressor(r: StateSpaceRegressor, rng: np.random.Generator) -> np.ndarray:
    """Advance the state one step and return the new regression vector."""
    eps = np.sqrt(r.eps_variance) * rng.standard_normal()
    r.x = r.A @ r.x + r.B * eps
    return r.C @ r.x


def excited_coordinate(sensor: int, m: int) -> int:
    """Coordinate excited by ``sensor`` in the single-coordinate setup.

    Sensors cycle through the coordinates in order, so sensor ``m`` wraps back
    to coordinate 0.
    """
    return sensor % m


def single_coordinate_regressor(
    sensor: int, m: int, a_scale: float = 1.1, eps_variance: float = 0.2, x0: float = 1.0
) -> StateSpaceRegressor:
    """Regressor that only ever excites one coordinate.

    ``A = a_scale * I``, ``B = e_j`` and ``C = e_j e_j^T`` with ``j`` from
    :func:`excited_coordinate`; the state starts at ``x0`` in every entry.
    """
    j = excited_coordinate(sensor, m)
    e = np.zeros(m)
    e[j] = 1.0
    return StateSpaceRegressor(
        A=a_scale * np.eye(m), B=e, C=np.outer(e, e), x=np.full(m, float(x0)), eps_variance=eps_variance
    )


@dataclass
class GaussianRegressor:
    """i.i.d. ``N(0, variance * I)`` regression vectors."""

    m: int
    variance: float = 1.0

    def step(self, rng: np.random.Generator) -> np.ndarray:
        return np.sqrt(self.variance) * rng.standard_normal(self.m)


def observe(theta: TrueParameter, phi: np.ndarray, rng: np.random.Generator, noise) -> float:
    """Scalar output ``phi . theta + w`` with ``w`` drawn from ``noise``."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != theta.theta.shape:
        raise ValueError(f"phi has shape {phi.shape}, expected {theta.theta.shape}")
    return float(phi @ theta.theta) + noise.draw(rng)


# --- streams -----------------------------------------------------------------


@dataclass
class ObservationStream:
    """Synthetic per-sensor data: one ``(phi, y)`` pair per sensor per round."""

    theta: TrueParameter
    regressors: list
    noise: object
    seed: int
    _reg_rngs: list = field(init=False, repr=False)
    _noise_rngs: list = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.regressors)
        self._reg_rngs = [substream(self.seed, i, REGRESSOR_STREAM) for i in range(n)]
        self._noise_rngs = [substream(self.seed, i, NOISE_STREAM) for i in range(n)]

    @property
    def n(self) -> int:
        return len(self.regressors)

    def next_round(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``phis`` of shape (n, m) and ``ys`` of shape (n,)."""
        m = self.theta.m
        phis = np.empty((self.n, m))
        ys = np.empty(self.n)
        for i, reg in enumerate(self.regressors):
            phis[i] = reg.step(self._reg_rngs[i])
            ys[i] = observe(self.theta, phis[i], self._noise_rngs[i], self.noise)
        return phis, ys


class ReplayStream:
    """Replays recorded rounds from a CSV with columns ``t, i, phi_1..phi_m, y``.

    ``t`` is the 0-based round and ``i`` the 1-based sensor number.
    """

    def __init__(self, rounds: list[tuple[np.ndarray, np.ndarray]]):
        self._rounds = rounds
        self._next = 0

    @classmethod
    def from_csv(cls, path, n: int, m: int) -> "ReplayStream":
        by_round: dict[int, dict[int, tuple[np.ndarray, float]]] = {}
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            expected = ["t", "i"] + [f"phi_{l}" for l in range(1, m + 1)] + ["y"]
            if header != expected:
                raise ValueError(f"{path}: header {header} does not match {expected}")
            for row in reader:
                t, i = int(row[0]), int(row[1]) - 1
                if not 0 <= i < n:
                    raise ValueError(f"{path}: sensor {i + 1} outside 1..{n}")
                by_round.setdefault(t, {})[i] = (np.array(row[2 : 2 + m], dtype=float), float(row[-1]))
        rounds = []
        for t in range(len(by_round)):
            if t not in by_round or len(by_round[t]) != n:
                raise ValueError(f"{path}: round {t} is missing or incomplete")
            rows = by_round[t]
            rounds.append((np.array([rows[i][0] for i in range(n)]), np.array([rows[i][1] for i in range(n)])))
        return cls(rounds)

    def __len__(self) -> int:
        return len(self._rounds)

    def next_round(self) -> tuple[np.ndarray, np.ndarray]:
        if self._next >= len(self._rounds):
            raise IndexError(f"replay exhausted after {len(self._rounds)} rounds")
        phis, ys = self._rounds[self._next]
        self._next += 1
        return phis.copy(), ys.copy()


def write_replay(path, rounds) -> None:
    """Write ``[(phis, ys), ...]`` in the replay CSV format."""
    rounds = list(rounds)
    m = rounds[0][0].shape[1]
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "i"] + [f"phi_{l}" for l in range(1, m + 1)] + ["y"])
        for t, (phis, ys) in enumerate(rounds):
            for i in range(phis.shape[0]):
                w.writerow([t, i + 1, *(repr(float(v)) for v in phis[i]), repr(float(ys[i]))])
