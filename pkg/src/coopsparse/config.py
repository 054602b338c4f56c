"""Experiment configuration: JSON <-> validated dataclasses.

Sensor numbers in the JSON edge list are 1-based.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

MODES = ("distributed", "non_cooperative", "ls_only")

DEFAULT_CONFIG = {
    "graph": {"n": 6, "edges": [[1, 2], [2, 3], [3, 4], [4, 5], [5, 6], [6, 1]], "weights": "metropolis"},
    "model": {
        "theta": [0.8, 1.6, 0.0, 0.0, 0.0],
        "noise": {"kind": "gaussian", "variance": 0.1},
        "regressor": {"kind": "single_coordinate", "A_scale": 1.1, "eps_variance": 0.2, "x0": 1.0},
    },
    "estimator": {
        "P0_scale": 1.0,
        "theta0": [1.0, 1.0, 1.0, 1.0, 1.0],
        "alpha": {"c": 1.0, "p": 0.75},
        "solver": {"tol": 1e-10, "max_iters": 100000, "kkt_rel": 1e-8},
    },
    "T": 200,
    "S": 100,
    "seed": 20220,
    "mode": "distributed",
}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    edges: tuple
    adjacency: tuple | None
    theta: tuple
    noise_kind: str
    noise_variance: float
    regressor: dict
    replay: str | None
    P0_scale: float
    theta0: tuple
    alpha_c: float
    alpha_p: float
    tol: float
    max_iters: int
    kkt_rel: float
    T: int
    S: int
    seed: int
    mode: str

    @property
    def m(self) -> int:
        return len(self.theta)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        raw = self.to_dict()
        for key, value in kw.items():
            if value is None:
                continue
            if key in ("T", "S", "seed", "mode"):
                raw[key] = value
            elif key == "alpha_p":
                raw["estimator"]["alpha"]["p"] = value
            else:
                raise KeyError(key)
        return from_dict(raw)

    def to_dict(self) -> dict:
        graph = {"n": self.n, "edges": [list(e) for e in self.edges], "weights": "metropolis"}
        if self.adjacency is not None:
            graph["weights"] = "explicit"
            graph["adjacency"] = [list(r) for r in self.adjacency]
        model = {"theta": list(self.theta), "noise": {"kind": self.noise_kind, "variance": self.noise_variance}}
        if self.replay is not None:
            model["replay"] = self.replay
        else:
            model["regressor"] = dict(self.regressor)
        return {
            "graph": graph,
            "model": model,
            "estimator": {
                "P0_scale": self.P0_scale,
                "theta0": list(self.theta0),
                "alpha": {"c": self.alpha_c, "p": self.alpha_p},
                "solver": {"tol": self.tol, "max_iters": self.max_iters, "kkt_rel": self.kkt_rel},
            },
            "T": self.T,
            "S": self.S,
            "seed": self.seed,
            "mode": self.mode,
        }


def default_config() -> dict:
    return copy.deepcopy(DEFAULT_CONFIG)


def _get(d: dict, key: str, path: str, default=...):
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object")
    if key not in d:
        if default is ...:
            raise ConfigError(f"{path}.{key}: required" if path else f"{key}: required")
        return default
    return d[key]


def _number(v, path: str, *, positive=False, nonneg=False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    v = float(v)
    if positive and not v > 0:
        raise ConfigError(f"{path}: must be > 0")
    if nonneg and not v >= 0:
        raise ConfigError(f"{path}: must be >= 0")
    return v


def _int(v, path: str, minimum: int) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    if v < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}")
    return v


def _vector(v, path: str, m: int | None = None) -> tuple:
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{path}: expected a non-empty list of numbers")
    out = tuple(_number(x, f"{path}[{k}]") for k, x in enumerate(v))
    if m is not None and len(out) != m:
        raise ConfigError(f"{path}: expected {m} entries, got {len(out)}")
    return out


def from_dict(raw: dict) -> ExperimentConfig:
    graph = _get(raw, "graph", "")
    n = _int(_get(graph, "n", "graph"), "graph.n", 1)
    edges_raw = _get(graph, "edges", "graph", [])
    if not isinstance(edges_raw, list):
        raise ConfigError("graph.edges: expected a list of [a, b] pairs")
    edges = []
    for k, e in enumerate(edges_raw):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in e)):
            raise ConfigError(f"graph.edges[{k}]: expected a pair of integers")
        if not all(1 <= v <= n for v in e):
            raise ConfigError(f"graph.edges[{k}]: node outside 1..{n}")
        edges.append(tuple(e))
    weights = _get(graph, "weights", "graph", "metropolis")
    adjacency = None
    if weights == "explicit" or "adjacency" in graph:
        adj = _get(graph, "adjacency", "graph")
        if not (isinstance(adj, list) and len(adj) == n):
            raise ConfigError(f"graph.adjacency: expected {n} rows")
        adjacency = tuple(_vector(row, f"graph.adjacency[{k}]", n) for k, row in enumerate(adj))
    elif weights != "metropolis":
        raise ConfigError(f"graph.weights: expected 'metropolis' or 'explicit', got {weights!r}")

    model = _get(raw, "model", "")
    theta = _vector(_get(model, "theta", "model"), "model.theta")
    m = len(theta)
    noise = _get(model, "noise", "model", {"kind": "gaussian", "variance": 0.0})
    noise_kind = _get(noise, "kind", "model.noise")
    if noise_kind not in ("gaussian", "uniform"):
        raise ConfigError(f"model.noise.kind: expected 'gaussian' or 'uniform', got {noise_kind!r}")
    noise_variance = _number(_get(noise, "variance", "model.noise"), "model.noise.variance", nonneg=True)
    replay = _get(model, "replay", "model", None)
    regressor: dict = {}
    if replay is not None:
        if not isinstance(replay, str):
            raise ConfigError("model.replay: expected a file path")
    else:
        reg = _get(model, "regressor", "model")
        kind = _get(reg, "kind", "model.regressor")
        if kind == "single_coordinate":
            regressor = {
                "kind": kind,
                "A_scale": _number(_get(reg, "A_scale", "model.regressor", 1.1), "model.regressor.A_scale"),
                "eps_variance": _number(
                    _get(reg, "eps_variance", "model.regressor", 0.2), "model.regressor.eps_variance", nonneg=True
                ),
                "x0": _number(_get(reg, "x0", "model.regressor", 1.0), "model.regressor.x0"),
            }
        elif kind == "gaussian":
            regressor = {
                "kind": kind,
                "variance": _number(
                    _get(reg, "variance", "model.regressor", 1.0), "model.regressor.variance", positive=True
                ),
            }
        else:
            raise ConfigError(f"model.regressor.kind: expected 'single_coordinate' or 'gaussian', got {kind!r}")

    est = _get(raw, "estimator", "", {})
    P0_scale = _number(_get(est, "P0_scale", "estimator", 1.0), "estimator.P0_scale", positive=True)
    theta0 = _vector(_get(est, "theta0", "estimator", [0.0] * m), "estimator.theta0", m)
    alpha = _get(est, "alpha", "estimator", {})
    alpha_c = _number(_get(alpha, "c", "estimator.alpha", 1.0), "estimator.alpha.c", nonneg=True)
    alpha_p = _number(_get(alpha, "p", "estimator.alpha", 0.75), "estimator.alpha.p", nonneg=True)
    solver = _get(est, "solver", "estimator", {})
    tol = _number(_get(solver, "tol", "estimator.solver", 1e-10), "estimator.solver.tol", positive=True)
    max_iters = _int(_get(solver, "max_iters", "estimator.solver", 100000), "estimator.solver.max_iters", 1)
    kkt_rel = _number(_get(solver, "kkt_rel", "estimator.solver", 1e-8), "estimator.solver.kkt_rel", positive=True)

    T = _int(_get(raw, "T", ""), "T", 1)
    S = _int(_get(raw, "S", "", 1), "S", 1)
    seed = _int(_get(raw, "seed", "", 0), "seed", 0)
    mode = _get(raw, "mode", "", "distributed")
    if mode not in MODES:
        raise ConfigError(f"mode: expected one of {', '.join(MODES)}, got {mode!r}")

    return ExperimentConfig(
        n=n,
        edges=tuple(edges),
        adjacency=adjacency,
        theta=theta,
        noise_kind=noise_kind,
        noise_variance=noise_variance,
        regressor=regressor,
        replay=replay,
        P0_scale=P0_scale,
        theta0=theta0,
        alpha_c=alpha_c,
        alpha_p=alpha_p,
        tol=tol,
        max_iters=max_iters,
        kkt_rel=kkt_rel,
        T=T,
        S=S,
        seed=seed,
        mode=mode,
    )


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return from_dict(raw)
