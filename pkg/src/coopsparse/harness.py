"""Seeded multi-run experiments and their CSV artifacts."""

from __future__ import annotations

import csv
import hashlib
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig
from .estimator import SparseSettings, init_state, sparse_round, state_header, state_rows
from .graph import GraphError, NetworkGraph, diameter, is_connected, metropolis_weights
from .metrics import ExcitationLedger, RunRecord, regret_increment
from .model import (
    GaussianRegressor,
    ObservationStream,
    ReplayStream,
    TrueParameter,
    make_noise,
    single_coordinate_regressor,
)

log = logging.getLogger(__name__)


def derive_seed(seed: int, s: int) -> int:
    """64-bit seed for repeat ``s``: BLAKE2b-64 over the two little-endian
    64-bit integers."""
    data = int(seed).to_bytes(8, "little", signed=False) + int(s).to_bytes(8, "little", signed=False)
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def build_graph(cfg: ExperimentConfig) -> NetworkGraph:
    edges = [(a - 1, b - 1) for a, b in cfg.edges]
    try:
        if cfg.adjacency is not None:
            g = NetworkGraph.from_adjacency(np.array(cfg.adjacency), edges)
        else:
            g = metropolis_weights(edges, cfg.n)
    except GraphError as exc:
        raise ConfigError(f"graph: {exc}") from None
    if not is_connected(g):
        raise ConfigError("graph: communication graph is not connected; cooperative estimation requires connectivity")
    return g


def build_stream(cfg: ExperimentConfig, seed: int):
    theta = TrueParameter(np.array(cfg.theta))
    if cfg.replay is not None:
        try:
            return ReplayStream.from_csv(cfg.replay, cfg.n, cfg.m)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"model.replay: {exc}") from None
    reg = cfg.regressor
    if reg["kind"] == "single_coordinate":
        regs = [
            single_coordinate_regressor(i, cfg.m, reg["A_scale"], reg["eps_variance"], reg["x0"]) for i in range(cfg.n)
        ]
    else:
        regs = [GaussianRegressor(cfg.m, reg["variance"]) for _ in range(cfg.n)]
    return ObservationStream(theta, regs, make_noise(cfg.noise_kind, cfg.noise_variance), seed)


def settings_for(cfg: ExperimentConfig, mode: str) -> SparseSettings:
    return SparseSettings(
        c=0.0 if mode == "ls_only" else cfg.alpha_c,
        p=cfg.alpha_p,
        tol=cfg.tol,
        max_iters=cfg.max_iters,
        kkt_rel=cfg.kkt_rel,
    )


def simulate(
    cfg: ExperimentConfig,
    seed: int,
    mode: str | None = None,
    states: list | None = None,
    solver_debug: list | None = None,
) -> RunRecord:
    """Run ``cfg.T`` rounds with one seed and return the run's record.

    ``states`` and ``solver_debug``, when given as lists, collect per-round
    state snapshot rows and ``(t, sensor, problem, report)`` tuples.
    """
    mode = mode or cfg.mode
    g = build_graph(cfg)
    weights = metropolis_weights([], cfg.n) if mode == "non_cooperative" else g
    stream = build_stream(cfg, seed)
    if isinstance(stream, ReplayStream) and len(stream) < cfg.T:
        raise ConfigError(f"model.replay: holds {len(stream)} rounds but T={cfg.T}")
    theta = np.array(cfg.theta)
    P0 = cfg.P0_scale * np.eye(cfg.m)
    net = init_state(cfg.n, cfg.m, P0, np.array(cfg.theta0))
    ledger = ExcitationLedger.start(net.P_inv, diameter(g))
    settings = settings_for(cfg, mode)
    record = RunRecord(n=cfg.n, m=cfg.m, theta=theta)
    regret = 0.0
    for _ in range(cfg.T):
        phis, ys = stream.next_round()
        regret += regret_increment(net.xi, phis, theta)
        ledger.update(phis)
        dbg = [] if solver_debug is not None else None
        net = sparse_round(net, weights, phis, ys, settings, debug=dbg)
        if dbg is not None:
            solver_debug.extend((net.t, i, prob, rep) for i, prob, rep in dbg)
        if states is not None:
            states.extend(state_rows(net))
        record.append(t=net.t, regret=regret, ledger=ledger, net=net)
    return record


# --- CSV output --------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _vec(v) -> str:
    return " ".join(repr(float(x)) for x in np.ravel(v))


def _one_repeat(args) -> tuple[int, RunRecord, list | None, list | None]:
    cfg, s, mode, keep_states, keep_debug = args
    states = [] if keep_states else None
    debug = [] if keep_debug else None
    rec = simulate(cfg, derive_seed(cfg.seed, s), mode, states=states, solver_debug=debug)
    if debug is not None:
        debug = [
            [t, i + 1, _vec(p.Psi), _vec(p.q), _vec(p.gamma), _vec(r.beta), r.kkt_residual] for t, i, p, r in debug
        ]
    return s, rec, states, debug


def run_repeats(
    cfg: ExperimentConfig, mode: str | None = None, workers: int = 1, states: bool = False, solver_debug: bool = False
):
    """Run all ``cfg.S`` repeats; yields ``(s, record, states, debug)`` in repeat order."""
    jobs = [(cfg, s, mode, states, solver_debug) for s in range(cfg.S)]
    if workers > 1 and cfg.S > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            yield from ex.map(_one_repeat, jobs)
    else:
        for job in jobs:
            yield _one_repeat(job)


def _mean_err(rec: RunRecord, which: str = "xi") -> np.ndarray:
    arr = np.array(rec.xi_err if which == "xi" else rec.theta_err)
    return arr.mean(axis=1)


SUMMARY_HEADER = [
    "t",
    "xi_err_mean",
    "xi_err_std",
    "theta_err_mean",
    "theta_err_std",
    "R_t_mean",
    "R_t_std",
    "agree_fraction",
]


def summary_rows(records: list[RunRecord]) -> list[list]:
    xi = np.array([_mean_err(r, "xi") for r in records])
    th = np.array([_mean_err(r, "theta") for r in records])
    R = np.array([r.regret for r in records])
    agree = np.array([r.agreement().all(axis=1) for r in records])
    rows = []
    for k, t in enumerate(records[0].t):
        rows.append(
            [t, xi[:, k].mean(), xi[:, k].std(), th[:, k].mean(), th[:, k].std(), R[:, k].mean(), R[:, k].std(),
             agree[:, k].mean()]
        )
    return rows


def run_experiment(
    cfg: ExperimentConfig, out_dir, workers: int = 1, states: bool = False, solver_debug: bool = False
) -> list[RunRecord]:
    """Run every repeat and write ``run_<s>.csv``, ``summary.csv`` and ``t0.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    t0_rows = []
    for s, rec, st, dbg in run_repeats(cfg, workers=workers, states=states, solver_debug=solver_debug):
        write_csv(out / f"run_{s}.csv", rec.header(), rec.rows())
        if st is not None:
            write_csv(out / f"states_{s}.csv", state_header(cfg.m), st)
        if dbg is not None:
            write_csv(out / f"solver_debug_{s}.csv", ["t", "i", "Psi", "q", "gamma", "beta", "kkt"], dbg)
        for i, t0 in enumerate(rec.first_agreement()):
            t0_rows.append([s, derive_seed(cfg.seed, s), i + 1, "" if t0 is None else t0])
        records.append(rec)
    write_csv(out / "summary.csv", SUMMARY_HEADER, summary_rows(records))
    write_csv(out / "t0.csv", ["repeat", "seed", "i", "T0"], t0_rows)
    return records


COMPARE_HEADER = ["t", "distributed_mean", "distributed_std", "non_cooperative_mean", "non_cooperative_std"]


def compare_modes(cfg: ExperimentConfig, out_dir, workers: int = 1) -> dict[str, list[RunRecord]]:
    """Distributed vs non-cooperative runs on identical seeds -> ``compare.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = {}
    for mode in ("distributed", "non_cooperative"):
        results[mode] = [rec for _, rec, _, _ in run_repeats(cfg, mode=mode, workers=workers)]
    d = np.array([_mean_err(r) for r in results["distributed"]])
    nc = np.array([_mean_err(r) for r in results["non_cooperative"]])
    rows = [
        [t, d[:, k].mean(), d[:, k].std(), nc[:, k].mean(), nc[:, k].std()]
        for k, t in enumerate(results["distributed"][0].t)
    ]
    write_csv(out / "compare.csv", COMPARE_HEADER, rows)
    return results


def excitation_header(n: int) -> list[str]:
    return ["t", "r_t", "lambda_n_t_min", "coop_ratio"] + [f"solo_lambda_min_{i}" for i in range(1, n + 1)]


def diagnose_excitation(cfg: ExperimentConfig, out_dir) -> RunRecord:
    """Excitation curves for repeat 0 -> ``excitation.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rec = simulate(cfg, derive_seed(cfg.seed, 0))
    rows = [
        [t, rec.r[k], rec.lambda_n[k], rec.coop_ratio[k], *rec.solo_lambda_min[k]] for k, t in enumerate(rec.t)
    ]
    write_csv(out / "excitation.csv", excitation_header(cfg.n), rows)
    return rec
