import numpy as np
import pytest

from coopsparse import default_config, from_dict


def random_spd(rng, m, cond):
    """SPD matrix with eigenvalues spread log-uniformly over [1, cond]."""
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    ev = np.exp(rng.uniform(0.0, np.log(cond), m))
    ev[0] = 1.0
    if m > 1:
        ev[-1] = cond
    M = (Q * ev) @ Q.T
    return 0.5 * (M + M.T)


def random_connected_edges(rng, n, extra_p=0.3):
    """Random spanning tree plus random extra edges (0-based)."""
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(0, k)])
        edges.add((min(a, b), max(a, b)))
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < extra_p:
                edges.add((a, b))
    return sorted(edges)


@pytest.fixture
def default_cfg():
    return from_dict(default_config())


# criterion number -> (passed, detail); filled by the acceptance module
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(str(k).split()[0]), str(k))):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
