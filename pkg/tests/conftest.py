import sys

import numpy as np
import pytest


def central_fd(f, a, h=1e-6):
    """Central finite-difference gradient of scalar ``f`` at matrix ``a``."""
    g = np.zeros_like(a)
    for idx in np.ndindex(a.shape):
        ap = a.copy()
        am = a.copy()
        ap[idx] += h
        am[idx] -= h
        g[idx] = (f(ap) - f(am)) / (2 * h)
    return g


def rel_err(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def planted_nonneg(m, n, k, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(0, 1, (m, k)) @ rng.uniform(0, 1, (n, k)).T


def block_data(seed, noise=0.1):
    """10x8 non-negative data with a planted 2x2 block structure, rows and
    columns shuffled.  Returns ``(x, row_labels, col_labels)``."""
    rng = np.random.default_rng(seed)
    rows = np.repeat([0, 1], 5)
    cols = np.repeat([0, 1], 4)
    x = (rows[:, None] == cols[None, :]).astype(float) + noise * rng.uniform(size=(10, 8))
    pr = rng.permutation(10)
    pc = rng.permutation(8)
    return x[pr][:, pc], rows[pr], cols[pc]


def cluster_accuracy(labels, truth):
    """Best agreement over the two possible label matchings (2 clusters)."""
    acc = np.mean(labels == truth)
    return max(acc, 1 - acc)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def planted_completion(seed):
    """Rank-2 Gaussian 20x20 matrix with roughly half of the entries observed."""
    rng = np.random.default_rng(300 + seed)
    x = rng.standard_normal((20, 2)) @ rng.standard_normal((20, 2)).T
    o = (rng.uniform(size=x.shape) < 0.5).astype(float)
    return x, o


def supervised_instance(seed, distractor=0.5):
    """30 instances x 20 features, rows 0-19 train.

    Responses are linear in a planted non-negative rank-2 factor ``U*``;
    X holds ``U* V*ᵀ`` plus a rank-1 non-negative nuisance component that
    carries no information about the response.
    """
    rng = np.random.default_rng(1000 + seed)
    us = rng.uniform(0, 1, (30, 2))
    vs = rng.uniform(0, 1, (20, 2))
    x = us @ vs.T + distractor * np.outer(rng.uniform(0, 1, 30), rng.uniform(0, 1, 20))
    y = us @ np.array([1.0, -1.0])
    return x, y


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
