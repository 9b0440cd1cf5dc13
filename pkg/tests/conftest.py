import numpy as np
import pytest

from rcpp.compressors import ScalingSchedule, make_compressor
from rcpp.core import RunConfig
from rcpp.digraph import build_mixing, make_ring
from rcpp.objectives import make_ridge


def closure(n, edges):
    """Boolean transitive closure by repeated squaring (reachability oracle)."""
    A = np.eye(n, dtype=bool)
    for i, j in edges:
        A[i, j] = True
    while True:
        B = (A.astype(int) @ A.astype(int)) > 0
        if (B == A).all():
            return A
        A = B


@pytest.fixture(scope="session")
def default_mixing():
    return build_mixing(make_ring(20, 20, seed=0), seed=0)


@pytest.fixture(scope="session")
def default_problem():
    return make_ridge(20, 10, 0.1, 0.1, seed=0)


@pytest.fixture
def small_setup():
    """5-agent instance used by the exact-equivalence checks."""
    mix = build_mixing(make_ring(5, 3, seed=1), seed=1)
    prob = make_ridge(5, 3, 0.1, 0.1, seed=1)
    return mix, prob


def make_cfg(mixing, kind="qn", p=10, lam=0.02, alpha=0.5, gamma=0.5, c=0.995, K=100, **kw):
    comp = make_compressor(kind, p, **kw)
    return RunConfig(lam, alpha, alpha, gamma, gamma, ScalingSchedule(1.0, c), K, comp, mixing)
