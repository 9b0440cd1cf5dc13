"""Directed communication graphs and push/pull mixing matrices.

Edges are ordered pairs ``(i, j)`` meaning node ``i`` can transmit to node
``j``.  The row-stochastic matrix ``R`` weighs in-neighbourhoods, the
column-stochastic matrix ``C`` weighs out-neighbourhoods.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import AssumptionViolation


@dataclass(frozen=True)
class Digraph:
    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"node count must be positive, got {self.n}")
        seen = set()
        for i, j in self.edges:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Digraph":
        return cls(n, tuple((int(i), int(j)) for i, j in edges))

    def successors(self) -> list[list[int]]:
        out = [[] for _ in range(self.n)]
        for i, j in self.edges:
            out[i].append(j)
        return out

    def reverse(self) -> "Digraph":
        return Digraph(self.n, tuple((j, i) for i, j in self.edges))

    def with_self_loops(self) -> "Digraph":
        extra = [(i, i) for i in range(self.n) if (i, i) not in set(self.edges)]
        return Digraph(self.n, self.edges + tuple(extra))

    def out_degrees(self) -> np.ndarray:
        """Number of distinct neighbours each node transmits to, self excluded."""
        deg = np.zeros(self.n, dtype=np.int64)
        for i, j in self.edges:
            if i != j:
                deg[i] += 1
        return deg

    def to_edgelist(self) -> str:
        lines = [str(self.n)] + [f"{i} {j}" for i, j in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str) -> "Digraph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or len(rows[0]) != 1:
            raise ValueError("edge list must start with a line holding the node count")
        n = int(rows[0][0])
        edges = []
        for lineno, parts in enumerate(rows[1:], start=2):
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'i j', got {' '.join(parts)!r}")
            edges.append((int(parts[0]), int(parts[1])))
        return cls.from_edges(n, edges)


def make_ring(n: int, extra_edges: int = 0, seed=None) -> Digraph:
    """Directed cycle 0->1->...->n-1->0 with self-loops plus random chords."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    edges = [(i, i) for i in range(n)]
    if n > 1:
        edges += [(i, (i + 1) % n) for i in range(n)]
    available = max(n * (n - 1) - n, 0) if n > 1 else 0
    if extra_edges < 0 or extra_edges > available:
        raise ValueError(f"extra_edges={extra_edges} exceeds the {available} free slots for n={n}")
    if extra_edges:
        taken = set(edges)
        free = [(i, j) for i in range(n) for j in range(n) if (i, j) not in taken]
        rng = np.random.default_rng(seed)
        pick = rng.choice(len(free), size=extra_edges, replace=False)
        edges += [free[p] for p in sorted(pick)]
    return Digraph.from_edges(n, edges)


def reachable_from(g: Digraph, src: int) -> set[int]:
    succ = g.successors()
    seen = {src}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in succ[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def is_strongly_connected(g: Digraph) -> bool:
    # forward and backward reachability from node 0 suffices
    return len(reachable_from(g, 0)) == g.n and len(reachable_from(g.reverse(), 0)) == g.n


def root_set(g: Digraph) -> set[int]:
    """Nodes with a directed path to every node (roots of spanning trees)."""
    return {i for i in range(g.n) if len(reachable_from(g, i)) == g.n}


@dataclass(frozen=True)
class MixingPair:
    R: np.ndarray
    C: np.ndarray
    u_R: np.ndarray
    u_C: np.ndarray
    g_R: Digraph
    g_C: Digraph

    @property
    def n(self) -> int:
        return self.R.shape[0]

    def check(self, tol_stoch=1e-12, tol_eig=1e-9) -> list[str]:
        """Return the list of violated invariants (empty when valid)."""
        R, C, uR, uC = self.R, self.C, self.u_R, self.u_C
        n = self.n
        problems = []
        if (R < 0).any() or (C < 0).any():
            problems.append("negative weight")
        if np.abs(R.sum(axis=1) - 1).max() >= tol_stoch:
            problems.append("R is not row-stochastic")
        if np.abs(C.sum(axis=0) - 1).max() >= tol_stoch:
            problems.append("C is not column-stochastic")
        if not _support_ok(R, self.g_R) or not _support_ok(C, self.g_C):
            problems.append("weight outside the graph support")
        if np.abs(uR @ R - uR).max() >= tol_eig or abs(uR.sum() - n) >= tol_eig:
            problems.append("u_R is not the normalised left Perron vector of R")
        if np.abs(C @ uC - uC).max() >= tol_eig or abs(uC.sum() - n) >= tol_eig:
            problems.append("u_C is not the normalised right Perron vector of C")
        if (uR < 0).any() or (uC < 0).any():
            problems.append("negative eigenvector entry")
        if not uR @ uC > 0:
            problems.append("u_R^T u_C is not positive")
        return problems


def _support_ok(W: np.ndarray, g: Digraph) -> bool:
    allowed = np.eye(g.n, dtype=bool)
    for i, j in g.edges:
        allowed[j, i] = True  # W[child, parent]
    return not (W[~allowed] > 0).any()


def perron_vector(M: np.ndarray, tol=1e-12, max_iter=100_000) -> np.ndarray:
    """Fixed point of v <- M v, normalised to sum n."""
    n = M.shape[0]
    v = np.ones(n)
    for _ in range(max_iter):
        w = M @ v
        w *= n / w.sum()
        if np.abs(w - v).max() < tol:
            return w
        v = w
    raise RuntimeError(f"power iteration did not reach residual {tol} in {max_iter} steps")


def build_mixing(g_R: Digraph, g_C: Digraph | None = None, seed=None) -> MixingPair:
    """Equal-weight R over in-neighbourhoods of g_R and C over out-neighbourhoods of g_C.

    With a seed, each weight is multiplied by an independent factor in
    [0.5, 1.5) and the rows of R / columns of C are renormalised.
    """
    g_C = g_R if g_C is None else g_C
    if g_R.n != g_C.n:
        raise ValueError("g_R and g_C must have the same node count")
    g_R = g_R.with_self_loops()
    g_C = g_C.with_self_loops()
    common = root_set(g_R) & root_set(g_C.reverse())
    if not common:
        raise AssumptionViolation(
            "graph assumption violated: the root sets of G_R and G_{C^T} do not intersect"
        )
    n = g_R.n
    R = np.zeros((n, n))
    for i, j in g_R.edges:
        R[j, i] = 1.0
    C = np.zeros((n, n))
    for i, j in g_C.edges:
        C[j, i] = 1.0
    if seed is not None:
        rng = np.random.default_rng(seed)
        R *= rng.uniform(0.5, 1.5, size=(n, n))
        C *= rng.uniform(0.5, 1.5, size=(n, n))
    R /= R.sum(axis=1, keepdims=True)
    C /= C.sum(axis=0, keepdims=True)
    u_R = perron_vector(R.T)
    u_C = perron_vector(C)
    return MixingPair(R, C, u_R, u_C, g_R, g_C)
