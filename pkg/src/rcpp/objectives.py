"""Local objectives and the decentralized ridge-regression instance.

Agent i holds one sample (u_i, v_i) and the local loss

    f_i(x) = (u_i^T x - v_i)^2 + rho ||x||^2,

and the agents jointly minimise f = (1/n) sum_i f_i.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._backend import kernels as _default_kernels


@dataclass(frozen=True)
class LocalObjective:
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    L_i: float


@dataclass(frozen=True, eq=False)
class RidgeProblem:
    U: np.ndarray  # n x p features, row i belongs to agent i
    v: np.ndarray  # n observations
    rho: float
    seed: int | None = None
    x_star: np.ndarray = field(init=False, repr=False)
    f_star: float = field(init=False)
    L: float = field(init=False)
    mu: float = field(init=False)
    L_i: np.ndarray = field(init=False, repr=False)
    hessian: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        U = np.ascontiguousarray(self.U, dtype=float)
        v = np.ascontiguousarray(self.v, dtype=float)
        if U.ndim != 2 or v.shape != (U.shape[0],):
            raise ValueError("U must be n x p and v must have length n")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "hessian", 2.0 * (U.T @ U / self.n + self.rho * np.eye(self.p)))
        object.__setattr__(self, "x_star", ridge_solve(self))
        object.__setattr__(self, "f_star", self.value(self.x_star))
        L, mu, L_i = _smoothness(self)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "L_i", L_i)

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def p(self) -> int:
        return self.U.shape[1]

    def local_value(self, i, x) -> float:
        return float((self.U[i] @ x - self.v[i]) ** 2 + self.rho * (x @ x))

    def local_gradient(self, i, x) -> np.ndarray:
        return 2.0 * self.U[i] * (self.U[i] @ x - self.v[i]) + 2.0 * self.rho * x

    def local(self, i) -> LocalObjective:
        return LocalObjective(
            value=lambda x: self.local_value(i, x),
            gradient=lambda x: self.local_gradient(i, x),
            L_i=float(self.L_i[i]),
        )

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        res = self.U @ x - self.v
        return float(res @ res / self.n + self.rho * (x @ x))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 2.0 * self.U.T @ (self.U @ x - self.v) / self.n + 2.0 * self.rho * x

    def gradient_matrix(self, X, kernels=None) -> np.ndarray:
        """Stacked local gradients, row i evaluated at row i of X."""
        kernels = kernels or _default_kernels
        return kernels.ridge_gradient_rows(self.U, self.v, self.rho, X)

    def residual(self, x) -> float:
        """f(x) - f* through the exact quadratic form (no cancellation)."""
        e = np.asarray(x, dtype=float) - self.x_star
        return float(0.5 * e @ self.hessian @ e)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# rho={self.rho!r},seed={self.seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"u{j}" for j in range(self.p)] + ["v"])
        for ui, vi in zip(self.U, self.v):
            w.writerow([repr(float(a)) for a in ui] + [repr(float(vi))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "RidgeProblem":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise ValueError("missing '# rho=...,seed=...' header line")
        meta = dict(item.split("=", 1) for item in lines[0][1:].strip().split(","))
        rows = list(csv.reader(lines[2:]))
        data = np.array([[float(a) for a in r] for r in rows if r])
        seed = None if meta.get("seed", "None") == "None" else int(meta["seed"])
        return cls(data[:, :-1], data[:, -1], float(meta["rho"]), seed)


def ridge_gradient(problem: RidgeProblem, i, x) -> np.ndarray:
    """2 u_i (u_i^T x - v_i) + 2 rho x."""
    return problem.local_gradient(i, np.asarray(x, dtype=float))


def make_ridge(n=20, p=10, rho=0.1, noise=0.1, seed=0) -> RidgeProblem:
    """Standard-normal features, v_i = u_i^T x_true + N(0, noise^2)."""
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n, p))
    x_true = rng.standard_normal(p)
    v = U @ x_true + noise * rng.standard_normal(n)
    return RidgeProblem(U, v, rho, seed)


def ridge_solve(problem: RidgeProblem) -> np.ndarray:
    """Minimiser of the averaged ridge loss via the normal equations."""
    U, v, n, p = problem.U, problem.v, problem.n, problem.p
    A = U.T @ U / n + problem.rho * np.eye(p)
    rhs = U.T @ v / n
    return np.linalg.solve(A, rhs)


def _smoothness(problem: RidgeProblem):
    L_i = 2.0 * np.sum(problem.U**2, axis=1) + 2.0 * problem.rho
    lam_min = float(np.linalg.eigvalsh(problem.U.T @ problem.U / problem.n)[0])
    mu = 2.0 * problem.rho + 2.0 * max(lam_min, 0.0)
    return float(L_i.max()), mu, L_i


def smoothness_constants(problem: RidgeProblem):
    """(L, mu): largest local Lipschitz constant and the strong-convexity modulus."""
    return problem.L, problem.mu
