"""Robust compressed push-pull iteration, the plain push-pull baseline and the run driver.

Rows of every n x p matrix belong to agents.  One RCPP iteration performs,
for the decision variables (mixing with R) and then the trackers (mixing
with C), the sequence

    local update -> compress (V~ - H)/s_k -> recover H + s_k * payload
    -> mix received payloads -> relax H, H_W -> consensus correction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from ._backend import kernels as _default_kernels
from .compressors import CompressorSpec, NoiseStream, ScalingSchedule
from .digraph import MixingPair
from .errors import DivergenceError
from .harness import record

ALGORITHMS = ("rcpp", "rcpp_static", "pushpull")
DIVERGENCE_NORM = 1e12


@dataclass
class AlgoState:
    X: np.ndarray
    Y: np.ndarray
    Hx: np.ndarray
    Hy: np.ndarray
    HR: np.ndarray
    HC: np.ndarray
    grad: np.ndarray  # gradient stack at the current X
    k: int = 0

    def copy(self) -> "AlgoState":
        return AlgoState(
            self.X.copy(), self.Y.copy(), self.Hx.copy(), self.Hy.copy(),
            self.HR.copy(), self.HC.copy(), self.grad.copy(), self.k,
        )


def init_state(objective, X0=None, kernels=None) -> AlgoState:
    """Y0 = grad F(X0); every auxiliary matrix starts at zero."""
    n, p = objective.n, objective.p
    X = np.zeros((n, p)) if X0 is None else np.array(X0, dtype=float, order="C")
    if X.shape != (n, p):
        raise ValueError(f"X0 must be {n} x {p}, got {X.shape}")
    G = objective.gradient_matrix(X, kernels)
    Z = np.zeros((n, p))
    return AlgoState(X, G.copy(), Z.copy(), Z.copy(), Z.copy(), Z.copy(), G)


def _senders(W: np.ndarray) -> np.ndarray:
    # agent j transmits to every i != j with W[i, j] > 0
    nz = W > 0
    return (nz.sum(axis=0) - np.diag(nz)).astype(np.int64)


@dataclass
class RunConfig:
    lam: np.ndarray
    alpha_x: float
    alpha_y: float
    gamma_x: float
    gamma_y: float
    schedule: ScalingSchedule
    K: int
    compressor: CompressorSpec
    mixing: MixingPair
    outdeg_R: np.ndarray = field(init=False, repr=False)
    outdeg_C: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.mixing.n
        lam = np.asarray(self.lam, dtype=float)
        self.lam = np.full(n, float(lam)) if lam.ndim == 0 else np.ascontiguousarray(lam)
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(problems))
        self.outdeg_R = _senders(self.mixing.R)
        self.outdeg_C = _senders(self.mixing.C)

    def problems(self) -> list[str]:
        out = []
        if self.lam.shape != (self.mixing.n,):
            out.append(f"need {self.mixing.n} step sizes, got {self.lam.shape}")
        elif not (self.lam > 0).all():
            out.append("step sizes must be positive")
        r = self.compressor.r
        for name in ("alpha_x", "alpha_y"):
            a = getattr(self, name)
            if not 0 < a <= 1 / r:
                out.append(f"{name}={a} must lie in (0, 1/r] = (0, {1 / r:.6g}]")
        for name in ("gamma_x", "gamma_y"):
            g = getattr(self, name)
            if not 0 < g <= 1:
                out.append(f"{name}={g} must lie in (0, 1]")
        if self.K < 0:
            out.append(f"K must be non-negative, got {self.K}")
        return out

    @property
    def lam_bar(self) -> float:
        m = self.mixing
        return float(m.u_R @ (self.lam * m.u_C) / m.n)

    @property
    def lam_hat(self) -> float:
        return float(self.lam.max())


def _check_finite(state: AlgoState):
    x = state.X
    if not (np.isfinite(x).all() and np.isfinite(state.Y).all()):
        raise DivergenceError(state.k, f"non-finite iterate at iteration {state.k}")
    if np.linalg.norm(x) > DIVERGENCE_NORM:
        raise DivergenceError(state.k, f"||X||_F exceeded {DIVERGENCE_NORM:g} at iteration {state.k}")


def rcpp_step(state: AlgoState, cfg: RunConfig, objective, stream: NoiseStream, kernels=None):
    """Advance ``state`` one RCPP iteration in place; return (state, bits sent)."""
    kern = kernels or _default_kernels
    comp = cfg.compressor
    n, p = state.X.shape
    s = cfg.schedule.s(state.k)

    Ux = stream.block(state.k, NoiseStream.ROLE_X, (n, p + 1)) if comp.randomized else None
    Xt = state.X - cfg.lam[:, None] * state.Y
    X_new, bx = kern.mix_half_step(
        Xt, state.Hx, state.HR, cfg.mixing.R, s, cfg.alpha_x, cfg.gamma_x,
        comp.code, comp.b, comp.k, comp.level, Ux, cfg.outdeg_R,
    )

    G_new = objective.gradient_matrix(X_new, kern)
    Yt = state.Y + G_new - state.grad
    Uy = stream.block(state.k, NoiseStream.ROLE_Y, (n, p + 1)) if comp.randomized else None
    Y_new, by = kern.mix_half_step(
        Yt, state.Hy, state.HC, cfg.mixing.C, s, cfg.alpha_y, cfg.gamma_y,
        comp.code, comp.b, comp.k, comp.level, Uy, cfg.outdeg_C,
    )

    state.X, state.Y, state.grad = X_new, Y_new, G_new
    state.k += 1
    _check_finite(state)
    return state, bx + by


def pushpull_step(state: AlgoState, cfg: RunConfig, objective, kernels=None):
    """Uncompressed push-pull: X <- R(X - Lam Y), Y <- C(Y + grad_new - grad_old)."""
    R, C = cfg.mixing.R, cfg.mixing.C
    X_new = R @ (state.X - cfg.lam[:, None] * state.Y)
    G_new = objective.gradient_matrix(X_new, kernels)
    Y_new = C @ (state.Y + G_new - state.grad)
    state.X, state.Y, state.grad = X_new, Y_new, G_new
    state.k += 1
    _check_finite(state)
    p = state.X.shape[1]
    return state, 64 * p * int(cfg.outdeg_R.sum() + cfg.outdeg_C.sum())


def advisory_rate(cfg: RunConfig, mu=None, theta_R=None, theta_C=None, M=None) -> float:
    """Largest contraction factor among the terms whose inputs are known.

    The consensus terms need theta_R / theta_C and the optimisation term needs
    both M and mu; those without inputs are skipped.
    """
    comp = cfg.compressor
    terms = [
        1 - cfg.alpha_x * comp.r * comp.delta / 4,
        1 - cfg.alpha_y * comp.r * comp.delta / 16,
    ]
    if M is not None and mu is not None:
        terms.append(1 - 0.5 * M * cfg.lam_hat * mu)
    if theta_R is not None:
        terms.append(1 - theta_R * cfg.gamma_x / 16)
    if theta_C is not None:
        terms.append(1 - theta_C * cfg.gamma_y / 8)
    return max(terms)


def make_schedule(cfg: RunConfig, mu_est, rate_target, c0=1.0, theta_R=None, theta_C=None, M=None) -> ScalingSchedule:
    """Geometric scale schedule s_k^2 = c0 * rate_target**k.

    ``rate_target = 1`` gives the static-scaling ablation.  Warns when the
    target does not exceed the advisory contraction factor.
    """
    if not 0 < rate_target <= 1:
        raise ValueError(f"rate_target must lie in (0, 1), or be 1 for static scaling; got {rate_target}")
    rho_t = advisory_rate(cfg, mu_est, theta_R, theta_C, M)
    if rate_target <= rho_t:
        warnings.warn(
            f"scale decay {rate_target} does not exceed the advisory rate {rho_t:.6g}; "
            "compression noise may decay faster than the iterates can follow",
            stacklevel=2,
        )
    return ScalingSchedule(c0, rate_target)


def check_step_sizes(cfg: RunConfig, L: float) -> list[str]:
    """Warn (and return the messages) when step sizes look too large for smoothness L."""
    msgs = []
    if cfg.lam_hat * L > 1:
        msgs.append(f"max step size {cfg.lam_hat:.4g} exceeds 1/L = {1 / L:.4g}")
    if cfg.lam_bar > 1 / L:
        msgs.append(f"weighted step size {cfg.lam_bar:.4g} exceeds 1/L = {1 / L:.4g}")
    for m in msgs:
        warnings.warn(m, stacklevel=2)
    return msgs


def run(cfg: RunConfig, objective, algorithm="rcpp", seed=0, X0=None, kernels=None, monitor=None):
    """Iterate ``cfg.K`` times and return one IterationRecord per iterate (K + 1 total).

    ``rcpp_static`` holds the scale at sqrt(c0).  ``monitor(state)`` is called
    after initialisation and after every step.  On divergence the records so
    far are attached to the raised DivergenceError.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    if algorithm == "rcpp_static":
        cfg = replace(cfg, schedule=ScalingSchedule(cfg.schedule.c0, 1.0))
    kern = kernels or _default_kernels
    stream = NoiseStream(seed)
    state = init_state(objective, X0, kern)
    bits = 0
    trace = [record(state, objective, cfg.mixing, bits, cfg.lam, kern)]
    if monitor is not None:
        monitor(state)
    try:
        for _ in range(cfg.K):
            if algorithm == "pushpull":
                state, b = pushpull_step(state, cfg, objective, kern)
            else:
                state, b = rcpp_step(state, cfg, objective, stream, kern)
            bits += b
            trace.append(record(state, objective, cfg.mixing, bits, cfg.lam, kern))
            if monitor is not None:
                monitor(state)
    except DivergenceError as err:
        err.trace = trace
        raise
    return trace

