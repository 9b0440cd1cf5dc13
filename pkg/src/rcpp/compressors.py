"""Compression operators, dynamic scaling and an empirical contract certifier.

Every operator ``C`` is described by five constants: the relative and
absolute error of ``C`` itself,

    E||C(x) - x||^2 <= C_rel ||x||^2 + sigma2,

and the contraction of its ``r``-scaled version,

    E||C(x)/r - x||^2 <= (1 - delta) ||x||^2 + sigma2_r.

Built-in kinds: ``identity``, ``qn`` (b-bit infinity-norm quantiser with a
randomised norm), ``topk``, ``qtn`` (top-k followed by qn) and ``uniform``
(round to the nearest multiple of a fixed level).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels_py as _codes
from ._backend import kernels as _default_kernels

KINDS = ("identity", "qn", "topk", "qtn", "uniform")
_KIND_CODE = {
    "identity": _codes.IDENTITY,
    "qn": _codes.QN,
    "topk": _codes.TOPK,
    "qtn": _codes.QTN,
    "uniform": _codes.UNIFORM,
}
RANDOMIZED = frozenset({"qn", "qtn"})
MAX_BITS = 52


def _as_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("expected a non-empty 1-D vector")
    if not np.isfinite(x).all():
        raise ValueError("input contains non-finite entries")
    return x


def _check_bits(b):
    if not 1 <= b <= MAX_BITS:
        raise ValueError(f"bits per entry must be in [1, {MAX_BITS}], got {b}")


def _check_k(k, d):
    if not 1 <= k <= d:
        raise ValueError(f"k must be in [1, {d}], got {k}")


def _uniforms(rng, d):
    return rng.random((1, d + 1))


def quantize_inf_norm(x, b, rng, kernels=None) -> np.ndarray:
    """Unbiased b-bit quantiser scaled by a randomly rounded infinity norm."""
    x = _as_vector(x)
    _check_bits(b)
    kernels = kernels or _default_kernels
    out, _ = kernels.compress_rows(x[None, :], _codes.QN, b, 0, 1.0, _uniforms(rng, x.size))
    return out[0]


def top_k(x, k) -> np.ndarray:
    """Keep the k largest-magnitude entries; ties go to the lower index."""
    x = _as_vector(x)
    _check_k(k, x.size)
    out, _ = _default_kernels.compress_rows(x[None, :], _codes.TOPK, 1, k, 1.0, None)
    return out[0]


def quantize_topk(x, b, k, rng, kernels=None) -> np.ndarray:
    x = _as_vector(x)
    _check_bits(b)
    _check_k(k, x.size)
    kernels = kernels or _default_kernels
    out, _ = kernels.compress_rows(x[None, :], _codes.QTN, b, k, 1.0, _uniforms(rng, x.size))
    return out[0]


def uniform_quantizer(x, level) -> np.ndarray:
    """Round each entry to the nearest multiple of ``level``, halves upward."""
    x = _as_vector(x)
    if not level > 0:
        raise ValueError(f"level must be positive, got {level}")
    out, _ = _default_kernels.compress_rows(x[None, :], _codes.UNIFORM, 1, 1, float(level), None)
    return out[0]


def bit_cost(kind, x, b=2, k=1, level=1.0) -> int:
    """Transmitted bits for compressing ``x`` (independent of the random draws).

    identity: 64 per entry.  qn: b per entry plus a norm header of
    bitlen(floor(||x||_inf)) + 1 bits; only the 1-bit header for x = 0.
    topk: k * (64 + ceil(log2 d)).  qtn: k * (b + ceil(log2 d)) plus the qn
    header.  uniform: d * (bitlen(max|q|) + 1) plus a 6-bit width header;
    header only when every entry rounds to zero.
    """
    x = _as_vector(x)
    U = np.zeros((1, x.size + 1))
    _, costs = _default_kernels.compress_rows(x[None, :], _KIND_CODE[kind], b, k, float(level), U)
    return int(costs[0])


@dataclass(frozen=True)
class CompressorSpec:
    """A compression operator together with its declared contract constants."""

    kind: str
    d: int
    C_rel: float
    sigma2: float
    r: float
    delta: float
    sigma2_r: float
    b: int = 2
    k: int = 1
    level: float = 1.0
    certified: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.kind not in _KIND_CODE:
            raise ValueError(f"unknown compressor kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.C_rel < 0 or self.sigma2 < 0 or self.sigma2_r < 0:
            raise ValueError("C_rel, sigma2 and sigma2_r must be non-negative")
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if not 0 < self.delta <= 1:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")

    @property
    def code(self) -> int:
        return _KIND_CODE[self.kind]

    @property
    def randomized(self) -> bool:
        return self.kind in RANDOMIZED

    def compress_rows(self, Z, U=None, kernels=None):
        """Row-wise compression of a matrix; returns (outputs, per-row bits)."""
        kernels = kernels or _default_kernels
        return kernels.compress_rows(Z, self.code, self.b, self.k, self.level, U)

    def apply(self, x, rng=None, kernels=None) -> np.ndarray:
        x = _as_vector(x)
        U = _uniforms(rng, x.size) if self.randomized else None
        out, _ = self.compress_rows(x[None, :], U, kernels)
        return out[0]

    def bit_cost(self, x) -> int:
        return bit_cost(self.kind, x, self.b, self.k, self.level)


def make_compressor(kind, d, b=2, k=None, level=1.0, certify_samples=4000, seed=0) -> CompressorSpec:
    """Build a spec with declared constants.

    identity, topk and uniform get their provable constants.  For qn and qtn
    no closed form is claimed: the constants are upper confidence values from
    ``certify_compressor`` run with a fixed seed, and ``r`` is the
    least-squares optimal rescaling at the largest probe magnitude.
    """
    if kind not in _KIND_CODE:
        raise ValueError(f"unknown compressor kind {kind!r}; choose from {', '.join(KINDS)}")
    if kind in ("topk", "qtn"):
        k = max(1, math.ceil(d / 2)) if k is None else int(k)
        _check_k(k, d)
    else:
        k = 1 if k is None else int(k)
    if kind in ("qn", "qtn"):
        _check_bits(b)
    if kind == "identity":
        return CompressorSpec("identity", d, 0.0, 0.0, 1.0, 1.0, 0.0, b=b, k=k, level=level)
    if kind == "topk":
        return CompressorSpec("topk", d, 1.0 - k / d, 0.0, 1.0, k / d, 0.0, b=b, k=k, level=level)
    if kind == "uniform":
        if not level > 0:
            raise ValueError(f"level must be positive, got {level}")
        s2 = d * level**2 / 4.0
        return CompressorSpec("uniform", d, 0.0, s2, 1.0, 1.0, s2, b=b, k=k, level=level)
    # randomized quantisers: certify empirically
    probe = CompressorSpec(kind, d, 0.0, 0.0, 1.0, 1.0, 0.0, b=b, k=k, level=level)
    rng = np.random.default_rng(seed)
    r = optimal_rescaling(probe, d, certify_samples, rng)
    rep = certify_compressor(replace(probe, r=r), d, certify_samples, rng)
    delta = min(1.0, max(rep.delta_lower_conf, 1e-6))
    return CompressorSpec(
        kind, d, rep.C_upper_conf, rep.sigma2_upper_conf, r, delta, rep.sigma2_r_upper_conf,
        b=b, k=k, level=level, certified=True,
    )


def dynamic_scale(spec: CompressorSpec, x, s_k, rng=None, kernels=None):
    """Transmit C(x / s_k); the receiver recovers s_k * C(x / s_k).

    Returns (payload, recovered).
    """
    if not s_k > 0:
        raise ValueError(f"scale must be positive, got {s_k}")
    x = _as_vector(x)
    payload = spec.apply(x / s_k, rng, kernels)
    return payload, s_k * payload


@dataclass(frozen=True)
class ScalingSchedule:
    """s_k = sqrt(c0 * c**k); c = 1 gives static scaling."""

    c0: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if not self.c0 > 0:
            raise ValueError(f"c0 must be positive, got {self.c0}")
        if not 0 < self.c <= 1:
            raise ValueError(f"decay ratio c must lie in (0, 1], got {self.c}")

    def s(self, k: int) -> float:
        # clamp so very long runs never divide by an underflowed zero
        return max(math.sqrt(self.c0 * self.c**k), np.finfo(float).tiny)

    def __call__(self, k: int) -> float:
        return self.s(k)


class NoiseStream:
    """Counter-based uniforms for reproducible per-agent compression.

    The block for (iteration k, role) comes from a Philox generator keyed by
    (seed, role) with counter word 1 set to k; row i of the block belongs to
    agent i.  Results therefore do not depend on the order blocks are drawn.
    """

    ROLE_X = 0
    ROLE_Y = 1

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gens = {}

    def block(self, k: int, role: int, shape) -> np.ndarray:
        gen = self._gens.get(role)
        if gen is None:
            bg = np.random.Philox(key=np.array([self.seed, role], dtype=np.uint64))
            gen = (bg, np.random.Generator(bg), bg.state)
            self._gens[role] = gen
        bg, g, state = gen
        state["state"]["counter"][:] = (0, k, 0, 0)
        state["buffer_pos"] = 4
        state["has_uint32"] = 0
        bg.state = state
        return g.random(shape)


DEFAULT_SCALES = (0.0, 1e-3, 1e-1, 1.0, 10.0, 1e3)


@dataclass
class CertificationReport:
    C_hat: float
    sigma2_hat: float
    delta_hat: float
    sigma2_r_hat: float
    C_upper_conf: float
    sigma2_upper_conf: float
    delta_lower_conf: float
    sigma2_r_upper_conf: float
    scales: tuple
    mean_err: np.ndarray
    se_err: np.ndarray
    mean_err_r: np.ndarray
    se_err_r: np.ndarray
    passed_relative: bool
    passed_contraction: bool

    @property
    def passed(self) -> bool:
        return self.passed_relative and self.passed_contraction

    def lines(self) -> list[str]:
        out = [
            f"C_hat       = {self.C_hat:.6g}",
            f"sigma2_hat  = {self.sigma2_hat:.6g}",
            f"delta_hat   = {self.delta_hat:.6g}",
            f"sigma2_r_hat= {self.sigma2_r_hat:.6g}",
            "scale        E||C(x)-x||^2 (se)         E||C(x)/r-x||^2 (se)",
        ]
        for s, m, se, mr, ser in zip(self.scales, self.mean_err, self.se_err, self.mean_err_r, self.se_err_r):
            out.append(f"{s:<12.3g} {m:.6g} ({se:.2g})    {mr:.6g} ({ser:.2g})")
        out.append(f"relative/absolute bound: {'PASS' if self.passed_relative else 'FAIL'}")
        out.append(f"r-scaled contraction:    {'PASS' if self.passed_contraction else 'FAIL'}")
        return out


def _sample(d, N, scale, rng):
    if scale == 0.0:
        return np.zeros((N, d))
    z = rng.standard_normal((N, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return scale * z


def _affine_fit(scales, means, ses):
    # slope from the largest probe, intercept lifted to dominate every probe
    big = max(range(len(scales)), key=lambda i: scales[i])
    s2 = np.asarray(scales, dtype=float) ** 2
    slope = max(0.0, float(means[big] / s2[big]))
    slope_up = max(0.0, float((means[big] + 3 * ses[big]) / s2[big]))
    icpt = max(0.0, float(np.max(means - slope * s2)))
    icpt_up = max(0.0, float(np.max(means + 3 * ses - slope_up * s2)))
    return slope, icpt, slope_up, icpt_up


def optimal_rescaling(spec, d, N, rng, scale=1e3, kernels=None) -> float:
    """r minimising E||C(x)/r - x||^2 at a large magnitude: E||C||^2 / E<C, x>."""
    X = _sample(d, N, scale, rng)
    U = rng.random((N, d + 1)) if spec.randomized else None
    out, _ = spec.compress_rows(X, U, kernels)
    inner = float(np.mean(np.sum(out * X, axis=1)))
    if inner <= 0:
        return 1.0
    return float(np.mean(np.sum(out * out, axis=1))) / inner


def certify_compressor(spec: CompressorSpec, d, N, rng, scales=DEFAULT_SCALES, kernels=None) -> CertificationReport:
    """Monte-Carlo check of the declared contract constants.

    For each probe magnitude, N random directions are compressed; the mean
    errors are compared with the declared bounds allowing three standard
    errors.  Statistical failure is reported, never raised.
    """
    if N < 100:
        raise ValueError(f"need at least 100 samples, got {N}")
    scales = tuple(float(s) for s in scales)
    m = np.empty(len(scales))
    se = np.empty(len(scales))
    mr = np.empty(len(scales))
    ser = np.empty(len(scales))
    for i, s in enumerate(scales):
        X = _sample(d, N, s, rng)
        U = rng.random((N, d + 1)) if spec.randomized else None
        out, _ = spec.compress_rows(X, U, kernels)
        e = np.sum((out - X) ** 2, axis=1)
        er = np.sum((out / spec.r - X) ** 2, axis=1)
        m[i], se[i] = e.mean(), e.std(ddof=1) / math.sqrt(N)
        mr[i], ser[i] = er.mean(), er.std(ddof=1) / math.sqrt(N)
    C_hat, s2_hat, C_up, s2_up = _affine_fit(scales, m, se)
    q_hat, s2r_hat, q_up, s2r_up = _affine_fit(scales, mr, ser)
    s2 = np.asarray(scales) ** 2
    slack = 1e-9 * (s2 + 1.0)  # floating-point rounding of ||x||^2
    ok_rel = bool(np.all(m <= spec.C_rel * s2 + spec.sigma2 + 3 * se + slack))
    ok_con = bool(np.all(mr <= (1 - spec.delta) * s2 + spec.sigma2_r + 3 * ser + slack))
    return CertificationReport(
        C_hat=C_hat, sigma2_hat=s2_hat, delta_hat=1.0 - q_hat, sigma2_r_hat=s2r_hat,
        C_upper_conf=C_up, sigma2_upper_conf=s2_up, delta_lower_conf=1.0 - q_up,
        sigma2_r_upper_conf=s2r_up, scales=scales, mean_err=m, se_err=se,
        mean_err_r=mr, se_err_r=ser, passed_relative=ok_rel, passed_contraction=ok_con,
    )
