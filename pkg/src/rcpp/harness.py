"""Per-iteration error metrics, CSV traces and linear-rate fitting."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass

import numpy as np

from ._backend import kernels as _default_kernels
from .errors import FitUnavailable

CSV_COLUMNS = ("k", "residual", "consensus_err", "tracking_err", "comp_err_x", "comp_err_y", "bits_cum")
RESIDUAL_FLOOR = 1e-14


@dataclass(slots=True)
class IterationRecord:
    """Errors at one iteration.

    consensus_err and tracking_err are squared Frobenius norms of the
    deviations from the u_R-weighted average of X and from u_C times the
    plain average of Y.
    """

    k: int
    residual: float
    consensus_err: float
    tracking_err: float
    comp_err_x: float
    comp_err_y: float
    bits_cum: int


def record(state, problem, mixing, bits_so_far, lam, kernels=None) -> IterationRecord:
    kernels = kernels or _default_kernels
    xbar, cons, trk, cx, cy = kernels.snapshot_metrics(
        state.X, state.Y, state.Hx, state.Hy, lam, mixing.u_R, mixing.u_C
    )
    return IterationRecord(state.k, problem.residual(xbar), cons, trk, cx, cy, int(bits_so_far))


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(records, path_or_buf) -> None:
    """One row per iteration with a mandatory header; floats at 17 significant digits."""
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in records:
            w.writerow([_fmt(v) for v in astuple(rec)])
    finally:
        if own:
            fh.close()


def records_to_csv(records) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def read_csv(path_or_text) -> list[IterationRecord]:
    text = path_or_text
    if "\n" not in str(path_or_text):
        with open(path_or_text) as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError(f"expected header {','.join(CSV_COLUMNS)}")
    out = []
    for r in rows[1:]:
        out.append(IterationRecord(int(r[0]), *(float(x) for x in r[1:6]), int(r[6])))
    return out


@dataclass(frozen=True)
class RateFit:
    c_hat: float
    r2: float
    points: int


def fit_rate(residuals, burn_in=0, floor=RESIDUAL_FLOOR, min_points=10) -> RateFit:
    """Least-squares slope of log(residual) against k after ``burn_in``.

    The series is cut at the first value below ``floor``.  Returns the
    per-iteration factor exp(slope) and the coefficient of determination.
    """
    r = np.asarray(residuals, dtype=float)[burn_in:]
    below = np.flatnonzero(~(r >= floor))
    if below.size:
        r = r[: below[0]]
    if r.size < min_points:
        raise FitUnavailable(f"{r.size} usable points after burn-in, need {min_points}")
    k = np.arange(r.size, dtype=float)
    y = np.log(r)
    slope, icpt = np.polyfit(k, y, 1)
    resid = y - (slope * k + icpt)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(math.exp(slope), r2, int(r.size))


def average_traces(traces) -> list[IterationRecord]:
    """Mean of several equally long traces, field by field (bits averaged and rounded)."""
    if not traces:
        return []
    length = min(len(t) for t in traces)
    out = []
    for i in range(length):
        recs = [t[i] for t in traces]
        vals = np.mean([astuple(r)[1:6] for r in recs], axis=0)
        bits = int(round(np.mean([r.bits_cum for r in recs])))
        out.append(IterationRecord(recs[0].k, *map(float, vals), bits))
    return out
