"""Scalar functionals of fields and runs, and log-log rate fitting."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Field


def mass(field: Field) -> float:
    return field.grid.cell_area * float(field.values.sum())


def total_variation(field: Field, boundary: str = "zero_flux") -> float:
    """Anisotropic discrete BV seminorm.

    Jumps across x-faces are weighted by ``dy`` and jumps across y-faces by
    ``dx``. ``boundary="periodic"`` also counts the wrap-around faces.
    """
    u = field.values
    g = field.grid
    if boundary == "periodic":
        jx = np.abs(np.roll(u, -1, axis=0) - u)
        jy = np.abs(np.roll(u, -1, axis=1) - u)
    elif boundary == "zero_flux":
        jx = np.abs(np.diff(u, axis=0))
        jy = np.abs(np.diff(u, axis=1))
    else:
        raise ValueError(f"unknown boundary {boundary!r}")
    return float(jx.sum() * g.dy + jy.sum() * g.dx)


def time_derivative_l1(history) -> np.ndarray:
    """``||u(t_{k+1}) - u(t_k)||_1 / (t_{k+1} - t_k)`` for consecutive stored frames."""
    frames = history.history if hasattr(history, "history") else list(history)
    if len(frames) < 2:
        raise ValueError("need at least two frames")
    out = []
    for a, b in zip(frames[:-1], frames[1:]):
        out.append(a.grid.cell_area * float(np.abs(b.values - a.values).sum()) / (b.time - a.time))
    return np.array(out)


def cone_l1_error(u: Field, v: Field, cone, t: float) -> float:
    """L1 distance of ``u`` and ``v`` over the strip ``L_l(t) <= y <= L_r(t)``.

    Rows partially covered by the strip count with their covered fraction.
    """
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    lo, hi = cone.left(t), cone.right(t)
    if not hi > lo:
        raise ValueError(f"cone is empty at t={t} (L - M t = {cone.L - cone.M * t:.6g})")
    edges = u.grid.y_edges
    covered = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
    weights = covered / u.grid.dy
    diff = np.abs(u.values - v.values)
    return u.grid.cell_area * float(diff.sum(axis=0) @ weights)


@dataclass
class RateReport:
    pairs: list[tuple[float, float]]
    slope: float
    intercept: float
    r_squared: float
    pairwise_rates: list[float]
    excluded: list[tuple[float, float]] = field(default_factory=list)

    def passes(self, threshold: float = 0.45) -> bool:
        return self.slope >= threshold

    def to_csv(self) -> str:
        """Rows ``epsilon,error,pairwise_rate``; the rate of row k compares rows k and k+1."""
        buf = io.StringIO()
        buf.write("epsilon,error,pairwise_rate\n")
        for k, (eps, err) in enumerate(self.pairs):
            rate = self.pairwise_rates[k] if k < len(self.pairwise_rates) else None
            buf.write(f"{eps!r},{err!r},{'' if rate is None else repr(rate)}\n")
        return buf.getvalue()

    def summary(self, threshold: float = 0.45, note: str = "") -> str:
        verdict = "PASS" if self.passes(threshold) else "FAIL"
        line = (f"slope={self.slope:.6f} r2={self.r_squared:.6f} "
                f"threshold={threshold} {verdict}")
        if self.excluded:
            line += " excluded=" + ";".join(f"{e!r}" for e, _ in self.excluded)
        if note:
            line += f" note={note}"
        return line


def rate_fit(pairs) -> RateReport:
    """Least-squares fit of ``log(error)`` against ``log(eps)``.

    Pairs with zero error cannot be fitted and are listed in ``excluded``.
    """
    ordered = sorted(((float(e), float(err)) for e, err in pairs), key=lambda p: -p[0])
    usable = [p for p in ordered if p[1] > 0]
    excluded = [p for p in ordered if not p[1] > 0]
    if len(usable) < 3:
        raise ValueError(f"need at least 3 pairs with positive error, got {len(usable)}")
    logs = np.log([p[0] for p in usable])
    loge = np.log([p[1] for p in usable])
    if np.ptp(logs) == 0:
        raise ValueError("all epsilon values are equal; the fit is degenerate")
    A = np.column_stack([logs, np.ones_like(logs)])
    (slope, intercept), *_ = np.linalg.lstsq(A, loge, rcond=None)
    resid = loge - (slope * logs + intercept)
    ss_tot = float(((loge - loge.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    rates = []
    for (e0, r0), (e1, r1) in zip(usable[:-1], usable[1:]):
        rates.append(math.log(r0 / r1) / math.log(e0 / e1) if e0 != e1 else float("nan"))
    return RateReport(usable, float(slope), float(intercept), r2, rates, excluded)
