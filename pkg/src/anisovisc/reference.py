"""Reference entropy solutions used as ground truth for error measurement."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .grid import Field, GridSpec, TimeSpec, project_initial
from .solver import SolveResult, SolverConfig, advance

KINDS = ("linear_gaussian", "riemann_1d", "discrete_eps0")


def exact_linear_gaussian(a, sigma, A, g: Callable, x, y, t):
    """Exact solution for ``f(u) = a u`` and data ``A exp(-x^2 / 2 sigma^2) g(y)``.

    The x-heat flow widens the Gaussian to variance ``sigma^2 + 2t`` while the
    y-profile is carried along at speed ``a``.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be nonnegative")
    x, y, t = (np.asarray(v, dtype=float) for v in (x, y, t))
    var = sigma * sigma + 2.0 * t
    out = A * sigma / np.sqrt(var) * np.exp(-x * x / (2.0 * var)) * g(y - a * t)
    return float(out) if out.ndim == 0 else out


def exact_1d_riemann_burgers(u_l, u_r, y, t):
    """Entropy solution of ``u_t + (u^2/2)_y = 0`` with a jump at ``y = 0``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be nonnegative")
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    if u_l == u_r:
        out = np.full(np.broadcast(y, t).shape, float(u_l))
    elif u_l > u_r:
        s = 0.5 * (u_l + u_r)
        out = np.where(y < s * t, float(u_l), float(u_r))
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            fan = np.where(t > 0, y / np.where(t > 0, t, 1.0), 0.0)
        out = np.where(y <= u_l * t, float(u_l), np.where(y >= u_r * t, float(u_r), fan))
    return float(out) if np.ndim(out) == 0 else out


def smoothed_step(u_l: float, u_r: float, width: float = 0.0) -> Callable:
    """Step from ``u_l`` (y < 0) to ``u_r`` (y > 0), tanh-smoothed over ``width``."""
    if width > 0:
        return lambda y: u_l + (u_r - u_l) * 0.5 * (1.0 + np.tanh(np.asarray(y, dtype=float) / width))
    return lambda y: np.where(np.asarray(y, dtype=float) < 0, float(u_l), float(u_r))


@dataclass(frozen=True)
class ReferenceSpec:
    """What to compare against.

    ``linear_gaussian`` reads ``a, sigma, amplitude, u_l, u_r, width``;
    ``riemann_1d`` reads ``u_l, u_r``; ``discrete_eps0`` reads the initial
    datum ``u0`` (a callable of ``x, y``), the flux ``model``, a solver
    configuration and ``refine``.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown reference kind {self.kind!r}; expected one of {KINDS}")
        p = self.params
        if self.kind == "linear_gaussian" and not p.get("sigma", 0) > 0:
            raise ValueError("linear_gaussian reference needs sigma > 0")
        if self.kind == "riemann_1d" and not ("u_l" in p and "u_r" in p):
            raise ValueError("riemann_1d reference needs u_l and u_r")
        if self.kind == "discrete_eps0":
            for key in ("u0", "model"):
                if key not in p:
                    raise ValueError(f"discrete_eps0 reference needs {key!r}")
            if int(p.get("refine", 2)) < 1:
                raise ValueError("refine must be a positive integer")


def restrict(fine: Field, grid: GridSpec) -> Field:
    """Average a field on an integer refinement of ``grid`` back onto ``grid``."""
    fx, rx = divmod(fine.grid.nx, grid.nx)
    fy, ry = divmod(fine.grid.ny, grid.ny)
    same_box = (fine.grid.x_min, fine.grid.x_max, fine.grid.y_min, fine.grid.y_max) == \
        (grid.x_min, grid.x_max, grid.y_min, grid.y_max)
    if rx or ry or not same_box:
        raise ValueError("fine grid is not an integer refinement of the target grid")
    v = fine.values.reshape(grid.nx, fx, grid.ny, fy).mean(axis=(1, 3))
    return Field(grid, v, fine.time)


def reference_field(spec: ReferenceSpec, grid: GridSpec, t: float) -> Field:
    p = spec.params
    X, Y = grid.mesh()
    if spec.kind == "linear_gaussian":
        g = smoothed_step(p.get("u_l", 1.0), p.get("u_r", 0.0), p.get("width", 0.0))
        values = exact_linear_gaussian(p["a"], p["sigma"], p.get("amplitude", 1.0), g, X, Y, t)
        return Field(grid, values, t)
    if spec.kind == "riemann_1d":
        values = exact_1d_riemann_burgers(p["u_l"], p["u_r"], Y, t)
        return Field(grid, np.broadcast_to(values, grid.shape), t)

    # same-scheme run without viscosity on a refined grid
    refine = int(p.get("refine", 2))
    config = replace(p.get("config", SolverConfig()), epsilon=0.0, record_every=10**9)
    fine_grid = grid.refined(refine)
    u0 = project_initial(p["u0"], fine_grid)
    result = advance(u0, p["model"], config, TimeSpec(t))
    return restrict(result.final, grid) if refine > 1 else Field(grid, result.final.values, t)


def travelling_jump_history(grid: GridSpec, u_l: float, u_r: float, speed: float, times):
    """Frames of a sharp jump ``u_l | u_r`` across ``y = speed * t``, x-independent.

    With ``u_l < u_r`` under a convex flux this is a weak solution that
    violates the entropy condition.
    """
    Y = grid.mesh()[1]
    frames = [Field(grid, np.where(Y < speed * t, float(u_l), float(u_r)), float(t)) for t in times]
    return SolveResult(final=frames[-1], history=frames)
