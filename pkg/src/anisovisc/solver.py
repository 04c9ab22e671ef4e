"""Operator-splitting solver for u_t + f(u)_y = u_xx + eps * u_yy.

Each time step composes three sub-steps:

* conservative Godunov update of the y-convection (explicit, CFL-limited),
* backward-Euler diffusion along x with unit coefficient,
* backward-Euler diffusion along y with coefficient ``epsilon``.

``epsilon = 0`` drops the last sub-step and gives a scheme for the
degenerate problem itself.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.linalg import solve_banded

from .diagnostics import mass, total_variation
from .flux import FluxModel, lipschitz_bound, numerical_flux
from .grid import Field, GridSpec, TimeSpec

logger = logging.getLogger(__name__)

Boundary = Literal["periodic", "zero_flux"]
BOUNDARIES = ("periodic", "zero_flux")
SPLITTINGS = ("lie", "strang")

# tolerance of the post-hoc maximum principle guard
CFL_GUARD_TOL = 1e-10


class SolverError(RuntimeError):
    """Raised when a run cannot continue; ``step`` is the failing step index."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class CFLViolation(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 0.0
    splitting: str = "lie"
    boundary: str = "periodic"
    cfl: float = 0.45
    record_every: int = 1
    dt: float | None = None  # explicit step override, bypasses the CFL rule

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.splitting not in SPLITTINGS:
            raise ValueError(f"splitting must be one of {SPLITTINGS}, got {self.splitting!r}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if not (0 < self.cfl <= 1):
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt override must be positive, got {self.dt}")


@dataclass(frozen=True)
class StepRecord:
    step: int
    t: float
    dt: float
    mass: float
    tv: float
    dudt_l1: float


@dataclass
class SolveResult:
    final: Field
    history: list[Field]
    step_log: list[StepRecord] = field(default_factory=list)
    boundary: str = "periodic"
    lipschitz: float = float("nan")

    @property
    def times(self) -> np.ndarray:
        return np.array([f.time for f in self.history])

    @property
    def initial(self) -> Field:
        return self.history[0]


def cfl_dt(grid: GridSpec, M: float, config: SolverConfig, t_end: float | None = None) -> float:
    """Convective step ``cfl * dy / M``, never longer than ``t_end``.

    ``advance`` shortens only the last step so that ``t_end`` is hit exactly.
    """
    if not M > 0:
        raise ValueError(f"wave-speed bound must be positive, got {M}")
    dt = config.cfl * grid.dy / M
    if t_end is not None:
        dt = min(dt, t_end)
    return dt


def step_convection_y(field: Field, model: FluxModel, dt: float, boundary: str = "periodic") -> Field:
    u = field.values
    if boundary == "periodic":
        right = np.roll(u, -1, axis=1)
        F_up = numerical_flux(model, u, right)          # F_{i, j+1/2}
        F_down = np.roll(F_up, 1, axis=1)               # F_{i, j-1/2}
    elif boundary == "zero_flux":
        interior = numerical_flux(model, u[:, :-1], u[:, 1:])
        F = np.empty((u.shape[0], u.shape[1] + 1))
        F[:, 1:-1] = interior
        # edge flux f(u_edge): transparent for states constant up to the edge
        F[:, 0] = model.eval(u[:, 0])
        F[:, -1] = model.eval(u[:, -1])
        F_up, F_down = F[:, 1:], F[:, :-1]
    else:
        raise ValueError(f"unknown boundary {boundary!r}")
    new = u - (dt / field.grid.dy) * (F_up - F_down)
    if not np.all(np.isfinite(new)):
        raise SolverError("non-finite value after convection sub-step")
    hi, lo = u.max(), u.min()
    if new.max() > hi + CFL_GUARD_TOL or new.min() < lo - CFL_GUARD_TOL:
        raise CFLViolation(
            f"maximum principle breached in convection sub-step "
            f"(range [{lo:.6g}, {hi:.6g}] -> [{new.min():.6g}, {new.max():.6g}]); "
            f"dt={dt:.6g} is too long for dy={field.grid.dy:.6g}"
        )
    return field.with_values(new)


def _implicit_diffusion(u: np.ndarray, r: float, boundary: str) -> np.ndarray:
    """Solve ``(I - r * D2) v = u`` along axis 0; ``D2`` is the undivided second difference."""
    n = u.shape[0]
    diag = np.full(n, 1.0 + 2.0 * r)
    off = -r
    off_sum = np.full(n, 2.0 * r)
    if boundary == "zero_flux":
        # reflected ghost cells
        diag[0] = diag[-1] = 1.0 + r
        off_sum[0] = off_sum[-1] = r
    elif boundary != "periodic":
        raise ValueError(f"unknown boundary {boundary!r}")
    assert np.all(np.abs(diag) > off_sum), "diffusion matrix lost diagonal dominance"

    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    if boundary == "zero_flux":
        return solve_banded((1, 1), ab, u, check_finite=False)

    # cyclic system via Sherman-Morrison: A = B + w v^T with B tridiagonal
    gamma = -diag[0]
    ab[1, 0] = diag[0] - gamma
    ab[1, -1] = diag[-1] - off * off / gamma
    w = np.zeros(n)
    w[0], w[-1] = gamma, off
    y = solve_banded((1, 1), ab, u, check_finite=False)
    z = solve_banded((1, 1), ab, w, check_finite=False)
    v_y = y[0] + (off / gamma) * y[-1]
    v_z = z[0] + (off / gamma) * z[-1]
    return y - np.multiply.outer(z, v_y / (1.0 + v_z)) if y.ndim > 1 else y - z * (v_y / (1.0 + v_z))


def step_diffusion_x(field: Field, dt: float, coeff: float = 1.0, boundary: str = "periodic") -> Field:
    if coeff < 0 or not dt > 0:
        raise ValueError(f"need coeff >= 0 and dt > 0, got coeff={coeff}, dt={dt}")
    if coeff == 0:
        return field
    r = coeff * dt / field.grid.dx**2
    return field.with_values(_implicit_diffusion(field.values, r, boundary))


def step_diffusion_y(field: Field, dt: float, coeff: float, boundary: str = "periodic") -> Field:
    if coeff < 0 or not dt > 0:
        raise ValueError(f"need coeff >= 0 and dt > 0, got coeff={coeff}, dt={dt}")
    if coeff == 0:
        return field
    r = coeff * dt / field.grid.dy**2
    return field.with_values(_implicit_diffusion(field.values.T, r, boundary).T)


def _split_step(u: Field, model, config, dt) -> Field:
    bc = config.boundary
    if config.splitting == "lie":
        u = step_convection_y(u, model, dt, bc)
        u = step_diffusion_x(u, dt, 1.0, bc)
        return step_diffusion_y(u, dt, config.epsilon, bc)
    u = step_convection_y(u, model, 0.5 * dt, bc)
    u = step_diffusion_x(u, dt, 1.0, bc)
    u = step_diffusion_y(u, dt, config.epsilon, bc)
    return step_convection_y(u, model, 0.5 * dt, bc)


def advance(u0_field: Field, model: FluxModel, config: SolverConfig, time: TimeSpec) -> SolveResult:
    """Evolve ``u0_field`` to ``time.t_end``.

    Frames are stored every ``config.record_every`` steps, plus the first and
    the last. Every step appends a :class:`StepRecord` to the log.
    """
    grid = u0_field.grid
    if time.cfl is not None and time.cfl != config.cfl:
        config = SolverConfig(**{**config.__dict__, "cfl": time.cfl})
    t_end = time.t_end
    lo, hi = float(u0_field.values.min()), float(u0_field.values.max())
    M = lipschitz_bound(model, lo - 1e-6, hi + 1e-6)
    dt_full = config.dt if config.dt is not None else cfl_dt(grid, M, config, t_end)

    u = u0_field.with_values(u0_field.values, time=0.0)
    history = [u]
    log: list[StepRecord] = []
    t, n = 0.0, 0
    while t < t_end:
        dt = min(dt_full, t_end - t)
        t_next = t + dt
        if t_end - t_next <= 1e-12 * t_end:
            t_next, dt = t_end, t_end - t
        try:
            new = _split_step(u, model, config, dt)
        except CFLViolation as exc:
            raise CFLViolation(str(exc), step=n) from None
        except SolverError as exc:
            raise SolverError(str(exc), step=n) from None
        except ValueError as exc:
            # Field construction rejects non-finite values
            raise SolverError(str(exc), step=n) from None
        new = new.with_values(new.values, time=t_next)
        n += 1
        dudt = grid.cell_area * float(np.abs(new.values - u.values).sum()) / dt
        log.append(StepRecord(n, t_next, dt, mass(new), total_variation(new, config.boundary), dudt))
        u, t = new, t_next
        if n % config.record_every == 0 or t >= t_end:
            history.append(u)
    logger.debug("advance: %d steps, dt=%.4g, M=%.4g, eps=%.4g", n, dt_full, M, config.epsilon)
    return SolveResult(final=u, history=history, step_log=log, boundary=config.boundary, lipschitz=M)
