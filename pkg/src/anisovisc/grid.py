"""Uniform cell-centred grids on a truncated rectangle and scalar fields on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Rectangle ``[x_min, x_max] x [y_min, y_max]`` split into ``nx x ny`` cells.

    Arrays on the grid are indexed ``[i, j]`` with ``i`` along x and ``j``
    along y.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        for name in ("x_min", "x_max", "y_min", "y_max"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.x_max > self.x_min:
            raise ValueError(f"degenerate x-extent [{self.x_min}, {self.x_max}]")
        if not self.y_max > self.y_min:
            raise ValueError(f"degenerate y-extent [{self.y_min}, {self.y_max}]")
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("cell counts must be integers")
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"need at least 4 cells per direction, got {self.nx}x{self.ny}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    @property
    def x_centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y_centers(self) -> np.ndarray:
        return self.y_min + (np.arange(self.ny) + 0.5) * self.dy

    @property
    def x_edges(self) -> np.ndarray:
        return self.x_min + np.arange(self.nx + 1) * self.dx

    @property
    def y_edges(self) -> np.ndarray:
        return self.y_min + np.arange(self.ny + 1) * self.dy

    def center(self, i: int, j: int) -> tuple[float, float]:
        return (self.x_min + (i + 0.5) * self.dx, self.y_min + (j + 0.5) * self.dy)

    def index_of(self, x: float, y: float) -> tuple[int, int]:
        """Cell containing ``(x, y)``; inverse of :meth:`center` on cell centres."""
        i = int(np.floor((x - self.x_min) / self.dx))
        j = int(np.floor((y - self.y_min) / self.dy))
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise ValueError(f"point ({x}, {y}) lies outside the grid")
        return i, j

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_centers, self.y_centers, indexing="ij")

    def refined(self, factor: int) -> "GridSpec":
        return GridSpec(self.x_min, self.x_max, self.y_min, self.y_max,
                        self.nx * factor, self.ny * factor)


@dataclass(frozen=True)
class TimeSpec:
    """Final time and an optional Courant factor.

    ``cfl=None`` defers to the solver configuration.
    """

    t_end: float
    cfl: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.cfl is not None and not (0 < self.cfl <= 1):
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")


@dataclass(frozen=True, eq=False)
class Field:
    """Cell-centre samples of a scalar at one time instant.

    The value array is copied and made read-only on construction.
    """

    grid: GridSpec
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"values have shape {values.shape}, grid expects {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise ValueError(f"non-finite value at cell ({i}, {j})")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray, time: float | None = None) -> "Field":
        return Field(self.grid, values, self.time if time is None else time)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def make_grid(x_min, x_max, y_min, y_max, nx, ny) -> GridSpec:
    return GridSpec(float(x_min), float(x_max), float(y_min), float(y_max), int(nx), int(ny))


def project_initial(u0: Callable, grid: GridSpec) -> Field:
    """Sample ``u0(x, y)`` at every cell centre.

    ``u0`` is called once on the full centre mesh and should therefore accept
    arrays; scalar-only callables are retried point by point.
    """
    X, Y = grid.mesh()
    try:
        values = np.asarray(u0(X, Y), dtype=float)
        values = np.broadcast_to(values, grid.shape).copy()
    except (TypeError, ValueError):
        values = np.vectorize(lambda x, y: float(u0(x, y)))(X, Y)
    bad = np.argwhere(~np.isfinite(values))
    if len(bad):
        i, j = bad[0]
        x, y = grid.center(i, j)
        raise ValueError(f"initial datum is not finite at cell ({i}, {j}), centre ({x}, {y})")
    return Field(grid, values, 0.0)
