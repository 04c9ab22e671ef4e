"""Convective flux functions and the Godunov numerical flux."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# dense sampling parameters for the Lipschitz bound and non-convex Godunov flux
DERIV_SAMPLES = 2048
DERIV_SAFETY = 1.01
FLUX_SAMPLES = 2048


@dataclass(frozen=True)
class FluxModel:
    """A scalar flux ``f`` with its derivative.

    ``godunov`` is an optional closed-form Godunov flux ``(a, b) -> F``;
    without it the flux is obtained by dense sampling of ``f`` between the
    two states.
    """

    label: str
    eval: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    godunov: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    speed: float | None = None  # constant advection speed for linear models

    def __call__(self, u):
        return self.eval(u)

    @property
    def is_linear(self) -> bool:
        return self.speed is not None


def linear(a: float) -> FluxModel:
    a = float(a)

    def godunov(ul, ur):
        # upwind: min over [ul, ur] if ul <= ur, max otherwise
        lo, hi = a * np.asarray(ul), a * np.asarray(ur)
        return np.where(np.asarray(ul) <= np.asarray(ur), np.minimum(lo, hi), np.maximum(lo, hi))

    return FluxModel(
        label=f"linear:a={a!r}",
        eval=lambda u: a * np.asarray(u, dtype=float),
        deriv=lambda u: np.full_like(np.asarray(u, dtype=float), a),
        godunov=godunov,
        speed=a,
    )


def burgers() -> FluxModel:
    def f(u):
        u = np.asarray(u, dtype=float)
        return 0.5 * u * u

    def godunov(ul, ur):
        ul = np.asarray(ul, dtype=float)
        ur = np.asarray(ur, dtype=float)
        fl, fr = f(ul), f(ur)
        # convex f: the minimum on [ul, ur] is 0 when the interval straddles
        # the sonic point u = 0
        rising = np.where((ul <= 0.0) & (ur >= 0.0), 0.0, np.minimum(fl, fr))
        return np.where(ul <= ur, rising, np.maximum(fl, fr))

    return FluxModel(
        label="burgers",
        eval=f,
        deriv=lambda u: np.asarray(u, dtype=float).copy(),
        godunov=godunov,
    )


def custom(label: str, f: Callable, df: Callable) -> FluxModel:
    """Wrap an arbitrary flux; the Godunov flux is then computed by sampling."""
    return FluxModel(label=label, eval=f, deriv=df)


def parse_flux(label: str) -> FluxModel:
    """Build a model from a config label: ``"burgers"`` or ``"linear:a=<v>"``."""
    text = label.strip()
    if text == "burgers":
        return burgers()
    if text.startswith("linear"):
        _, _, params = text.partition(":")
        key, _, value = params.partition("=")
        if key.strip() != "a" or not value.strip():
            raise ValueError(f"linear flux needs 'linear:a=<value>', got {label!r}")
        return linear(float(value))
    raise ValueError(f"unknown flux model {label!r}")


def lipschitz_bound(model: FluxModel, lo: float, hi: float) -> float:
    """A value strictly above ``max |f'|`` on ``[lo, hi]``."""
    if lo > hi:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    samples = np.abs(model.deriv(np.linspace(lo, hi, DERIV_SAMPLES)))
    if not np.all(np.isfinite(samples)):
        raise ValueError(f"flux derivative of {model.label} is not finite on [{lo}, {hi}]")
    return float(DERIV_SAFETY * samples.max() + 1e-12)


def _sampled_godunov(model, a, b, chunk=4096):
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    flat_a, flat_b = a.ravel(), b.ravel()
    out = np.empty(flat_a.shape)
    s = np.linspace(0.0, 1.0, FLUX_SAMPLES + 1)
    for start in range(0, flat_a.size, chunk):
        sl = slice(start, start + chunk)
        pa, pb = flat_a[sl, None], flat_b[sl, None]
        vals = model.eval(pa + (pb - pa) * s)
        out[sl] = np.where(flat_a[sl] <= flat_b[sl], vals.min(axis=1), vals.max(axis=1))
    return out.reshape(a.shape)


def numerical_flux(model: FluxModel, a, b):
    """Godunov flux between left state ``a`` and right state ``b``.

    Exact for models with a closed form, otherwise the extremum of ``f``
    over ``FLUX_SAMPLES + 1`` equispaced points of the interval (endpoints
    included, so ``numerical_flux(u, u) == f(u)`` either way).
    """
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if not (np.all(np.isfinite(a_arr)) and np.all(np.isfinite(b_arr))):
        raise ValueError("numerical_flux received non-finite states")
    if model.godunov is not None:
        out = model.godunov(a_arr, b_arr)
    else:
        out = _sampled_godunov(model, a_arr, b_arr)
    if np.ndim(out) == 0:
        return float(out)
    return out
