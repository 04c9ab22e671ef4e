r"""Test functions, smoothed Kruzkov entropy pairs and weak/entropy residuals.

The test functions are products

.. math::

    \varphi(x, y, t) = K_\beta(x)\,\chi^{\alpha_0}_{(\nu,\tau)}(t)\,
        \chi^{\alpha}_{(L_l, L_r)}(y, t)

of a smooth cutoff in x, a mollified time window and a piecewise linear
trapezoid in y that follows the shrinking cone ``|y| <= L - M t``.  All
derivatives are analytic.  Residual quadrature treats the field as constant
on each cell and integrates the test function over the cell: exactly for the
piecewise linear y-factor and for ``K_beta''``, by Gauss-Legendre for
``K_beta``.  Kinks and steep cutoffs therefore need no grid resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate

from .flux import FluxModel

__all__ = [
    "sign", "sign_eta", "eta_entropy", "eta_entropy_flux",
    "Mollifier", "Cutoff", "Ramp", "TimeWindow", "ConeSpec", "TestFunction",
    "PsiProfile", "build_test_function", "weak_residual", "entropy_residual",
    "entropy_residual_terms", "parse_psi",
]


# {{{ smoothed signum and entropy pairs

def sign(sigma):
    """Signum with ``sign(0) == 0``."""
    return np.sign(sigma)


def sign_eta(sigma, eta: float):
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    sigma = np.asarray(sigma, dtype=float)
    inner = np.sin(np.pi * np.clip(sigma, -eta, eta) / (2.0 * eta))
    out = np.where(np.abs(sigma) > eta, np.sign(sigma), inner)
    return float(out) if out.ndim == 0 else out


def eta_entropy(u, psi, eta: float):
    """``int_psi^u sign_eta(z - psi) dz`` in closed form."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    d = np.abs(np.asarray(u, dtype=float) - np.asarray(psi, dtype=float))
    c = 2.0 * eta / np.pi
    inner = c * (1.0 - np.cos(np.pi * np.minimum(d, eta) / (2.0 * eta)))
    out = np.where(d >= eta, d - eta + c, inner)
    return float(out) if out.ndim == 0 else out


def _eta_flux_scalar(u, psi, eta, model):
    if u == psi:
        return 0.0
    integrand = lambda z: float(sign_eta(z - psi, eta)) * float(model.deriv(z))
    lo, hi = min(u, psi), max(u, psi)
    pts = [p for p in (psi - eta, psi + eta) if lo < p < hi]
    val, err = integrate.quad(integrand, psi, u, points=pts or None,
                              epsabs=1e-10, epsrel=1e-10, limit=200)
    if not err <= 1e-8:
        raise ArithmeticError(f"quadrature for Q_eta did not converge (error estimate {err:.3g})")
    return val


def eta_entropy_flux(u, psi, eta: float, model: FluxModel):
    """``int_psi^u sign_eta(z - psi) f'(z) dz`` by adaptive quadrature."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    u_arr, psi_arr = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(psi, dtype=float))
    out = np.array([_eta_flux_scalar(a, b, eta, model)
                    for a, b in zip(u_arr.ravel(), psi_arr.ravel())]).reshape(u_arr.shape)
    return float(out) if out.ndim == 0 else out

# }}}


# {{{ one-dimensional building blocks

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)


def _bump(s):
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    safe = np.where(inside, s, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - safe * safe)), 0.0)


def _bump_deriv(s):
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    safe = np.where(inside, s, 0.0)
    q = 1.0 - safe * safe
    return np.where(inside, np.exp(-1.0 / q) * (-2.0 * safe / (q * q)), 0.0)


_BUMP_MASS = integrate.quad(lambda s: float(_bump(s)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-14)[0]


def _bump_cdf(s):
    """``int_{-1}^s omega`` for the unit-mass bump, by Gauss-Legendre on ``[-1, s]``."""
    s = np.clip(np.asarray(s, dtype=float), -1.0, 1.0)
    half = 0.5 * (s + 1.0)
    nodes = -1.0 + half[..., None] * (_GL_NODES + 1.0)
    return (half[..., None] * _bump(nodes) * _GL_WEIGHTS).sum(axis=-1) / _BUMP_MASS


@dataclass(frozen=True)
class Mollifier:
    """``omega_r(x) = omega(x / r) / r`` with ``omega`` the normalised bump on ``[-1, 1]``."""

    r: float = 1.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"mollifier width must be positive, got {self.r}")

    def __call__(self, x):
        return _bump(np.asarray(x) / self.r) / (_BUMP_MASS * self.r)

    def deriv(self, x):
        return _bump_deriv(np.asarray(x) / self.r) / (_BUMP_MASS * self.r**2)

    def cumulative(self, x):
        """``H_r(x) = int_{-inf}^x omega_r``."""
        return _bump_cdf(np.asarray(x) / self.r)


@dataclass(frozen=True)
class Cutoff:
    """``K_beta(x) = phi(x / beta)``: 1 on ``|x| < beta``, 0 on ``|x| >= 2 beta``.

    The transition is ``1 - H(2|x| - 3)`` with ``H`` the cumulative bump, so
    every derivative is available in closed form.
    """

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"cutoff scale must be positive, got {self.beta}")

    def __call__(self, x):
        a = np.abs(np.asarray(x, dtype=float)) / self.beta
        return np.where(a <= 1.0, 1.0, np.where(a >= 2.0, 0.0, 1.0 - _bump_cdf(2.0 * a - 3.0)))

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        a = np.abs(x) / self.beta
        return -2.0 * np.sign(x) * _bump(2.0 * a - 3.0) / (_BUMP_MASS * self.beta)

    def deriv2(self, x):
        a = np.abs(np.asarray(x, dtype=float)) / self.beta
        return -4.0 * _bump_deriv(2.0 * a - 3.0) / (_BUMP_MASS * self.beta**2)

    @property
    def support(self) -> tuple[float, float]:
        return (-2.0 * self.beta, 2.0 * self.beta)


@dataclass(frozen=True)
class Ramp:
    """``h_alpha(z) = clip(alpha z + 1, 0, 1)``, rising on ``[-1/alpha, 0]``."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"ramp steepness must be positive, got {self.alpha}")

    def __call__(self, z):
        return np.clip(self.alpha * np.asarray(z, dtype=float) + 1.0, 0.0, 1.0)

    def deriv(self, z):
        z = np.asarray(z, dtype=float)
        return np.where((z > -1.0 / self.alpha) & (z < 0.0), self.alpha, 0.0)

    def antiderivative(self, z):
        """``int_{-inf}^z h_alpha``."""
        z = np.asarray(z, dtype=float)
        a = self.alpha
        ramp = (np.clip(a * z + 1.0, 0.0, 1.0) ** 2) / (2.0 * a)
        return np.where(z > 0.0, 1.0 / (2.0 * a) + z, ramp)


@dataclass(frozen=True)
class TimeWindow:
    """Mollified indicator of ``(nu, tau)``: ``H(t - nu) - H(t - tau)``."""

    nu: float
    tau: float
    alpha0: float
    t_end: float

    def __post_init__(self):
        if not (0 < self.nu < self.tau < self.t_end):
            raise ValueError(f"need 0 < nu < tau < T, got nu={self.nu}, tau={self.tau}, T={self.t_end}")
        if not (0 < self.alpha0 < min(self.nu, self.t_end - self.tau)):
            raise ValueError(f"alpha0={self.alpha0} must be below min(nu, T - tau)")

    @cached_property
    def _omega(self):
        return Mollifier(self.alpha0)

    def __call__(self, t):
        return self._omega.cumulative(np.asarray(t) - self.nu) - self._omega.cumulative(np.asarray(t) - self.tau)

    def deriv(self, t):
        return self._omega(np.asarray(t) - self.nu) - self._omega(np.asarray(t) - self.tau)

    @property
    def support(self) -> tuple[float, float]:
        return (self.nu - self.alpha0, self.tau + self.alpha0)


@dataclass(frozen=True)
class ConeSpec:
    """Lines ``L_l(t) = -L + M t`` and ``L_r(t) = L - M t``."""

    L: float
    M: float

    def __post_init__(self):
        if not (self.L > 0 and self.M > 0):
            raise ValueError(f"cone needs L > 0 and M > 0, got L={self.L}, M={self.M}")

    def left(self, t):
        return -self.L + self.M * t

    def right(self, t):
        return self.L - self.M * t

    def check_horizon(self, t_end: float):
        if not self.L - self.M * t_end > 0:
            raise ValueError(f"cone closes before T: L={self.L} <= M*T={self.M * t_end}")

# }}}


# {{{ test function

@dataclass(frozen=True)
class TestFunction:
    """``phi(x, y, t) = K_beta(x) Psi(y, t)`` with analytic partial derivatives."""

    __test__ = False  # not a pytest class

    cutoff: Cutoff
    window: TimeWindow
    cone: ConeSpec
    ramp: Ramp

    # y-trapezoid chi^alpha_{(L_l, L_r)} and its derivatives

    def _offsets(self, y, t):
        y = np.asarray(y, dtype=float)
        return y - self.cone.left(t), y - self.cone.right(t) - 1.0 / self.ramp.alpha

    def chi_y_factor(self, y, t):
        zl, zr = self._offsets(y, t)
        return self.ramp(zl) - self.ramp(zr)

    def psi(self, y, t):
        return self.window(t) * self.chi_y_factor(y, t)

    def psi_t(self, y, t):
        zl, zr = self._offsets(y, t)
        moving = -self.window(t) * self.cone.M * (self.ramp.deriv(zl) + self.ramp.deriv(zr))
        return moving + self.window.deriv(t) * (self.ramp(zl) - self.ramp(zr))

    def psi_y(self, y, t):
        zl, zr = self._offsets(y, t)
        return self.window(t) * (self.ramp.deriv(zl) - self.ramp.deriv(zr))

    def __call__(self, x, y, t):
        return self.cutoff(x) * self.psi(y, t)

    def d_t(self, x, y, t):
        return self.cutoff(x) * self.psi_t(y, t)

    def d_y(self, x, y, t):
        return self.cutoff(x) * self.psi_y(y, t)

    def d_xx(self, x, y, t):
        return self.cutoff.deriv2(x) * self.psi(y, t)

    def y_cell_integrals(self, edges: np.ndarray, t: float):
        """Exact integrals of the y-factor, its y- and t-derivatives over each cell.

        Returns ``(int chi, int chi_y, int chi_t)`` over ``[edges[k], edges[k+1]]``.
        """
        zl, zr = self._offsets(edges, t)
        anti = self.ramp.antiderivative(zl) - self.ramp.antiderivative(zr)
        chi = self.ramp(zl) - self.ramp(zr)
        ramps = self.ramp(zl) + self.ramp(zr)
        return np.diff(anti), np.diff(chi), -self.cone.M * np.diff(ramps)

    # support

    @property
    def t_support(self) -> tuple[float, float]:
        return self.window.support

    def y_support(self) -> tuple[float, float]:
        t0 = self.t_support[0]
        wing = 1.0 / self.ramp.alpha
        return (self.cone.left(t0) - wing, self.cone.right(t0) + wing)

    def support_volume(self) -> float:
        """Measure of the space-time support of ``phi``."""
        t0, t1 = self.t_support
        wing = 1.0 / self.ramp.alpha
        width = 2.0 * self.cone.L + 2.0 * wing
        # strip width 2 (L - M t) + 2 / alpha integrated over the window support
        strip = width * (t1 - t0) - self.cone.M * (t1 * t1 - t0 * t0)
        return 4.0 * self.cutoff.beta * strip

    def check_support(self, grid, t_end: float):
        x0, x1 = self.cutoff.support
        y0, y1 = self.y_support()
        t0, t1 = self.t_support
        problems = []
        if x0 < grid.x_min or x1 > grid.x_max:
            problems.append(f"x-support [{x0:.6g}, {x1:.6g}] exceeds [{grid.x_min}, {grid.x_max}]")
        if y0 < grid.y_min or y1 > grid.y_max:
            problems.append(f"y-support [{y0:.6g}, {y1:.6g}] exceeds [{grid.y_min}, {grid.y_max}]")
        if t0 <= 0 or t1 >= t_end:
            problems.append(f"t-support [{t0:.6g}, {t1:.6g}] is not inside (0, {t_end})")
        if problems:
            raise ValueError("test function support violation: " + "; ".join(problems))


def build_test_function(cutoff: Cutoff, window: TimeWindow, cone: ConeSpec, alpha: float,
                        grid=None) -> TestFunction:
    if not cone.L - cone.M * window.tau > 0:
        raise ValueError(f"cone closes inside the window: L={cone.L}, M*tau={cone.M * window.tau}")
    # the y-trapezoid stays nonnegative while its two ramps do not cross
    t1 = window.support[1]
    if not 2.0 * (cone.L - cone.M * t1) + 1.0 / alpha > 0:
        raise ValueError("cone lines cross before the window closes; phi would turn negative")
    phi = TestFunction(cutoff, window, cone, Ramp(alpha))
    if grid is not None:
        phi.check_support(grid, window.t_end)
    return phi

# }}}


# {{{ comparison profiles psi(x)

@dataclass(frozen=True)
class PsiProfile:
    label: str
    value: Callable[[np.ndarray], np.ndarray]
    dxx: Callable[[np.ndarray], np.ndarray]
    is_constant: bool = False

    def __call__(self, x):
        return self.value(x)


def constant(c: float) -> PsiProfile:
    c = float(c)
    return PsiProfile(f"const:{c!r}", lambda x: np.full_like(np.asarray(x, dtype=float), c),
                      lambda x: np.zeros_like(np.asarray(x, dtype=float)), is_constant=True)


def affine(p: float, q: float) -> PsiProfile:
    p, q = float(p), float(q)
    return PsiProfile(f"affine:p={p!r},q={q!r}", lambda x: p + q * np.asarray(x, dtype=float),
                      lambda x: np.zeros_like(np.asarray(x, dtype=float)))


def gaussian(A: float, sigma: float) -> PsiProfile:
    A, sigma = float(A), float(sigma)

    def value(x):
        x = np.asarray(x, dtype=float)
        return A * np.exp(-x * x / (2 * sigma**2))

    def dxx(x):
        x = np.asarray(x, dtype=float)
        return value(x) * (x * x / sigma**4 - 1.0 / sigma**2)

    return PsiProfile(f"gaussian:A={A!r},sigma={sigma!r}", value, dxx)


def sinusoid(A: float, k: float) -> PsiProfile:
    A, k = float(A), float(k)
    return PsiProfile(f"sinusoid:A={A!r},k={k!r}",
                      lambda x: A * np.sin(k * np.asarray(x, dtype=float)),
                      lambda x: -A * k * k * np.sin(k * np.asarray(x, dtype=float)))


def _params(text: str) -> dict[str, float]:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"expected key=value, got {item!r}")
        out[key.strip()] = float(value)
    return out


def parse_psi(label: str) -> PsiProfile:
    """``const:<c>``, ``affine:p=..,q=..``, ``gaussian:A=..,sigma=..`` or ``sinusoid:A=..,k=..``."""
    kind, _, rest = label.strip().partition(":")
    try:
        if kind in ("const", "constant"):
            return constant(float(rest))
        params = _params(rest)
        if kind == "affine":
            return affine(params["p"], params["q"])
        if kind == "gaussian":
            return gaussian(params["A"], params["sigma"])
        if kind == "sinusoid":
            return sinusoid(params["A"], params["k"])
    except KeyError as exc:
        raise ValueError(f"psi profile {label!r} is missing parameter {exc}") from None
    raise ValueError(f"unknown psi profile {label!r}")

# }}}


# {{{ residuals

def _trapezoid_weights(times: np.ndarray) -> np.ndarray:
    w = np.zeros_like(times)
    dt = np.diff(times)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


def _frames(history):
    return history.history if hasattr(history, "history") else list(history)


_CELL_NODES, _CELL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _x_cell_integrals(cutoff: Cutoff, edges: np.ndarray):
    """Cell integrals of ``K_beta`` (Gauss) and ``K_beta''`` (exact, via ``K_beta'``)."""
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * _CELL_NODES
    K = 0.5 * (hi - lo)[:, 0] * (cutoff(nodes) @ _CELL_WEIGHTS)
    return K, np.diff(cutoff.deriv(edges))


def _factors(phi: TestFunction, grid, t):
    """Per-cell integrals of phi, phi_t, phi_y, phi_xx at time ``t``."""
    K, Kxx = _x_cell_integrals(phi.cutoff, grid.x_edges)
    Y0, Yy, Yt = phi.y_cell_integrals(grid.y_edges, t)
    T, Tt = float(phi.window(t)), float(phi.window.deriv(t))
    return (np.outer(K, T * Y0), np.outer(K, Tt * Y0 + T * Yt),
            np.outer(K, T * Yy), np.outer(Kxx, T * Y0))


def weak_residual(history, u0_field, model: FluxModel, phi: TestFunction) -> float:
    """Discrete value of the weak formulation; zero for exact weak solutions.

    Space integrals use the cell values of ``u`` (exact in y for the
    piecewise linear y-factor, midpoint in x); time integrals use the
    trapezoid rule over the stored frames.
    """
    frames = _frames(history)
    grid = frames[0].grid
    times = np.array([f.time for f in frames])
    phi.check_support(grid, times[-1])
    total = 0.0
    for w, frame in zip(_trapezoid_weights(times), frames):
        if w == 0.0:
            continue
        I, It, Iy, Ixx = _factors(phi, grid, frame.time)
        u = frame.values
        total += w * float((u * It + model.eval(u) * Iy + u * Ixx).sum())
    I0 = _factors(phi, grid, 0.0)[0]
    return total + float((u0_field.values * I0).sum())


def entropy_residual_terms(history, model: FluxModel, psi: PsiProfile, phi: TestFunction) -> dict:
    """The four integrals whose sum is :func:`entropy_residual`."""
    frames = _frames(history)
    grid = frames[0].grid
    times = np.array([f.time for f in frames])
    phi.check_support(grid, times[-1])
    xc = grid.x_centers
    p = psi(xc)[:, None]
    pxx = psi.dxx(xc)[:, None]
    fp = model.eval(p)
    terms = dict(time=0.0, flux=0.0, diffusion=0.0, source=0.0)
    for w, frame in zip(_trapezoid_weights(times), frames):
        if w == 0.0:
            continue
        I, It, Iy, Ixx = _factors(phi, grid, frame.time)
        u = frame.values
        s = sign(u - p)
        a = np.abs(u - p)
        terms["time"] += w * float((a * It).sum())
        terms["flux"] += w * float((s * (model.eval(u) - fp) * Iy).sum())
        terms["diffusion"] += w * float((a * Ixx).sum())
        terms["source"] += w * float((s * pxx * I).sum())
    return terms


def entropy_residual(history, model: FluxModel, psi: PsiProfile, phi: TestFunction) -> float:
    """Entropy inequality rearranged as ``R >= 0`` for entropy solutions."""
    return math.fsum(entropy_residual_terms(history, model, psi, phi).values())

# }}}
