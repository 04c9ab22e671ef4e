import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from anisovisc.diagnostics import (cone_l1_error, mass, rate_fit,
                                   time_derivative_l1, total_variation)
from anisovisc.entropy import ConeSpec
from anisovisc.grid import Field, make_grid, project_initial
from anisovisc.reference import exact_linear_gaussian, smoothed_step


def test_mass_examples():
    g = make_grid(-1, 1, -1, 1, 8, 8)
    assert mass(Field(g, np.zeros(g.shape))) == 0
    assert mass(Field(g, np.ones(g.shape))) == pytest.approx(4.0, abs=1e-14)
    half = project_initial(lambda x, y: np.where(y < 0, 1.0, 0.0), g)
    assert mass(half) == pytest.approx(2.0, abs=1e-14)


def test_tv_constant_is_zero():
    g = make_grid(0, 1, 0, 1, 5, 7)
    for bc in ("periodic", "zero_flux"):
        assert total_variation(Field(g, np.full(g.shape, 3.3)), bc) == 0


def test_tv_step_across_width_two():
    g = make_grid(-1, 1, -1, 1, 8, 16)
    step = project_initial(lambda x, y: np.where(y < 0, 1.0, 0.0), g)
    assert total_variation(step, "zero_flux") == pytest.approx(2.0, abs=1e-14)
    # the wrap-around face adds the second jump
    assert total_variation(step, "periodic") == pytest.approx(4.0, abs=1e-14)


def _tv_by_enumeration(u, dx, dy, periodic):
    nx, ny = u.shape
    total = 0.0
    for i, j in itertools.product(range(nx), range(ny)):
        for di, dj, w in ((1, 0, dy), (0, 1, dx)):
            ii, jj = i + di, j + dj
            if periodic:
                ii, jj = ii % nx, jj % ny
            elif ii >= nx or jj >= ny:
                continue
            total += abs(u[ii, jj] - u[i, j]) * w
    return total


@pytest.mark.parametrize("bc", ["periodic", "zero_flux"])
def test_tv_checkerboard_by_enumeration(bc):
    g = make_grid(0, 1, 0, 2, 4, 4)  # dx = 0.25, dy = 0.5
    u = np.fromfunction(lambda i, j: (-1.0) ** (i + j), g.shape)
    f = Field(g, u)
    expected = _tv_by_enumeration(u, g.dx, g.dy, bc == "periodic")
    assert total_variation(f, bc) == pytest.approx(expected, abs=1e-14)
    # every adjacent pair jumps by 2: 12 x-pairs at dy, 12 y-pairs at dx without wrap
    if bc == "zero_flux":
        assert expected == pytest.approx(2 * (12 * g.dy + 12 * g.dx))


@given(st.floats(-100, 100))
def test_tv_shift_invariant(c):
    rng = np.random.default_rng(3)
    g = make_grid(0, 1, 0, 1, 6, 9)
    u = rng.normal(size=g.shape)
    for bc in ("periodic", "zero_flux"):
        assert total_variation(Field(g, u + c), bc) == pytest.approx(total_variation(Field(g, u), bc), rel=1e-9, abs=1e-9)


def test_time_derivative_constant_history():
    g = make_grid(0, 1, 0, 1, 4, 4)
    frames = [Field(g, np.ones(g.shape), t) for t in (0.0, 0.1, 0.3)]
    np.testing.assert_array_equal(time_derivative_l1(frames), [0.0, 0.0])
    with pytest.raises(ValueError):
        time_derivative_l1(frames[:1])


def test_time_derivative_of_translation():
    # a monotone profile of total variation 1 translated at speed a: ||u_t||_1 = a * TV
    a, width = 0.8, 0.3
    g = make_grid(-1, 1, -3, 3, 4, 1200)
    step = smoothed_step(1.0, 0.0, width)
    X, Y = g.mesh()
    frames = [Field(g, step(Y - a * t), t) for t in np.linspace(0, 1, 11)]
    x_extent = g.x_max - g.x_min
    rates = time_derivative_l1(frames) / x_extent
    np.testing.assert_allclose(rates, a * 1.0, rtol=2e-3)


def test_time_derivative_of_gaussian_exact_solution_is_finite():
    g = make_grid(-4, 4, -4, 4, 32, 64)
    X, Y = g.mesh()
    step = smoothed_step(1.0, 0.0, 0.2)
    frames = [Field(g, exact_linear_gaussian(1.0, 0.5, 1.0, step, X, Y, t), t) for t in (0, 0.1, 0.2)]
    assert np.all(np.isfinite(time_derivative_l1(frames)))


def test_cone_error_examples():
    g = make_grid(-1, 1, -4, 4, 8, 64)
    u = Field(g, np.zeros(g.shape))
    v = Field(g, np.ones(g.shape))
    cone = ConeSpec(L=3.0, M=1.0)
    assert cone_l1_error(u, u, cone, 0.5) == 0
    # cone [-2, 2] at t = 1 covers half of the y-extent
    assert cone_l1_error(u, v, cone, 1.0) == pytest.approx(0.5 * g.area, abs=1e-13)
    with pytest.raises(ValueError):
        cone_l1_error(u, v, cone, 3.0)
    with pytest.raises(ValueError):
        cone_l1_error(u, Field(make_grid(-1, 1, -4, 4, 8, 32), np.zeros((8, 32))), cone, 0.0)


def test_cone_error_fractional_rows():
    # cone edges cut through cells: the covered length is exact, not a staircase
    g = make_grid(0, 1, -1, 1, 4, 8)  # dy = 0.25
    u = Field(g, np.zeros(g.shape))
    v = Field(g, np.ones(g.shape))
    cone = ConeSpec(L=0.6, M=0.1)
    t = 1.0  # strip [-0.5, 0.5], edges on cell faces
    expected = (cone.right(t) - cone.left(t)) * 1.0
    assert cone_l1_error(u, v, cone, t) == pytest.approx(expected, abs=1e-14)
    t = 0.3  # strip [-0.57, 0.57], edges inside cells
    assert cone_l1_error(u, v, cone, t) == pytest.approx(2 * 0.57, abs=1e-14)


def test_cone_error_symmetric_nonnegative():
    rng = np.random.default_rng(11)
    g = make_grid(-1, 1, -2, 2, 6, 20)
    a, b = Field(g, rng.normal(size=g.shape)), Field(g, rng.normal(size=g.shape))
    cone = ConeSpec(1.5, 1.0)
    e = cone_l1_error(a, b, cone, 0.2)
    assert e > 0 and e == cone_l1_error(b, a, cone, 0.2)
    # differences outside the strip are invisible
    c = b.values.copy()
    c[:, 0] += 5.0
    assert cone_l1_error(b, Field(g, c), cone, 0.2) == 0


@pytest.mark.parametrize("p", [1.0, 0.5, 0.37])
def test_rate_fit_exact_power_laws(p):
    eps = [0.04, 0.02, 0.01, 0.005]
    rep = rate_fit([(e, 3.7 * e**p) for e in eps])
    assert abs(rep.slope - p) <= 1e-12
    assert rep.r_squared == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(rep.pairwise_rates, p, atol=1e-12)
    assert [e for e, _ in rep.pairs] == eps


def test_rate_fit_sorts_and_excludes_zero():
    rep = rate_fit([(0.01, 0.1), (0.04, 0.2), (0.005, 0.0), (0.02, 0.1414)])
    assert [e for e, _ in rep.pairs] == [0.04, 0.02, 0.01]
    assert rep.excluded == [(0.005, 0.0)]
    assert "excluded=0.005" in rep.summary()


def test_rate_fit_rejects():
    with pytest.raises(ValueError):
        rate_fit([(0.1, 1.0), (0.05, 0.5), (0.02, 0.0)])
    with pytest.raises(ValueError):
        rate_fit([(0.1, 1.0), (0.1, 0.5), (0.1, 0.2)])


def test_rate_report_csv():
    rep = rate_fit([(e, e**0.5) for e in (0.04, 0.02, 0.01)])
    lines = rep.to_csv().splitlines()
    assert lines[0] == "epsilon,error,pairwise_rate"
    assert len(lines) == 4 and lines[-1].endswith(",")
    assert rep.passes(0.45) and not rep.passes(0.6)
