import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as spi

from entstab.numerics import (
    GridError,
    GridFunction,
    build_grid,
    differentiate,
    gaussian_density,
    gradient,
    integrate,
    quad,
    sphere_area,
    xlogx,
)


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * np.pi)
    assert sphere_area(3) == pytest.approx(4 * np.pi)


@pytest.mark.parametrize(
    "args, msg",
    [
        (("radial", 0, 1.0, 64), "dimension"),
        (("line", 2, 1.0, 64), "line grids"),
        (("radial", 1, 1.0, 8), "resolution"),
        (("radial", 1, -1.0, 64), "extent"),
        (("square", 1, 1.0, 64), "kind"),
    ],
)
def test_build_grid_rejects(args, msg):
    with pytest.raises(GridError, match=msg):
        build_grid(*args)


def test_grid_invariants():
    for g in (build_grid("radial", 3, 5.0, 64), build_grid("line", 1, 5.0, 64),
              build_grid("radial", 2, 1e4, 256, stretch=0.5)):
        assert g.n == g.nodes.size == g.weights.size
        assert np.all(np.diff(g.nodes) > 0) and np.all(g.weights > 0)
    assert build_grid("radial", 2, 1.0, 64).nodes[0] > 0


# [TRIVIAL] normalization of the Gaussian on two half-lines
def test_radial_d1_gaussian_normalization():
    g = build_grid("radial", 1, 10.0, 1024)
    assert quad(g, np.exp(-g.r2 / 2)) == pytest.approx(np.sqrt(2 * np.pi), abs=1e-6)


# [TRIVIAL] ball volume
def test_ball_volume():
    g = build_grid("radial", 3, 1.0, 4096)
    assert quad(g, np.ones(g.n)) == pytest.approx(4 * np.pi / 3, abs=1e-6)


# [TRIVIAL] disk area
def test_disk_area():
    g = build_grid("radial", 2, 2.0, 2048)
    assert integrate(GridFunction(g, np.ones(g.n))) == pytest.approx(4 * np.pi, abs=1e-6)


# [DERIVED] oracle: adaptive quadrature of the Gaussian second moment
def test_line_second_moment():
    oracle, _ = spi.quad(lambda x: x * x * np.exp(-x * x / 2) / np.sqrt(2 * np.pi), -12, 12,
                         epsabs=1e-13)
    g = build_grid("line", 1, 12.0, 2048)
    assert quad(g, g.r2 * gaussian_density(g)) == pytest.approx(oracle, abs=1e-6)
    assert oracle == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_gaussian_density_mass(d):
    g = build_grid("radial", d, 12.0, 2048)
    assert quad(g, gaussian_density(g)) == pytest.approx(1.0, abs=1e-6)


# [DERIVED] Barenblatt p = 2, d = 1: int (1 - x^2) dx = 4/3
def test_barenblatt_mass_quadrature():
    g = build_grid("radial", 1, 1.0, 2048)
    assert quad(g, np.maximum(1 - g.r2, 0)) == pytest.approx(4 / 3, abs=1e-6)


def test_integrate_rejects_raw_arrays():
    g = build_grid("line", 1, 1.0, 32)
    with pytest.raises(GridError):
        integrate(np.ones(32))
    with pytest.raises(GridError):
        quad(g, np.ones(31))
    with pytest.raises(GridError):
        GridFunction(g, np.ones(31))


def test_nonnegative_flag_enforced():
    g = build_grid("line", 1, 1.0, 32)
    with pytest.raises(GridError):
        GridFunction(g, g.nodes, nonnegative=True)


def test_quadrature_second_order():
    # E|X| in d = 1: the integrand has a kink at the origin
    errs = []
    for n in (128, 256, 512):
        g = build_grid("radial", 1, 12.0, n)
        errs.append(abs(quad(g, g.radius * gaussian_density(g)) - np.sqrt(2 / np.pi)))
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


# [TRIVIAL] a second-order stencil is exact on quadratics
@pytest.mark.parametrize("kind", ["radial", "line"])
def test_derivative_of_square(kind):
    g = build_grid(kind, 1, 3.0, 64)
    df = differentiate(GridFunction(g, g.r2))
    assert np.max(np.abs(df.values - 2 * g.nodes)) <= 1e-8


def test_derivative_of_constant():
    g = build_grid("radial", 2, 3.0, 64, stretch=0.5)
    assert np.max(np.abs(gradient(g, np.full(g.n, 7.0)))) <= 1e-12
    g = build_grid("radial", 2, 3.0, 64)
    assert np.all(gradient(g, np.full(g.n, 7.0)) == 0.0)


# [DERIVED] analytic derivative oracle, error decreases at second order
def test_derivative_gaussian_second_order():
    errs = []
    for n in (256, 512):
        g = build_grid("radial", 2, 8.0, n)
        err = gradient(g, np.exp(-g.r2 / 2)) + g.nodes * np.exp(-g.r2 / 2)
        errs.append(np.max(np.abs(err)))
    assert errs[0] / errs[1] >= 3.5


def test_even_profile_vanishing_slope_at_origin():
    slopes = []
    for n in (128, 256):
        g = build_grid("radial", 1, 4.0, n)
        slopes.append(abs(gradient(g, np.cos(g.nodes))[0]))
    # the innermost node sits at h/2, where the exact slope is sin(h/2) ~ h/2
    g = build_grid("radial", 1, 4.0, 256)
    assert slopes[1] == pytest.approx(np.sin(g.nodes[0]), rel=1e-2)


def test_support_restricted_gradient():
    g = build_grid("radial", 1, 2.0, 200)
    v = np.maximum(1 - g.r2, 0)
    dv = gradient(g, v, support=v > 0)
    assert np.all(dv[v == 0] == 0)
    inside = g.nodes < 0.99
    assert np.max(np.abs(dv[inside] + 2 * g.nodes[inside])) < 1e-10


def test_too_few_nodes():
    g = build_grid("line", 1, 1.0, 16)
    with pytest.raises(GridError):
        gradient(g, np.ones(2))


def test_xlogx_zero_convention():
    assert xlogx(np.array([0.0]))[0] == 0.0
    assert xlogx(np.array([np.e]))[0] == pytest.approx(np.e)


@given(a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_integrate_linear(a, b):
    g = build_grid("radial", 2, 6.0, 128)
    f, h = np.exp(-g.r2), np.cos(g.nodes)
    lhs = quad(g, a * f + b * h)
    rhs = a * quad(g, f) + b * quad(g, h)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(a * quad(g, f)) + abs(b * quad(g, h)))


@given(d=st.integers(1, 3), extent=st.floats(0.1, 50), n=st.integers(16, 400))
def test_radial_weights_sum_to_ball(d, extent, n):
    g = build_grid("radial", d, extent, n)
    ball = sphere_area(d) / d * extent ** d
    assert g.weights.sum() == pytest.approx(ball, rel=d / n ** 2)


@given(c=st.floats(-3, 3), slope=st.floats(-3, 3))
def test_gradient_exact_on_affine_line(c, slope):
    g = build_grid("line", 1, 2.0, 40)
    assert np.allclose(gradient(g, c + slope * g.nodes), slope, atol=1e-11)
