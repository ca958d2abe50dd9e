import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relswlw.errors import GridMismatchError
from relswlw.grid import (
    Grid,
    ddx,
    divergence,
    fd4_symbol,
    gradient,
    interpolate,
    interpolate_cubic,
    l2_norm,
    laplacian2,
    spectral_ddx,
)


def sine(grid, axis, m=1):
    return np.sin(2 * np.pi * m * grid.mesh()[axis] / grid.lengths[axis])


def test_slab_geometry():
    g = Grid.slab(8, 2.0, axis=1)
    assert g.shape == (1, 8, 1)
    assert g.resolved_axes == (1,)
    assert g.min_spacing == pytest.approx(0.25)
    assert g.cell_volume == pytest.approx(2.0 * 0.25 * 2.0)


def test_shape_mismatch_is_reported():
    with pytest.raises(GridMismatchError):
        Grid.cube(4).check(np.zeros((4, 4, 5)))


@pytest.mark.parametrize("axis", [0, 1, 2])
def test_fd4_is_fourth_order(axis):
    errs = []
    for n in (16, 32):
        g = Grid.slab(n, 1.0, axis)
        x = g.mesh()[axis]
        exact = 2 * np.pi * np.cos(2 * np.pi * x)
        errs.append(np.max(np.abs(ddx(sine(g, axis), g, axis) - exact)))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(4.0, abs=0.1)


def test_fd4_symbol_matches_operator():
    g = Grid.slab(16, 1.0, 2)
    x = g.mesh()[2]
    f = np.exp(2j * np.pi * 3 * x)
    k_eff = fd4_symbol(g, 2).ravel()[3]
    np.testing.assert_allclose(ddx(f, g, 2), 1j * k_eff * f, atol=1e-12)


def test_collapsed_axis_derivatives_vanish():
    g = Grid.slab(8, 1.0, 0)
    f = sine(g, 0)
    assert np.all(ddx(f, g, 1) == 0) and np.all(spectral_ddx(f, g, 2) == 0)


def test_spectral_derivative_exact_for_resolved_modes():
    g = Grid.cube(8)
    f = sine(g, 1, 2)
    x = g.mesh()[1]
    np.testing.assert_allclose(spectral_ddx(f, g, 1), 4 * np.pi * np.cos(4 * np.pi * x), atol=1e-11)


def test_gradient_of_periodic_field_sums_to_zero(rng):
    g = Grid.cube(6)
    f = rng.normal(size=g.shape)
    assert np.all(np.abs(gradient(f, g).sum(axis=(1, 2, 3))) < 1e-11)
    assert abs(divergence(gradient(f, g), g).sum()) < 1e-10


def test_laplacian_second_order():
    errs = []
    for n in (16, 32):
        g = Grid.slab(n, 1.0, 2)
        errs.append(np.max(np.abs(laplacian2(sine(g, 2), g) + (2 * np.pi) ** 2 * sine(g, 2))))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.1)


def test_l2_norm_of_constant():
    g = Grid.cube(4, 2.0)
    assert l2_norm(np.full(g.shape, 3.0), g) == pytest.approx(3.0 * np.sqrt(8.0))


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_interpolation_reproduces_affine_periodic_data(x, y, z):
    # trilinear interpolation is exact at nodes and for fields linear between them
    g = Grid.cube(4)
    field = np.arange(64, dtype=float).reshape(g.shape)
    pts = np.array([[x], [y], [z]])
    base = np.floor(pts / 0.25).astype(int) % 4
    v = interpolate(field, g, pts)
    lo, hi = field.min(), field.max()
    assert lo - 1e-12 <= v[0] <= hi + 1e-12
    node = (base * 0.25).astype(float)
    np.testing.assert_allclose(interpolate(field, g, node), field[tuple(base[:, 0])], atol=1e-12)


def test_interpolation_gradient_matches_finite_difference(rng):
    g = Grid.cube(5)
    f = rng.normal(size=g.shape)
    p = rng.uniform(0, 1, size=(3, 7))
    _, grad = interpolate(f, g, p, with_gradient=True)
    h = 1e-7
    for a in range(3):
        d = np.zeros((3, 1))
        d[a] = h
        fd = (interpolate(f, g, p + d) - interpolate(f, g, p - d)) / (2 * h)
        np.testing.assert_allclose(grad[a], fd, atol=1e-5)


def test_cubic_interpolation_is_fourth_order():
    errs = []
    for n in (16, 32):
        g = Grid.slab(n, 1.0, 2)
        p = np.zeros((3, 50))
        p[2] = np.linspace(0, 1, 50) + 0.013
        errs.append(np.max(np.abs(interpolate_cubic(sine(g, 2), g, p) - np.sin(2 * np.pi * p[2]))))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(4.0, abs=0.2)
