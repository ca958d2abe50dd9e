import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relswlw.checks import label_run, linear_flow_error
from relswlw.errors import CFLError, DomainError, InversionError
from relswlw.grid import Grid
from relswlw.lagrangian import (
    LinearVelocity,
    advance_flow,
    advance_label,
    identity_label,
    initial_flow,
    initial_label,
    invert_map,
    verify_density_identity,
)


def sine_density(grid, amplitude=0.5):
    return 1.0 + amplitude * np.sin(2 * np.pi * grid.mesh()[2] / grid.lengths[2])


def test_unit_density_gives_identity_labels():
    g = Grid.cube(6)
    lf = initial_label(g, np.ones(g.shape))
    assert lf.slope == 1.0
    assert np.all(lf.yper == 0)
    np.testing.assert_allclose(lf.values(), g.mesh())


def test_constant_density_scales_third_label():
    g = Grid.cube(6)
    lf = initial_label(g, np.full(g.shape, 2.0))
    assert lf.slope == 2.0
    assert lf.lagrangian_grid().lengths == (1.0, 1.0, 2.0)
    np.testing.assert_allclose(lf.determinant(), 2.0, rtol=1e-14)


def test_sine_density_identity_spectral():
    g = Grid.slab(64, 1.0, 2)
    rho = sine_density(g)
    lf = initial_label(g, rho)
    np.testing.assert_allclose(lf.determinant("spectral"), rho, atol=1e-10)
    # the label is the analytic antiderivative
    x = g.mesh()[2]
    exact = x + 0.5 * (1 - np.cos(2 * np.pi * x)) / (2 * np.pi)
    np.testing.assert_allclose(lf.values()[2], exact, atol=1e-12)


def test_initial_identity_residual_fd4():
    g = Grid.slab(256, 1.0, 2)
    rho = 1.0 + 0.2 * np.sin(2 * np.pi * g.mesh()[2])
    assert verify_density_identity(initial_label(g, rho), rho) <= 1e-8
    assert verify_density_identity(initial_label(g, rho), rho, method="spectral") <= 1e-12


def test_mismatched_density_is_detected():
    g = Grid.slab(64, 1.0, 2)
    rho = sine_density(g, 0.2)
    lf = initial_label(g, rho)
    assert verify_density_identity(lf, 2 * rho, "spectral") == pytest.approx(0.5, rel=1e-9)


def test_unequal_column_means_rejected():
    g = Grid.cube(8)
    rho = 1.0 + 0.3 * np.sin(2 * np.pi * g.mesh()[0])
    with pytest.raises(DomainError):
        initial_label(g, rho)
    with pytest.raises(DomainError):
        initial_label(g, -np.ones(g.shape))


def test_labels_vary_in_x_plane_only_through_x3():
    g = Grid.cube(8)
    rho = 1.0 + 0.3 * np.sin(2 * np.pi * g.mesh()[2]) * np.cos(2 * np.pi * g.mesh()[0])
    lf = initial_label(g, rho)
    np.testing.assert_allclose(lf.determinant("spectral"), rho, atol=1e-12)


def test_zero_velocity_leaves_labels_and_tracers():
    g = Grid.cube(6)
    lf = initial_label(g, np.full(g.shape, 1.5))
    out = advance_label(lf, np.zeros((3,) + g.shape), 0.1)
    np.testing.assert_array_equal(out.yper, lf.yper)
    fs = initial_flow(g, np.full(g.shape, 1.5))
    fs2 = advance_flow(fs, np.zeros((3,) + g.shape), 0.1, grid=g)
    np.testing.assert_array_equal(fs2.phi, fs.phi)
    np.testing.assert_array_equal(fs2.jphi, fs.jphi)
    np.testing.assert_array_equal(fs2.jy, fs.jy)


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_constant_velocity_transport(c1, c2, c3):
    g = Grid.cube(8)
    c = np.array([c1, c2, c3])
    u = np.broadcast_to(c.reshape(3, 1, 1, 1), (3,) + g.shape).copy()
    dt = 0.2
    lf = identity_label(g)
    for _ in range(3):
        lf = advance_label(lf, u, dt)
    np.testing.assert_allclose(lf.values(), g.mesh() - 3 * dt * c.reshape(3, 1, 1, 1), atol=1e-13)
    fs = advance_flow(initial_flow(g, np.ones(g.shape)), u, dt, grid=g)
    np.testing.assert_allclose(fs.phi, g.points() + dt * c[:, None], atol=1e-14)
    np.testing.assert_allclose(fs.jphi, 1.0, atol=1e-14)


def test_label_courant_limit():
    g = Grid.slab(16, 1.0, 2)
    u = np.zeros((3,) + g.shape)
    u[2] = 1.0
    with pytest.raises(CFLError):
        advance_label(identity_label(g), u, 0.2)


def test_linear_flow_jacobian_fourth_order():
    errs = [linear_flow_error(dt) for dt in (0.1, 0.05, 0.025)]
    orders = [np.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(o == pytest.approx(4.0, abs=0.4) for o in orders)


def test_jacobian_product_constant_along_tracers(rng):
    g = Grid.cube(12)
    x = g.mesh()
    u = 0.3 * np.stack([np.sin(2 * np.pi * x[1]), np.cos(2 * np.pi * x[2]) * np.sin(2 * np.pi * x[0]),
                        np.sin(2 * np.pi * (x[0] + x[2]))])
    rho = np.full(g.shape, 1.0)
    fs = initial_flow(g, rho, points=rng.uniform(0, 1, size=(3, 200)))
    prod0 = fs.jphi * fs.jy
    for k in range(20):
        fs = advance_flow(fs, u, 0.01, grid=g, t=0.01 * k)
    assert np.max(np.abs(fs.jphi - 1)) > 1e-3
    np.testing.assert_allclose(fs.jphi * fs.jy, prod0, rtol=1e-8)


def test_linear_velocity_needs_no_grid():
    v = LinearVelocity(np.eye(3))
    pts = np.ones((3, 2))
    np.testing.assert_array_equal(v.velocity(0, pts), pts)
    np.testing.assert_array_equal(v.divergence(0, pts), [3, 3])
    with pytest.raises(ValueError):
        advance_flow(initial_flow(Grid.cube(2), np.ones((2, 2, 2))), np.zeros((3, 2, 2, 2)), 0.1)


def test_density_identity_after_evolution_converges():
    r = [label_run(n, 0.25)["residual"] for n in (64, 128)]
    assert r[0] <= 5e-3
    assert np.log2(r[0] / r[1]) >= 1.0


def test_inverse_of_identity_and_affine_labels(rng):
    g = Grid.cube(6)
    y = rng.uniform(-1, 2, size=(3, 50))
    np.testing.assert_allclose(invert_map(identity_label(g))(y), y, atol=1e-12)
    x = invert_map(identity_label(g, 2.0))(y)
    np.testing.assert_allclose(x, y / np.array([1, 1, 2.0])[:, None], atol=1e-12)


def test_inverse_roundtrip_on_curved_labels(rng):
    g = Grid.cube(16)
    x = g.mesh()
    rho = 1.0 + 0.4 * np.sin(2 * np.pi * x[2]) * (1 + 0.5 * np.cos(2 * np.pi * x[0]))
    lf = initial_label(g, rho)
    y = rng.uniform(0, 1, size=(3, 500)) * np.array(lf.lagrangian_grid().lengths)[:, None]
    inv = invert_map(lf, tol=1e-12)
    back = lf.evaluate(inv(y))
    assert np.max(np.abs(back - y)) <= 1e-10 * max(g.lengths)


def test_inverse_reports_failure():
    g = Grid.slab(16, 1.0, 2)
    lf = initial_label(g, sine_density(g, 0.8))
    with pytest.raises(InversionError) as err:
        invert_map(lf, max_iter=0)(np.array([[0.1], [0.2], [0.33]]))
    assert err.value.points.shape[0] == 3
