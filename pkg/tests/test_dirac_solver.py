import numpy as np
import pytest

from relswlw.coupling import thirring_potential
from relswlw.dirac_algebra import IDENTITY4, build_alpha_set, currents
from relswlw.dirac_solver import (
    SpinorField,
    dirac_rhs,
    evolve_dirac,
    initial_observable,
    max_stable_dt,
    step_dirac,
    total_charge,
)
from relswlw.errors import CFLError, GridMismatchError
from relswlw.grid import Grid, fd4_symbol, l2_norm
from relswlw.scenarios import plane_wave_mode, spinor_gaussian_packet, spinor_plane_wave

A = build_alpha_set()
V0 = np.array([1.0, 0.5j, 0.3, -0.2 + 0.4j])


def constant_field(grid, v=V0):
    return SpinorField(grid, np.broadcast_to(v.reshape(4, 1, 1, 1), (4,) + grid.shape).copy())


def test_constant_field_has_zero_rate():
    f = constant_field(Grid.cube(4))
    assert np.all(dirac_rhs(f) == 0)


def test_constant_potential_rotates_phase():
    f = constant_field(Grid.cube(4))
    np.testing.assert_allclose(dirac_rhs(f, 1.7 * IDENTITY4), -1j * 1.7 * f.values, atol=1e-14)


@pytest.mark.parametrize("branch", [1, -1])
def test_plane_wave_rate_is_eigenvalue(branch):
    g = Grid.cube(16)
    modes = (1, 2, 0)
    # eigenvector of the discrete symbol, built from the fourth-order effective wavenumbers
    k_eff = np.array([fd4_symbol(g, a).ravel()[m] for a, m in enumerate(modes)])
    lam, v = plane_wave_mode(k_eff, branch, A)
    phase = np.exp(1j * np.tensordot(2 * np.pi * np.array(modes), g.mesh(), axes=1))
    f = SpinorField(g, v.reshape(4, 1, 1, 1) * phase)
    np.testing.assert_allclose(dirac_rhs(f, A=A), 1j * lam * f.values, atol=1e-11)
    assert lam == pytest.approx(branch * np.linalg.norm(k_eff))


def test_continuum_plane_wave_rate_close_to_eigenvalue():
    g = Grid.cube(32)
    f, k, omega = spinor_plane_wave(g, (1, 2, 0), branch=1, A=A)
    assert omega == pytest.approx(np.linalg.norm(k))
    rate = dirac_rhs(f, A=A)
    assert l2_norm(rate - 1j * omega * f.values, g) < 2e-3 * l2_norm(rate, g)


def test_potential_shape_is_checked():
    f = constant_field(Grid.cube(4))
    with pytest.raises(GridMismatchError):
        dirac_rhs(f, np.zeros((4, 4, 3, 3, 3)))


def test_cfl_violation_raises():
    g = Grid.slab(32, 1.0, 2)
    f = constant_field(g)
    with pytest.raises(CFLError) as err:
        step_dirac(f, None, 2 * max_stable_dt(g))
    assert err.value.dt_max == pytest.approx(0.4 / 32)


def test_constant_potential_exact_phase():
    g = Grid.cube(3)
    f = constant_field(g)
    dt = max_stable_dt(g)
    # one-step error of RK4 on a pure phase is O(dt^5)
    e1 = np.max(np.abs(step_dirac(f, 2.0 * IDENTITY4, dt).values - f.values * np.exp(-2j * dt)))
    e2 = np.max(np.abs(step_dirac(f, 2.0 * IDENTITY4, dt / 2).values - f.values * np.exp(-1j * dt)))
    assert np.log2(e1 / e2) == pytest.approx(5.0, abs=0.3)


def test_free_eigenmode_translates_at_fourth_order():
    errs = []
    t = 0.5
    for n in (32, 64):
        g = Grid.slab(n, 1.0, 2)
        f, k, omega = spinor_plane_wave(g, (0, 0, 1), branch=1, A=A)
        out = evolve_dirac(f, None, t, A=A)
        errs.append(l2_norm(out.values - f.values * np.exp(1j * omega * t), g))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(4.0, abs=0.3)


def test_charge_loss_vanishes_under_time_refinement():
    g = Grid.slab(64, 1.0, 2)
    f0 = spinor_gaussian_packet(g)
    x = g.mesh()[2]
    V = 1.0 / (1.0 + 0.5 * np.sin(2 * np.pi * x))
    B = thirring_potential(1.0, V, A)
    q0 = total_charge(f0)
    drift = [abs(total_charge(evolve_dirac(f0, B, 0.5, cfl=c, A=A)) - q0) / q0 for c in (0.4, 0.2)]
    assert np.log2(drift[0] / drift[1]) >= 4.0


def test_non_hermitian_potential_breaks_charge_conservation():
    g = Grid.slab(32, 1.0, 2)
    f0 = spinor_gaussian_packet(g)
    q0 = total_charge(f0)
    q1 = total_charge(evolve_dirac(f0, 0.5j * IDENTITY4, 0.5, A=A))
    assert q1 / q0 == pytest.approx(np.exp(0.5), rel=1e-3)


def test_total_charge_examples():
    g = Grid.cube(5, 5.0)
    assert total_charge(SpinorField(g, np.zeros((4,) + g.shape))) == 0
    e1 = np.zeros((4,) + g.shape)
    e1[0] = 1.0
    assert total_charge(SpinorField(g, e1)) == pytest.approx(125.0)


def test_initial_observable_of_constant_field():
    f = constant_field(Grid.cube(4))
    for which in ("charge", "pseudocharge"):
        obs = initial_observable(f, which, A)
        assert np.ptp(obs.w) < 1e-14 and np.all(obs.wt == 0)


def test_initial_observable_plane_wave_matches_analytic_divergence():
    # for a single plane wave every current is constant, so the divergence vanishes
    g = Grid.cube(8)
    f, _, _ = spinor_plane_wave(g, (1, 1, 0), A=A)
    obs = initial_observable(f, "charge", A)
    cur = currents(f.values, A)
    assert np.max(np.abs(obs.wt)) < 1e-12
    np.testing.assert_allclose(obs.w, cur.charge)


def test_initial_observable_two_mode_divergence(rng):
    # superposition: analytic currents are trigonometric, so compare with their exact divergence
    g = Grid.slab(64, 1.0, 2)
    y = g.mesh()[2]
    v1, v2 = rng.normal(size=4) + 1j * rng.normal(size=4), rng.normal(size=4) + 1j * rng.normal(size=4)
    k1, k2 = 2 * np.pi, 6 * np.pi
    u = v1.reshape(4, 1, 1, 1) * np.exp(1j * k1 * y) + v2.reshape(4, 1, 1, 1) * np.exp(1j * k2 * y)
    obs = initial_observable(SpinorField(g, u), "charge", A)
    # j3 = 2 Re(conj(v1) a3 v2 exp(i (k2 - k1) y)) + const
    c = np.conj(v1) @ A.a3 @ v2
    exact = np.real(2j * (k2 - k1) * c * np.exp(1j * (k2 - k1) * y))
    np.testing.assert_allclose(obs.wt, exact, atol=2e-3 * np.max(np.abs(exact)))


def test_pseudocharge_vanishes_for_upper_component_profile():
    g = Grid.slab(16, 1.0, 0)
    u = np.zeros((4,) + g.shape, dtype=complex)
    u[0] = np.cos(2 * np.pi * g.mesh()[0]) + 2
    obs = initial_observable(SpinorField(g, u), "pseudocharge", A)
    assert np.all(obs.w == 0)


def test_unknown_observable_rejected():
    with pytest.raises(ValueError):
        initial_observable(constant_field(Grid.cube(2)), "energy")
