import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from relswlw.dirac_algebra import (
    IDENTITY4,
    algebra_residuals,
    build_alpha_set,
    charge_density,
    currents,
    interaction_matrix,
    pseudo_density,
    thirring_from_observables,
    thirring_matrix,
)

from conftest import random_spinors

A = build_alpha_set()
E1 = np.array([1, 0, 0, 0], dtype=complex)
finite = st.floats(-3, 3, allow_nan=False)
spinor = st.tuples(arrays(float, 4, elements=finite), arrays(float, 4, elements=finite)).map(
    lambda p: p[0] + 1j * p[1])


def test_every_relation_holds_exactly():
    res = algebra_residuals(A)
    assert set(res) >= {"hermitian_a1", "square_b", "anticommute_a1a2", "commute_b_a3", "b_definition"}
    assert max(res.values()) <= 1e-14


def test_square_and_anticommutator():
    np.testing.assert_array_equal(A.a1 @ A.a1, IDENTITY4)
    np.testing.assert_array_equal(A.a1 @ A.a2 + A.a2 @ A.a1, np.zeros((4, 4)))


def test_chiral_matrix_blocks():
    expected = np.zeros((4, 4), dtype=complex)
    expected[:2, 2:] = -np.eye(2)
    expected[2:, :2] = -np.eye(2)
    np.testing.assert_allclose(A.b, expected, atol=1e-15)


def test_residuals_detect_a_broken_set():
    bad = type(A)(A.a1, A.a2, A.a2, A.b)
    assert algebra_residuals(bad)["anticommute_a2a3"] > 1


def test_thirring_zero_and_first_basis_vector():
    np.testing.assert_array_equal(thirring_matrix(np.zeros(4)), np.zeros((4, 4)))
    np.testing.assert_allclose(thirring_matrix(E1, A), IDENTITY4, atol=1e-15)


def test_thirring_broadcasts_over_fields(rng):
    s = random_spinors(rng, 10).reshape(4, 2, 5)
    U = thirring_matrix(s, A)
    assert U.shape == (4, 4, 2, 5)
    np.testing.assert_allclose(U[..., 1, 3], thirring_matrix(s[:, 1, 3], A), atol=1e-14)


@given(spinor)
def test_thirring_commutes_with_alphas_and_is_hermitian(s):
    U = thirring_matrix(s, A)
    for a in A.alphas:
        np.testing.assert_allclose(U @ a - a @ U, 0, atol=1e-12)
    np.testing.assert_allclose(U, U.conj().T, atol=1e-12)


def test_interaction_matrix_examples():
    np.testing.assert_array_equal(interaction_matrix(np.zeros(4), 0.0), np.zeros((4, 4)))
    np.testing.assert_allclose(interaction_matrix(np.zeros(4), 2.5), 2.5 * IDENTITY4)
    np.testing.assert_allclose(interaction_matrix(E1, 1.0, lam=1.0), 2 * IDENTITY4, atol=1e-15)


def test_interaction_field_potential(rng):
    s = random_spinors(rng, 6)
    V = rng.normal(size=6)
    B = interaction_matrix(s, V, lam=0.7, A=A)
    np.testing.assert_allclose(B[..., 4], 0.7 * thirring_matrix(s[:, 4], A) + V[4] * IDENTITY4, atol=1e-14)


def test_observable_form_matches_spinor_form(rng):
    s = random_spinors(rng, 50)
    U1 = thirring_matrix(s, A)
    U2 = thirring_from_observables(charge_density(s), pseudo_density(s, A), A)
    np.testing.assert_allclose(U1, U2, atol=1e-13)


def test_currents_examples():
    zero = currents(np.zeros(4))
    assert all(np.all(c == 0) for c in zero)
    c = currents(E1, A)
    assert c.charge == pytest.approx(1.0)
    assert c.j3 == pytest.approx(0.0, abs=1e-15)
    assert c.pseudo == pytest.approx(0.0, abs=1e-15)


def test_currents_are_real(rng):
    cur, imag = currents(random_spinors(rng, 1000), A, return_imag=True)
    assert imag < 1e-12
    assert all(np.isrealobj(c) for c in cur)


def test_pseudo_density_bounded_by_charge(rng):
    # b has eigenvalues +-1
    s = random_spinors(rng, 1000)
    assert np.all(np.abs(pseudo_density(s, A)) <= charge_density(s) * (1 + 1e-12))
