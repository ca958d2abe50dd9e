"""Dirac alpha matrices, the chiral matrix, and the quadratic Thirring matrix.

All spinor functions broadcast: a spinor argument has shape ``(4, ...)``
and matrices come back with shape ``(4, 4, ...)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
IDENTITY4 = np.eye(4, dtype=complex)


@dataclass(frozen=True)
class AlphaSet:
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    b: np.ndarray

    @property
    def alphas(self):
        return (self.a1, self.a2, self.a3)


def build_alpha_set():
    """Dirac (standard) representation: ``a_i = [[0, s_i], [s_i, 0]]`` and ``b = i a1 a2 a3``."""
    zero = np.zeros((2, 2), dtype=complex)
    a = [np.block([[zero, s], [s, zero]]) for s in PAULI]
    b = 1j * a[0] @ a[1] @ a[2]
    return AlphaSet(a[0], a[1], a[2], b)


def algebra_residuals(A):
    """Max-entry residual of every defining relation of the alpha set.

    Keys name the relation; a valid set gives values at roundoff.
    """
    res = {}
    mats = {"a1": A.a1, "a2": A.a2, "a3": A.a3, "b": A.b}
    for name, m in mats.items():
        res[f"hermitian_{name}"] = np.max(np.abs(m - m.conj().T))
        res[f"square_{name}"] = np.max(np.abs(m @ m - IDENTITY4))
    for i, j in ((0, 1), (0, 2), (1, 2)):
        ai, aj = A.alphas[i], A.alphas[j]
        res[f"anticommute_a{i + 1}a{j + 1}"] = np.max(np.abs(ai @ aj + aj @ ai))
    for i, ai in enumerate(A.alphas):
        res[f"commute_b_a{i + 1}"] = np.max(np.abs(A.b @ ai - ai @ A.b))
    res["b_definition"] = np.max(np.abs(A.b - 1j * A.a1 @ A.a2 @ A.a3))
    return {k: float(v) for k, v in res.items()}


def _bilinear(s, m):
    # s^dagger m s, broadcast over trailing axes
    return np.einsum("i...,ij,j...->...", s.conj(), m, s)


def charge_density(s):
    s = np.asarray(s)
    return np.sum(s.real**2 + s.imag**2, axis=0)


def pseudo_density(s, A):
    return _bilinear(np.asarray(s), A.b).real


def thirring_from_observables(charge, pseudo, A):
    """``U = charge * I - pseudo * b`` for (possibly field-valued) observables."""
    charge = np.asarray(charge, dtype=float)
    pseudo = np.asarray(pseudo, dtype=float)
    eye = IDENTITY4.reshape((4, 4) + (1,) * charge.ndim)
    bb = A.b.reshape((4, 4) + (1,) * charge.ndim)
    return charge * eye - pseudo * bb


def thirring_matrix(s, A=None):
    """Quadratic Thirring matrix ``(s^dag s) I - (s^dag b s) b``."""
    A = A or build_alpha_set()
    s = np.asarray(s, dtype=complex)
    return thirring_from_observables(charge_density(s), pseudo_density(s, A), A)


def interaction_matrix(s, V, lam=1.0, A=None):
    """``lam * U(s) + V * I``; ``V`` may be a scalar or a field matching ``s``."""
    A = A or build_alpha_set()
    U = thirring_matrix(s, A)
    V = np.asarray(V, dtype=float)
    eye = IDENTITY4.reshape((4, 4) + (1,) * (U.ndim - 2))
    return lam * U + V * eye


class CurrentTuple(NamedTuple):
    charge: np.ndarray
    j1: np.ndarray
    j2: np.ndarray
    j3: np.ndarray
    pseudo: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    k3: np.ndarray

    @property
    def vector(self):
        return (self.j1, self.j2, self.j3)

    @property
    def axial(self):
        return (self.k1, self.k2, self.k3)


def currents(s, A=None, return_imag=False):
    """Charge, vector currents ``s^dag a_i s``, pseudocharge, and ``s^dag b a_i s``.

    All eight forms are Hermitian so the values are real; with
    ``return_imag`` the largest discarded imaginary part is returned too.
    """
    A = A or build_alpha_set()
    s = np.asarray(s, dtype=complex)
    mats = [IDENTITY4, *A.alphas, A.b, *(A.b @ a for a in A.alphas)]
    raw = [_bilinear(s, m) for m in mats]
    out = CurrentTuple(*(np.real(r) for r in raw))
    if return_imag:
        return out, float(max(np.max(np.abs(np.imag(r))) for r in raw))
    return out
