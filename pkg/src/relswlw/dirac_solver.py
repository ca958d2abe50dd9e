"""Time-domain evolution of ``u_t - sum_i a_i u_{y_i} = -i B u`` on a periodic grid.

Space: fourth-order centered differences. Time: classical RK4. The potential
``B`` is supplied per step by a provider ``B_at(t, u)`` so that both frozen
external potentials and the self-consistent Thirring term fit one interface.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .dirac_algebra import AlphaSet, build_alpha_set, currents
from .errors import CFLError, GridMismatchError
from .grid import Grid, ddx

DEFAULT_CFL = 0.4

Potential = Union[None, np.ndarray]
PotentialProvider = Union[Potential, Callable[[float, np.ndarray], Potential]]


@dataclass(frozen=True)
class SpinorField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (4,) + self.grid.shape:
            raise GridMismatchError(
                f"spinor values have shape {vals.shape}, expected {(4,) + self.grid.shape}"
            )
        object.__setattr__(self, "values", vals)

    def with_values(self, values):
        return SpinorField(self.grid, values)


class ObservablePair(NamedTuple):
    w: np.ndarray
    wt: np.ndarray


def apply_matrix(M, u):
    """Multiply a constant (4, 4) or field-valued (4, 4, ...) matrix into ``u``."""
    if M.ndim == 2:
        return np.tensordot(M, u, axes=(1, 0))
    return np.einsum("ij...,j...->i...", M, u)


def _check_potential(B, grid):
    if B is None:
        return
    if B.shape[:2] != (4, 4) or (B.ndim > 2 and B.shape[2:] != grid.shape):
        raise GridMismatchError(f"potential of shape {B.shape} does not match grid {grid.shape}")


def _rate(u, grid, B, A):
    out = np.zeros_like(u)
    for axis, a in enumerate(A.alphas):
        if grid.shape[axis] > 1:
            out += apply_matrix(a, ddx(u, grid, axis))
    if B is not None:
        out -= 1j * apply_matrix(B, u)
    return out


def dirac_rhs(field, B=None, A=None):
    """Time derivative ``sum_i a_i d_i u - i B u`` of the spinor field."""
    A = A or build_alpha_set()
    B = None if B is None else np.asarray(B)
    _check_potential(B, field.grid)
    return _rate(field.values, field.grid, B, A)


def max_stable_dt(grid, cfl=DEFAULT_CFL):
    # characteristic speeds are +-1 in Lagrangian units
    return cfl * grid.min_spacing


def _resolve(B_at, t, u):
    if B_at is None or isinstance(B_at, np.ndarray):
        return B_at
    return B_at(t, u)


def step_dirac(field, B_at: PotentialProvider, dt, t=0.0, cfl=DEFAULT_CFL, A: Optional[AlphaSet] = None):
    """One RK4 step of size ``dt`` starting at time ``t``."""
    A = A or build_alpha_set()
    dt_max = max_stable_dt(field.grid, cfl)
    if dt <= 0 or dt > dt_max * (1 + 1e-12):
        raise CFLError(
            f"Dirac step dt={dt:.6g} outside (0, {dt_max:.6g}] (cfl={cfl}, h_min={field.grid.min_spacing:.6g})",
            dt,
            dt_max,
        )
    grid = field.grid
    u = field.values

    def rate(tt, uu):
        B = _resolve(B_at, tt, uu)
        if B is not None:
            B = np.asarray(B)
            _check_potential(B, grid)
        return _rate(uu, grid, B, A)

    k1 = rate(t, u)
    k2 = rate(t + 0.5 * dt, u + 0.5 * dt * k1)
    k3 = rate(t + 0.5 * dt, u + 0.5 * dt * k2)
    k4 = rate(t + dt, u + dt * k3)
    return field.with_values(u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def evolve_dirac(field, B_at: PotentialProvider, t_final, cfl=DEFAULT_CFL, A=None, t0=0.0, callback=None):
    """Step from ``t0`` to ``t_final`` with equal steps no larger than the CFL bound."""
    span = t_final - t0
    if span <= 0:
        return field
    nsteps = int(np.ceil(span / max_stable_dt(field.grid, cfl) - 1e-12))
    dt = span / nsteps
    for n in range(nsteps):
        field = step_dirac(field, B_at, dt, t=t0 + n * dt, cfl=cfl, A=A)
        if callback is not None:
            callback(t0 + (n + 1) * dt, field)
    return field


def total_charge(field):
    """``sum |u|^2 * cell volume``."""
    u = field.values
    return float(np.sum(u.real**2 + u.imag**2) * field.grid.cell_volume)


def initial_observable(field, which="charge", A=None):
    """Initial value and time derivative of ``|u|^2`` or ``u^dag b u``.

    The derivative is the divergence of the matching current, taken with
    the same fourth-order stencil used by the time stepper.
    """
    A = A or build_alpha_set()
    cur = currents(field.values, A)
    if which == "charge":
        w, flux = cur.charge, cur.vector
    elif which == "pseudocharge":
        w, flux = cur.pseudo, cur.axial
    else:
        raise ValueError(f"unknown observable {which!r}; use 'charge' or 'pseudocharge'")
    wt = sum(ddx(flux[a], field.grid, a) for a in range(3))
    return ObservablePair(np.asarray(w, float), np.asarray(wt, float))
