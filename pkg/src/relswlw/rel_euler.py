"""Special-relativistic Euler equations in conservative form.

With ``G = (rho + eps^2 p) / (1 - eps^2 |u|^2)`` the evolved variables are
``D = G - eps^2 p`` and ``S = G u``; the fluxes along axis ``k`` are
``G u_k`` and ``G u_j u_k + p delta_jk``. ``eps`` is the inverse light speed.

Arrays broadcast over trailing grid axes; vectors carry a leading axis of 3.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import CFLError, DomainError, RecoveryError
from .grid import Grid

DEFAULT_CFL = 0.4


@dataclass(frozen=True)
class Eos:
    """Barotropic law ``p = sigma2 * rho`` on the open interval ``(rho_min, rho_max)``.

    Subclasses override :meth:`pressure` and :meth:`dpressure` for other laws.
    """

    sigma2: float = 0.25
    rho_min: float = 0.0
    rho_max: float = np.inf
    floor: float = 1e-8

    def pressure(self, rho):
        return self.sigma2 * np.asarray(rho, dtype=float)

    def dpressure(self, rho):
        return np.full_like(np.asarray(rho, dtype=float), self.sigma2)

    def is_causal(self, eps, rho=1.0):
        """True when ``0 < p'(rho) < 1/eps^2`` at ``rho``."""
        dp = self.dpressure(rho)
        return bool(np.all(dp > 0) and np.all(dp * eps**2 < 1))


@dataclass(frozen=True)
class PolytropicEos(Eos):
    """``p = K rho^gamma``."""

    K: float = 0.25
    gamma: float = 2.0

    def pressure(self, rho):
        return self.K * np.asarray(rho, dtype=float) ** self.gamma

    def dpressure(self, rho):
        return self.K * self.gamma * np.asarray(rho, dtype=float) ** (self.gamma - 1)


class PrimitiveState(NamedTuple):
    rho: np.ndarray
    u: np.ndarray


class ConservedState(NamedTuple):
    D: np.ndarray
    S: np.ndarray


class RelState(NamedTuple):
    rho_re: np.ndarray
    u_re: np.ndarray
    Ptilde: np.ndarray


def eos_eval(eos, rho):
    """Return ``(p, dp/drho)``; raises :class:`DomainError` outside the open density interval."""
    rho = np.asarray(rho, dtype=float)
    bad = ~((rho > eos.rho_min) & (rho < eos.rho_max))
    if np.any(bad):
        value = rho[bad].flat[0] if rho.ndim else float(rho)
        raise DomainError(
            f"density {value!r} outside admissible interval ({eos.rho_min}, {eos.rho_max})", value
        )
    return eos.pressure(rho), eos.dpressure(rho)


def _speed2(u):
    u = np.asarray(u, dtype=float)
    return np.sum(u**2, axis=0)


def _enthalpy_factor(prim, eps, eos):
    p, _ = eos_eval(eos, prim.rho)
    v2 = _speed2(prim.u)
    bad = eps**2 * v2 >= 1
    if np.any(bad):
        raise DomainError(f"speed reaches light speed 1/eps={1 / eps:g}", float(np.sqrt(v2[bad].flat[0])))
    G = (prim.rho + eps**2 * p) / (1 - eps**2 * v2)
    return G, p, v2


def prim_to_cons(prim, eps, eos):
    G, p, _ = _enthalpy_factor(prim, eps, eos)
    return ConservedState(G - eps**2 * p, G * np.asarray(prim.u, dtype=float))


def rel_variables(prim, eps, eos, ptilde="corrected"):
    """Relativistic density, velocity, and pressure-loss tensor.

    ``ptilde="corrected"`` (default) carries the factor ``p`` that makes the
    auxiliary momentum flux agree with the conservative one;
    ``ptilde="printed"`` omits it and ``ptilde="flipped"`` reverses the
    sign; both exist only as negative controls.
    """
    rho = np.asarray(prim.rho, dtype=float)
    u = np.asarray(prim.u, dtype=float)
    G, p, v2 = _enthalpy_factor(prim, eps, eos)
    denom = rho + eps**4 * v2 * p
    rho_re = denom / (1 - eps**2 * v2)
    u_re = (rho + eps**2 * p) / denom * u
    if ptilde == "corrected":
        coef = rho_re * eps**2 * p * (eps**2 * v2 - 1) / (rho + eps**2 * p)
    elif ptilde == "printed":
        coef = rho_re * eps**2 * (eps**2 * v2 - 1) / (rho + eps**2 * p)
    elif ptilde == "flipped":
        coef = -rho_re * eps**2 * p * (eps**2 * v2 - 1) / (rho + eps**2 * p)
    else:
        raise ValueError(f"unknown ptilde form {ptilde!r}")
    P = coef * u_re[:, None] * u_re[None, :]
    return RelState(rho_re, u_re, P)


def cons_to_prim(cons, eps, eos, tol=1e-12, max_iter=50):
    """Recover ``(rho, u)`` from ``(D, S)`` by Newton iteration on ``rho``.

    Solves ``rho = D - eps^2 |S|^2 / (D + eps^2 p(rho))`` starting from
    ``rho = D``; for convex pressure laws the iterates decrease
    monotonically onto the root. Failures raise :class:`RecoveryError`
    listing the offending cell indices.
    """
    D = np.asarray(cons.D, dtype=float)
    S = np.asarray(cons.S, dtype=float)
    S2 = _speed2(S)
    e2 = eps**2
    if np.any(~(D > 0)):
        cells = np.argwhere(~(D > 0))[:10]
        raise RecoveryError(f"nonpositive relativistic density in {int(np.sum(~(D > 0)))} cell(s)", cells)
    rho = D.copy()
    converged = np.zeros(D.shape, dtype=bool)
    for _ in range(max_iter):
        r = np.maximum(rho, 0.0)
        p = eos.pressure(r)
        dp = eos.dpressure(r)
        G = D + e2 * p
        g = rho - D + e2 * S2 / G
        converged = np.abs(g) <= tol * D
        if np.all(converged):
            break
        dg = 1.0 - e2 * e2 * S2 * dp / G**2
        rho = rho - g / dg
    else:
        r = np.maximum(rho, 0.0)
        G = D + e2 * eos.pressure(r)
        converged = np.abs(rho - D + e2 * S2 / G) <= tol * D
    G = D + e2 * eos.pressure(np.maximum(rho, 0.0))
    u = S / G
    bad = ~converged | (rho <= eos.rho_min + eos.floor) | (rho >= eos.rho_max) | (e2 * _speed2(u) >= 1)
    if np.any(bad):
        cells = [tuple(int(i) for i in c) for c in np.argwhere(bad)[:10]]
        raise RecoveryError(
            f"primitive recovery failed in {int(np.sum(bad))} cell(s), first at {cells[0] if cells else ()}",
            cells,
        )
    return PrimitiveState(rho, u)


def flux(prim, eps, eos, axis):
    """Mass and momentum fluxes through a face normal to ``axis``."""
    G, p, _ = _enthalpy_factor(prim, eps, eos)
    u = np.asarray(prim.u, dtype=float)
    mass = G * u[axis]
    mom = G * u * u[axis]
    mom[axis] = mom[axis] + p
    return mass, mom


def momentum_flux_tensor(prim, eps, eos):
    """Full tensor ``G u (x) u + p I`` of the conservative momentum equations."""
    G, p, _ = _enthalpy_factor(prim, eps, eos)
    u = np.asarray(prim.u, dtype=float)
    T = G * u[:, None] * u[None, :]
    for j in range(3):
        T[j, j] = T[j, j] + p
    return T


def rel_momentum_flux_tensor(rel, p):
    """``rho_re u_re (x) u_re + Ptilde + p I`` assembled from auxiliary variables."""
    T = rel.rho_re * rel.u_re[:, None] * rel.u_re[None, :] + rel.Ptilde
    for j in range(3):
        T[j, j] = T[j, j] + p
    return T


@dataclass(frozen=True)
class FluidField:
    grid: Grid
    D: np.ndarray
    S: np.ndarray
    eps: float = 1.0
    eos: Eos = field(default_factory=Eos)

    def __post_init__(self):
        self.grid.check(self.D, "D")
        self.grid.check(self.S, "S")
        if self.S.shape[0] != 3:
            raise ValueError("momentum density needs a leading axis of length 3")

    @classmethod
    def from_primitive(cls, grid, rho, u, eps=1.0, eos=None):
        eos = eos or Eos()
        rho = np.broadcast_to(np.asarray(rho, dtype=float), grid.shape).copy()
        u = np.broadcast_to(np.asarray(u, dtype=float), (3,) + grid.shape).copy()
        cons = prim_to_cons(PrimitiveState(rho, u), eps, eos)
        return cls(grid, cons.D, cons.S, eps, eos)

    def with_state(self, D, S):
        return replace(self, D=D, S=S)

    def primitive(self, tol=1e-12):
        return cons_to_prim(ConservedState(self.D, self.S), self.eps, self.eos, tol=tol)

    def relativistic(self, tol=1e-12):
        return rel_variables(self.primitive(tol), self.eps, self.eos)


def max_signal_speed(fluid):
    """Upper bound on every characteristic speed: the light speed ``1/eps``."""
    return 1.0 / fluid.eps


def max_stable_dt(fluid, cfl=DEFAULT_CFL):
    return cfl * fluid.grid.min_spacing / max_signal_speed(fluid)


def total_mass(fluid):
    return float(np.sum(fluid.D) * fluid.grid.cell_volume)


def total_momentum(fluid):
    return np.sum(fluid.S, axis=(1, 2, 3)) * fluid.grid.cell_volume


def _mc_slope(q, ax):
    dm = q - np.roll(q, 1, ax)
    dp = np.roll(q, -1, ax) - q
    s = np.minimum(np.minimum(2 * np.abs(dm), 2 * np.abs(dp)), 0.5 * np.abs(dm + dp))
    return np.where(dm * dp > 0, np.sign(dm) * s, 0.0)


def fluid_rhs(fluid, source=None, reconstruction="muscl", tol=1e-12):
    """Semi-discrete time derivative of ``(D, S)`` with a Rusanov numerical flux.

    ``reconstruction`` is ``"muscl"`` (piecewise linear primitives, MC
    limiter) or ``"constant"``. ``source`` is added to the momentum rows.
    """
    grid, eps, eos = fluid.grid, fluid.eps, fluid.eos
    prim = fluid.primitive(tol)
    q = np.concatenate([prim.rho[None], prim.u])
    U = np.concatenate([fluid.D[None], fluid.S])
    rhs = np.zeros_like(U)
    a = 1.0 / eps
    for axis in grid.resolved_axes:
        ax = 1 + axis
        if reconstruction == "muscl":
            slope = _mc_slope(q, ax)
            qL = q + 0.5 * slope
            qR = np.roll(q - 0.5 * slope, -1, ax)
        elif reconstruction == "constant":
            qL = q
            qR = np.roll(q, -1, ax)
        else:
            raise ValueError(f"unknown reconstruction {reconstruction!r}")
        fluxes = []
        states = []
        for side in (qL, qR):
            ps = PrimitiveState(side[0], side[1:])
            cs = prim_to_cons(ps, eps, eos)
            m, mom = flux(ps, eps, eos, axis)
            states.append(np.concatenate([cs.D[None], cs.S]))
            fluxes.append(np.concatenate([m[None], mom]))
        # face value at i+1/2
        F = 0.5 * (fluxes[0] + fluxes[1]) - 0.5 * a * (states[1] - states[0])
        rhs -= (F - np.roll(F, 1, ax)) / grid.spacing[axis]
    if source is not None:
        rhs[1:] += source
    return rhs


def fv_step(fluid, source, dt, cfl=DEFAULT_CFL, reconstruction="muscl", source_end=None, tol=1e-12):
    """One SSP-RK2 (Heun) step; ``source_end`` feeds the second stage when given."""
    dt_max = max_stable_dt(fluid, cfl)
    if dt <= 0 or dt > dt_max * (1 + 1e-12):
        raise CFLError(f"fluid step dt={dt:.6g} outside (0, {dt_max:.6g}]", dt, dt_max)
    if source_end is None:
        source_end = source
    U0 = np.concatenate([fluid.D[None], fluid.S])
    U1 = U0 + dt * fluid_rhs(fluid, source, reconstruction, tol)
    f1 = fluid.with_state(U1[0], U1[1:])
    U2 = 0.5 * U0 + 0.5 * (U1 + dt * fluid_rhs(f1, source_end, reconstruction, tol))
    return fluid.with_state(U2[0], U2[1:])
