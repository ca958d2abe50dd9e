"""The regularized short-wave / long-wave system and its two solution drivers.

Short waves live on the Lagrangian torus, the fluid on the Eulerian one.
The Dirac potential is ``kappa / rho_re`` pulled back through the inverse
label map; the fluid force is ``alpha * grad(zeta_delta * |u o Y|^2)``.

``coevolve_step`` advances everything together by operator splitting.
``picard_solve`` iterates the fixed-point map used in the existence proof:
fluid trajectory -> labels -> wave-equation observables -> force -> fluid.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dirac_algebra import IDENTITY4, build_alpha_set, thirring_from_observables, thirring_matrix
from .dirac_solver import SpinorField, initial_observable, max_stable_dt, step_dirac
from .errors import ConfigError, GridMismatchError
from .grid import gradient, interpolate, l2_norm
from .lagrangian import LabelField, advance_label, invert_map
from .rel_euler import DEFAULT_CFL, FluidField, fv_step
from .wave_solver import wave_evolve

log = logging.getLogger(__name__)

ROUNDOFF_DISTANCE = 1e-13


@dataclass(frozen=True)
class CouplingParams:
    lam: float = 1.0
    kappa: float = 1.0
    alpha: float = 0.05
    delta: Optional[float] = None
    epsilon: float = 1.0

    def __post_init__(self):
        # zero switches a coupling off; negative values are not admissible
        for name in ("kappa", "alpha"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be a positive constant, got {getattr(self, name)}", name)
        if self.delta is not None and self.delta <= 0:
            raise ConfigError(f"mollifier width delta must be positive, got {self.delta}", "delta")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}", "epsilon")

    def mollifier_width(self, grid):
        if self.delta is not None:
            return self.delta
        return 4.0 * max(grid.spacing[a] for a in grid.resolved_axes or (0, 1, 2))


@dataclass(frozen=True)
class MollifierKernel:
    """Nonnegative unit-mass taps on the resolved axes; ``radius[a]`` taps either side."""

    delta: float
    taps: np.ndarray
    radius: tuple


def _bump(r2):
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def build_mollifier(delta, grid, quad_nodes=48):
    """Sample ``exp(-1/(1-|x/delta|^2))`` on grid offsets and normalize to unit sum.

    Collapsed axes carry constant fields, so the bump is integrated over
    them by Gauss-Legendre quadrature instead of being sampled.
    """
    resolved = grid.resolved_axes
    if not resolved:
        raise ConfigError("mollifier needs at least one resolved axis", "delta")
    hmax = max(grid.spacing[a] for a in resolved)
    if delta < 2.0 * hmax:
        raise ConfigError(f"delta={delta:g} is below twice the grid spacing {hmax:g}", "delta")
    radius = [0, 0, 0]
    axes = []
    for a in range(3):
        if a in resolved:
            r = int(np.ceil(delta / grid.spacing[a])) - 1
            if 2 * r + 1 > grid.shape[a]:
                raise ConfigError(f"delta={delta:g} wider than the torus along axis {a}", "delta")
            radius[a] = r
            axes.append((np.arange(-r, r + 1) * grid.spacing[a] / delta, None))
        else:
            nodes, weights = np.polynomial.legendre.leggauss(quad_nodes)
            axes.append((nodes, weights))
    s = np.meshgrid(*(ax[0] for ax in axes), indexing="ij")
    vals = _bump(s[0] ** 2 + s[1] ** 2 + s[2] ** 2)
    for a in (2, 1, 0):
        w = axes[a][1]
        if w is not None:
            vals = np.tensordot(vals, w, axes=([a], [0]))
            vals = np.expand_dims(vals, a)
    # enforce exact evenness (BLAS contraction order can break it at roundoff)
    vals = 0.5 * (vals + vals[::-1, ::-1, ::-1])
    taps = vals / vals.sum()
    return MollifierKernel(float(delta), taps, tuple(radius))


def _embedded(kernel, grid):
    full = np.zeros(grid.shape)
    r = kernel.radius
    idx = np.meshgrid(*(np.arange(-r[a], r[a] + 1) % grid.shape[a] for a in range(3)), indexing="ij")
    np.add.at(full, tuple(idx), kernel.taps)
    return full


def kernel_symbol(kernel, grid):
    """Discrete Fourier symbol of the kernel on ``grid`` (real, since taps are even)."""
    return np.fft.fftn(_embedded(kernel, grid)).real


def mollify(f, kernel, grid):
    grid.check(f)
    return np.fft.ifftn(np.fft.fftn(f) * kernel_symbol(kernel, grid)).real


def potential_field(rho_re, grid, labels, kappa, inverse=None):
    """``kappa / rho_re(x(y))`` at every node of the Lagrangian grid."""
    lagrid = labels.lagrangian_grid()
    if kappa == 0:
        return np.zeros(lagrid.shape)
    inverse = inverse or invert_map(labels)
    x = inverse(lagrid.points())
    rho = interpolate(np.asarray(rho_re, dtype=float), grid, x)
    return (kappa / rho).reshape(lagrid.shape)


def shortwave_energy_on_eulerian(w, labels):
    """Sample a Lagrangian-grid scalar at ``y(x)`` for each Eulerian node."""
    lagrid = labels.lagrangian_grid()
    lagrid.check(w, "w")
    y = labels.values().reshape(3, -1)
    return interpolate(np.asarray(w, dtype=float), lagrid, y).reshape(labels.grid.shape)


def force_source(w_eul, grid, kernel, alpha):
    """Momentum source ``alpha * grad(kernel * w_eul)`` with fourth-order differences."""
    if alpha == 0:
        return np.zeros((3,) + grid.shape)
    return alpha * gradient(mollify(w_eul, kernel, grid), grid)


def thirring_potential(lam, V, A=None):
    """Provider ``B(t, u) = lam * U(u) + V I`` for :func:`step_dirac`."""
    A = A or build_alpha_set()
    eye = IDENTITY4.reshape(4, 4, 1, 1, 1)

    def B_at(t, u):
        out = V * eye
        if lam != 0:
            out = out + lam * thirring_matrix(u, A)
        return out

    return B_at


@dataclass(frozen=True)
class CoupledState:
    fluid: FluidField
    spinor: SpinorField
    labels: LabelField
    time: float = 0.0
    force: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.labels.grid != self.fluid.grid:
            raise GridMismatchError("labels and fluid must share the Eulerian grid")
        if self.spinor.grid.shape != self.fluid.grid.shape or not np.allclose(
            self.spinor.grid.lengths, self.labels.lagrangian_grid().lengths, rtol=1e-12
        ):
            raise GridMismatchError(
                f"spinor grid {self.spinor.grid} does not match the Lagrangian torus "
                f"{self.labels.lagrangian_grid()}"
            )


def coupled_dt(grid, lagrid, epsilon, cfl=DEFAULT_CFL):
    """Largest step satisfying the fluid (speed 1/eps) and Dirac (speed 1) bounds."""
    return cfl * min(grid.min_spacing * epsilon, lagrid.min_spacing)


def _force_for(spinor, labels, params, kernel):
    if params.alpha == 0:
        return np.zeros((3,) + labels.grid.shape)
    u = spinor.values
    w = np.sum(u.real**2 + u.imag**2, axis=0)
    return force_source(shortwave_energy_on_eulerian(w, labels), labels.grid, kernel, params.alpha)


def coevolve_step(cs, params, dt, kernel=None, cfl=DEFAULT_CFL, A=None, reconstruction="muscl", tol=1e-12):
    """Strang-split step: fluid half step, labels and spinor full step, fluid half step.

    The spinor sees the potential at the half step, built from the
    half-stepped fluid and the average of the old and new labels.
    """
    A = A or build_alpha_set()
    grid = cs.fluid.grid
    if kernel is None and params.alpha != 0:
        kernel = build_mollifier(params.mollifier_width(grid), grid)
    F0 = cs.force if cs.force is not None else _force_for(cs.spinor, cs.labels, params, kernel)
    half = fv_step(cs.fluid, F0, 0.5 * dt, cfl=cfl, reconstruction=reconstruction, tol=tol)
    u_mid = half.relativistic(tol).u_re
    labels = advance_label(cs.labels, u_mid, dt)
    if params.kappa != 0:
        mid = LabelField(grid, labels.slope, 0.5 * (cs.labels.yper + labels.yper))
        V = potential_field(half.D, grid, mid, params.kappa)
    else:
        V = np.zeros(grid.shape)
    spinor = step_dirac(cs.spinor, thirring_potential(params.lam, V, A), dt, t=cs.time, cfl=cfl, A=A)
    F1 = _force_for(spinor, labels, params, kernel)
    fluid = fv_step(half, F1, 0.5 * dt, cfl=cfl, reconstruction=reconstruction, tol=tol)
    return CoupledState(fluid, spinor, labels, cs.time + dt, force=F1)


def fluid_distance(a, b):
    """L2 distance between two fluid states in the conserved variables ``(D, S)``."""
    return float(
        np.sqrt(l2_norm(a.D - b.D, a.grid) ** 2 + l2_norm(a.S - b.S, a.grid) ** 2)
    )


def trajectory_distance(traj_a, traj_b):
    """Sup-in-time L2 distance between two fluid trajectories."""
    return max(fluid_distance(a, b) for a, b in zip(traj_a, traj_b))


def dirac_full_solve(spinor0, times, V_traj, params, observables=None, cfl=DEFAULT_CFL, A=None):
    """Spinor trajectory under ``B = lam U + V I`` with ``V`` linear in time between samples.

    ``observables(t) -> (charge, pseudocharge)`` supplies ``U`` from the wave
    equation (the fixed-point construction); when omitted ``U`` is built from
    the evolving spinor itself. Sample intervals longer than the CFL bound
    are split into equal substeps; one spinor is returned per sample time.
    """
    A = A or build_alpha_set()
    eye = IDENTITY4.reshape(4, 4, 1, 1, 1)
    out = [spinor0]
    f = spinor0
    for k in range(len(times) - 1):
        t0, t1 = times[k], times[k + 1]
        V0, V1 = V_traj[k], V_traj[k + 1]

        def B_at(t, u, t0=t0, t1=t1, V0=V0, V1=V1):
            theta = (t - t0) / (t1 - t0)
            B = ((1 - theta) * V0 + theta * V1) * eye
            if params.lam != 0:
                if observables is None:
                    U = thirring_matrix(u, A)
                else:
                    U = thirring_from_observables(*observables(t), A)
                B = B + params.lam * U
            return B

        sub = max(1, int(np.ceil((t1 - t0) / max_stable_dt(f.grid, cfl) - 1e-12)))
        h = (t1 - t0) / sub
        for j in range(sub):
            f = step_dirac(f, B_at, h, t=t0 + j * h, cfl=cfl, A=A)
        out.append(f)
    return out


@dataclass
class PicardResult:
    times: np.ndarray
    fluids: list
    labels: list
    spinors: list
    distances: list
    converged: bool
    diverged: bool

    @property
    def iterations(self):
        return len(self.distances)

    @property
    def contraction_factors(self):
        # ratios of distances already at roundoff level carry no information
        d = self.distances
        return [d[i + 1] / d[i] for i in range(len(d) - 1) if min(d[i], d[i + 1]) > ROUNDOFF_DISTANCE]


def wave_observables(spinor0, A=None):
    """Closure ``t -> (|u|^2, u^dag b u)`` solving the wave equation from initial data."""
    A = A or build_alpha_set()
    grid = spinor0.grid
    w = initial_observable(spinor0, "charge", A)
    p = initial_observable(spinor0, "pseudocharge", A)

    def at(t):
        return wave_evolve(grid, w.w, w.wt, t), wave_evolve(grid, p.w, p.wt, t)

    return at


def picard_solve(init, params, T, dt=None, tol=1e-8, max_iter=30, kernel=None, cfl=DEFAULT_CFL,
                 A=None, reconstruction="muscl", reconstruct_spinor=True, recovery_tol=1e-12):
    """Fixed-point iteration for the fluid trajectory on ``[0, T]``.

    Iterate 0 is the force-free fluid trajectory. Each iteration evolves the
    fluid with the force built from the previous iterate (labels transported
    by its velocity, ``|u|^2`` from the wave equation, composed, mollified,
    differentiated) and records the sup-in-time L2 distance between
    successive iterates. Stops below ``tol``, at ``max_iter``, or when three
    consecutive distances fail to decrease (reported, not raised).
    """
    A = A or build_alpha_set()
    grid = init.fluid.grid
    lagrid = init.labels.lagrangian_grid()
    if dt is None:
        dt = coupled_dt(grid, lagrid, init.fluid.eps, cfl)
    nsteps = max(1, int(np.ceil(T / dt - 1e-12)))
    dt = T / nsteps
    times = init.time + dt * np.arange(nsteps + 1)
    if kernel is None and params.alpha != 0:
        kernel = build_mollifier(params.mollifier_width(grid), grid)
    obs = wave_observables(init.spinor, A)
    charge_traj = [obs(t - init.time)[0] for t in times]

    def evolve_fluid(forces):
        traj = [init.fluid]
        for k in range(nsteps):
            src = None if forces is None else forces[k]
            end = None if forces is None else forces[k + 1]
            traj.append(fv_step(traj[-1], src, dt, cfl=cfl, reconstruction=reconstruction, source_end=end,
                                tol=recovery_tol))
        return traj

    def transport_labels(traj):
        labels = [init.labels]
        u_prev = traj[0].relativistic(recovery_tol).u_re
        for k in range(nsteps):
            u_next = traj[k + 1].relativistic(recovery_tol).u_re
            labels.append(advance_label(labels[-1], u_prev, dt, u_re_end=u_next))
            u_prev = u_next
        return labels

    def forces_for(labels):
        if params.alpha == 0:
            return [np.zeros((3,) + grid.shape) for _ in labels]
        return [
            force_source(shortwave_energy_on_eulerian(w, lf), grid, kernel, params.alpha)
            for w, lf in zip(charge_traj, labels)
        ]

    previous = evolve_fluid(None)
    labels = transport_labels(previous)
    distances = []
    converged = diverged = False
    for it in range(max_iter):
        current = evolve_fluid(forces_for(labels))
        d = trajectory_distance(current, previous)
        distances.append(d)
        log.debug("picard iteration %d: distance %.3e", it + 1, d)
        labels = transport_labels(current)
        previous = current
        if d < tol:
            converged = True
            break
        if len(distances) >= 3 and distances[-1] >= distances[-2] >= distances[-3]:
            diverged = True
            log.warning("picard iteration stalled: distances %s", distances[-3:])
            break

    spinors = []
    if reconstruct_spinor:
        V_traj = [potential_field(f.D, grid, lf, params.kappa) for f, lf in zip(previous, labels)]
        spinors = dirac_full_solve(
            init.spinor, times, V_traj, params,
            observables=lambda t: obs(t - init.time), cfl=cfl, A=A,
        )
    return PicardResult(times, previous, labels, spinors, distances, converged, diverged)


def coevolve(init, params, T, dt=None, kernel=None, cfl=DEFAULT_CFL, A=None, reconstruction="muscl",
             callback=None):
    """Repeated :func:`coevolve_step` over ``[t0, t0 + T]``; returns the state trajectory."""
    A = A or build_alpha_set()
    grid = init.fluid.grid
    if dt is None:
        dt = coupled_dt(grid, init.labels.lagrangian_grid(), init.fluid.eps, cfl)
    nsteps = max(1, int(np.ceil(T / dt - 1e-12)))
    dt = T / nsteps
    if kernel is None and params.alpha != 0:
        kernel = build_mollifier(params.mollifier_width(grid), grid)
    traj = [init]
    cs = init
    for _ in range(nsteps):
        cs = coevolve_step(cs, params, dt, kernel=kernel, cfl=cfl, A=A, reconstruction=reconstruction)
        traj.append(cs)
        if callback is not None:
            callback(cs)
    return traj
