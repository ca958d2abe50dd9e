"""Relativistic Lagrangian transformation on the periodic grid.

The label map is stored as ``y(x) = (x1, x2, m x3) + yper(x)`` where the
slope ``m`` is the column average of the initial relativistic density and
``yper`` is periodic. The Eulerian torus of side ``(L1, L2, L3)`` is thereby
mapped onto a Lagrangian torus of side ``(L1, L2, m L3)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CFLError, DomainError, GridMismatchError, InversionError
from .grid import Grid, ddx, divergence, interpolate, interpolate_cubic, l2_norm, spectral_ddx


@dataclass(frozen=True)
class LabelField:
    grid: Grid
    slope: float
    yper: np.ndarray

    def __post_init__(self):
        if self.yper.shape != (3,) + self.grid.shape:
            raise GridMismatchError(f"yper has shape {self.yper.shape}, expected {(3,) + self.grid.shape}")

    @property
    def scale(self):
        return np.array([1.0, 1.0, self.slope])

    def lagrangian_grid(self):
        L1, L2, L3 = self.grid.lengths
        return Grid(self.grid.shape, (L1, L2, self.slope * L3))

    def values(self):
        """Labels at the grid nodes, shape (3, N1, N2, N3)."""
        return self.scale.reshape(3, 1, 1, 1) * self.grid.mesh() + self.yper

    def evaluate(self, points, with_jacobian=False):
        """Labels at arbitrary (unwrapped) points of shape (3, M)."""
        points = np.asarray(points, dtype=float)
        if with_jacobian:
            vals, grads = interpolate(self.yper, self.grid, points, with_gradient=True)
            # grads[j, i] = d yper_i / d x_j
            jac = np.transpose(grads, (1, 0, 2)) + np.diag(self.scale)[:, :, None]
            return self.scale[:, None] * points + vals, jac
        return self.scale[:, None] * points + interpolate(self.yper, self.grid, points)

    def jacobian(self, method="fd4"):
        """``dy_i/dx_j`` at the nodes, shape (3, 3, N1, N2, N3)."""
        deriv = {"fd4": ddx, "spectral": spectral_ddx}[method]
        J = np.empty((3, 3) + self.grid.shape)
        for i in range(3):
            for j in range(3):
                J[i, j] = deriv(self.yper[i], self.grid, j) + (self.scale[i] if i == j else 0.0)
        return J

    def determinant(self, method="fd4"):
        J = np.moveaxis(self.jacobian(method), (0, 1), (-2, -1))
        return np.linalg.det(J)


def _periodic_antiderivative(f, grid, axis):
    n = grid.shape[axis]
    if n == 1:
        return np.zeros_like(f)
    ax = f.ndim - 3 + axis
    k = 2 * np.pi * np.fft.fftfreq(n, d=grid.spacing[axis])
    inv = np.zeros_like(k, dtype=complex)
    inv[1:] = 1.0 / (1j * k[1:])
    if n % 2 == 0:
        inv[n // 2] = 0.0
    shape = [1] * f.ndim
    shape[ax] = n
    F = np.fft.ifft(np.fft.fft(f, axis=ax) * inv.reshape(shape), axis=ax).real
    return F - np.take(F, [0], axis=ax)


def initial_label(grid, rho_re0, column_rtol=1e-9):
    """Label ``y0(x) = (x1, x2, int_0^x3 rho_re(0, x1, x2, s) ds)`` in affine + periodic form.

    The periodic part is the spectrally exact antiderivative of
    ``rho_re0 - m``. Every (x1, x2) column must carry the same mean density,
    otherwise ``y0`` is not compatible with a periodic remainder.
    """
    rho = np.asarray(grid.check(rho_re0, "rho_re0"), dtype=float)
    if np.any(~(rho > 0)):
        raise DomainError("initial relativistic density must be positive", float(rho.min()))
    col = rho.mean(axis=2)
    m = float(col.mean())
    if np.max(np.abs(col - m)) > column_rtol * m:
        raise DomainError(
            "column averages of rho_re along x3 differ; the affine label slope would not be uniform",
            float(np.max(np.abs(col - m))),
        )
    yper = np.zeros((3,) + grid.shape)
    yper[2] = _periodic_antiderivative(rho - m, grid, 2)
    return LabelField(grid, m, yper)


def identity_label(grid, slope=1.0):
    return LabelField(grid, float(slope), np.zeros((3,) + grid.shape))


def _velocity_sampler(grid, u_start, u_end, dt):
    def sample(s, pts):
        a = interpolate(u_start, grid, pts)
        if u_end is None:
            return a
        theta = s / dt
        return (1.0 - theta) * a + theta * interpolate(u_end, grid, pts)

    return sample


def advance_label(lf, u_re, dt, u_re_end=None, max_courant=1.0):
    """Transport the labels by ``y_t + u_re . grad y = 0`` over one step.

    Semi-Lagrangian: each node is traced back along the velocity with RK4
    (velocity linear in time between ``u_re`` and ``u_re_end``) and the
    remainder is resampled at the departure point with four-point Lagrange
    interpolation (trilinear resampling every step would cap the scheme at
    first order).
    """
    grid = lf.grid
    umax = float(np.max(np.abs(u_re)))
    if u_re_end is not None:
        umax = max(umax, float(np.max(np.abs(u_re_end))))
    if dt <= 0 or dt * umax > max_courant * grid.min_spacing * (1 + 1e-12):
        raise CFLError(
            f"label step dt={dt:.6g} moves labels {dt * umax / grid.min_spacing:.3g} cells (limit {max_courant})",
            dt,
            max_courant * grid.min_spacing / max(umax, 1e-300),
        )
    vel = _velocity_sampler(grid, u_re, u_re_end, dt)
    x = grid.points()
    k1 = vel(dt, x)
    k2 = vel(0.5 * dt, x - 0.5 * dt * k1)
    k3 = vel(0.5 * dt, x - 0.5 * dt * k2)
    k4 = vel(0.0, x - dt * k3)
    xd = x - dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    new = lf.scale[:, None] * (xd - x) + interpolate_cubic(lf.yper, grid, xd)
    return LabelField(grid, lf.slope, new.reshape((3,) + grid.shape))


def verify_density_identity(lf, rho_re, method="fd4"):
    """Relative L2 mismatch between ``det(dy/dx)`` and ``rho_re``."""
    lf.grid.check(rho_re, "rho_re")
    det = lf.determinant(method)
    return l2_norm(det - rho_re, lf.grid) / l2_norm(rho_re, lf.grid)


@dataclass(frozen=True)
class FlowState:
    """Tracer positions ``phi`` (3, M, unwrapped) and Jacobians ``jphi``, ``jy`` (M,)."""

    phi: np.ndarray
    jphi: np.ndarray
    jy: np.ndarray

    def wrapped(self, grid):
        return np.mod(self.phi, np.asarray(grid.lengths)[:, None])


def initial_flow(grid, rho_re0, points=None):
    points = grid.points() if points is None else np.asarray(points, dtype=float)
    jy = interpolate(np.asarray(rho_re0, dtype=float), grid, points)
    return FlowState(points.copy(), np.ones(points.shape[1]), jy)


class LinearVelocity:
    """Analytic velocity ``u(x) = M x`` with constant divergence ``trace(M)``.

    Not periodic, so it is only meaningful for tracer (not grid) transport.
    """

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=float)

    def velocity(self, t, points):
        return self.matrix @ points

    def divergence(self, t, points):
        return np.full(points.shape[1], np.trace(self.matrix))


class _GridVelocity:
    def __init__(self, grid, u_start, u_end, t0, dt):
        self.grid, self.u0, self.u1, self.t0, self.dt = grid, u_start, u_end, t0, dt
        self.d0 = divergence(u_start, grid)
        self.d1 = None if u_end is None else divergence(u_end, grid)

    def _blend(self, f0, f1, t, points):
        a = interpolate(f0, self.grid, points)
        if f1 is None:
            return a
        theta = (t - self.t0) / self.dt
        return (1 - theta) * a + theta * interpolate(f1, self.grid, points)

    def velocity(self, t, points):
        return self._blend(self.u0, self.u1, t, points)

    def divergence(self, t, points):
        return self._blend(self.d0, self.d1, t, points)


def advance_flow(fs, u_re, dt, grid=None, u_re_end=None, t=0.0):
    """RK4 step of ``dphi/dt = u_re(phi)`` together with both Jacobian equations.

    ``dJ_phi/dt = div(u_re) J_phi`` and ``dJ_y/dt = -div(u_re) J_y``.
    ``u_re`` is either a grid field (then ``grid`` is required; velocity and
    its fourth-order divergence are sampled trilinearly, linear in time up to
    ``u_re_end``) or an object with ``velocity(t, pts)`` and
    ``divergence(t, pts)`` methods.
    """
    if isinstance(u_re, np.ndarray):
        if grid is None:
            raise ValueError("a grid is required to sample a gridded velocity")
        field = _GridVelocity(grid, u_re, u_re_end, t, dt)
    else:
        field = u_re

    def rhs(s, phi, jphi, jy):
        d = field.divergence(s, phi)
        return field.velocity(s, phi), d * jphi, -d * jy

    y0 = (fs.phi, fs.jphi, fs.jy)
    k1 = rhs(t, *y0)
    k2 = rhs(t + 0.5 * dt, *(a + 0.5 * dt * b for a, b in zip(y0, k1)))
    k3 = rhs(t + 0.5 * dt, *(a + 0.5 * dt * b for a, b in zip(y0, k2)))
    k4 = rhs(t + dt, *(a + dt * b for a, b in zip(y0, k3)))
    new = [a + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(y0, k1, k2, k3, k4)]
    return FlowState(*new)


class InverseMap:
    """Evaluator ``y -> x`` with ``y(x) = y_target``, by damped Newton on the trilinear labels."""

    def __init__(self, lf, tol=1e-10, max_iter=50):
        self.labels = lf
        self.tol = tol * max(lf.grid.lengths)
        self.max_iter = max_iter

    def __call__(self, y):
        lf = self.labels
        y = np.asarray(y, dtype=float)
        x = y / lf.scale[:, None]
        r = lf.evaluate(x) - y
        err = np.max(np.abs(r), axis=0)
        for _ in range(self.max_iter):
            active = err > self.tol
            if not np.any(active):
                return x
            xa = x[:, active]
            ra = r[:, active]
            _, J = lf.evaluate(xa, with_jacobian=True)
            step = np.linalg.solve(np.moveaxis(J, -1, 0), -ra.T[..., None])[..., 0].T
            ea = err[active]
            lam = np.ones(xa.shape[1])
            for _ in range(12):
                trial = xa + lam * step
                rt = lf.evaluate(trial) - y[:, active]
                et = np.max(np.abs(rt), axis=0)
                ok = et < ea
                if np.all(ok):
                    break
                lam = np.where(ok, lam, 0.5 * lam)
            x[:, active] = trial
            r[:, active] = rt
            err[active] = et
        if np.any(err > self.tol):
            bad = np.argwhere(err > self.tol)[:, 0]
            raise InversionError(
                f"label inversion did not converge for {bad.size} point(s), first y={y[:, bad[0]]}",
                y[:, bad],
            )
        return x


def invert_map(lf, tol=1e-10, max_iter=50):
    return InverseMap(lf, tol, max_iter)
