"""Periodic tensor grids and the discrete operators shared by every solver.

Fields are numpy arrays whose last three axes are the grid axes; any
leading axes hold components (spinor index, vector index, ...). Node ``j``
along axis ``a`` sits at ``x = j * h[a]``. An axis with a single node is
"collapsed": fields are constant along it and all derivatives vanish.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError


@dataclass(frozen=True)
class Grid:
    shape: tuple[int, int, int]
    lengths: tuple[float, float, float]

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        lengths = tuple(float(v) for v in self.lengths)
        if len(shape) != 3 or len(lengths) != 3:
            raise ValueError("Grid needs exactly three axes")
        if min(shape) < 1 or min(lengths) <= 0:
            raise ValueError(f"invalid grid shape={shape} lengths={lengths}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def cube(cls, n, length=1.0):
        return cls((n, n, n), (length, length, length))

    @classmethod
    def slab(cls, n, length=1.0, axis=0):
        """``n`` nodes along ``axis``, one node (a single cell of width ``length``) elsewhere."""
        shape = [1, 1, 1]
        shape[axis] = n
        return cls(tuple(shape), (length, length, length))

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.lengths, self.shape))

    @property
    def cell_volume(self):
        h = self.spacing
        return h[0] * h[1] * h[2]

    @property
    def resolved_axes(self):
        return tuple(a for a in range(3) if self.shape[a] > 1)

    @property
    def min_spacing(self):
        """Smallest spacing over resolved axes (all axes if none is resolved)."""
        axes = self.resolved_axes or (0, 1, 2)
        return min(self.spacing[a] for a in axes)

    def coords(self, axis):
        return np.arange(self.shape[axis]) * self.spacing[axis]

    def mesh(self):
        """Node coordinates as an array of shape (3, N1, N2, N3)."""
        return np.stack(np.meshgrid(*(self.coords(a) for a in range(3)), indexing="ij"))

    def points(self):
        """Node coordinates flattened to shape (3, N1*N2*N3)."""
        return self.mesh().reshape(3, -1)

    def wavenumbers(self):
        """Angular wavenumber grids ``(k1, k2, k3)`` broadcastable against a field."""
        ks = []
        for a in range(3):
            k = 2 * np.pi * np.fft.fftfreq(self.shape[a], d=self.spacing[a])
            shape = [1, 1, 1]
            shape[a] = self.shape[a]
            ks.append(k.reshape(shape))
        return ks

    def check(self, field, name="field"):
        if tuple(field.shape[-3:]) != self.shape:
            raise GridMismatchError(
                f"{name} has grid shape {tuple(field.shape[-3:])}, expected {self.shape}"
            )
        return field


def _axis(field, axis):
    return field.ndim - 3 + axis


def ddx(field, grid, axis):
    """Fourth-order centered derivative along ``axis`` on the torus."""
    if grid.shape[axis] == 1:
        return np.zeros_like(field)
    ax = _axis(field, axis)
    h = grid.spacing[axis]
    fp1 = np.roll(field, -1, ax)
    fm1 = np.roll(field, 1, ax)
    fp2 = np.roll(field, -2, ax)
    fm2 = np.roll(field, 2, ax)
    return (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * h)


def fd4_symbol(grid, axis):
    """Effective wavenumber of :func:`ddx` for each Fourier mode along ``axis``."""
    k = grid.wavenumbers()[axis]
    h = grid.spacing[axis]
    return (8.0 * np.sin(k * h) - np.sin(2.0 * k * h)) / (6.0 * h)


def gradient(field, grid):
    return np.stack([ddx(field, grid, a) for a in range(3)])


def divergence(vec, grid):
    return ddx(vec[0], grid, 0) + ddx(vec[1], grid, 1) + ddx(vec[2], grid, 2)


def laplacian2(field, grid):
    """Second-order centered Laplacian."""
    out = np.zeros_like(field)
    for a in grid.resolved_axes:
        ax = _axis(field, a)
        h = grid.spacing[a]
        out += (np.roll(field, -1, ax) - 2.0 * field + np.roll(field, 1, ax)) / h**2
    return out


def spectral_ddx(field, grid, axis):
    if grid.shape[axis] == 1:
        return np.zeros_like(field)
    ax = _axis(field, axis)
    n = grid.shape[axis]
    k = 2 * np.pi * np.fft.fftfreq(n, d=grid.spacing[axis])
    if n % 2 == 0:
        k[n // 2] = 0.0
    shape = [1] * field.ndim
    shape[ax] = n
    out = np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(field, axis=ax), axis=ax)
    return out.real if np.isrealobj(field) else out


def l2_norm(field, grid):
    """Discrete L2 norm over the torus; leading component axes are summed."""
    return float(np.sqrt(np.sum(np.abs(field) ** 2) * grid.cell_volume))


def interpolate(field, grid, points, with_gradient=False):
    """Periodic trilinear interpolation of ``field`` at physical ``points`` (3, M).

    Returns values of shape (..., M); with ``with_gradient`` also the exact
    gradient of the piecewise-trilinear interpolant, shape (3, ..., M).
    """
    points = np.asarray(points, dtype=float)
    lead = field.shape[:-3]
    idx0 = []
    frac = []
    for a in range(3):
        n = grid.shape[a]
        if n == 1:
            idx0.append(np.zeros(points.shape[1], dtype=np.intp))
            frac.append(np.zeros(points.shape[1]))
            continue
        s = points[a] / grid.spacing[a]
        i = np.floor(s)
        frac.append(s - i)
        idx0.append(np.mod(i.astype(np.intp), n))
    values = np.zeros(lead + (points.shape[1],), dtype=field.dtype)
    grads = np.zeros((3,) + values.shape, dtype=field.dtype) if with_gradient else None
    for c0 in (0, 1):
        for c1 in (0, 1):
            for c2 in (0, 1):
                corner = (c0, c1, c2)
                w = []
                dw = []
                ids = []
                for a in range(3):
                    n = grid.shape[a]
                    if n == 1:
                        w.append(np.full(points.shape[1], 1.0 if corner[a] == 0 else 0.0))
                        dw.append(np.zeros(points.shape[1]))
                        ids.append(idx0[a])
                        continue
                    if corner[a]:
                        w.append(frac[a])
                        dw.append(np.full(points.shape[1], 1.0 / grid.spacing[a]))
                        ids.append((idx0[a] + 1) % n)
                    else:
                        w.append(1.0 - frac[a])
                        dw.append(np.full(points.shape[1], -1.0 / grid.spacing[a]))
                        ids.append(idx0[a])
                weight = w[0] * w[1] * w[2]
                if not np.any(weight) and not with_gradient:
                    continue
                sample = field[..., ids[0], ids[1], ids[2]]
                values += weight * sample
                if with_gradient:
                    grads[0] += dw[0] * w[1] * w[2] * sample
                    grads[1] += w[0] * dw[1] * w[2] * sample
                    grads[2] += w[0] * w[1] * dw[2] * sample
    if with_gradient:
        return values, grads
    return values


def _cubic_taps(grid, points, a):
    n = grid.shape[a]
    m = points.shape[1]
    if n == 1:
        return [np.zeros(m, dtype=np.intp)], [np.ones(m)]
    s = points[a] / grid.spacing[a]
    i = np.floor(s)
    t = s - i
    i = i.astype(np.intp)
    weights = [
        -t * (t - 1) * (t - 2) / 6.0,
        (t + 1) * (t - 1) * (t - 2) / 2.0,
        -(t + 1) * t * (t - 2) / 2.0,
        (t + 1) * t * (t - 1) / 6.0,
    ]
    return [np.mod(i + off, n) for off in (-1, 0, 1, 2)], weights


def interpolate_cubic(field, grid, points):
    """Periodic tensor-product four-point Lagrange interpolation at ``points`` (3, M).

    Fourth-order accurate for smooth fields; used where values are
    resampled every step and trilinear errors would accumulate.
    """
    points = np.asarray(points, dtype=float)
    taps = [_cubic_taps(grid, points, a) for a in range(3)]
    values = np.zeros(field.shape[:-3] + (points.shape[1],), dtype=field.dtype)
    for i0, w0 in zip(*taps[0]):
        for i1, w1 in zip(*taps[1]):
            w01 = w0 * w1
            for i2, w2 in zip(*taps[2]):
                values += w01 * w2 * field[..., i0, i1, i2]
    return values
