"""Free wave equation ``w_tt = Laplacian(w)`` on the periodic grid, solved mode by mode."""
from __future__ import annotations

import numpy as np

from .errors import DomainError
from .grid import laplacian2


def _kmag(grid):
    k1, k2, k3 = grid.wavenumbers()
    return np.sqrt(k1**2 + k2**2 + k3**2)


def _propagate(grid, w0, wt0, t):
    k = _kmag(grid)
    w0h = np.fft.fftn(w0)
    wt0h = np.fft.fftn(wt0)
    c = np.cos(k * t)
    zero = k == 0
    safe = np.where(zero, 1.0, k)
    # sin(kt)/k -> t as k -> 0
    sinc = np.where(zero, t, np.sin(k * t) / safe)
    wh = w0h * c + wt0h * sinc
    wth = -w0h * k * np.sin(k * t) + wt0h * c
    return np.fft.ifftn(wh).real, np.fft.ifftn(wth).real


def wave_evolve_state(grid, w0, wt0, t):
    """Return ``(w(t), w_t(t))`` evolved exactly from ``(w0, wt0)``."""
    grid.check(w0, "w0")
    grid.check(wt0, "wt0")
    if t < 0:
        raise DomainError(f"wave evolution is forward in time only, got t={t}", t)
    return _propagate(grid, np.asarray(w0, float), np.asarray(wt0, float), float(t))


def wave_evolve(grid, w0, wt0, t):
    return wave_evolve_state(grid, w0, wt0, t)[0]


def wave_energy(grid, w, wt):
    """Spectral energy ``sum(wt^2 + |grad w|^2) * cell volume``."""
    k = _kmag(grid)
    n = w.size
    wh = np.fft.fftn(w)
    grad2 = np.sum((k * np.abs(wh)) ** 2) / n
    return float((np.sum(wt**2) + grad2) * grid.cell_volume)


def dalembertian_residual(grid, series, times=None):
    """Space-time L2 norm of the discrete ``w_tt - Laplacian(w)`` over interior samples.

    ``series`` is a sequence of fields at equally spaced ``times`` (or a
    sequence of ``(t, w)`` pairs when ``times`` is omitted). Centered
    differences are second order in both time and space.
    """
    series = list(series)
    if times is None:
        times = [float(t) for t, _ in series]
        series = [w for _, w in series]
    if len(series) < 3:
        raise ValueError(f"need at least 3 time samples, got {len(series)}")
    times = np.asarray(times, dtype=float)
    dts = np.diff(times)
    dt = dts[0]
    if dt <= 0 or not np.allclose(dts, dt, rtol=1e-9, atol=0):
        raise ValueError("time samples must be equally spaced and increasing")
    total = 0.0
    for n in range(1, len(series) - 1):
        wtt = (series[n + 1] - 2.0 * series[n] + series[n - 1]) / dt**2
        r = wtt - laplacian2(series[n], grid)
        total += np.sum(r**2) * grid.cell_volume * dt
    return float(np.sqrt(total))
