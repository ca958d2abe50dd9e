"""Named initial conditions for fluid and spinor fields."""
from __future__ import annotations

import numpy as np

from .dirac_algebra import build_alpha_set
from .dirac_solver import SpinorField

# fixed polarization with nonzero charge and pseudocharge densities
DEFAULT_POLARIZATION = np.array([1.0, 0.5j, 0.3, -0.2 + 0.4j])


def periodic_bump(grid, center, width):
    """Smooth periodic analogue of ``exp(-|x - c|^2 / (2 w^2))`` over the resolved axes."""
    out = np.ones(grid.shape)
    x = grid.mesh()
    for a in grid.resolved_axes:
        L = grid.lengths[a]
        q = (L / (2 * np.pi * width)) ** 2
        out = out * np.exp((np.cos(2 * np.pi * (x[a] - center[a]) / L) - 1.0) * q)
    return out


def _axis(grid, axis):
    if axis is None:
        return grid.resolved_axes[-1] if grid.resolved_axes else 2
    return axis


def uniform(grid, rho=1.0, velocity=(0.0, 0.0, 0.0)):
    rho = np.full(grid.shape, float(rho))
    u = np.broadcast_to(np.asarray(velocity, dtype=float).reshape(3, 1, 1, 1), (3,) + grid.shape).copy()
    return rho, u


def acoustic_pulse(grid, amplitude=0.1, width=None, rho0=1.0, axis=None):
    """Density bump at rest, released into two counter-propagating sound pulses."""
    axis = _axis(grid, axis)
    width = width if width is not None else 0.08 * grid.lengths[axis]
    center = [0.5 * L for L in grid.lengths]
    rho = rho0 * (1.0 + amplitude * periodic_bump(grid, center, width))
    return rho, np.zeros((3,) + grid.shape)


def density_sine(grid, amplitude=0.2, velocity_amplitude=0.0, rho0=1.0, axis=None, mode=1):
    """``rho = rho0 (1 + A sin(k x))`` with optional velocity ``B sin(k x)`` along ``axis``."""
    axis = _axis(grid, axis)
    phase = 2 * np.pi * mode * grid.mesh()[axis] / grid.lengths[axis]
    rho = rho0 * (1.0 + amplitude * np.sin(phase))
    u = np.zeros((3,) + grid.shape)
    u[axis] = velocity_amplitude * np.sin(phase)
    return rho, u


def plane_wave_mode(k, branch=1, A=None):
    """Unit eigenvector of ``k1 a1 + k2 a2 + k3 a3`` with eigenvalue ``branch * |k|``."""
    A = A or build_alpha_set()
    M = sum(ki * a for ki, a in zip(k, A.alphas))
    vals, vecs = np.linalg.eigh(M)
    i = int(np.argmax(vals)) if branch > 0 else int(np.argmin(vals))
    return vals[i], vecs[:, i]


def spinor_plane_wave(grid, modes=(1, 0, 0), branch=1, amplitude=1.0, A=None):
    """``amplitude * exp(i k.y) v`` with integer mode numbers per axis.

    With ``u_t = sum a_i d_i u`` this mode evolves as ``exp(i omega t)``,
    ``omega = branch * |k|``.
    """
    k = np.array([2 * np.pi * m / L for m, L in zip(modes, grid.lengths)])
    omega, v = plane_wave_mode(k, branch, A)
    phase = np.exp(1j * np.tensordot(k, grid.mesh(), axes=1))
    return SpinorField(grid, amplitude * v.reshape(4, 1, 1, 1) * phase), k, omega


def spinor_gaussian_packet(grid, width=None, modes=None, amplitude=1.0, center=None,
                           polarization=DEFAULT_POLARIZATION):
    """Periodic Gaussian envelope times a carrier ``exp(i k0.y)`` and a fixed 4-vector.

    By default the carrier has two wavelengths along the last resolved axis.
    """
    if modes is None:
        modes = [0, 0, 0]
        modes[_axis(grid, None)] = 2
    width = width if width is not None else 0.1 * max(grid.lengths[a] for a in grid.resolved_axes or (0,))
    center = center if center is not None else [0.5 * L for L in grid.lengths]
    k0 = np.array([2 * np.pi * m / L if grid.shape[a] > 1 else 0.0
                   for a, (m, L) in enumerate(zip(modes, grid.lengths))])
    v = np.asarray(polarization, dtype=complex)
    v = v / np.linalg.norm(v)
    env = amplitude * periodic_bump(grid, center, width)
    phase = np.exp(1j * np.tensordot(k0, grid.mesh(), axes=1))
    return SpinorField(grid, v.reshape(4, 1, 1, 1) * env * phase)


FLUID_ICS = {"uniform": uniform, "acoustic_pulse": acoustic_pulse, "density_sine": density_sine}
