"""Run orchestration: problem setup from a :class:`RunConfig`, the four drivers, output."""
from __future__ import annotations

import csv
import io as _stringio
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import serialize_config
from .coupling import (
    CoupledState,
    CouplingParams,
    build_mollifier,
    coevolve_step,
    coupled_dt,
    picard_solve,
    potential_field,
    thirring_potential,
)
from .dirac_algebra import build_alpha_set, charge_density
from .dirac_solver import SpinorField, initial_observable, step_dirac, total_charge
from .errors import CFLError, DomainError, InversionError, RecoveryError
from .grid import Grid, l2_norm
from .io import DiagnosticsRow, write_diagnostics, write_manifest, write_snapshot
from .lagrangian import advance_label, initial_label, verify_density_identity
from .rel_euler import Eos, FluidField, fv_step, total_mass, total_momentum
from .scenarios import FLUID_ICS, spinor_gaussian_packet, spinor_plane_wave
from .wave_solver import wave_evolve

log = logging.getLogger(__name__)

NUMERICAL_ERRORS = (RecoveryError, CFLError, InversionError, DomainError)


def build_grid(cfg, n=None):
    n = cfg.N if n is None else n
    if cfg.slab == 0:
        return Grid.cube(n, cfg.L)
    return Grid.slab(n, cfg.L, cfg.slab - 1)


def ic_axis(cfg):
    """Axis along which the named initial conditions vary."""
    return 2 if cfg.slab == 0 else cfg.slab - 1


def build_fluid(cfg, grid):
    axis = ic_axis(cfg)
    v = cfg.fluid_velocity / cfg.epsilon
    if cfg.fluid_ic == "uniform":
        velocity = np.zeros(3)
        velocity[axis] = v
        rho, u = FLUID_ICS["uniform"](grid, 1.0, velocity)
    elif cfg.fluid_ic == "acoustic_pulse":
        rho, u = FLUID_ICS["acoustic_pulse"](grid, amplitude=cfg.fluid_amplitude, axis=axis)
    else:
        rho, u = FLUID_ICS["density_sine"](grid, amplitude=cfg.fluid_amplitude, velocity_amplitude=v, axis=axis)
    return FluidField.from_primitive(grid, rho, u, cfg.epsilon, Eos(cfg.sigma2))


def build_spinor(cfg, lagrid):
    axis = ic_axis(cfg)
    modes = [0, 0, 0]
    modes[axis] = cfg.spinor_mode
    if cfg.spinor_ic == "gaussian_packet":
        return spinor_gaussian_packet(lagrid, width=cfg.spinor_width * lagrid.lengths[axis], modes=modes,
                                      amplitude=cfg.spinor_amplitude)
    if cfg.spinor_ic == "plane_wave":
        return spinor_plane_wave(lagrid, modes, amplitude=cfg.spinor_amplitude)[0]
    return SpinorField(lagrid, np.zeros((4,) + lagrid.shape, dtype=complex))


@dataclass
class Problem:
    cfg: object
    grid: Grid
    lagrid: Grid
    fluid: FluidField
    labels: object
    spinor: Optional[SpinorField]
    params: CouplingParams
    kernel: object
    dt: float
    nsteps: int

    @property
    def A(self):
        return build_alpha_set()


def build_problem(cfg, n=None):
    """Initial fields, labels, coupling parameters and the common time step."""
    grid = build_grid(cfg, n)
    fluid = build_fluid(cfg, grid)
    try:
        labels = initial_label(grid, fluid.D)
    except DomainError:
        if cfg.mode in ("coevolve", "picard"):
            raise
        # labels are optional diagnostics for the uncoupled drivers
        labels = None
    lagrid = labels.lagrangian_grid() if labels is not None else grid
    spinor = None if cfg.mode == "euler-only" else build_spinor(cfg, lagrid)
    params = CouplingParams(cfg.lam, cfg.kappa, cfg.alpha, cfg.delta or None, cfg.epsilon)
    kernel = None
    if cfg.mode in ("coevolve", "picard") and cfg.alpha != 0:
        kernel = build_mollifier(params.mollifier_width(grid), grid)
    dt = coupled_dt(grid, lagrid, cfg.epsilon, cfg.cfl)
    nsteps = max(1, int(math.ceil(cfg.t_final / dt - 1e-12)))
    return Problem(cfg, grid, lagrid, fluid, labels, spinor, params, kernel, cfg.t_final / nsteps, nsteps)


@dataclass(frozen=True)
class SimState:
    fluid: FluidField
    labels: object
    spinor: Optional[SpinorField]
    time: float = 0.0


def _euler_step(state, prob):
    cfg = prob.cfg
    dt = prob.dt
    half = fv_step(state.fluid, None, 0.5 * dt, cfl=cfg.cfl, reconstruction=cfg.reconstruction, tol=cfg.recovery_tol)
    labels = state.labels
    if labels is not None:
        labels = advance_label(labels, half.relativistic(cfg.recovery_tol).u_re, dt)
    fluid = fv_step(half, None, 0.5 * dt, cfl=cfg.cfl, reconstruction=cfg.reconstruction, tol=cfg.recovery_tol)
    return SimState(fluid, labels, None, state.time + dt)


def frozen_potential(prob):
    """``kappa / rho_re`` on the Lagrangian grid for the (static) initial fluid."""
    kappa = prob.cfg.kappa
    if prob.labels is not None:
        return potential_field(prob.fluid.D, prob.grid, prob.labels, kappa)
    return kappa / prob.fluid.D if kappa else np.zeros(prob.grid.shape)


def _stepper(prob):
    """Initial state and a ``step(state) -> state`` closure for the configured mode."""
    cfg, A = prob.cfg, prob.A
    if cfg.mode == "euler-only":
        return SimState(prob.fluid, prob.labels, None), lambda s: _euler_step(s, prob)
    if cfg.mode == "dirac-only":
        B_at = thirring_potential(cfg.lam, frozen_potential(prob), A)

        def step(s):
            spinor = step_dirac(s.spinor, B_at, prob.dt, t=s.time, cfl=cfg.cfl, A=A)
            return SimState(s.fluid, s.labels, spinor, s.time + prob.dt)

        return SimState(prob.fluid, prob.labels, prob.spinor), step

    def step(s):
        return coevolve_step(s, prob.params, prob.dt, kernel=prob.kernel, cfl=cfg.cfl, A=A,
                             reconstruction=cfg.reconstruction, tol=cfg.recovery_tol)

    return CoupledState(prob.fluid, prob.spinor, prob.labels), step


class Diagnostics:
    """Builds :class:`DiagnosticsRow` entries against the wave-equation oracle of the initial spinor."""

    def __init__(self, prob):
        self.prob = prob
        self.oracle = None
        if prob.spinor is not None:
            self.oracle = initial_observable(prob.spinor, "charge", prob.A)

    def row(self, time, fluid, labels, spinor, picard_distance=math.nan):
        cfg = self.prob.cfg
        P = total_momentum(fluid)
        row = DiagnosticsRow(time, total_mass(fluid), *P, picard_distance=picard_distance)
        if labels is not None:
            row.density_residual = verify_density_identity(labels, fluid.relativistic(cfg.recovery_tol).rho_re)
        if spinor is not None:
            row.charge = total_charge(spinor)
            w = charge_density(spinor.values)
            ref = wave_evolve(spinor.grid, self.oracle.w, self.oracle.wt, time)
            scale = l2_norm(ref, spinor.grid)
            row.wave_residual = l2_norm(w - ref, spinor.grid) / scale if scale > 0 else 0.0
        return row


def fluid_snapshot_fields(fluid, labels=None):
    prim = fluid.primitive()
    out = {"D": fluid.D, "S_x": fluid.S[0], "S_y": fluid.S[1], "S_z": fluid.S[2],
           "rho": prim.rho, "u_x": prim.u[0], "u_y": prim.u[1], "u_z": prim.u[2]}
    if labels is not None:
        y = labels.values()
        out.update({"y_x": y[0], "y_y": y[1], "y_z": y[2]})
    return out


def spinor_snapshot_fields(spinor):
    out = {}
    for c in range(4):
        out[f"re{c}"] = spinor.values[c].real
        out[f"im{c}"] = spinor.values[c].imag
    return out


@dataclass
class RunResult:
    status: str
    rows: list
    artifacts: list
    error: Optional[BaseException] = None

    @property
    def exit_code(self):
        return 0 if self.error is None else 3


def simulate(cfg, on_output=None, n=None):
    """Run the configured mode in memory.

    ``on_output(step, time, fluid, labels, spinor, row)`` is called at step 0,
    every ``output_every`` steps and at the final step. Returns
    ``(rows, extra)``; numerical failures propagate with the rows produced
    so far attached as ``exc.rows``.
    """
    prob = build_problem(cfg, n)
    diag = Diagnostics(prob)
    rows = []
    extra = {"dt": prob.dt, "steps": prob.nsteps}

    def emit(k, state, d=math.nan):
        # stamp outputs as k * dt (not the accumulated state time) so every mode agrees bitwise
        t = cfg.t_final if k == prob.nsteps else k * prob.dt
        row = diag.row(t, state.fluid, state.labels, state.spinor, d)
        rows.append(row)
        if on_output is not None:
            on_output(k, t, state.fluid, state.labels, state.spinor, row)

    try:
        if cfg.mode == "picard":
            init = CoupledState(prob.fluid, prob.spinor, prob.labels)
            res = picard_solve(init, prob.params, cfg.t_final, dt=prob.dt, tol=cfg.picard_tol,
                               max_iter=cfg.picard_max_iter, kernel=prob.kernel, cfl=cfg.cfl, A=prob.A,
                               reconstruction=cfg.reconstruction, recovery_tol=cfg.recovery_tol)
            d = res.distances[-1] if res.distances else 0.0
            for k, t in enumerate(res.times):
                if k % cfg.output_every == 0 or k == prob.nsteps:
                    emit(k, SimState(res.fluids[k], res.labels[k], res.spinors[k], float(t)), d)
            extra["picard"] = {"distances": res.distances, "contraction_factors": res.contraction_factors,
                               "converged": res.converged, "diverged": res.diverged}
        else:
            state, step = _stepper(prob)
            emit(0, state)
            for k in range(1, prob.nsteps + 1):
                state = step(state)
                if k % cfg.output_every == 0 or k == prob.nsteps:
                    emit(k, state)
    except NUMERICAL_ERRORS as exc:
        exc.rows = rows
        raise
    return rows, extra


def run(cfg, out_dir=None):
    """Write diagnostics, snapshots and a manifest under ``out_dir``; never raises numerical errors."""
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []

    def on_output(k, t, fluid, labels, spinor, row):
        artifacts.extend(write_snapshot(out / f"fluid_{k:06d}", fluid.grid, t, fluid_snapshot_fields(fluid, labels)))
        if spinor is not None:
            artifacts.extend(write_snapshot(out / f"spinor_{k:06d}", spinor.grid, t, spinor_snapshot_fields(spinor)))

    error = None
    extra = {}
    try:
        rows, extra = simulate(cfg, on_output)
        status = "ok"
        if extra.get("picard", {}).get("diverged"):
            status = "ok (picard iteration stalled)"
    except NUMERICAL_ERRORS as exc:
        rows = getattr(exc, "rows", [])
        error = exc
        status = f"failed: {type(exc).__name__}: {exc}"
        log.error("%s", status)
    diag_path = out / "diagnostics.csv"
    write_diagnostics(diag_path, rows)
    artifacts.append(diag_path)
    if "picard" in extra:
        buf = _stringio.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "distance"])
        for i, d in enumerate(extra["picard"]["distances"], 1):
            w.writerow([i, repr(float(d))])
        path = out / "picard.csv"
        path.write_text(buf.getvalue())
        artifacts.append(path)
    cfg_text = serialize_config(cfg)
    manifest_extra = {"mode": cfg.mode, "seed": cfg.seed, "numpy_version": np.__version__,
                      "regenerate": "relswlw run --config <file containing 'config'>"}
    manifest_extra.update({k: v for k, v in extra.items()})
    write_manifest(out, cfg_text, cfg.config_hash, __version__, artifacts, status, manifest_extra)
    return RunResult(status, rows, artifacts, error)
