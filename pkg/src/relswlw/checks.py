"""Reusable oracle scenarios and the ``audit`` / ``convergence`` reports built from them."""
from __future__ import annotations

import math

import numpy as np

from .config import RunConfig
from .coupling import (
    CoupledState,
    CouplingParams,
    coevolve_step,
    coupled_dt,
    picard_solve,
    thirring_potential,
    trajectory_distance,
)
from .dirac_algebra import algebra_residuals, build_alpha_set, charge_density, interaction_matrix, pseudo_density
from .dirac_solver import evolve_dirac, initial_observable, total_charge
from .grid import Grid, l2_norm
from .lagrangian import (
    LinearVelocity,
    advance_flow,
    advance_label,
    initial_flow,
    initial_label,
    verify_density_identity,
)
from .rel_euler import (
    Eos,
    FluidField,
    PrimitiveState,
    cons_to_prim,
    eos_eval,
    fv_step,
    momentum_flux_tensor,
    prim_to_cons,
    rel_momentum_flux_tensor,
    rel_variables,
    total_mass,
    total_momentum,
)
from .scenarios import acoustic_pulse, density_sine, spinor_gaussian_packet
from .wave_solver import wave_evolve

LINEAR_FLOW_MATRIX = np.array([[0.3, 0.1, 0.0], [0.0, -0.2, 0.05], [0.1, 0.0, 0.4]])


def observed_order(coarse, fine, ratio=2.0):
    if coarse <= 0 or fine <= 0:
        return math.nan
    return math.log(coarse / fine) / math.log(ratio)


# --- pointwise fluid oracles -------------------------------------------------

def random_physical_states(rng, n, eps, max_speed=0.95, rho_range=(0.5, 2.0)):
    """``n`` states with ``rho`` uniform in ``rho_range`` and ``eps |u|`` uniform in ``[0, max_speed]``."""
    rho = rng.uniform(*rho_range, size=n)
    direction = rng.normal(size=(3, n))
    direction /= np.linalg.norm(direction, axis=0)
    speed = rng.uniform(0.0, max_speed, size=n) / eps
    return PrimitiveState(rho, direction * speed)


def flux_equivalence_error(prim, eps, eos, ptilde="corrected"):
    """Largest entrywise gap between the two momentum-flux forms, relative to the tensor size.

    Each state's gap is divided by ``max(1, max|T_jk|)`` so O(1) states are
    compared absolutely and large fluxes at small ``eps`` relatively.
    """
    T = momentum_flux_tensor(prim, eps, eos)
    p, _ = eos_eval(eos, prim.rho)
    T_rel = rel_momentum_flux_tensor(rel_variables(prim, eps, eos, ptilde), p)
    scale = np.maximum(1.0, np.max(np.abs(T), axis=(0, 1)))
    return float(np.max(np.abs(T - T_rel) / scale))


def conserved_identity_error(prim, eps, eos):
    """Relative gaps in ``D = rho_re`` and ``S = rho_re u_re``."""
    cons = prim_to_cons(prim, eps, eos)
    rel = rel_variables(prim, eps, eos)
    d = np.abs(cons.D - rel.rho_re) / cons.D
    s = np.max(np.abs(cons.S - rel.rho_re * rel.u_re), axis=0) / np.maximum(cons.D, np.linalg.norm(cons.S, axis=0))
    return float(max(d.max(), s.max()))


def nonrelativistic_deviation(prim, eps, eos):
    """RMS of ``|rho_re - rho| + |u_re - u| + |Ptilde|`` over the sample."""
    rel = rel_variables(prim, eps, eos)
    dev = (np.abs(rel.rho_re - prim.rho) + np.linalg.norm(rel.u_re - prim.u, axis=0)
           + np.sqrt(np.sum(rel.Ptilde**2, axis=(0, 1))))
    return float(np.sqrt(np.mean(dev**2)))


def recovery_roundtrip_error(prim, eps, eos, tol=1e-12):
    rec = cons_to_prim(prim_to_cons(prim, eps, eos), eps, eos, tol=tol)
    e_rho = np.abs(rec.rho - prim.rho) / prim.rho
    e_u = np.linalg.norm(rec.u - prim.u, axis=0) / np.maximum(np.linalg.norm(prim.u, axis=0), 1.0)
    return float(max(e_rho.max(), e_u.max()))


def thirring_hypothesis_residual(rng, n=1000, lam=1.0, A=None):
    """Hermiticity and ``[B, a_i] = 0`` for ``lam U(u) + V I`` at random spinors and potentials."""
    A = A or build_alpha_set()
    s = rng.normal(size=(4, n)) + 1j * rng.normal(size=(4, n))
    V = rng.normal(size=n)
    B = np.moveaxis(interaction_matrix(s, V, lam, A), -1, 0)
    res = np.max(np.abs(B - np.conj(np.swapaxes(B, 1, 2))))
    for a in A.alphas:
        res = max(res, np.max(np.abs(B @ a - a @ B)))
    return float(res)


# --- field oracles ------------------------------------------------------------

def frozen_sine_potential(grid, axis, amplitude=0.5, kappa=1.0):
    """``kappa / rho`` for the density ``1 + amplitude sin(2 pi y / L)``."""
    y = grid.mesh()[axis]
    return kappa / (1.0 + amplitude * np.sin(2 * np.pi * y / grid.lengths[axis]))


def wave_oracle_errors(n, t=0.5, lam=1.0, axis=2, length=1.0, cfl=0.4, spinor=None):
    """Relative L2 gaps between the evolved Dirac bilinears and the wave-equation prediction.

    Gaussian packet on an ``n``-node slab along ``axis``, frozen sinusoidal
    potential. Returns ``{"charge": e, "pseudocharge": e}``.
    """
    A = build_alpha_set()
    grid = Grid.slab(n, length, axis)
    f0 = spinor(grid) if spinor is not None else spinor_gaussian_packet(grid)
    V = frozen_sine_potential(grid, axis)
    obs = {k: initial_observable(f0, k, A) for k in ("charge", "pseudocharge")}
    ft = evolve_dirac(f0, thirring_potential(lam, V, A), t, cfl=cfl, A=A)
    got = {"charge": charge_density(ft.values), "pseudocharge": pseudo_density(ft.values, A)}
    out = {}
    for k, o in obs.items():
        ref = wave_evolve(grid, o.w, o.wt, t)
        out[k] = l2_norm(got[k] - ref, grid) / l2_norm(ref, grid)
    return out


def charge_drift(n, t_final=1.0, lam=1.0, axis=2, cfl=0.4):
    """Relative change of total charge for the packet under the frozen potential."""
    A = build_alpha_set()
    grid = Grid.slab(n, 1.0, axis)
    f0 = spinor_gaussian_packet(grid)
    ft = evolve_dirac(f0, thirring_potential(lam, frozen_sine_potential(grid, axis), A), t_final, cfl=cfl, A=A)
    q0 = total_charge(f0)
    return abs(total_charge(ft) - q0) / q0


def label_run(n, t_final, ic="acoustic_pulse", amplitude=0.2, velocity=0.0, eps=1.0, sigma2=0.25, cfl=0.4,
              reconstruction="muscl", axis=2):
    """Force-free fluid with co-evolved labels on an ``n``-node slab along x3.

    Returns ``dict(residual, mass0, mass1, momentum0, momentum1)``; the
    residual is the relative L2 mismatch of ``det(dy/dx)`` and ``rho_re``.
    """
    grid = Grid.slab(n, 1.0, axis)
    if ic == "acoustic_pulse":
        rho, u = acoustic_pulse(grid, amplitude=amplitude, axis=axis)
    else:
        rho, u = density_sine(grid, amplitude=amplitude, velocity_amplitude=velocity / eps, axis=axis)
    fluid = FluidField.from_primitive(grid, rho, u, eps, Eos(sigma2))
    labels = initial_label(grid, fluid.D)
    lagrid = labels.lagrangian_grid()
    dt0 = coupled_dt(grid, lagrid, eps, cfl)
    nsteps = max(1, int(math.ceil(t_final / dt0 - 1e-12)))
    dt = t_final / nsteps
    f = fluid
    for _ in range(nsteps):
        half = fv_step(f, None, 0.5 * dt, cfl=cfl, reconstruction=reconstruction)
        labels = advance_label(labels, half.relativistic().u_re, dt)
        f = fv_step(half, None, 0.5 * dt, cfl=cfl, reconstruction=reconstruction)
    return {
        "residual": verify_density_identity(labels, f.relativistic().rho_re),
        "mass0": total_mass(fluid),
        "mass1": total_mass(f),
        "momentum0": total_momentum(fluid),
        "momentum1": total_momentum(f),
    }


def linear_flow_error(dt, t_final=1.0, matrix=LINEAR_FLOW_MATRIX):
    """Max error of the tracer Jacobian ``J_phi`` against ``exp(trace(M) t)`` for ``u = M x``."""
    grid = Grid.cube(4, 1.0)
    fs = initial_flow(grid, np.ones(grid.shape))
    vel = LinearVelocity(matrix)
    nsteps = int(round(t_final / dt))
    for k in range(nsteps):
        fs = advance_flow(fs, vel, dt, t=k * dt)
    exact = math.exp(np.trace(matrix) * nsteps * dt)
    return float(max(np.max(np.abs(fs.jphi - exact)), np.max(np.abs(fs.jy - 1.0 / exact))))


def coupled_setup(n=64, alpha=0.05, lam=1.0, kappa=1.0, amplitude=0.2, velocity=0.1, eps=1.0, sigma2=0.25):
    """Slab scenario along x3: sinusoidal density with flow, Gaussian packet on the Lagrangian torus."""
    grid = Grid.slab(n, 1.0, 2)
    rho, u = density_sine(grid, amplitude=amplitude, velocity_amplitude=velocity / eps, axis=2)
    fluid = FluidField.from_primitive(grid, rho, u, eps, Eos(sigma2))
    labels = initial_label(grid, fluid.D)
    spinor = spinor_gaussian_packet(labels.lagrangian_grid())
    return CoupledState(fluid, spinor, labels), CouplingParams(lam=lam, kappa=kappa, alpha=alpha, epsilon=eps)


def coevolve_trajectory(init, params, times, cfl=0.4):
    dt = times[1] - times[0]
    traj = [init]
    for _ in times[1:]:
        traj.append(coevolve_step(traj[-1], params, dt, cfl=cfl))
    return traj


# --- reports -------------------------------------------------------------------

def _entry(name, value, tolerance, relation="<="):
    if relation == "<=":
        ok = value <= tolerance
    elif relation == ">=":
        ok = value >= tolerance
    else:  # "in": closed band (lo, hi)
        ok = tolerance[0] <= value <= tolerance[1]
    if isinstance(value, float) and math.isnan(value):
        ok = False
    return {"name": name, "value": float(value), "tolerance": tolerance, "relation": relation, "passed": bool(ok)}


def audit(cfg=None):
    """Pass/fail report for every invariant, with measured residuals and pinned tolerances.

    Field checks run on ``N``-node slabs along x3 (refined to ``2N`` for
    orders) with the configured physics; the wave-equation property is only
    valid for one-dimensional variation.
    """
    cfg = cfg or RunConfig()
    rng = np.random.default_rng(cfg.seed)
    eos = Eos(cfg.sigma2)
    A = build_alpha_set()
    checks = []

    checks.append(_entry("dirac_algebra", max(algebra_residuals(A).values()), 1e-14))
    checks.append(_entry("thirring_hypotheses", thirring_hypothesis_residual(rng, 1000, cfg.lam or 1.0, A), 1e-13))

    for eps in sorted({cfg.epsilon, 0.1}, reverse=True):
        prim = random_physical_states(rng, 10_000, eps)
        e_eos = Eos(min(cfg.sigma2, 0.99 / eps**2))
        checks.append(_entry(f"flux_equivalence[eps={eps:g},ptilde={cfg.ptilde}]",
                             flux_equivalence_error(prim, eps, e_eos, cfg.ptilde), 1e-13))
        checks.append(_entry(f"conserved_identities[eps={eps:g}]", conserved_identity_error(prim, eps, e_eos), 1e-13))
        checks.append(_entry(f"printed_ptilde_rejected[eps={eps:g}]",
                             flux_equivalence_error(prim, eps, e_eos, "printed"), 1e-6, ">="))
        checks.append(_entry(f"recovery_roundtrip[eps={eps:g}]",
                             recovery_roundtrip_error(prim, eps, e_eos, cfg.recovery_tol), 1e-10))

    nr = random_physical_states(rng, 10_000, 1.0, max_speed=0.95)
    ratio = nonrelativistic_deviation(nr, 0.1, eos) / nonrelativistic_deviation(nr, 0.05, eos)
    checks.append(_entry("nonrelativistic_ratio[eps=0.1/0.05]", ratio, (3.6, 4.4), "in"))

    n = cfg.N
    t = cfg.t_final
    w1 = wave_oracle_errors(n, t, cfg.lam, cfl=cfg.cfl)
    w2 = wave_oracle_errors(2 * n, t, cfg.lam, cfl=cfg.cfl)
    for k in ("charge", "pseudocharge"):
        checks.append(_entry(f"wave_oracle[{k},N={n}]", w1[k], 1e-2))
        checks.append(_entry(f"wave_oracle_order[{k},N={n}/{2 * n}]", observed_order(w1[k], w2[k]), 2.0, ">="))
    # RK4 damps under-resolved packet modes, so charge is checked on the 4N slab over unit time
    checks.append(_entry(f"charge_drift[N={4 * n},T=1]", charge_drift(4 * n, 1.0, cfg.lam, cfl=cfg.cfl), 1e-8))

    kw = dict(ic=cfg.fluid_ic if cfg.fluid_ic != "uniform" else "density_sine", amplitude=cfg.fluid_amplitude,
              velocity=cfg.fluid_velocity, eps=cfg.epsilon, sigma2=cfg.sigma2, cfl=cfg.cfl,
              reconstruction=cfg.reconstruction)
    r1 = label_run(n, t, **kw)
    r2 = label_run(2 * n, t, **kw)
    checks.append(_entry(f"density_identity[N={n}]", r1["residual"], 5e-3))
    checks.append(_entry(f"density_identity_order[N={n}/{2 * n}]",
                         observed_order(r1["residual"], r2["residual"]), 1.0, ">="))
    checks.append(_entry("mass_conservation", abs(r1["mass1"] - r1["mass0"]) / r1["mass0"], 1e-13))

    init, params = coupled_setup(n, cfg.alpha, cfg.lam, cfg.kappa, cfg.fluid_amplitude, cfg.fluid_velocity,
                                 cfg.epsilon, cfg.sigma2)
    res = picard_solve(init, params, t, tol=cfg.picard_tol, max_iter=cfg.picard_max_iter, cfl=cfg.cfl,
                       reconstruction=cfg.reconstruction)
    factors = res.contraction_factors
    checks.append(_entry("picard_converged", float(res.converged), 1.0, ">="))
    checks.append(_entry("picard_contraction_factor", max(factors) if factors else 0.0, 1.0, "<="))
    traj = coevolve_trajectory(init, params, res.times, cfg.cfl)
    checks.append(_entry("picard_vs_coevolve", trajectory_distance(res.fluids, [s.fluid for s in traj]), 1e-2))
    P0 = total_momentum(traj[0].fluid)
    P1 = total_momentum(traj[-1].fluid)
    scale = max(1.0, float(np.sum(np.abs(traj[0].fluid.S)) * traj[0].fluid.grid.cell_volume))
    checks.append(_entry("momentum_conservation[coupled]", float(np.max(np.abs(P1 - P0))) / scale, 1e-13))

    off = CouplingParams(lam=0.0, kappa=0.0, alpha=0.0, epsilon=cfg.epsilon)
    dt = res.times[1] - res.times[0]
    coupled = coevolve_step(coevolve_step(init, off, dt, cfl=cfg.cfl), off, dt, cfl=cfg.cfl)
    fl, lab = init.fluid, init.labels
    sp = init.spinor
    for _ in range(2):
        half = fv_step(fl, None, 0.5 * dt, cfl=cfg.cfl)
        lab = advance_label(lab, half.relativistic().u_re, dt)
        fl = fv_step(half, None, 0.5 * dt, cfl=cfg.cfl)
    sp = evolve_dirac(sp, None, 2 * dt, cfl=cfg.cfl)
    gap = max(np.max(np.abs(coupled.fluid.D - fl.D)), np.max(np.abs(coupled.fluid.S - fl.S)),
              np.max(np.abs(coupled.labels.yper - lab.yper)), np.max(np.abs(coupled.spinor.values - sp.values)))
    checks.append(_entry("decoupling", float(gap), 1e-14))

    return {"config_sha256": cfg.config_hash, "passed": all(c["passed"] for c in checks), "checks": checks}


MAX_CONVERGENCE_NODES = 2**21


def convergence(cfg=None, levels=3):
    """Oracle errors and self-convergence orders at ``N, 2N, ..., 2^(levels-1) N``.

    Levels whose grid would exceed ``MAX_CONVERGENCE_NODES`` nodes are
    dropped and the report is marked ``truncated``.
    """
    from .simulation import simulate

    if levels < 2:
        raise ValueError("convergence needs at least two levels")
    cfg = cfg or RunConfig()
    sizes = []
    truncated = False
    for lvl in range(levels):
        n = cfg.N * 2**lvl
        nodes = n**3 if cfg.slab == 0 else n
        if nodes > MAX_CONVERGENCE_NODES:
            truncated = True
            break
        sizes.append(n)
    if len(sizes) < 2:
        return {"truncated": True, "levels": sizes, "tables": {}}

    tables = {}

    def table(name, values, band):
        orders = [observed_order(a, b) for a, b in zip(values, values[1:])]
        tables[name] = {"values": values, "orders": orders, "band": band}

    t = cfg.t_final
    waves = [wave_oracle_errors(n, t, cfg.lam, cfl=cfg.cfl) for n in sizes]
    table("wave_oracle_charge", [w["charge"] for w in waves], [2.0, None])
    table("wave_oracle_pseudocharge", [w["pseudocharge"] for w in waves], [2.0, None])
    ic = cfg.fluid_ic if cfg.fluid_ic != "uniform" else "density_sine"
    table("density_identity", [label_run(n, t, ic=ic, amplitude=cfg.fluid_amplitude, velocity=cfg.fluid_velocity,
                                         eps=cfg.epsilon, sigma2=cfg.sigma2, cfl=cfg.cfl,
                                         reconstruction=cfg.reconstruction)["residual"] for n in sizes], [1.0, None])
    table("linear_flow_jphi", [linear_flow_error(0.1 / 2**k) for k in range(len(sizes))], [3.6, 4.4])

    finals = [simulate(cfg, n=n)[0][-1] for n in sizes]
    self_conv = {}
    for key in ("total_mass", "momentum_x", "momentum_y", "momentum_z", "charge", "density_residual",
                "wave_residual"):
        vals = [getattr(r, key) for r in finals]
        orders = []
        for a, b, c in zip(vals, vals[1:], vals[2:]):
            d1, d2 = abs(a - b), abs(b - c)
            orders.append(math.log2(d1 / d2) if d1 > 0 and d2 > 0 else math.nan)
        self_conv[key] = {"values": vals, "orders": orders}
    return {"truncated": truncated, "levels": sizes, "tables": tables, "self_convergence": self_conv}
