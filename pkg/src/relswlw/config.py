"""Plain-text ``key=value`` run configuration."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError

MODES = ("coevolve", "picard", "euler-only", "dirac-only")
FLUID_ICS = ("uniform", "acoustic_pulse", "density_sine")
SPINOR_ICS = ("gaussian_packet", "plane_wave", "zero")


def _positive(name, v):
    if not v > 0:
        raise ConfigError(f"{name} must be positive, got {v}", name)


def _nonnegative(name, v):
    if v < 0:
        raise ConfigError(f"{name} must be a positive constant (or 0 to switch the coupling off), got {v}", name)


def _choice(options):
    def check(name, v):
        if v not in options:
            raise ConfigError(f"{name} must be one of {', '.join(options)}; got {v!r}", name)

    return check


def _range(lo, hi, lo_open=False):
    def check(name, v):
        if (v <= lo if lo_open else v < lo) or v > hi:
            raise ConfigError(f"{name}={v} outside {'(' if lo_open else '['}{lo}, {hi}]", name)

    return check


@dataclass(frozen=True)
class RunConfig:
    # grid
    N: int = 64
    slab: int = 3
    L: float = 1.0
    # physics
    epsilon: float = 1.0
    sigma2: float = 0.25
    lam: float = 1.0
    kappa: float = 1.0
    alpha: float = 0.05
    delta: float = 0.0
    # numerics
    cfl: float = 0.4
    t_final: float = 0.1
    recovery_tol: float = 1e-12
    picard_tol: float = 1e-8
    picard_max_iter: int = 30
    reconstruction: str = "muscl"
    ptilde: str = "corrected"
    # initial conditions
    fluid_ic: str = "density_sine"
    fluid_amplitude: float = 0.2
    fluid_velocity: float = 0.1
    spinor_ic: str = "gaussian_packet"
    spinor_width: float = 0.1
    spinor_mode: int = 2
    spinor_amplitude: float = 1.0
    # output and control
    output_every: int = 10
    out_dir: str = "out"
    mode: str = "coevolve"
    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise ConfigError(f"{f.name} must be finite, got {v}", f.name)
            check = HELP[f.name][1]
            if check is not None:
                check(f.name, getattr(self, f.name))
        if self.sigma2 * self.epsilon**2 >= 1:
            raise ConfigError("sigma2 * epsilon^2 must stay below 1 (subluminal sound speed)", "sigma2")
        if self.slab in (1, 2) and self.mode in ("coevolve", "picard"):
            raise ConfigError("coupled modes need labels integrated along x3: use slab=3 or slab=0", "slab")
        if self.delta and self.delta < 2 * self.L / self.N:
            raise ConfigError(f"delta={self.delta} below twice the grid spacing {self.L / self.N}", "delta")

    @property
    def config_hash(self):
        return hashlib.sha256(serialize_config(self).encode()).hexdigest()


HELP = {
    "N": ("nodes along each resolved axis", _range(5, 4096)),
    "slab": ("0 for a full N^3 grid, or 1/2/3 for an N-node slab along that axis", _choice((0, 1, 2, 3))),
    "L": ("side length of the Eulerian torus", _positive),
    "epsilon": ("inverse light speed", _positive),
    "sigma2": ("linear pressure law p = sigma2 * rho", _positive),
    "lam": ("Thirring self-interaction constant", None),
    "kappa": ("potential coupling (V = kappa / rho_re)", _nonnegative),
    "alpha": ("short-wave force coupling", _nonnegative),
    "delta": ("mollifier width; 0 selects 4 grid spacings", _nonnegative),
    "cfl": ("Courant number against the fastest signal", _range(0.0, 0.5, lo_open=True)),
    "t_final": ("final time", _positive),
    "recovery_tol": ("relative residual of primitive recovery", _positive),
    "picard_tol": ("stopping distance of the fixed-point iteration", _positive),
    "picard_max_iter": ("maximum fixed-point iterations", _range(1, 10_000)),
    "reconstruction": ("finite-volume reconstruction: muscl or constant", _choice(("muscl", "constant"))),
    "ptilde": ("pressure-loss tensor form checked by audit: corrected, or the printed / flipped negative controls",
               _choice(("corrected", "printed", "flipped"))),
    "fluid_ic": (f"fluid initial condition: {', '.join(FLUID_ICS)}", _choice(FLUID_ICS)),
    "fluid_amplitude": ("relative density perturbation amplitude", _range(0.0, 0.9)),
    "fluid_velocity": ("velocity amplitude (density_sine) in units of light speed", _range(-0.9, 0.9)),
    "spinor_ic": (f"spinor initial condition: {', '.join(SPINOR_ICS)}", _choice(SPINOR_ICS)),
    "spinor_width": ("packet width as a fraction of the Lagrangian box", _positive),
    "spinor_mode": ("carrier / plane-wave mode number along the slab axis", None),
    "spinor_amplitude": ("spinor amplitude", None),
    "output_every": ("steps between diagnostics rows and snapshots", _range(1, 10**9)),
    "out_dir": ("output directory", None),
    "mode": (f"driver: {', '.join(MODES)}", _choice(MODES)),
    "seed": ("seed for randomized audit samples", _range(0, 2**64 - 1)),
}
_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key, text):
    kind = _TYPES[key]
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind}", key) from None
    return text


def parse_config(text, base=None):
    """Parse UTF-8 ``key=value`` lines (``#`` starts a comment) over defaults."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "lambda":
            key = "lam"
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key)
        if value == "":
            raise ConfigError(f"line {lineno}: missing value for {key!r}", key)
        values[key] = _convert(key, value)
    return replace(base or RunConfig(), **values) if values else (base or RunConfig())


def serialize_config(cfg):
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name}={v!r}" if isinstance(v, float) else f"{f.name}={v}")
    return "\n".join(lines) + "\n"


def config_help():
    rows = []
    defaults = RunConfig()
    for f in fields(RunConfig):
        rows.append(f"  {f.name}={getattr(defaults, f.name)}  -- {HELP[f.name][0]}")
    return "\n".join(rows)
