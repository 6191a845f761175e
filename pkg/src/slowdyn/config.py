"""Flat ``key = value`` run configuration.

One assignment per line; ``#`` starts a comment; blank lines are ignored.
Keys are case-sensitive. Required keys: ``L``, ``Fr``, ``nx``, ``ny``,
``kz_max``, ``t_end``, ``ic.name``. Everything else has a default (see
``SCHEMA``). Booleans are ``true`` / ``false``; optional numbers accept
``none``.

Example::

    L = 1.0
    Fr = 0.5
    nx = 64
    ny = 64
    kz_max = 4
    t_end = 1.0
    ic.name = taylor_green
"""

import math
from dataclasses import dataclass, field

from .diagnostics import Tolerances
from .errors import ConfigError, SlowDynError
from .model import PhysicalParams
from .spectral import GridSpec
from .timestepper import RunConfig

__all__ = ["ICSpec", "SimulationConfig", "SCHEMA", "GENERATORS", "parse_config",
           "serialize_config", "load_config"]

GENERATORS = ("taylor_green", "single_mode", "random_spectrum", "oscillator_only",
              "from_checkpoint")
SCALAR_MODES = ("random_spectrum", "oscillator", "zero")

_REQUIRED = object()


def _bool(text):
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _int(text):
    return int(text, 10)


def _optional(kind):
    def parse(text):
        return None if text.lower() == "none" else kind(text)
    parse.__name__ = f"optional {kind.__name__}"
    return parse


# key -> (parser, default)
SCHEMA = {
    "L": (float, _REQUIRED),
    "Fr": (float, _REQUIRED),
    "nx": (_int, _REQUIRED),
    "ny": (_int, _REQUIRED),
    "kz_max": (_int, _REQUIRED),
    "nz": (_optional(_int), None),
    "viscous": (_bool, False),
    "Re": (_optional(float), None),
    "Pr": (_optional(float), None),
    "t_end": (float, _REQUIRED),
    "cfl": (float, 0.5),
    "dt_override": (_optional(float), None),
    "diag_every": (_int, 10),
    "snapshot_every": (_optional(_int), None),
    "workers": (_int, 1),
    "output_dir": (str, "output"),
    "ic.name": (str, _REQUIRED),
    "ic.seed": (_int, 0),
    "ic.amplitude": (float, 1.0),
    "ic.slope": (float, 4.0),
    "ic.scalar_amplitude": (float, 1.0),
    "ic.scalars": (str, "random_spectrum"),
    "ic.m": (_int, 1),
    "ic.n": (_int, 0),
    "ic.w0": (float, 1.0),
    "ic.rho0": (float, 0.0),
    "ic.path": (_optional(str), None),
    "tol.equality": (float, 1e-8),
    "tol.inequality": (float, 1e-6),
    "tol.lp2": (float, 1e-8),
    "tol.lp4": (float, 1e-4),
    "tol.lp8": (float, 1e-3),
    "tol.lpinf": (float, 1e-2),
    "tol.mean": (float, 1e-10),
    "convergence.dt": (float, 4e-3),
}


@dataclass(frozen=True)
class ICSpec:
    """Initial-condition generator name, its parameters and the seed."""

    name: str
    seed: int = 0
    amplitude: float = 1.0
    slope: float = 4.0
    scalar_amplitude: float = 1.0
    scalars: str = "random_spectrum"
    m: int = 1
    n: int = 0
    w0: float = 1.0
    rho0: float = 0.0
    path: str = None


@dataclass(frozen=True)
class SimulationConfig:
    grid: GridSpec
    params: PhysicalParams
    run: RunConfig
    ic: ICSpec
    output_dir: str = "output"
    tolerances: Tolerances = field(default_factory=Tolerances)
    mean_tolerance: float = 1e-10
    convergence_dt: float = 4e-3


def _split(text):
    """Yield ``(line_number, key, raw_value)`` for every assignment."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", line=lineno)
        if not value:
            raise ConfigError(f"missing value for {key!r}", line=lineno, key=key)
        yield lineno, key, value


def parse_config(text):
    """Parse and validate a configuration document.

    Raises
    ------
    ConfigError
        For unknown, duplicate or missing keys, unparseable values and
        violated constraints; ``line`` points at the offending assignment
        when there is one.
    """
    values, lines = {}, {}
    for lineno, key, raw in _split(text):
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", line=lineno, key=key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})",
                              line=lineno, key=key)
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(raw)
        except ValueError:
            kind = getattr(parser, "__name__", "value")
            raise ConfigError(f"{key} expects {kind}, got {raw!r}", line=lineno,
                              key=key) from None
        if isinstance(values[key], float) and not math.isfinite(values[key]):
            raise ConfigError(f"{key} must be finite, got {raw!r}", line=lineno, key=key)
        lines[key] = lineno

    missing = [k for k, (_, d) in SCHEMA.items() if d is _REQUIRED and k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}", key=missing[0])
    cfg = {k: values.get(k, d) for k, (_, d) in SCHEMA.items()}

    def build(keys, factory):
        try:
            return factory()
        except SlowDynError as exc:
            key = getattr(exc, "key", None)
            where = lines.get(key) if key else None
            if where is None:
                where = next((lines[k] for k in keys if k in lines), None)
            raise ConfigError(str(exc), line=where, key=key) from None

    grid = build(("nx", "ny", "L", "kz_max", "nz"), lambda: GridSpec(
        cfg["nx"], cfg["ny"], cfg["L"], cfg["kz_max"], cfg["nz"]))
    params = build(("viscous", "Re", "Pr", "Fr", "L"), lambda: PhysicalParams(
        cfg["L"], cfg["Fr"], cfg["viscous"], cfg["Re"], cfg["Pr"]))
    run = build(("t_end", "cfl", "dt_override", "diag_every", "snapshot_every", "workers"),
                lambda: RunConfig(cfg["t_end"], cfg["cfl"], cfg["dt_override"],
                                  cfg["diag_every"], cfg["snapshot_every"], cfg["workers"]))
    ic = ICSpec(**{k[3:]: cfg[k] for k in SCHEMA if k.startswith("ic.")})
    _validate_ic(ic, lines)
    for key in [k for k in SCHEMA if k.startswith("tol.")] + ["convergence.dt"]:
        if not cfg[key] > 0:
            raise ConfigError(f"{key} must be positive, got {cfg[key]!r}",
                              line=lines.get(key), key=key)
    tol = Tolerances(cfg["tol.equality"], cfg["tol.inequality"],
                     {2: cfg["tol.lp2"], 4: cfg["tol.lp4"], 8: cfg["tol.lp8"],
                      "inf": cfg["tol.lpinf"]})
    return SimulationConfig(grid, params, run, ic, cfg["output_dir"], tol, cfg["tol.mean"],
                            cfg["convergence.dt"])


def _validate_ic(ic, lines):
    def fail(key, msg):
        raise ConfigError(msg, line=lines.get(key), key=key)

    if ic.name not in GENERATORS:
        fail("ic.name", f"unknown generator {ic.name!r}; expected one of {', '.join(GENERATORS)}")
    if ic.scalars not in SCALAR_MODES:
        fail("ic.scalars", f"ic.scalars must be one of {', '.join(SCALAR_MODES)}, "
                           f"got {ic.scalars!r}")
    if ic.seed < 0:
        fail("ic.seed", f"ic.seed must be nonnegative, got {ic.seed}")
    if ic.slope < 0:
        fail("ic.slope", f"ic.slope must be nonnegative, got {ic.slope}")
    if ic.name == "from_checkpoint" and not ic.path:
        fail("ic.name", "from_checkpoint requires ic.path")


def _fmt(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config):
    """Render every key (defaults included) so that parsing gives back ``config``."""
    g, p, r, ic, tol = config.grid, config.params, config.run, config.ic, config.tolerances
    values = {
        "L": g.L, "Fr": float(p.Fr), "nx": g.nx, "ny": g.ny, "kz_max": g.kz_max, "nz": g.nz,
        "viscous": p.viscous, "Re": p.Re, "Pr": p.Pr,
        "t_end": float(r.t_end), "cfl": float(r.cfl), "dt_override": r.dt_override,
        "diag_every": r.diag_every, "snapshot_every": r.snapshot_every, "workers": r.workers,
        "output_dir": config.output_dir,
        "tol.equality": tol.equality, "tol.inequality": tol.inequality,
        "tol.lp2": tol.lp[2], "tol.lp4": tol.lp[4], "tol.lp8": tol.lp[8],
        "tol.lpinf": tol.lp["inf"], "tol.mean": config.mean_tolerance,
        "convergence.dt": config.convergence_dt,
    }
    for key in SCHEMA:
        if key.startswith("ic."):
            values[key] = getattr(ic, key[3:])
    return "".join(f"{key} = {_fmt(values[key])}\n" for key in SCHEMA)


def load_config(path):
    """Read and parse a configuration file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
