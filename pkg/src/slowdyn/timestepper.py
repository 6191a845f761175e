"""Classical RK4 time integration with CFL step selection.

The step is ``dt = cfl * min(dx, dy) / max(max|u_h|, L / Fr)``. The ``L / Fr``
floor keeps the w / rho_0 rotation (angular frequency 1/Fr) resolved even
when the flow is quiescent, where the formula reduces to
``cfl * min(dx, dy) * Fr / L``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft

from . import spectral as sp
from .errors import ConfigError, NumericalBlowupError, StateError
from .model import ModelState, tendency

__all__ = [
    "RunConfig",
    "StateSink",
    "cfl_dt",
    "rk4_step",
    "integrate",
    "measure_order",
]

QUIESCENT = 1e-14
# a final step shorter than this fraction of dt is merged into the previous one
_MERGE = 1e-9


@dataclass(frozen=True)
class RunConfig:
    """Integration controls.

    ``t_end = 0`` is accepted and yields a run with no steps. ``workers`` is
    the thread count handed to :func:`scipy.fft.set_workers`; results do not
    depend on it.
    """

    t_end: float
    cfl: float = 0.5
    dt_override: float = None
    diag_every: int = 10
    snapshot_every: int = None
    workers: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.t_end) and self.t_end >= 0):
            raise ConfigError(f"t_end must be nonnegative, got {self.t_end!r}", key="t_end")
        if not (0 < self.cfl <= 1):
            raise ConfigError(f"cfl must lie in (0, 1], got {self.cfl!r}", key="cfl")
        if self.dt_override is not None and not (np.isfinite(self.dt_override)
                                                 and self.dt_override > 0):
            raise ConfigError(f"dt_override must be positive, got {self.dt_override!r}",
                              key="dt_override")
        for key in ("diag_every", "snapshot_every", "workers"):
            val = getattr(self, key)
            if val is None and key == "snapshot_every":
                continue
            if isinstance(val, bool) or not isinstance(val, (int, np.integer)) or val < 1:
                raise ConfigError(f"{key} must be a positive integer, got {val!r}", key=key)


class StateSink:
    """Minimal sink that keeps every emitted state.

    Any object with ``diagnostic(state, step)`` and ``snapshot(state, step)``
    methods can be passed to :func:`integrate`.
    """

    def __init__(self):
        self.diagnostics = []
        self.snapshots = []

    def diagnostic(self, state, step):
        self.diagnostics.append(state)

    def snapshot(self, state, step):
        self.snapshots.append(state)


def max_speed(state):
    """Largest |u_h| over the collocation grid."""
    u, v = state.velocity
    grid = state.grid
    return float(np.sqrt(sp.to_real(u, grid) ** 2 + sp.to_real(v, grid) ** 2).max())


def cfl_dt(state, params, cfl=0.5):
    """Advective step with the oscillator floor described in the module docs."""
    grid = state.grid
    h = min(grid.dx, grid.dy)
    umax = max_speed(state)
    if umax < QUIESCENT:
        return cfl * h * params.Fr / params.L
    return cfl * h / max(umax, params.L / params.Fr)


def _stage(base, k, a, t, grid):
    with np.errstate(over="ignore", invalid="ignore"):
        data = base.data + a * k
    if not np.isfinite(data).all():
        raise NumericalBlowupError("non-finite Runge-Kutta stage", t=t)
    return ModelState(grid, t, data)


def rk4_step(state, dt, params, rhs=tendency):
    """One classical fourth-order Runge-Kutta step.

    ``rhs(state, params)`` must return an object with a ``data`` array laid
    out like ``state.data``; it defaults to the model tendency.

    Raises
    ------
    NumericalBlowupError
        If a stage or the result contains non-finite values.
    """
    if not (dt > 0):
        raise ConfigError(f"dt must be positive, got {dt!r}")
    grid, t = state.grid, state.t
    k1 = rhs(state, params).data
    k2 = rhs(_stage(state, k1, dt / 2, t + dt / 2, grid), params).data
    k3 = rhs(_stage(state, k2, dt / 2, t + dt / 2, grid), params).data
    k4 = rhs(_stage(state, k3, dt, t + dt, grid), params).data
    with np.errstate(over="ignore", invalid="ignore"):
        new = state.data + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.isfinite(new).all():
        raise NumericalBlowupError("non-finite state after step", t=t + dt)
    out = ModelState(grid, t + dt, new)
    try:
        return out.validate()
    except StateError as exc:
        raise NumericalBlowupError(f"step produced an invalid state: {exc}", t=t + dt) from exc


def integrate(initial, params, run, sink=None, rhs=tendency):
    """Advance ``initial`` to ``run.t_end``.

    The sink receives ``diagnostic`` calls at t = 0, every ``diag_every``
    steps and at the final time (once, even if it falls on the cadence), and
    ``snapshot`` calls every ``snapshot_every`` steps. The last step is
    shortened to land exactly on ``t_end``.
    """
    initial.validate()
    state = initial
    t_end = float(run.t_end)
    step = 0
    with scipy.fft.set_workers(run.workers):
        if sink is not None:
            sink.diagnostic(state, step)
        while state.t < t_end:
            dt = run.dt_override if run.dt_override is not None \
                else cfl_dt(state, params, run.cfl)
            remaining = t_end - state.t
            last = dt * (1 + _MERGE) >= remaining
            state = rk4_step(state, remaining if last else dt, params, rhs)
            step += 1
            if last:
                state = ModelState(state.grid, t_end, state.data)
            if sink is not None:
                if last or step % run.diag_every == 0:
                    sink.diagnostic(state, step)
                if run.snapshot_every and step % run.snapshot_every == 0:
                    sink.snapshot(state, step)
    return state


def measure_order(initial, params, t_end, dts, exact=None):
    """Observed temporal order of accuracy from fixed-step runs.

    With ``exact`` (the reference final data array) the errors are max-norm
    distances to it and the order is the least-squares slope of log(error)
    against log(dt). Without it, errors are differences between successive
    refinements, and ``dts`` must be a halving sequence.

    Returns
    -------
    dict
        ``dts``, ``errors`` and ``order``.
    """
    dts = [float(d) for d in dts]
    finals = [integrate(initial, params, RunConfig(t_end, dt_override=d)).data for d in dts]
    if exact is not None:
        errors = [float(np.abs(f - exact).max()) for f in finals]
        x = np.log(dts)
    else:
        errors = [float(np.abs(a - b).max()) for a, b in zip(finals, finals[1:])]
        x = np.log(dts[:-1])
    if min(errors) <= 0:
        return {"dts": dts, "errors": errors, "order": float("inf")}
    order = float(np.polyfit(x, np.log(errors), 1)[0])
    return {"dts": dts, "errors": errors, "order": order}
