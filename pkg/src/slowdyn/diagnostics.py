"""Norms, a-priori bound checks and the continuous-dependence experiment.

All norms are integrals over the periodic box, not averages: the L2 norm of a
2D field is ``(int_{T^2} |f|^2)^{1/2} = L * (sum |c|^2)^{1/2}``. 3D density
norms integrate over T^3 using the ``nz`` reconstruction levels. Sup-norms
and L^p norms with p != 2 are collocation maxima and quadratures, hence lower
bounds / approximations of the continuous quantities.

Bound suite (checked at every record time t, constants from t = 0)::

    (a)  ||w||^2 + ||rho_0||^2 = const                           equality
    (b)  ||rho||_{L2(T^3)} <= ||rho(0)|| + K0 t,
         K0 = L^{1/2} / Fr * (||w(0)||^2 + ||rho_0(0)||^2)^{1/2}
    (c)  |w|_inf + |rho_0|_inf <= (same at 0) * exp(t / Fr)
    (d)  |grad w|^2 + |grad rho_0|^2 <= (same at 0) * exp(int 2 |grad u|_inf)
    (e)  |rho|_inf <= |rho(0)|_inf + (|w(0)|_inf + |rho_0(0)|_inf) exp(t / Fr)
    (f)  |grad w|_inf + |grad rho_0|_inf <= K0~ exp(int (|grad u|_inf + 1/Fr)),
         K0~ = 2 (|grad w(0)|_inf + |grad rho_0(0)|_inf)
    (g)  ||omega||_{L^p} = const, p in {2, 4, 8, inf}            equality
    (h)  ||f - mean f|| <= (L / 2 pi) ||grad f||  for f = w, rho_0

Entry names are ``a`` .. ``f``, ``g_p2``, ``g_p4``, ``g_p8``, ``g_pinf``,
``h_w`` and ``h_rho0``.

Time integrals use the trapezoid rule over the recorded samples. Equality
bounds report ``lhs`` as the relative deviation from the initial value and
``rhs = 0``; inequality bounds are satisfied when
``rhs - lhs >= -tol * max(|rhs|, tiny)``.
"""

import math
from dataclasses import dataclass, field, fields

import numpy as np
import scipy.fft

from . import spectral as sp
from .errors import InputError, NumericalBlowupError
from .model import ModelState
from .timestepper import cfl_dt, rk4_step

__all__ = [
    "DiagnosticsRecord",
    "RecordSink",
    "BoundEntry",
    "BoundReport",
    "Tolerances",
    "compute_record",
    "check_apriori_bounds",
    "mean_evolution_check",
    "modal_lq_conservation_check",
    "continuous_dependence_distance",
    "twin_experiment",
]

P_TRACKED = (2, 4, 8, "inf")
Q_MODAL = (2, 4, "inf")
_TINY = 1e-300


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Norms of one state. Per-mode tuples are indexed by k - 1."""

    t: float
    l2_w: float
    l2_rho0: float
    linf_w: float
    linf_rho0: float
    h1_w: float
    h1_rho0: float
    w1inf_w: float
    w1inf_rho0: float
    l2_rho_3d: float
    linf_rho_3d: float
    l2_omega: float
    l4_omega: float
    l8_omega: float
    linf_omega: float
    linf_grad_u: float
    mean_w: float
    mean_rho0: float
    l2_rho_k: tuple = ()
    l4_rho_k: tuple = ()
    linf_rho_k: tuple = ()

    def lp_omega(self, p):
        return getattr(self, f"l{p}_omega")

    def modal(self, q, k):
        return getattr(self, f"l{q}_rho_k")[k - 1]

    @property
    def kz_max(self):
        return len(self.l2_rho_k)

    def as_row(self):
        """Flat ``name -> float`` mapping with per-mode columns expanded."""
        row = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, tuple):
                stem = f.name[:-2]
                for k, v in enumerate(val, start=1):
                    row[f"{stem}_{k}"] = v
            else:
                row[f.name] = val
        return row

    @classmethod
    def columns(cls, kz_max):
        """Column names of :meth:`as_row` for a given truncation."""
        names = []
        for f in fields(cls):
            if f.name.endswith("_k"):
                names += [f"{f.name[:-2]}_{k}" for k in range(1, kz_max + 1)]
            else:
                names.append(f.name)
        return names


def _lp(values, p, area):
    mag = np.abs(values)
    if p == "inf":
        return float(mag.max())
    return float((area * np.mean(mag ** p)) ** (1.0 / p))


def _l2(coeffs, L):
    return float(L * np.sqrt(np.sum(np.abs(coeffs) ** 2)))


def compute_record(state, grid=None):
    """All norms of ``state`` at its time stamp."""
    grid = state.grid if grid is None else grid
    L, area = grid.L, grid.area
    K = grid.kz_max
    w_phys = sp.to_real(state.w, grid)
    r_phys = sp.to_real(state.rho[0], grid)
    om_phys = sp.to_real(state.omega, grid)

    def grad(c):
        gx, gy = sp.gradient_h(c, grid)
        h1 = float(area * np.sum(np.abs(gx) ** 2 + np.abs(gy) ** 2))
        mx = float(np.sqrt(sp.to_real(gx, grid) ** 2 + sp.to_real(gy, grid) ** 2).max())
        return h1, mx

    h1_w, w1_w = grad(state.w)
    h1_r, w1_r = grad(state.rho[0])

    u, v = state.velocity
    parts = [sp.gradient_h(u, grid), sp.gradient_h(v, grid)]
    grad_u = sum(sp.to_real(c, grid) ** 2 for pair in parts for c in pair)

    levels = sp.reconstruct_levels(state.rho, grid)
    l2_3d = float(np.sqrt(L ** 3 * np.mean(levels ** 2)))

    modes = sp.to_physical(state.rho[1:], grid) if K else np.zeros((0,) + grid.shape)
    return DiagnosticsRecord(
        t=float(state.t),
        l2_w=_l2(state.w, L),
        l2_rho0=_l2(state.rho[0], L),
        linf_w=float(np.abs(w_phys).max()),
        linf_rho0=float(np.abs(r_phys).max()),
        h1_w=h1_w,
        h1_rho0=h1_r,
        w1inf_w=w1_w,
        w1inf_rho0=w1_r,
        l2_rho_3d=l2_3d,
        linf_rho_3d=float(np.abs(levels).max()),
        l2_omega=_l2(state.omega, L),
        l4_omega=_lp(om_phys, 4, area),
        l8_omega=_lp(om_phys, 8, area),
        linf_omega=_lp(om_phys, "inf", area),
        linf_grad_u=float(np.sqrt(grad_u).max()),
        mean_w=float(state.w[0, 0].real),
        mean_rho0=float(state.rho[0][0, 0].real),
        l2_rho_k=tuple(_l2(c, L) for c in state.rho[1:]),
        l4_rho_k=tuple(_lp(m, 4, area) for m in modes),
        linf_rho_k=tuple(_lp(m, "inf", area) for m in modes),
    )


class RecordSink:
    """Integration sink turning every diagnostic state into a record."""

    def __init__(self, on_snapshot=None):
        self.records = []
        self.on_snapshot = on_snapshot

    def diagnostic(self, state, step):
        self.records.append(compute_record(state))

    def snapshot(self, state, step):
        if self.on_snapshot is not None:
            self.on_snapshot(state, step)


@dataclass(frozen=True)
class Tolerances:
    """Bound-check tolerances.

    ``lp`` gives the relative tolerance of the vorticity L^p equality (g) and
    of the per-mode L^q checks; only p = 2 is a quadratic invariant of the
    discrete system, the others carry collocation error.
    """

    equality: float = 1e-8
    inequality: float = 1e-6
    lp: dict = field(default_factory=lambda: {2: 1e-8, 4: 1e-4, 8: 1e-3, "inf": 1e-2})

    def for_p(self, p):
        return self.lp.get(p, self.equality)


@dataclass(frozen=True)
class BoundEntry:
    name: str
    t: float
    lhs: float
    rhs: float
    margin: float
    satisfied: bool


@dataclass
class BoundReport:
    """Every bound at every record time, plus the constants K0 and K0~."""

    K0: float
    K0_tilde: float
    rows: list

    @property
    def entries(self):
        return [e for row in self.rows for e in row.values()]

    @property
    def satisfied(self):
        return all(e.satisfied for e in self.entries)

    def failures(self):
        return [e for e in self.entries if not e.satisfied]

    def names(self):
        return list(self.rows[0]) if self.rows else []

    def worst(self):
        """Smallest margin per bound name over the run."""
        out = {}
        for e in self.entries:
            if e.name not in out or e.margin < out[e.name].margin:
                out[e.name] = e
        return out


def _check_history(history):
    if not history:
        raise InputError("history is empty")
    times = [r.t for r in history]
    if times[0] != 0.0:
        raise InputError(f"history must start at t = 0, starts at {times[0]!r}")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise InputError("history times are not strictly increasing")
    return np.array(times)


def _trapezoid_cumulative(times, values):
    out = np.zeros(len(times))
    if len(times) > 1:
        out[1:] = np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(times))
    return out


def _rel_dev(x, x0):
    return abs(x - x0) / x0 if x0 > 0 else abs(x - x0)


def _equality(name, t, x, x0, tol):
    dev = _rel_dev(x, x0)
    return BoundEntry(name, t, dev, 0.0, 0.0 - dev, dev <= tol)


def _inequality(name, t, lhs, rhs, tol):
    margin = rhs - lhs
    return BoundEntry(name, t, lhs, rhs, margin, margin >= -tol * max(abs(rhs), _TINY))


def check_apriori_bounds(history, params, tolerance=None):
    """Evaluate bounds (a)-(h) on a diagnostic history.

    Raises
    ------
    InputError
        If the history is empty, unordered or does not start at t = 0.
    """
    tol = Tolerances() if tolerance is None else tolerance
    times = _check_history(history)
    r0 = history[0]
    L, Fr = params.L, params.Fr
    osc0 = r0.l2_w ** 2 + r0.l2_rho0 ** 2
    K0 = math.sqrt(L) / Fr * math.sqrt(osc0)
    K0_tilde = 2.0 * (r0.w1inf_w + r0.w1inf_rho0)
    gu = np.array([r.linf_grad_u for r in history])
    int_d = _trapezoid_cumulative(times, 2.0 * gu)
    int_f = _trapezoid_cumulative(times, gu + 1.0 / Fr)
    sup0 = r0.linf_w + r0.linf_rho0
    h1_0 = r0.h1_w + r0.h1_rho0
    poincare = L / (2 * np.pi)

    rows = []
    for i, r in enumerate(history):
        t = r.t
        row = {}
        row["a"] = _equality("a", t, r.l2_w ** 2 + r.l2_rho0 ** 2, osc0, tol.equality)
        row["b"] = _inequality("b", t, r.l2_rho_3d, r0.l2_rho_3d + K0 * t, tol.inequality)
        growth = math.exp(t / Fr)
        row["c"] = _inequality("c", t, r.linf_w + r.linf_rho0, sup0 * growth, tol.inequality)
        row["d"] = _inequality("d", t, r.h1_w + r.h1_rho0, h1_0 * math.exp(int_d[i]),
                               tol.inequality)
        row["e"] = _inequality("e", t, r.linf_rho_3d, r0.linf_rho_3d + sup0 * growth,
                               tol.inequality)
        row["f"] = _inequality("f", t, r.w1inf_w + r.w1inf_rho0,
                               K0_tilde * math.exp(int_f[i]), tol.inequality)
        for p in P_TRACKED:
            name = f"g_p{p}"
            row[name] = _equality(name, t, r.lp_omega(p), r0.lp_omega(p), tol.for_p(p))
        for label, l2, mean, h1 in (("w", r.l2_w, r.mean_w, r.h1_w),
                                    ("rho0", r.l2_rho0, r.mean_rho0, r.h1_rho0)):
            name = f"h_{label}"
            fluct = math.sqrt(max(l2 ** 2 - (L * mean) ** 2, 0.0))
            row[name] = _inequality(name, t, fluct, poincare * math.sqrt(h1), tol.inequality)
        rows.append(row)
    return BoundReport(K0, K0_tilde, rows)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a pass/fail consistency check."""

    satisfied: bool
    max_error: float
    detail: dict


def mean_evolution_check(history, params, tolerance=1e-10):
    """Compare horizontal means of w and rho_0 with the exact rotation.

    ``m_w(t) = m_w(0) cos(t/Fr) - m_rho(0) sin(t/Fr)`` and
    ``m_rho(t) = m_rho(0) cos(t/Fr) + m_w(0) sin(t/Fr)``; for zero initial
    means this says both stay zero.
    """
    if not history:
        raise InputError("history is empty")
    mw0, mr0 = history[0].mean_w, history[0].mean_rho0
    errors = []
    for r in history:
        c, s = math.cos(r.t / params.Fr), math.sin(r.t / params.Fr)
        errors.append(max(abs(r.mean_w - (mw0 * c - mr0 * s)),
                          abs(r.mean_rho0 - (mr0 * c + mw0 * s))))
    worst = max(errors)
    return CheckResult(worst <= tolerance, worst,
                       {"zero_mean": mw0 == 0.0 and mr0 == 0.0, "errors": errors})


def modal_lq_conservation_check(history, q_list=Q_MODAL, tolerance=None):
    """Relative drift of ||rho_k||_{L^q} for every k >= 1 and q in ``q_list``.

    ``tolerance`` is a float or a ``q -> float`` mapping; the default is the
    :class:`Tolerances` ``lp`` table.
    """
    if not history:
        raise InputError("history is empty")
    if tolerance is None:
        tolerance = Tolerances().lp
    r0 = history[0]
    detail = {}
    ok = True
    worst = 0.0
    for q in q_list:
        tol = tolerance.get(q, Tolerances().equality) if isinstance(tolerance, dict) \
            else tolerance
        for k in range(1, r0.kz_max + 1):
            drift = max(_rel_dev(r.modal(q, k), r0.modal(q, k)) for r in history)
            detail[(k, q)] = drift
            worst = max(worst, drift)
            ok &= drift <= tol
    return CheckResult(bool(ok), worst, detail)


def continuous_dependence_distance(s1, s2):
    """D = ||u1-u2||^2 + ||w1-w2||^2 + ||<rho1-rho2>_z||^2 + ||grad xi~||^2.

    Raises
    ------
    InputError
        If the states live on different grids or truncations.
    PreconditionError
        If the density difference has nonzero total mean.
    """
    if s1.grid != s2.grid:
        raise InputError("states are on different grids")
    grid = s1.grid
    diff = s1.data - s2.data
    u, v = sp.biot_savart(diff[0], grid)
    area = grid.area
    du = area * float(np.sum(np.abs(u) ** 2 + np.abs(v) ** 2))
    dw = area * float(np.sum(np.abs(diff[1]) ** 2))
    dr = area * float(np.sum(np.abs(diff[2]) ** 2))
    return du + dw + dr + sp.invert_laplacian_3d_gradient(diff[2:], grid)


@dataclass
class TwinResult:
    """Separation curve of a twin run and its exponential fit.

    ``slope`` and ``intercept`` fit log D(t) by least squares; ``excess`` is
    the largest amount by which log D rises above that line, and
    ``growth_margin`` the largest of log D(t) - log D(0) - slope * t.
    """

    times: np.ndarray
    D: np.ndarray
    slope: float
    intercept: float
    excess: float
    growth_margin: float
    final: tuple

    @property
    def D0(self):
        return float(self.D[0])

    def bounded(self, slack=0.5):
        return self.excess <= slack


def _fit(times, D):
    pos = D > 0
    if pos.sum() < 2:
        return 0.0, (math.log(D[0]) if D[0] > 0 else -math.inf), 0.0, 0.0
    t, logd = times[pos], np.log(D[pos])
    slope, intercept = np.polyfit(t, logd, 1)
    excess = float(np.max(logd - (intercept + slope * t)))
    growth = float(np.max(logd - logd[0] - slope * (t - t[0])))
    return float(slope), float(intercept), excess, growth


def twin_experiment(initial, params, run, perturbation):
    """Integrate ``initial`` and ``initial + perturbation`` in lockstep.

    Both twins take the same step, the smaller of their CFL steps (or
    ``run.dt_override``), so D is sampled at identical times: t = 0, every
    ``run.diag_every`` steps and ``run.t_end``.

    Raises
    ------
    NumericalBlowupError
        With ``twin`` set to 1 or 2 naming the run that failed.
    """
    a = initial.validate()
    b = ModelState(initial.grid, initial.t, initial.data + np.asarray(perturbation)).validate()
    times, D = [a.t], [continuous_dependence_distance(a, b)]
    t_end = float(run.t_end)
    step = 0
    with scipy.fft.set_workers(run.workers):
        while a.t < t_end:
            if run.dt_override is not None:
                dt = run.dt_override
            else:
                dt = min(cfl_dt(a, params, run.cfl), cfl_dt(b, params, run.cfl))
            remaining = t_end - a.t
            last = dt * (1 + 1e-9) >= remaining
            dt = remaining if last else dt
            pair = []
            for twin, s in ((1, a), (2, b)):
                try:
                    s = rk4_step(s, dt, params)
                except NumericalBlowupError as exc:
                    raise NumericalBlowupError(exc.reason, t=exc.t, twin=twin) from exc
                pair.append(ModelState(s.grid, t_end, s.data) if last else s)
            a, b = pair
            step += 1
            if last or step % run.diag_every == 0:
                times.append(a.t)
                D.append(continuous_dependence_distance(a, b))
    times, D = np.array(times), np.array(D)
    slope, intercept, excess, growth = _fit(times, D)
    return TwinResult(times, D, slope, intercept, excess, growth, (a, b))
