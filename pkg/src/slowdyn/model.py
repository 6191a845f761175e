"""State and right-hand side of the vorticity / vertical-Fourier system.

Evolved unknowns, all stored as spectral coefficients on one grid:

* ``omega``: horizontal vorticity (real field, zero mean),
* ``w``: vertical velocity, independent of z (real field),
* ``rho[k]``, k = 0..K: vertical Fourier modes of the density, with
  ``rho[0]`` the vertical average <rho>_z (real) and ``rho[k]`` complex for
  k >= 1. Negative k follow from rho_{-k} = conj(rho_k).

Equations (inviscid)::

    d omega/dt = -u.grad(omega)
    d w/dt     = -u.grad(w)     - rho_0 / Fr
    d rho_0/dt = -u.grad(rho_0) + w / Fr
    d rho_k/dt = -u.grad(rho_k) - i (2 pi k / L) w rho_k

with ``u = biot_savart(omega)``. The vertical coupling uses the physical
wavenumber 2 pi k / L that the chain rule gives for the mode exp(2 pi i k z / L);
for L = 2 pi it reduces to the bare integer k.

With ``viscous=True`` the terms ``Lap_h omega / Re``, ``Lap_h w / Re``,
``Lap_h rho_0 / (Re Pr)`` and ``(Lap_h - (2 pi k/L)^2) rho_k / (Re Pr)`` are
added explicitly.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import spectral as sp
from .errors import ConfigError, NumericalBlowupError, StateError

__all__ = [
    "PhysicalParams",
    "ModelState",
    "StateTendency",
    "velocity",
    "tendency",
]

HERMITIAN_TOL = 1e-10
OMEGA, W, RHO0 = 0, 1, 2


@dataclass(frozen=True)
class PhysicalParams:
    """Model constants. ``Re`` and ``Pr`` are required iff ``viscous``."""

    L: float
    Fr: float
    viscous: bool = False
    Re: float = None
    Pr: float = None

    def __post_init__(self):
        if not (np.isfinite(self.L) and self.L > 0):
            raise ConfigError(f"L must be positive, got {self.L!r}", key="L")
        if not (np.isfinite(self.Fr) and self.Fr > 0):
            raise ConfigError(f"Fr must be positive, got {self.Fr!r}", key="Fr")
        if self.viscous:
            for name in ("Re", "Pr"):
                val = getattr(self, name)
                if val is None or not (np.isfinite(val) and val > 0):
                    raise ConfigError(f"{name} must be positive when viscous, got {val!r}",
                                      key=name)


def _readonly(arr):
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.flags.writeable = False
    return arr


class _Stacked:
    """Shared views into a ``(K + 3, nx, ny)`` array ``[omega, w, rho_0..rho_K]``."""

    @property
    def omega(self):
        return self.data[OMEGA]

    @property
    def w(self):
        return self.data[W]

    @property
    def rho(self):
        return self.data[RHO0:]


@dataclass(frozen=True, eq=False)
class ModelState(_Stacked):
    """Time stamp plus every evolved field, packed in one immutable array."""

    grid: sp.GridSpec
    t: float
    data: np.ndarray

    def __post_init__(self):
        data = _readonly(self.data)
        expected = (self.grid.kz_max + 3,) + self.grid.shape
        if data.shape != expected:
            raise StateError(f"state array has shape {data.shape}, expected {expected}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def from_fields(cls, grid, omega, w, rho, t=0.0):
        rho = np.asarray(rho)
        if rho.ndim == 2:
            rho = rho[None]
        if rho.shape[0] != grid.kz_max + 1:
            raise StateError(f"rho stack has {rho.shape[0]} modes, grid expects "
                             f"{grid.kz_max + 1}")
        data = np.concatenate([np.asarray(omega)[None], np.asarray(w)[None], rho])
        return cls(grid, t, data)

    @classmethod
    def zeros(cls, grid, t=0.0):
        return cls(grid, t, np.zeros((grid.kz_max + 3,) + grid.shape, complex))

    def evolve(self, t, data):
        """New state on the same grid."""
        return ModelState(self.grid, t, data)

    @cached_property
    def velocity(self):
        return sp.biot_savart(self.omega, self.grid)

    def validate(self):
        """Raise :class:`StateError` unless every invariant holds."""
        if not np.isfinite(self.data).all():
            raise StateError(f"non-finite coefficients at t={self.t!r}")
        scale = max(1.0, float(np.abs(self.omega).max()))
        if abs(self.omega[0, 0]) > sp.MEAN_TOL * scale:
            raise StateError(f"vorticity mean {self.omega[0, 0]!r} is not zero")
        for name, field in (("omega", self.omega), ("w", self.w), ("rho_0", self.rho[0])):
            defect = sp.hermitian_defect(field)
            if defect > HERMITIAN_TOL:
                raise StateError(f"{name} is not a real field (Hermitian defect {defect:.3e})")
        return self


@dataclass(frozen=True, eq=False)
class StateTendency(_Stacked):
    """Time derivatives of the fields of a :class:`ModelState` (same layout)."""

    data: np.ndarray


def velocity(state):
    """Spectral ``(u, v)`` of the state's vorticity; computed once per state."""
    return state.velocity


def _check_params(state, params):
    if abs(params.L - state.grid.L) > 1e-12 * state.grid.L:
        raise ConfigError(f"params.L={params.L} does not match grid L={state.grid.L}")


def tendency(state, params):
    """Right-hand side of the system at ``state``.

    Advection terms are evaluated in convective form with 2/3-dealiased
    products; their (0, 0) modes are set to zero (exact for divergence-free
    u), so the horizontal means of w and rho_0 obey the pure rotation
    ``d m_w/dt = -m_rho/Fr``, ``d m_rho/dt = m_w/Fr``.

    The per-mode rho_k work is done as batched transforms over the stack;
    each mode's result depends only on its own input slice.

    Raises
    ------
    StateError
        If ``state`` violates a :class:`ModelState` invariant.
    NumericalBlowupError
        If any output coefficient is not finite.
    """
    _check_params(state, params)
    state.validate()
    with np.errstate(over="ignore", invalid="ignore"):
        out = _rhs(state, params)
    if not np.isfinite(out).all():
        raise NumericalBlowupError("non-finite tendency", t=state.t)
    return StateTendency(out)


def _rhs(state, params):
    grid = state.grid
    K = grid.kz_max
    F = sp.truncate(state.data, grid)
    u, v = state.velocity
    up = sp.to_real(sp.truncate(u, grid), grid)
    vp = sp.to_real(sp.truncate(v, grid), grid)

    fx, fy = sp.gradient_h(F, grid)
    adv = up * sp.to_physical(fx, grid) + vp * sp.to_physical(fy, grid)
    adv[:RHO0 + 1] = adv[:RHO0 + 1].real
    adv_hat = sp.truncate(sp.to_spectral(adv, grid), grid)
    adv_hat[:, 0, 0] = 0.0

    out = -adv_hat
    out[W] -= state.rho[0] / params.Fr
    out[RHO0] += state.w / params.Fr

    if K > 0:
        wp = sp.to_real(F[W], grid)
        rho_k = sp.to_physical(F[RHO0 + 1:], grid)
        coupling = sp.truncate(sp.to_spectral(wp * rho_k, grid), grid)
        out[RHO0 + 1:] -= 1j * grid.kz[1:, None, None] * coupling

    if params.viscous:
        lap = -grid.k2
        out[OMEGA] += lap * state.omega / params.Re
        out[W] += lap * state.w / params.Re
        diff = lap[None] - (grid.kz ** 2)[:, None, None]
        out[RHO0:] += diff * state.rho / (params.Re * params.Pr)
    return out
