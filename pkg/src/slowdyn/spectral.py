"""Fourier machinery on the doubly periodic box [0, L)^2.

Normalization
-------------
Coefficients are the amplitudes of the trigonometric interpolant::

    f(x_i, y_j) = sum_{m,n} c(m, n) exp(2 pi i (m x_i + n y_j) / L)

so ``c = fft2(values) / (nx * ny)``. A constant field ``a`` has ``c(0, 0) = a``
and ``cos(2 pi x / L)`` has ``c(+-1, 0) = 1/2``. Parseval reads
``mean(|f|^2) = sum |c|^2`` and integrals over the box pick up a factor L^2.

Arrays use numpy FFT ordering along the last two axes (axis -2 is x, axis -1
is y), so integer wavenumbers span ``[-nx/2, nx/2)`` and ``[-ny/2, ny/2)``.
Leading axes are batch axes; a vertical-mode stack is a complex array of shape
``(kz_max + 1, nx, ny)`` holding rho_0 .. rho_K.

Vorticity convention: ``omega = dv/dx - du/dy`` and ``u_h = (-dpsi/dy,
dpsi/dx)`` with ``laplacian(psi) = omega``.

Nyquist modes (``m = -nx/2`` or ``n = -ny/2``) are zeroed by every first-order
derivative operator. Transforms go through :mod:`scipy.fft`, so the number of
threads can be set with :func:`scipy.fft.set_workers`; each 2D transform in a
batch is computed independently of the others.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import ConfigError, PreconditionError

__all__ = [
    "GridSpec",
    "to_spectral",
    "to_real",
    "to_physical",
    "truncate",
    "gradient_h",
    "laplacian_h",
    "invert_laplacian_h",
    "curl_h",
    "divergence_h",
    "biot_savart",
    "dealiased_product",
    "invert_laplacian_3d_gradient",
    "z_average",
    "reconstruct_vertical",
    "reconstruct_levels",
    "hermitian_defect",
]

MEAN_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Horizontal collocation grid plus vertical mode truncation.

    Parameters
    ----------
    nx, ny : int
        Collocation points in x and y; even and at least 8.
    L : float
        Box period, shared by all three directions.
    kz_max : int
        Highest retained vertical wavenumber K.
    nz : int, optional
        Number of vertical levels used when rebuilding the 3D density. Must be
        at least ``2 * kz_max + 1``; defaults to ``4 * kz_max + 1``.
    """

    nx: int
    ny: int
    L: float
    kz_max: int = 0
    nz: int = field(default=None)

    def __post_init__(self):
        for name in ("nx", "ny"):
            val = getattr(self, name)
            if isinstance(val, bool) or not isinstance(val, (int, np.integer)):
                raise ConfigError(f"{name} must be an integer, got {val!r}", key=name)
            if val < 8 or val % 2:
                raise ConfigError(f"{name} must be even and >= 8, got {val}", key=name)
        if not (np.isfinite(self.L) and self.L > 0):
            raise ConfigError(f"L must be positive, got {self.L!r}", key="L")
        if isinstance(self.kz_max, bool) or not isinstance(self.kz_max, (int, np.integer)) \
                or self.kz_max < 0:
            raise ConfigError(f"kz_max must be a nonnegative integer, got {self.kz_max!r}",
                              key="kz_max")
        if self.nz is None:
            object.__setattr__(self, "nz", 4 * int(self.kz_max) + 1)
        if self.nz < 2 * self.kz_max + 1:
            raise ConfigError(f"nz={self.nz} cannot resolve kz_max={self.kz_max} "
                              f"(need nz >= {2 * self.kz_max + 1})", key="nz")
        object.__setattr__(self, "L", float(self.L))

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def dx(self):
        return self.L / self.nx

    @property
    def dy(self):
        return self.L / self.ny

    @property
    def area(self):
        return self.L * self.L

    @cached_property
    def x(self):
        return np.arange(self.nx) * (self.L / self.nx)

    @cached_property
    def y(self):
        return np.arange(self.ny) * (self.L / self.ny)

    @cached_property
    def z(self):
        return np.arange(self.nz) * (self.L / self.nz)

    @cached_property
    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def m(self):
        """Integer x-wavenumbers, shape (nx, 1)."""
        return np.rint(sfft.fftfreq(self.nx, 1.0 / self.nx)).astype(np.int64)[:, None]

    @cached_property
    def n(self):
        """Integer y-wavenumbers, shape (1, ny)."""
        return np.rint(sfft.fftfreq(self.ny, 1.0 / self.ny)).astype(np.int64)[None, :]

    @cached_property
    def kx(self):
        return (2.0 * np.pi / self.L) * self.m

    @cached_property
    def ky(self):
        return (2.0 * np.pi / self.L) * self.n

    @cached_property
    def k2(self):
        """|k|^2 on the full (nx, ny) array."""
        return self.kx ** 2 + self.ky ** 2

    @cached_property
    def nyquist(self):
        return (self.m == -self.nx // 2) | (self.n == -self.ny // 2)

    @cached_property
    def ikx(self):
        out = 1j * np.broadcast_to(self.kx, self.shape)
        return np.where(self.nyquist, 0.0, out)

    @cached_property
    def iky(self):
        out = 1j * np.broadcast_to(self.ky, self.shape)
        return np.where(self.nyquist, 0.0, out)

    @cached_property
    def inv_k2(self):
        with np.errstate(divide="ignore"):
            out = 1.0 / self.k2
        out[0, 0] = 0.0
        return out

    @cached_property
    def dealias(self):
        """True on modes kept by the 2/3 rule: ``|m| <= nx/3`` and ``|n| <= ny/3``."""
        return (3 * np.abs(self.m) <= self.nx) & (3 * np.abs(self.n) <= self.ny)

    @cached_property
    def kz(self):
        """Physical vertical wavenumbers ``2 pi k / L`` for k = 0..kz_max."""
        return (2.0 * np.pi / self.L) * np.arange(self.kz_max + 1)

    def check(self, arr, what="field"):
        if np.shape(arr)[-2:] != self.shape:
            raise ConfigError(f"{what} has trailing shape {np.shape(arr)[-2:]}, "
                              f"grid is {self.shape}")
        return arr


def to_spectral(values, grid):
    """Forward transform of physical values (real or complex) to amplitudes."""
    grid.check(values)
    return sfft.fft2(values, axes=(-2, -1), norm="forward")


def to_physical(coeffs, grid):
    """Inverse transform returning complex values (use for rho_k, k >= 1)."""
    grid.check(coeffs)
    return sfft.ifft2(coeffs, axes=(-2, -1), norm="forward")


def to_real(coeffs, grid):
    """Inverse transform of a Hermitian coefficient array; returns real values."""
    return to_physical(coeffs, grid).real


def hermitian_defect(coeffs):
    """Max over modes of |c(-m,-n) - conj(c(m,n))|, relative to max |c|."""
    c = np.asarray(coeffs)
    flipped = np.roll(np.flip(c, axis=(-2, -1)), shift=1, axis=(-2, -1))
    scale = np.abs(c).max(initial=0.0)
    if scale == 0.0:
        return 0.0
    return float(np.abs(flipped - np.conj(c)).max() / scale)


def truncate(coeffs, grid):
    """Zero every mode outside the 2/3 band."""
    return np.where(grid.dealias, coeffs, 0.0)


def gradient_h(coeffs, grid):
    grid.check(coeffs)
    return grid.ikx * coeffs, grid.iky * coeffs


def laplacian_h(coeffs, grid):
    grid.check(coeffs)
    return -grid.k2 * coeffs


def divergence_h(u, v, grid):
    return grid.ikx * u + grid.iky * v


def curl_h(u, v, grid):
    return grid.ikx * v - grid.iky * u


def _require_mean_zero(coeffs, what):
    c00 = np.asarray(coeffs)[..., 0, 0]
    scale = max(1.0, float(np.abs(coeffs).max(initial=0.0)))
    if np.any(np.abs(c00) > MEAN_TOL * scale):
        raise PreconditionError(f"{what} must have zero mean, got mean {c00!r}")


def invert_laplacian_h(coeffs, grid):
    """Solve ``laplacian(out) = coeffs`` with ``mean(out) = 0``.

    Raises
    ------
    PreconditionError
        If the source has a mean larger than 1e-10 (relative to max(1, max|c|)).
    """
    grid.check(coeffs)
    _require_mean_zero(coeffs, "Poisson source")
    return -grid.inv_k2 * coeffs


def biot_savart(omega, grid):
    """Mean-zero, divergence-free velocity with curl ``omega``.

    Returns the spectral components ``(u, v)``.
    """
    grid.check(omega)
    _require_mean_zero(omega, "vorticity")
    psi = -grid.inv_k2 * omega
    return -grid.iky * psi, grid.ikx * psi


def dealiased_product(f, g, grid):
    """Spectral coefficients of the 2/3-truncated product ``f * g``.

    Both inputs are truncated, multiplied on the collocation grid, transformed
    back and truncated again. The result has no aliasing error: every retained
    mode equals the corresponding mode of the exact product of the truncated
    inputs.
    """
    grid.check(f)
    grid.check(g)
    fp = to_physical(truncate(f, grid), grid)
    gp = to_physical(truncate(g, grid), grid)
    return truncate(to_spectral(fp * gp, grid), grid)


def invert_laplacian_3d_gradient(stack, grid):
    """Squared L2(T^3) norm of ``grad xi`` where ``-laplacian(xi) = rho``.

    ``stack`` holds rho_0..rho_K with the closure rho_{-k} = conj(rho_k); the
    negative-k half of the sum is accounted for by doubling k >= 1.
    """
    stack = np.asarray(stack)
    grid.check(stack, "vertical mode stack")
    if stack.shape[0] != grid.kz_max + 1:
        raise ConfigError(f"stack has {stack.shape[0]} modes, expected {grid.kz_max + 1}")
    _require_mean_zero(stack[0], "density (mode k=0)")
    kz2 = grid.kz[:, None, None] ** 2
    K2 = grid.k2[None, :, :] + kz2
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.abs(stack) ** 2 / K2
    terms[0, 0, 0] = 0.0
    weights = np.full(grid.kz_max + 1, 2.0)
    weights[0] = 1.0
    return float(grid.L ** 3 * np.sum(weights[:, None, None] * terms))


def z_average(stack):
    """The vertical average <rho>_z, i.e. the k = 0 layer."""
    return np.asarray(stack)[0]


def reconstruct_vertical(stack, z, grid):
    """Real density on the horizontal grid at height ``z`` in [0, L)."""
    if not (0.0 <= z < grid.L):
        raise PreconditionError(f"z={z!r} outside [0, {grid.L})")
    phys = to_physical(np.asarray(stack), grid)
    out = phys[0].real.copy()
    if len(phys) > 1:
        phase = np.exp(1j * grid.kz[1:] * z)
        out += 2.0 * np.einsum("k,kij->ij", phase, phys[1:]).real
    return out


def reconstruct_levels(stack, grid):
    """Real density on the full ``(nz, nx, ny)`` collocation grid."""
    phys = to_physical(np.asarray(stack), grid)
    out = np.broadcast_to(phys[0].real, (grid.nz,) + grid.shape).copy()
    if len(phys) > 1:
        phase = np.exp(1j * np.outer(grid.z, grid.kz[1:]))
        out += 2.0 * np.einsum("zk,kij->zij", phase, phys[1:]).real
    return out
