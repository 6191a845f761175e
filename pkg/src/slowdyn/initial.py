"""Initial-condition generators.

Random fields use numpy's PCG64 bit generator seeded with the configured
integer, so fixtures are reproducible across platforms. Every generator
returns a state whose vorticity has zero mean.

Generators
----------
taylor_green
    ``omega = A cos(2 pi x/L) cos(2 pi y/L)``. ``w`` and ``rho`` follow
    ``ic.scalars``: ``random_spectrum`` (as below), ``oscillator`` (constant
    ``w = w0``, ``rho_0 = rho0``) or ``zero``.
single_mode
    One Fourier mode ``theta = 2 pi (m x + n y) / L`` per field:
    ``omega = A cos(theta)``, ``w = B cos(theta)``, ``rho_0 = B sin(theta)``
    and ``rho_k = B exp(i theta) / (k + 1)`` with ``B = scalar_amplitude``.
random_spectrum
    Every field is a sum of modes with modulus ``amp * (1 + |k|)^(-s)``
    (``|k| = sqrt(m^2 + n^2)``) and seeded phases, restricted to the 2/3
    band, mean-zero. ``amp`` is ``A`` for omega and ``scalar_amplitude`` for
    w and rho. omega, w and rho_0 are real (Hermitian phases).
oscillator_only
    ``u = 0``; ``w = w0`` and ``rho_0 = rho0`` are constants.
from_checkpoint
    Loads ``ic.path``; the stored grid must match the configured one.
"""

import numpy as np

from . import spectral as sp
from .checkpoint import read_checkpoint
from .errors import ConfigError
from .model import ModelState

__all__ = ["build_initial_state", "random_fields", "random_perturbation", "make_rng"]


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def _flip(c):
    """c(-m, -n) laid out in FFT order."""
    return np.roll(np.flip(c, axis=(-2, -1)), shift=1, axis=(-2, -1))


def random_fields(grid, count, amplitude, slope, rng, real):
    """``count`` random spectral fields with power-law moduli.

    ``real`` is a length-``count`` sequence of flags; real fields get
    antisymmetric phases so their coefficients are Hermitian.
    """
    kmag = np.sqrt(grid.m ** 2.0 + grid.n ** 2.0)
    modulus = amplitude * (1.0 + kmag) ** (-slope) * grid.dealias
    modulus[0, 0] = 0.0
    phases = rng.uniform(0.0, 2 * np.pi, size=(count,) + grid.shape)
    out = np.empty((count,) + grid.shape, complex)
    for i in range(count):
        phi = phases[i]
        if real[i]:
            phi = 0.5 * (phi - _flip(phi))
        out[i] = modulus * np.exp(1j * phi)
    return out


def _taylor_green(grid, A):
    X, Y = grid.mesh
    k = 2 * np.pi / grid.L
    return sp.to_spectral(A * np.cos(k * X) * np.cos(k * Y), grid)


def _scalars_random(grid, ic, rng):
    K = grid.kz_max
    return random_fields(grid, K + 2, ic.scalar_amplitude, ic.slope, rng,
                         [True, True] + [False] * K)


def build_initial_state(ic, grid):
    """Initial :class:`ModelState` at t = 0 for the generator settings ``ic``.

    Raises
    ------
    ConfigError
        For an unknown generator or out-of-range parameters.
    """
    K = grid.kz_max
    data = np.zeros((K + 3,) + grid.shape, complex)
    rng = make_rng(ic.seed)
    name = ic.name

    if name == "taylor_green":
        data[0] = _taylor_green(grid, ic.amplitude)
        if ic.scalars == "random_spectrum":
            data[1:] = _scalars_random(grid, ic, rng)
        elif ic.scalars == "oscillator":
            data[1, 0, 0] = ic.w0
            data[2, 0, 0] = ic.rho0
        elif ic.scalars != "zero":
            raise ConfigError(f"unknown ic.scalars {ic.scalars!r}", key="ic.scalars")
    elif name == "single_mode":
        m, n = ic.m, ic.n
        if (m, n) == (0, 0):
            raise ConfigError("single_mode needs (m, n) != (0, 0)", key="ic.m")
        if not (3 * abs(m) <= grid.nx and 3 * abs(n) <= grid.ny):
            raise ConfigError(f"mode ({m}, {n}) lies outside the dealiased band", key="ic.m")
        X, Y = grid.mesh
        theta = 2 * np.pi * (m * X + n * Y) / grid.L
        B = ic.scalar_amplitude
        data[0] = sp.to_spectral(ic.amplitude * np.cos(theta), grid)
        data[1] = sp.to_spectral(B * np.cos(theta), grid)
        data[2] = sp.to_spectral(B * np.sin(theta), grid)
        for k in range(1, K + 1):
            data[2 + k] = sp.to_spectral(B * np.exp(1j * theta) / (k + 1), grid)
    elif name == "random_spectrum":
        data[0] = random_fields(grid, 1, ic.amplitude, ic.slope, rng, [True])[0]
        data[1:] = _scalars_random(grid, ic, rng)
    elif name == "oscillator_only":
        data[1, 0, 0] = ic.w0
        data[2, 0, 0] = ic.rho0
    elif name == "from_checkpoint":
        if not ic.path:
            raise ConfigError("from_checkpoint requires ic.path", key="ic.path")
        state = read_checkpoint(ic.path)
        g = state.grid
        if (g.nx, g.ny, g.kz_max, g.L) != (grid.nx, grid.ny, grid.kz_max, grid.L):
            raise ConfigError(f"checkpoint grid {g.nx}x{g.ny}, K={g.kz_max}, L={g.L} does not "
                              f"match the configured grid", key="ic.path")
        return ModelState(grid, state.t, state.data).validate()
    else:
        raise ConfigError(f"unknown generator {name!r}", key="ic.name")

    data[0, 0, 0] = 0.0
    return ModelState(grid, 0.0, data).validate()


def random_perturbation(grid, eps, seed, slope=4.0):
    """``eps`` times a random_spectrum-shaped increment of every field.

    omega, w and rho_0 increments are real and all increments are mean-zero,
    so the perturbed state stays valid and the twin density difference has
    zero total mean.
    """
    K = grid.kz_max
    rng = make_rng(seed)
    return eps * random_fields(grid, K + 3, 1.0, slope, rng, [True] * 3 + [False] * K)
