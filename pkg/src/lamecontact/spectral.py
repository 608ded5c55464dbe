"""Discrete Fourier calculus on the periodic tangential grid.

Forward transforms carry the ``1/N^d`` factor, so a coefficient is the mean of
``f * exp(-i xi.x)`` over the grid nodes and ``to_real`` is a plain sum.
Coefficients are stored in numpy FFT order; the phase from the grid offset
``-L/2`` is absorbed into the coefficients and never matters because every
operator here is a diagonal multiplier.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .params import DomainError, GridSpec, RealField, SpectralField


class ZeroModePolicy(enum.Enum):
    REQUIRE_ZERO_MEAN = "require_zero_mean"
    PROJECT_OUT_MEAN = "project_out_mean"


class ZeroModeError(DomainError):
    def __init__(self, magnitude: float, rms: float):
        super().__init__(f"zero-mode coefficient {magnitude:.3e} exceeds 1e-10 * rms ({rms:.3e})")
        self.magnitude = magnitude
        self.rms = rms


@dataclass(frozen=True)
class FrequencyLattice:
    grid: GridSpec
    components: tuple[np.ndarray, ...]
    magnitudes: np.ndarray


@lru_cache(maxsize=32)
def _lattice(grid: GridSpec) -> FrequencyLattice:
    k = grid.wavenumbers()
    comps = tuple(np.meshgrid(*([k] * grid.boundary_dim), indexing="ij"))
    mag = np.sqrt(sum(c * c for c in comps))
    for a in comps + (mag,):
        a.setflags(write=False)
    return FrequencyLattice(grid, comps, mag)


def frequency_lattice(grid: GridSpec) -> FrequencyLattice:
    """Frequency vectors ``xi'`` and magnitudes ``|xi'|`` in FFT order (cached)."""
    return _lattice(grid)


def _axes(grid: GridSpec) -> tuple[int, ...]:
    return tuple(range(-grid.boundary_dim, 0))


def fft(a: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Normalized forward DFT over the trailing ``boundary_dim`` axes of ``a``."""
    return np.fft.fftn(a, axes=_axes(grid)) / grid.size


def ifft(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Inverse of :func:`fft`; returns the real part."""
    return np.fft.ifftn(c * grid.size, axes=_axes(grid)).real


def to_spectral(f: RealField) -> SpectralField:
    return SpectralField(f.grid, fft(f.samples, f.grid))


def to_real(f: SpectralField) -> RealField:
    return RealField(f.grid, ifft(f.coefficients, f.grid))


def _check_order(s: float) -> None:
    if not 0.0 < s <= 1.0:
        raise DomainError(f"fractional order s must lie in (0, 1], got {s}")


def frac_symbol(grid: GridSpec, s: float) -> np.ndarray:
    """``|xi'|^(2s)`` on the lattice (zero at the zero mode)."""
    return frequency_lattice(grid).magnitudes ** (2.0 * s)


def frac_laplacian_apply(f: SpectralField, s: float) -> SpectralField:
    _check_order(s)
    return SpectralField(f.grid, f.coefficients * frac_symbol(f.grid, s))


def frac_laplacian_inverse(f: SpectralField, s: float,
                           zero_mode_policy: ZeroModePolicy = ZeroModePolicy.PROJECT_OUT_MEAN
                           ) -> SpectralField:
    """Divide by ``|xi'|^(2s)`` away from the zero mode; the zero mode is set to 0.

    Under ``REQUIRE_ZERO_MEAN`` a zero mode larger than ``1e-10`` times the
    field RMS raises :class:`ZeroModeError`.
    """
    _check_order(s)
    c = np.array(f.coefficients, dtype=complex)
    zero = (slice(None),) + (0,) * f.grid.boundary_dim
    if ZeroModePolicy(zero_mode_policy) is ZeroModePolicy.REQUIRE_ZERO_MEAN:
        mag = float(np.max(np.abs(c[zero])))
        rms = float(np.sqrt(np.sum(np.abs(c) ** 2) / c.shape[0]))
        if mag > 1e-10 * rms:
            raise ZeroModeError(mag, rms)
    sym = frac_symbol(f.grid, s)
    out = np.zeros_like(c)
    nz = sym > 0
    out[:, nz] = c[:, nz] / sym[nz]
    return SpectralField(f.grid, out)


def half_laplacian(a: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``(-Delta)^(1/2)`` of a real array over its trailing grid axes."""
    return ifft(fft(a, grid) * frequency_lattice(grid).magnitudes, grid)


def spectral_gradient(a: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Tangential gradient; output has a leading axis of length ``boundary_dim``."""
    c = fft(a, grid)
    lat = frequency_lattice(grid)
    return np.stack([ifft(1j * xi * c, grid) for xi in lat.components])


def dense_half_laplacian(grid: GridSpec) -> np.ndarray:
    """Explicit ``N^d x N^d`` matrix of ``(-Delta)^(1/2)`` acting on flattened nodes.

    Assembled column by column from unit vectors; symmetric positive
    semi-definite with the constants as kernel.  Intended for small grids.
    """
    n = grid.size
    eye = np.eye(n).reshape((n,) + grid.shape)
    cols = half_laplacian(eye, grid).reshape(n, n)
    a = cols.T
    return 0.5 * (a + a.T)
