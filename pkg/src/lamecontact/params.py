"""Material constants and the periodic tangential grid.

The tangential boundary space is modelled as a torus of side ``period`` with
``points_per_dim`` nodes per axis.  Node ``j`` sits at ``x_j = -L/2 + j*h`` so
that ``x = 0`` is a grid node (index ``N // 2``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class DomainError(ValueError):
    """Raised when an input violates a documented precondition."""


class SingularFrequencyError(DomainError):
    """Raised when a half-space symbol is evaluated at zero frequency."""


@dataclass(frozen=True)
class LameParams:
    """Lamé constants together with the derived half-space constants.

    Use :func:`derive_constants` rather than the constructor.
    """

    mu: float
    lam: float
    kappa: float
    nu: float
    beta: float
    dtn_constant: float


def derive_constants(mu: float, lam: float) -> LameParams:
    """Build :class:`LameParams` from the shear modulus and first Lamé constant.

    ``kappa = (lam+mu)/(4 mu (2mu+lam))``, ``nu = 1/(2mu) - kappa``,
    ``beta = (lam+mu)/(2mu+lam)`` and the Dirichlet-to-Neumann constant
    ``2 mu (lam+mu)/(lam+2mu)``.
    """
    mu = float(mu)
    lam = float(lam)
    if not np.isfinite(mu) or mu <= 0.0:
        raise DomainError(f"shear modulus mu must be positive, got {mu!r}")
    if not np.isfinite(lam) or lam <= 0.0:
        raise DomainError(f"Lamé constant lambda must be positive, got {lam!r}")
    kappa = (lam + mu) / (4.0 * mu * (2.0 * mu + lam))
    nu = 1.0 / (2.0 * mu) - kappa
    beta = (lam + mu) / (2.0 * mu + lam)
    dtn_constant = 2.0 * mu * (lam + mu) / (lam + 2.0 * mu)
    return LameParams(mu=mu, lam=lam, kappa=kappa, nu=nu, beta=beta,
                      dtn_constant=dtn_constant)


@dataclass(frozen=True)
class GridSpec:
    boundary_dim: int
    period: float
    points_per_dim: int
    heights: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if self.boundary_dim not in (1, 2):
            raise DomainError(f"boundary_dim must be 1 or 2, got {self.boundary_dim}")
        if not self.period > 0:
            raise DomainError(f"period must be positive, got {self.period}")
        n = self.points_per_dim
        if n < 8 or n % 2:
            raise DomainError(f"points_per_dim must be even and >= 8, got {n}")
        hs = tuple(float(t) for t in self.heights)
        if not hs or hs[0] < 0 or any(b <= a for a, b in zip(hs, hs[1:])):
            raise DomainError("heights must be a non-empty strictly increasing sequence of levels >= 0")
        object.__setattr__(self, "heights", hs)

    @classmethod
    def uniform(cls, boundary_dim: int, period: float, points_per_dim: int,
                depth: float | None = None, levels: int | None = None) -> "GridSpec":
        """Grid with ``levels + 1`` equally spaced heights on ``[0, depth]``.

        ``depth`` defaults to the period and ``levels`` to ``points_per_dim``.
        """
        depth = period if depth is None else depth
        levels = points_per_dim if levels is None else levels
        return cls(boundary_dim, period, points_per_dim,
                   tuple(np.linspace(0.0, depth, levels + 1)))

    @property
    def spacing(self) -> float:
        return self.period / self.points_per_dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_dim,) * self.boundary_dim

    @property
    def size(self) -> int:
        return self.points_per_dim ** self.boundary_dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.boundary_dim

    def axis(self) -> np.ndarray:
        n = self.points_per_dim
        return (np.arange(n) - n // 2) * self.spacing

    def coords(self) -> tuple[np.ndarray, ...]:
        """Nodal coordinates, one array of shape ``self.shape`` per axis."""
        ax = self.axis()
        return tuple(np.meshgrid(*([ax] * self.boundary_dim), indexing="ij"))

    def distance(self, center: Sequence[float] | float = 0.0) -> np.ndarray:
        """Periodic (minimum image) distance of every node from ``center``."""
        c = np.broadcast_to(np.asarray(center, dtype=float), (self.boundary_dim,))
        L = self.period
        d2 = np.zeros(self.shape)
        for x, cj in zip(self.coords(), c):
            dx = (x - cj + L / 2) % L - L / 2
            d2 += dx * dx
        return np.sqrt(d2)

    def wavenumbers(self) -> np.ndarray:
        """Angular frequencies ``2 pi k / L`` in FFT order."""
        n = self.points_per_dim
        return 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n) / self.period

    def uniform_height_step(self) -> float:
        """Spacing of the height levels; raises unless they are uniform from 0."""
        hs = np.asarray(self.heights)
        if len(hs) < 3 or hs[0] != 0.0:
            raise DomainError("uniform height levels starting at t=0 (at least 3) are required")
        dt = hs[1] - hs[0]
        if np.max(np.abs(np.diff(hs) - dt)) > 1e-12 * max(1.0, hs[-1]):
            raise DomainError("height levels are not uniformly spaced")
        return float(dt)


@dataclass(frozen=True)
class RealField:
    """Real nodal samples with shape ``(components, *grid.shape)``."""

    grid: GridSpec
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape == self.grid.shape:
            s = s[None]
        if s.ndim != self.grid.boundary_dim + 1 or s.shape[1:] != self.grid.shape or s.shape[0] < 1:
            raise DomainError(f"samples shape {s.shape} incompatible with grid {self.grid.shape}")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def components(self) -> int:
        return self.samples.shape[0]

    @property
    def values(self) -> np.ndarray:
        """First component; convenient for scalar fields."""
        return self.samples[0]

    def __add__(self, other: "RealField") -> "RealField":
        return RealField(self.grid, self.samples + other.samples)

    def __sub__(self, other: "RealField") -> "RealField":
        return RealField(self.grid, self.samples - other.samples)

    def __mul__(self, a: float) -> "RealField":
        return RealField(self.grid, a * self.samples)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpectralField:
    """DFT coefficients in FFT order, shape ``(components, *grid.shape)``."""

    grid: GridSpec
    coefficients: np.ndarray = field(repr=False)

    @property
    def components(self) -> int:
        return self.coefficients.shape[0]


@dataclass(frozen=True)
class DisplacementSlab:
    """Vector displacement on ``grid.shape`` x height levels.

    ``samples`` has shape ``(n, len(heights), *grid.shape)`` where component
    ``n-1`` is the normal displacement.
    """

    grid: GridSpec
    heights: np.ndarray
    samples: np.ndarray

    @property
    def normal(self) -> np.ndarray:
        return self.samples[-1]

    @property
    def tangential(self) -> np.ndarray:
        return self.samples[:-1]

    def level(self, m: int) -> np.ndarray:
        return self.samples[:, m]

    def __add__(self, other: "DisplacementSlab") -> "DisplacementSlab":
        if len(self.heights) != len(other.heights) or np.any(self.heights != other.heights):
            raise DomainError("cannot add slabs on different height levels")
        return DisplacementSlab(self.grid, self.heights, self.samples + other.samples)
