"""Mixed half-space problem with bulk force, tangential traction data and w^n = 0.

    mu Lap w + (mu+lam) grad div w = f      in t > 0
    d_n w^j + d_j w^n = g^j                  at t = 0
    w^n = 0                                  at t = 0

The solution is split in two linear pieces.  The boundary piece (f = 0) is
``W(xi', t) C`` with ``C_j = -(mu/pi) g_hat^j`` and ``C_n = 0``.  The bulk
piece (g = 0) reflects ``f^n`` oddly and the tangential components evenly in
``t``, solves on a doubled periodic box of height ``2T`` with the whole-space
inverse symbol and restricts back to ``0 <= t <= T``.  The tangentially
constant mode is replaced by the exact half-space solution of its ODE
(``w^n(0) = 0``, ``d_t w -> 0`` at depth), so the whole net normal load
reaches the boundary as it would without a top.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .params import DisplacementSlab, GridSpec, LameParams, RealField, SingularFrequencyError
from .spectral import ZeroModePolicy

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AuxiliarySolution:
    slab: DisplacementSlab
    trace_normal_derivative: RealField
    trace_divergence: RealField
    htilde_contribution: RealField
    log: list[str] = field(default_factory=list)


def bulk_inverse_symbol(params: LameParams, xi_full) -> np.ndarray:
    """Whole-space inverse of ``a(xi) = mu |xi|^2 I + (mu+lam) xi xi^T``."""
    xi = np.asarray(xi_full, dtype=float)
    q2 = float(xi @ xi)
    if q2 == 0.0:
        raise SingularFrequencyError("whole-space Lamé symbol is singular at xi = 0")
    mu, lam = params.mu, params.lam
    return (np.eye(xi.size) / (mu * q2)
            - (lam + mu) / ((2 * mu + lam) * mu) * np.outer(xi, xi) / q2**2)


def _assemble(params: LameParams, grid: GridSpec, heights: np.ndarray, w: np.ndarray,
              dn_wn: np.ndarray, div: np.ndarray, notes: list[str]) -> AuxiliarySolution:
    htilde = 2.0 * params.mu * dn_wn + params.lam * div
    return AuxiliarySolution(DisplacementSlab(grid, heights, w), RealField(grid, dn_wn),
                             RealField(grid, div), RealField(grid, htilde), notes)


def _zero_mode(c: np.ndarray, d: int, policy: ZeroModePolicy, what: str, notes: list[str]):
    idx = (slice(None),) + (0,) * d
    mag = float(np.max(np.abs(c[idx]))) if c.size else 0.0
    rms = float(np.sqrt(np.mean(np.sum(np.abs(c) ** 2, axis=tuple(range(1, c.ndim))))))
    if mag > 1e-10 * max(rms, 1e-300):
        if ZeroModePolicy(policy) is ZeroModePolicy.REQUIRE_ZERO_MEAN:
            raise spectral.ZeroModeError(mag, rms)
        notes.append(f"{what}: projected out mean of magnitude {mag:.3e}")
    c[idx] = 0.0


def _boundary_parts(params: LameParams, grid: GridSpec, gh: np.ndarray):
    # W(xi', t) C = 2 pi e^{-q t} (A + t B) with C_j = -(mu/pi) g_hat^j, C_n = 0
    lat = spectral.frequency_lattice(grid)
    q = lat.magnitudes
    qs = np.where(q > 0, q, 1.0)
    mu, kap = params.mu, params.kappa
    C = -(mu / np.pi) * gh
    xiC = sum(xi * C[j] for j, xi in enumerate(lat.components))
    A = np.stack([C[j] / (2 * mu * qs) - kap * xi * xiC / qs**3 for j, xi in enumerate(lat.components)]
                 + [np.zeros_like(xiC)])
    B = np.stack([-kap * xi * xiC / qs**2 for xi in lat.components] + [-1j * kap * xiC / qs])
    zero = (slice(None),) + (0,) * grid.boundary_dim
    A[zero] = 0.0
    B[zero] = 0.0
    return A, B


def solve_boundary_part(params: LameParams, g: RealField, grid: GridSpec | None = None,
                        zero_mode_policy: ZeroModePolicy = ZeroModePolicy.PROJECT_OUT_MEAN
                        ) -> AuxiliarySolution:
    """Boundary piece: tangential traction data ``g`` (``d`` components), ``f = 0``.

    Boundary traces are taken from the closed-form ``t``-derivative of
    ``W(xi', t)``, so ``htilde_contribution`` carries no differencing error.
    """
    grid = g.grid if grid is None else grid
    d = grid.boundary_dim
    if g.components != d:
        raise ValueError(f"g needs {d} components, got {g.components}")
    notes: list[str] = []
    gh = spectral.fft(g.samples, grid).astype(complex)
    _zero_mode(gh, d, zero_mode_policy, "boundary data g", notes)

    lat = spectral.frequency_lattice(grid)
    q = lat.magnitudes
    A, B = _boundary_parts(params, grid, gh)

    heights = np.asarray(grid.heights)
    w = np.empty((d + 1, heights.size) + grid.shape)
    for m, t in enumerate(heights):
        w[:, m] = spectral.ifft(2 * np.pi * np.exp(-q * t) * (A + t * B), grid)
    dt_hat = 2 * np.pi * (B - q * A)
    dn_wn = spectral.ifft(dt_hat[d], grid)
    div_hat = sum(1j * xi * 2 * np.pi * A[j] for j, xi in enumerate(lat.components)) + dt_hat[d]
    return _assemble(params, grid, heights, w, dn_wn, spectral.ifft(div_hat, grid), notes)


def boundary_part_dt_coefficients(params: LameParams, g: RealField) -> np.ndarray:
    """Coefficients of ``d_t w_hat(xi', 0)`` for the boundary piece (for checking the rows)."""
    grid = g.grid
    gh = spectral.fft(g.samples, grid).astype(complex)
    gh[(slice(None),) + (0,) * grid.boundary_dim] = 0.0
    A, B = _boundary_parts(params, grid, gh)
    return 2 * np.pi * (B - spectral.frequency_lattice(grid).magnitudes * A)


def solve_bulk_part(params: LameParams, f: np.ndarray, grid: GridSpec,
                    support_tol: float = 1e-10) -> AuxiliarySolution:
    """Bulk piece: force ``f`` of shape ``(n, M+1, *grid.shape)`` on uniform heights, ``g = 0``.

    ``grid.heights`` must be ``0, dt, ..., M dt = T``.  The normal force
    component must vanish on ``t = 0`` and ``t = T`` (the fixed points of the
    odd reflection); violations are zeroed and noted in ``log``, as is a
    nonzero mean of the reflected force, which is projected out.
    """
    dt = grid.uniform_height_step()
    heights = np.asarray(grid.heights)
    M = heights.size - 1
    d = grid.boundary_dim
    n = d + 1
    f = np.array(f, dtype=float)
    if f.shape != (n, M + 1) + grid.shape:
        raise ValueError(f"force shape {f.shape} does not match {(n, M + 1) + grid.shape}")
    notes: list[str] = []
    scale = max(float(np.max(np.abs(f))), 1e-300)
    edge = max(float(np.max(np.abs(f[-1, 0]))), float(np.max(np.abs(f[-1, M]))))
    if edge > support_tol * scale:
        msg = f"normal force touches the reflection planes (max {edge:.3e}); zeroed there"
        notes.append(msg)
        log.warning(msg)
    f[-1, 0] = 0.0
    f[-1, M] = 0.0

    # doubled box: level index 0..2M-1, level 2M-m mirrors level m
    big = np.empty((n, 2 * M) + grid.shape)
    big[:, :M + 1] = f
    mirror = f[:, M - 1:0:-1]
    big[:d, M + 1:] = mirror[:d]
    big[d, M + 1:] = -mirror[d]

    axes = tuple(range(1, n + 1))
    fh = np.fft.fftn(big, axes=axes)
    zero = (slice(None),) + (0,) * n
    mean = float(np.max(np.abs(fh[zero]))) / big[0].size
    if mean > 1e-12 * scale:
        msg = f"reflected force has nonzero mean {mean:.3e}; projected out"
        notes.append(msg)
        log.warning(msg)

    kt = 2 * np.pi * np.fft.fftfreq(2 * M, d=dt)
    kx = grid.wavenumbers()
    comps = np.meshgrid(*([kx] * d), kt, indexing="ij")
    # reorder so the t-frequency sits on the first spatial axis, like the data
    comps = [np.moveaxis(c, -1, 0) for c in comps]
    q2 = sum(c * c for c in comps)
    q2s = np.where(q2 > 0, q2, 1.0)
    mu, lam = params.mu, params.lam
    xif = sum(c * fh[j] for j, c in enumerate(comps))
    # operator symbol is -a(xi), so w_hat = -a(xi)^{-1} f_hat
    wh = np.stack([-(fh[j] / (mu * q2s) - (lam + mu) / ((2 * mu + lam) * mu) * c * xif / q2s**2)
                   for j, c in enumerate(comps)])
    wh[zero] = 0.0
    w_big = np.fft.ifftn(wh, axes=axes).real
    w = w_big[:, :M + 1].copy()

    kt_axis = comps[-1]
    dn_wn = np.fft.ifftn(1j * kt_axis * wh[d], axes=tuple(range(n))).real[0]
    div = np.fft.ifftn(sum(1j * c * wh[j] for j, c in enumerate(comps)),
                       axes=tuple(range(n))).real[0]

    mean_w, dn_mean = _constant_mode(params, f, dt, notes)
    tan_axes = tuple(range(2, 2 + d))
    w = w - w.mean(axis=tan_axes, keepdims=True) + mean_w.reshape((n, M + 1) + (1,) * d)
    dn_wn = dn_wn - dn_wn.mean() + dn_mean
    div = div - div.mean() + dn_mean
    return _assemble(params, grid, heights, w, dn_wn, div, notes)


def _constant_mode(params: LameParams, f: np.ndarray, dt: float, notes: list[str]):
    """Half-space solution for the tangential mean of ``f`` (shape ``(n, M+1, ...)``).

    ``mu w_j'' = f_j`` and ``(2mu+lam) w_n'' = f_n`` with ``w_n(0) = 0`` and
    ``w' -> 0`` at depth, i.e. ``w'(t) = -(1/a) int_t^T f``.  A net
    tangential force cannot be balanced without tangential traction; it is
    noted and the tangential mean is fixed by ``w_j(0) = 0``.
    """
    n = f.shape[0]
    d = n - 1
    fbar = f.reshape(n, f.shape[1], -1).mean(axis=2)
    # tail integrals by the trapezoid rule
    seg = 0.5 * dt * (fbar[:, 1:] + fbar[:, :-1])
    tail = np.zeros_like(fbar)
    tail[:, :-1] = np.cumsum(seg[:, ::-1], axis=1)[:, ::-1]
    stiff = np.array([params.mu] * d + [2 * params.mu + params.lam])
    dw = -tail / stiff[:, None]
    if d and np.max(np.abs(tail[:d, 0])) > 1e-12 * max(np.max(np.abs(tail)), 1e-300):
        notes.append(f"net tangential force {np.max(np.abs(tail[:d, 0])):.3e} is not balanced")
    w = np.zeros_like(fbar)
    w[:, 1:] = np.cumsum(0.5 * dt * (dw[:, 1:] + dw[:, :-1]), axis=1)
    return w, dw[d, 0]


def solve_auxiliary(params: LameParams, f: np.ndarray | None, g: RealField | None,
                    grid: GridSpec,
                    zero_mode_policy: ZeroModePolicy = ZeroModePolicy.PROJECT_OUT_MEAN
                    ) -> AuxiliarySolution:
    """Sum of the bulk and boundary pieces; either datum may be ``None``."""
    d = grid.boundary_dim
    parts = []
    if g is not None:
        parts.append(solve_boundary_part(params, g, grid, zero_mode_policy))
    if f is not None:
        parts.append(solve_bulk_part(params, f, grid))
    if not parts:
        parts.append(solve_boundary_part(params, RealField(grid, np.zeros((d,) + grid.shape)), grid))
    first = parts[0]
    if len(parts) == 1:
        return first
    second = parts[1]
    return AuxiliarySolution(first.slab + second.slab,
                             first.trace_normal_derivative + second.trace_normal_derivative,
                             first.trace_divergence + second.trace_divergence,
                             first.htilde_contribution + second.htilde_contribution,
                             first.log + second.log)
