"""Explicit half-space solution of the boundary contact problem.

For tangential frequency ``xi`` (``q = |xi|``) the decaying solution of

    mu Lap u + (mu+lam) grad div u = 0,   d_n u^j + d_j u^n = 0,   u^n = phi

at the boundary ``t = 0`` is ``u_hat(xi, t) = K(xi, t) phi_hat(xi)`` with the
closed-form kernel

    K_j(xi, t) = e^{-q t} ( -i beta xi_j t + i mu xi_j / ((2mu+lam) q) )
    K_n(xi, t) = e^{-q t} ( 1 + beta q t ),          beta = (lam+mu)/(2mu+lam).

The same kernel is also assembled as ``W(xi, t) C(xi)`` from the fundamental
matrix ``W`` and the coefficient solve; both routes are kept so they can be
checked against each other.  Fourier conventions follow numpy: ``d_j``
corresponds to multiplication by ``i xi_j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral
from .params import DisplacementSlab, GridSpec, LameParams, RealField, SingularFrequencyError
from .spectral import ZeroModePolicy


def _freq(xi) -> tuple[np.ndarray, float]:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    q = float(np.sqrt(np.sum(xi * xi)))
    if q == 0.0:
        raise SingularFrequencyError("half-space symbols are singular at xi' = 0")
    return xi, q


def _fundamental_parts(params: LameParams, xi: np.ndarray, q: float):
    # W(xi, t) = 2 pi e^{-q t} (A + t B)
    d = xi.size
    n = d + 1
    k = params.kappa
    A = np.zeros((n, n), dtype=complex)
    B = np.zeros((n, n), dtype=complex)
    A[:d, :d] = np.eye(d) / (2.0 * params.mu * q) - k * np.outer(xi, xi) / q**3
    B[:d, :d] = -k * np.outer(xi, xi) / q**2
    B[:d, d] = B[d, :d] = -1j * k * xi / q
    A[d, d] = params.nu / q
    B[d, d] = k
    return A, B


def fundamental_matrix(params: LameParams, xi, t: float) -> np.ndarray:
    """Decaying fundamental matrix ``W(xi', t)`` including its ``2 pi`` prefactor."""
    xi, q = _freq(xi)
    A, B = _fundamental_parts(params, xi, q)
    return 2.0 * np.pi * np.exp(-q * t) * (A + t * B)


def fundamental_matrix_dt(params: LameParams, xi, t: float) -> np.ndarray:
    """``d/dt W(xi', t)`` in closed form."""
    xi, q = _freq(xi)
    A, B = _fundamental_parts(params, xi, q)
    return 2.0 * np.pi * np.exp(-q * t) * (B - q * (A + t * B))


def dirichlet_coefficients(params: LameParams, xi, phi_hat: complex = 1.0) -> np.ndarray:
    """Coefficients ``C`` such that ``W(xi', t) C`` solves the ODE system.

    ``C_n = q phi_hat / (2 pi nu)`` from the Dirichlet row and
    ``C_j = 2 mu (kappa - nu) xi_j C_n / (i q)`` from the tangential
    boundary rows.
    """
    xi, q = _freq(xi)
    cn = q * phi_hat / (2.0 * np.pi * params.nu)
    cj = 2.0 * params.mu * (params.kappa - params.nu) * xi * cn / (1j * q)
    return np.append(cj.astype(complex), complex(cn))


@dataclass(frozen=True)
class KernelEval:
    xi: np.ndarray
    t: float
    tangential: np.ndarray
    normal: complex


def _kernel_terms(params: LameParams, xi, q):
    # K = e^{-q t} (slope t + offset), componentwise
    s = params.mu / (2.0 * params.mu + params.lam)
    slope_t = -1j * params.beta * xi
    offset_t = 1j * s * xi / q
    return slope_t, offset_t, params.beta * q, 1.0


def _dt_k(slope, offset, q, t, k):
    # k-th t-derivative of e^{-q t} (slope t + offset)
    e = np.exp(-q * t)
    return e * ((-q) ** k * (slope * t + offset) + k * (-q) ** (k - 1) * slope) if k else e * (slope * t + offset)


def extension_kernel(params: LameParams, xi, t: float, derivative: int = 0) -> KernelEval:
    """Closed-form multipliers ``u_hat / phi_hat`` (or their ``t``-derivatives)."""
    xi, q = _freq(xi)
    st, ot, sn, on = _kernel_terms(params, xi, q)
    return KernelEval(xi, float(t), _dt_k(st, ot, q, t, derivative),
                      complex(_dt_k(sn, on, q, t, derivative)))


def kernel_on_lattice(params: LameParams, grid: GridSpec, t: float,
                      derivative: int = 0) -> np.ndarray:
    """Kernel multipliers on the whole lattice, shape ``(n, *grid.shape)``.

    The zero mode is set to 0 (its mean is projected out).
    """
    lat = spectral.frequency_lattice(grid)
    q = lat.magnitudes
    safe_q = np.where(q > 0, q, 1.0)
    s = params.mu / (2.0 * params.mu + params.lam)
    out = []
    for xi in lat.components:
        out.append(_dt_k(-1j * params.beta * xi, 1j * s * xi / safe_q, q, t, derivative))
    out.append(_dt_k(params.beta * q + 0j, 1.0 + 0j, q, t, derivative))
    k = np.stack(out)
    k[(slice(None),) + (0,) * grid.boundary_dim] = 0.0
    return k


@dataclass(frozen=True)
class TraceBundle:
    tangential_traces: np.ndarray
    normal_derivative: complex
    divergence: complex
    dtn: complex


def boundary_traces(params: LameParams, xi) -> TraceBundle:
    """Boundary values of the extension kernel and the assembled traction symbol.

    Everything is differentiated analytically; ``dtn`` is formed from its
    definition ``-2 mu d_n u^n - lam div u`` rather than copied from the
    closed-form symbol.
    """
    k0 = extension_kernel(params, xi, 0.0)
    k1 = extension_kernel(params, xi, 0.0, derivative=1)
    div = np.sum(1j * k0.xi * k0.tangential) + k1.normal
    dtn = -2.0 * params.mu * k1.normal - params.lam * div
    return TraceBundle(k0.tangential, k1.normal, complex(div), complex(dtn))


def dtn_symbol(params: LameParams, grid: GridSpec) -> np.ndarray:
    """``c_{lam,mu} |xi'|`` on the lattice."""
    return params.dtn_constant * spectral.frequency_lattice(grid).magnitudes


def traced_dtn_symbol(params: LameParams, grid: GridSpec) -> np.ndarray:
    """DtN multiplier on the lattice assembled mode by mode from :func:`boundary_traces`.

    This is the independent path to compare with :func:`dtn_symbol`; the
    zero mode is 0.
    """
    lat = spectral.frequency_lattice(grid)
    out = np.zeros(grid.shape, dtype=complex)
    for idx in np.ndindex(*grid.shape):
        if lat.magnitudes[idx] == 0:
            continue
        xi = np.array([c[idx] for c in lat.components])
        out[idx] = boundary_traces(params, xi).dtn
    return out


def kernel_matrix_discrepancy(params: LameParams, xi, t: float) -> float:
    """Max entrywise gap between the closed-form kernel and ``W(xi', t) C(xi')``."""
    k = extension_kernel(params, xi, t)
    wc = fundamental_matrix(params, xi, t) @ dirichlet_coefficients(params, xi)
    return float(np.max(np.abs(np.append(k.tangential, k.normal) - wc)))


def dtn_apply(params: LameParams, phi: RealField) -> RealField:
    return RealField(phi.grid, spectral.ifft(spectral.fft(phi.samples, phi.grid)
                                             * dtn_symbol(params, phi.grid), phi.grid))


def lame_extend(params: LameParams, phi: RealField, grid: GridSpec | None = None,
                zero_mode_policy: ZeroModePolicy = ZeroModePolicy.PROJECT_OUT_MEAN
                ) -> DisplacementSlab:
    """Lamé extension of the scalar boundary datum ``phi`` sampled on ``grid.heights``."""
    grid = phi.grid if grid is None else grid
    c = spectral.fft(phi.values, grid)
    if ZeroModePolicy(zero_mode_policy) is ZeroModePolicy.REQUIRE_ZERO_MEAN:
        spectral.frac_laplacian_inverse(spectral.SpectralField(grid, c[None]), 0.5,
                                        ZeroModePolicy.REQUIRE_ZERO_MEAN)
    return extend_coefficients(params, c, grid)


def extend_coefficients(params: LameParams, phi_hat: np.ndarray, grid: GridSpec,
                        derivative: int = 0) -> DisplacementSlab:
    heights = np.asarray(grid.heights)
    n = grid.boundary_dim + 1
    out = np.empty((n, heights.size) + grid.shape)
    for m, t in enumerate(heights):
        out[:, m] = spectral.ifft(kernel_on_lattice(params, grid, t, derivative) * phi_hat, grid)
    return DisplacementSlab(grid, heights, out)


def tangential_trace_candidates(params: LameParams, xi) -> dict[str, np.ndarray]:
    """Two candidate closed forms ``xi_j/(i q) (kappa-nu)/nu * factor`` of the tangential trace.

    Only ``factor = 1 - 2 mu kappa`` agrees with the kernel; feed both to
    :func:`boundary_condition_residual` to see which one is consistent.
    """
    xi, q = _freq(xi)
    pre = xi / (1j * q) * (params.kappa - params.nu) / params.nu
    return {
        "factor_1_minus_2mu_nu": pre * (1.0 - 2.0 * params.mu * params.nu),
        "factor_1_minus_2mu_kappa": pre * (1.0 - 2.0 * params.mu * params.kappa),
    }


def boundary_condition_residual(params: LameParams, xi, tangential_trace) -> np.ndarray:
    """Residual of ``D_t u^j + xi_j u^n = 0`` for prescribed Dirichlet traces.

    The decaying solution with boundary values ``(tangential_trace, 1)`` is
    built from the fundamental matrix (``W(xi', 0) C = data``) and its
    analytic ``t``-derivative is inserted into the tangential boundary rows.
    """
    xi, q = _freq(xi)
    data = np.append(np.asarray(tangential_trace, dtype=complex), 1.0)
    c = np.linalg.solve(fundamental_matrix(params, xi, 0.0), data)
    du = fundamental_matrix_dt(params, xi, 0.0) @ c
    return du[:-1] / 1j + xi * data[-1]


def _uniform_step(heights: np.ndarray) -> float:
    steps = np.diff(heights)
    if steps.size < 2 or np.ptp(steps) > 1e-12 * max(1.0, heights[-1]):
        raise ValueError("finite differences in t need at least 3 uniformly spaced levels")
    return float(steps[0])


def slab_boundary_residual(params: LameParams, slab: DisplacementSlab) -> np.ndarray:
    """``d_n u^j + d_j u^n`` at ``t = 0`` with a one-sided first-order difference in ``t``."""
    g = slab.grid
    dt = slab.heights[1] - slab.heights[0]
    grad_n = spectral.spectral_gradient(slab.normal[0], g)
    return (slab.tangential[:, 1] - slab.tangential[:, 0]) / dt + grad_n


def slab_bulk_residual(params: LameParams, slab: DisplacementSlab) -> np.ndarray:
    """``mu Lap u + (mu+lam) grad div u`` on interior levels.

    Tangential derivatives are spectral, ``t``-derivatives are centred second
    differences; requires uniform height levels.
    """
    g = slab.grid
    dt = _uniform_step(slab.heights)
    mu, lam = params.mu, params.lam
    u = slab.samples
    d = g.boundary_dim
    lat = spectral.frequency_lattice(g)
    uh = spectral.fft(u, g)
    q2 = lat.magnitudes ** 2
    lap_tan = spectral.ifft(-q2 * uh, g)
    # tangential divergence on all levels
    div_tan = spectral.ifft(sum(1j * xi * uh[j] for j, xi in enumerate(lat.components)), g)
    inner = slice(1, -1)
    utt = (u[:, 2:] - 2 * u[:, inner] + u[:, :-2]) / dt**2
    un_t = (u[-1, 2:] - u[-1, :-2]) / (2 * dt)
    div = div_tan[inner] + un_t
    res = np.empty_like(utt)
    div_hat = spectral.fft(div, g)
    for j, xi in enumerate(lat.components):
        res[j] = mu * (lap_tan[j, inner] + utt[j]) + (mu + lam) * spectral.ifft(1j * xi * div_hat, g)
    div_tan_t = (div_tan[2:] - div_tan[:-2]) / (2 * dt)
    res[d] = mu * (lap_tan[d, inner] + utt[d]) + (mu + lam) * (div_tan_t + utt[d])
    return res


def slab_traction_fd(params: LameParams, slab: DisplacementSlab, order: int = 1) -> np.ndarray:
    """``-2 mu d_n u^n - lam div u`` at ``t = 0`` with one-sided differences in ``t``."""
    g = slab.grid
    dt = slab.heights[1] - slab.heights[0]
    un = slab.normal
    if order == 1:
        dn = (un[1] - un[0]) / dt
    else:
        dn = (-3 * un[0] + 4 * un[1] - un[2]) / (2 * dt)
    lat = spectral.frequency_lattice(g)
    uh = spectral.fft(slab.tangential[:, 0], g)
    div_tan = spectral.ifft(sum(1j * xi * uh[j] for j, xi in enumerate(lat.components)), g)
    return -2.0 * params.mu * dn - params.lam * (div_tan + dn)
