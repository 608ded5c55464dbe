"""Vectorial Signorini problem solved through the scalar half-Laplacian obstacle problem.

With ``w`` the force-driven auxiliary displacement (``w^n = 0`` and no
tangential traction on ``t = 0``) and ``h~ = 2 mu d_n w^n + lam div w`` its
normal stress, the contact traction of ``u = E(u^n) + w`` is
``c (-Delta)^(1/2) u^n - h~``.  Writing ``u^n = v + c^-1 (-Delta)^(-1/2) h~``
turns the contact conditions into the obstacle problem for ``v`` with
``psi = phi - c^-1 (-Delta)^(-1/2) h~``.

On the torus the inverse half-Laplacian only sees the fluctuating part of
``h~``; its mean (the net normal load of the force) stays in the scalar
problem as a constant right-hand side.  The collar pins the trace ``u^n`` to
zero, which for ``v`` means ``v = -c^-1 (-Delta)^(-1/2) h~`` there.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import auxiliary, halfspace, spectral
from .obstacle import Method, ObstacleProblem, ObstacleSolution, obstacle_solve
from .params import DisplacementSlab, DomainError, GridSpec, LameParams, RealField
from .spectral import ZeroModePolicy

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """The scalar obstacle iteration stopped before reaching its tolerance."""

    def __init__(self, solution: ObstacleSolution):
        super().__init__(f"obstacle solver stopped after {solution.iterations} iterations "
                         f"with residual {solution.residual:.3e}")
        self.solution = solution


@dataclass(frozen=True)
class Cutoff:
    center: tuple[float, ...]
    inner: float
    outer: float

    def __post_init__(self):
        if not 0 < self.inner < self.outer:
            raise DomainError(f"cutoff radii need 0 < r < R, got r={self.inner}, R={self.outer}")


def _smoothstep(s: np.ndarray):
    """Quintic ``10s^3 - 15s^4 + 6s^5`` and its first two derivatives."""
    s = np.clip(s, 0.0, 1.0)
    return (s**3 * (10 - 15 * s + 6 * s * s),
            30 * s * s * (1 - s) ** 2,
            60 * s * (1 - s) * (1 - 2 * s))


def _offsets(grid: GridSpec, center) -> list[np.ndarray]:
    """Periodic signed offsets ``x_j - center_j`` in ``[-L/2, L/2)``."""
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.boundary_dim,))
    L = grid.period
    return [np.mod(x - c + L / 2, L) - L / 2 for x, c in zip(grid.coords(), center)]


def make_cutoff(grid: GridSpec, center, r: float, R: float) -> RealField:
    """Radial C^2 bump equal to 1 for ``|x - center| <= r`` and 0 for ``|x - center| >= R``."""
    if not 0 < r < R:
        raise DomainError(f"cutoff radii need 0 < r < R, got r={r}, R={R}")
    if R > grid.period / 2:
        raise DomainError(f"outer radius {R} exceeds half the period {grid.period / 2}")
    rho = grid.distance(center)
    s, _, _ = _smoothstep((rho - r) / (R - r))
    return RealField(grid, 1.0 - s)


def cutoff_derivatives(grid: GridSpec, cutoff: Cutoff):
    """Exact ``eta``, its tangential gradient ``(d, *shape)`` and Laplacian."""
    r, R = cutoff.inner, cutoff.outer
    off = _offsets(grid, cutoff.center)
    rho = np.sqrt(sum(o * o for o in off))
    s, ds, dds = _smoothstep((rho - r) / (R - r))
    d1 = -ds / (R - r)
    d2 = -dds / (R - r) ** 2
    safe = np.where(rho > 0, rho, 1.0)
    grad = np.stack([d1 * o / safe for o in off])
    lap = d2 + (grid.boundary_dim - 1) * d1 / safe
    return 1.0 - s, grad, lap


@dataclass(frozen=True)
class SignoriniProblem:
    params: LameParams
    grid: GridSpec
    phi: RealField
    cutoff: Cutoff
    F: np.ndarray | None = None

    def __post_init__(self):
        if self.phi.grid != self.grid:
            raise DomainError("obstacle lives on a different grid")
        if self.cutoff.outer > self.grid.period / 2:
            raise DomainError("collar radius exceeds half the period")
        outside = ~self.window
        if np.any(self.phi.values[outside] > 0):
            raise DomainError("obstacle must be non-positive outside the window")
        if self.F is not None:
            n = self.grid.boundary_dim + 1
            shape = (n, len(self.grid.heights)) + self.grid.shape
            if np.shape(self.F) != shape:
                raise DomainError(f"force shape {np.shape(self.F)} does not match {shape}")

    @property
    def window(self) -> np.ndarray:
        return self.grid.distance(self.cutoff.center) <= self.cutoff.inner

    @property
    def collar(self) -> np.ndarray:
        return self.grid.distance(self.cutoff.center) >= self.cutoff.outer


@dataclass
class SignoriniSolution:
    trace_un: RealField
    displacement: DisplacementSlab
    contact_set: np.ndarray
    free_boundary: np.ndarray
    scalar_solution: ObstacleSolution
    htilde: RealField
    psi_effective: RealField
    traction: RealField
    mean_removed: float = 0.0
    log: list[str] = field(default_factory=list)


def _inverse_half(params: LameParams, a: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, float]:
    """``c^-1 (-Delta)^(-1/2) a`` with the mean projected out; returns the discarded mean too."""
    coef = spectral.fft(a, grid)
    mean = float(np.real(coef[(0,) * grid.boundary_dim]))
    inv = spectral.frac_laplacian_inverse(spectral.SpectralField(grid, coef[None]), 0.5,
                                          ZeroModePolicy.PROJECT_OUT_MEAN)
    return spectral.ifft(inv.coefficients[0], grid) / params.dtn_constant, mean


def extend_with_mean(params: LameParams, trace: RealField) -> DisplacementSlab:
    """Lamé extension that keeps the mean of ``trace`` as a rigid normal shift.

    A constant normal displacement solves the Lamé system without traction,
    which matches the zero of the traction symbol at the zero mode.
    """
    slab = halfspace.lame_extend(params, trace)
    samples = np.array(slab.samples)
    samples[-1] += float(np.mean(trace.values))
    return DisplacementSlab(slab.grid, slab.heights, samples)


def signorini_solve(problem: SignoriniProblem, tol: float = 1e-10, max_iter: int = 100000,
                    method: Method | str = Method.ACCELERATED_PROJECTED_GRADIENT,
                    record_history: bool = False) -> SignoriniSolution:
    """Solve the vectorial contact problem by reduction to the scalar obstacle problem.

    Raises :class:`ConvergenceError` (carrying the partial scalar solution)
    when the obstacle iteration does not reach ``tol``.
    """
    params, grid = problem.params, problem.grid
    notes: list[str] = []
    if problem.F is not None:
        aux = auxiliary.solve_bulk_part(params, problem.F, grid)
        notes += aux.log
        w = aux.slab
        htilde = aux.htilde_contribution.values
    else:
        w = DisplacementSlab(grid, grid.heights, np.zeros((grid.boundary_dim + 1, len(grid.heights))
                                                          + grid.shape))
        htilde = np.zeros(grid.shape)
    correction, mean = _inverse_half(params, htilde, grid)
    if abs(mean) > 1e-12:
        notes.append(f"normal stress of the auxiliary part has mean {mean:.3e}; "
                     f"projected out of psi and applied as a constant load")
    psi = problem.phi.values - correction
    scalar = ObstacleProblem(RealField(grid, psi), problem.window, problem.collar,
                             rhs=RealField(grid, np.full(grid.shape, mean)),
                             operator_constant=params.dtn_constant,
                             collar_values=RealField(grid, -correction))
    sol = obstacle_solve(scalar, max_iter=max_iter, tol=tol, method=method,
                         record_history=record_history)
    if not sol.converged:
        raise ConvergenceError(sol)
    trace = sol.v.values + correction
    disp = extend_with_mean(params, RealField(grid, trace)) + w
    traction = RealField(grid, halfspace.dtn_apply(params, sol.v).values - mean)
    return SignoriniSolution(RealField(grid, trace), disp, sol.active_set.copy(),
                             sol.free_boundary, sol, RealField(grid, htilde), RealField(grid, psi),
                             traction, mean, notes)


def forward_embed(params: LameParams, scalar_sol: ObstacleSolution,
                  grid: GridSpec | None = None) -> SignoriniSolution:
    """Lamé extension of a scalar obstacle solution (no force)."""
    grid = scalar_sol.v.grid if grid is None else grid
    v = RealField(grid, scalar_sol.v.values)
    disp = extend_with_mean(params, v)
    return SignoriniSolution(v, disp, scalar_sol.active_set.copy(), scalar_sol.free_boundary,
                             scalar_sol, RealField(grid, np.zeros(grid.shape)),
                             scalar_sol.problem.psi, halfspace.dtn_apply(params, v))


@dataclass(frozen=True)
class LocalizationReport:
    vtilde: RealField
    psi: RealField
    htilde: RealField
    h: RealField
    g: RealField
    f: np.ndarray
    localized_traction: RealField
    traction_mismatch: float
    contact_global: np.ndarray
    contact_local: np.ndarray

    @property
    def contact_sets_agree(self) -> bool:
        return bool(np.array_equal(self.contact_global, self.contact_local))


def localize(params: LameParams, trace: RealField, phi: RealField, cutoff: Cutoff,
             active_tol: float = 1e-9) -> LocalizationReport:
    """Cut a force-free solution ``u = E(trace)`` off with ``eta`` and rebuild the scalar problem.

    With ``f = L(eta u)``, ``g^j = u^n d_j eta``, ``h = -lam sum_k u^k d_k eta``
    and ``w`` the auxiliary solution for ``(f, g)``, the function
    ``v~ = eta u^n - c^-1 (-Delta)^(-1/2) h~`` must satisfy
    ``c (-Delta)^(1/2) v~ = eta * traction(u)``.  The relative max-norm
    mismatch of this identity is returned together with both contact sets
    restricted to ``eta > 0``.
    """
    grid = trace.grid
    d = grid.boundary_dim
    mu, lam = params.mu, params.lam
    eta, deta, lap_eta = cutoff_derivatives(grid, cutoff)
    coef = spectral.fft(trace.values, grid)
    u = np.array(extend_with_mean(params, trace).samples)
    ut = halfspace.extend_coefficients(params, coef, grid, derivative=1).samples
    grad_u = spectral.spectral_gradient(u, grid)  # grad_u[k, i] = d_k u^i
    div = sum(grad_u[k, k] for k in range(d)) + ut[d]
    grad_eta_dot_u = spectral.spectral_gradient(sum(deta[k] * u[k] for k in range(d)), grid)
    f = np.empty_like(u)
    for i in range(d + 1):
        f[i] = mu * (2 * sum(deta[k] * grad_u[k, i] for k in range(d)) + u[i] * lap_eta)
        if i < d:
            f[i] += (mu + lam) * (deta[i] * div + grad_eta_dot_u[i])
        else:
            f[i] += (mu + lam) * sum(deta[k] * ut[k] for k in range(d))
    un0 = trace.values
    g = RealField(grid, np.stack([un0 * deta[j] for j in range(d)]))
    h = -lam * sum(u[k, 0] * deta[k] for k in range(d))
    aux = auxiliary.solve_auxiliary(params, f, g, grid)
    htilde = h + aux.htilde_contribution.values
    wbar, _ = _inverse_half(params, htilde, grid)
    vtilde = eta * un0 - wbar
    psi = phi.values * eta - wbar
    lhs = halfspace.dtn_apply(params, RealField(grid, vtilde)).values
    tau = halfspace.dtn_apply(params, trace).values
    rhs = eta * tau
    # compare up to the constant lost to the mean projection
    diff = lhs - rhs
    diff -= diff.mean()
    mismatch = float(np.max(np.abs(diff)) / max(np.max(np.abs(rhs)), 1e-300))
    support = eta > 0
    contact_global = support & (trace.values - phi.values <= active_tol)
    contact_local = support & (vtilde - psi <= active_tol * np.maximum(eta, 1e-300))
    return LocalizationReport(RealField(grid, vtilde), RealField(grid, psi), RealField(grid, htilde),
                              RealField(grid, h), g, f, RealField(grid, rhs), mismatch,
                              contact_global, contact_local)

