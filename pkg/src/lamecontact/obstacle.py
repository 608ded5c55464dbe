"""Obstacle problem for ``c (-Delta)^(1/2)`` on the windowed torus.

Find ``v`` with ``v >= psi`` on the window, ``v = g`` on the collar (``g = 0``
unless ``collar_values`` is given) and

    min(c (-Delta)^(1/2) v - rhs, v - psi) = 0        on the window
    c (-Delta)^(1/2) v - rhs = 0                      elsewhere off the collar.

This is the minimiser of ``E(v) = h^d [ (c/2) v.Av - rhs.v ]`` over the
constraint set, ``A`` being the spectral half-Laplacian.  Pinning the collar
removes the constants from the kernel of ``A``; without it the problem on a
torus degenerates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .params import DomainError, RealField


class Method(enum.Enum):
    PROJECTED_GRADIENT = "projected_gradient"
    ACCELERATED_PROJECTED_GRADIENT = "accelerated_projected_gradient"


@dataclass(frozen=True)
class ObstacleProblem:
    psi: RealField
    window: np.ndarray
    collar: np.ndarray
    rhs: RealField | None = None
    operator_constant: float = 1.0
    collar_values: RealField | None = None

    def __post_init__(self):
        g = self.psi.grid
        window = np.asarray(self.window, dtype=bool)
        collar = np.asarray(self.collar, dtype=bool)
        if window.shape != g.shape or collar.shape != g.shape:
            raise DomainError("window and collar masks must match the grid shape")
        if np.any(window & collar):
            raise DomainError("window and collar overlap")
        if not collar.any():
            raise DomainError("collar is empty; the problem is not anchored")
        if self.operator_constant < 0:
            raise DomainError("operator constant must be non-negative")
        psi = self.psi.values
        pinned = self.pinned_values()
        if np.any(psi[collar] > pinned[collar]):
            raise DomainError(f"infeasible: obstacle exceeds the pinned collar values "
                              f"(by up to {np.max(psi[collar] - pinned[collar]):.3e})")
        touching = window & _neighbours(collar)
        if np.any(psi[touching] >= 0):
            raise DomainError("obstacle must be negative on window cells next to the collar")
        object.__setattr__(self, "window", window)
        object.__setattr__(self, "collar", collar)

    @property
    def grid(self):
        return self.psi.grid

    @property
    def free(self) -> np.ndarray:
        return ~(self.window | self.collar)

    def rhs_values(self) -> np.ndarray:
        return np.zeros(self.grid.shape) if self.rhs is None else self.rhs.values

    def pinned_values(self) -> np.ndarray:
        return np.zeros(self.grid.shape) if self.collar_values is None else self.collar_values.values


def _neighbours(mask: np.ndarray) -> np.ndarray:
    out = np.zeros_like(mask)
    for ax in range(mask.ndim):
        out |= np.roll(mask, 1, axis=ax) | np.roll(mask, -1, axis=ax)
    return out


@dataclass
class ObstacleSolution:
    problem: ObstacleProblem
    v: RealField
    active_set: np.ndarray
    free_boundary: np.ndarray
    residual: float
    iterations: int
    converged: bool
    active_tol: float
    history: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def gap(self) -> np.ndarray:
        """``v - psi`` (meaningful on the window)."""
        return self.v.values - self.problem.psi.values


def _operator(problem: ObstacleProblem):
    grid = problem.grid
    sym = problem.operator_constant * spectral.frequency_lattice(grid).magnitudes

    def apply(v: np.ndarray) -> np.ndarray:
        return spectral.ifft(spectral.fft(v, grid) * sym, grid)

    lip = float(sym.max())
    return apply, lip


def energy(problem: ObstacleProblem, v: np.ndarray) -> float:
    apply, _ = _operator(problem)
    v = np.asarray(v, dtype=float)
    return problem.grid.cell_volume * float(0.5 * np.sum(v * apply(v)) - np.sum(problem.rhs_values() * v))


def _residual(problem: ObstacleProblem, v: np.ndarray, grad: np.ndarray) -> float:
    psi = problem.psi.values
    r = 0.0
    if problem.window.any():
        w = problem.window
        r = float(np.max(np.abs(np.minimum(grad[w], v[w] - psi[w]))))
    free = problem.free
    if free.any():
        r = max(r, float(np.max(np.abs(grad[free]))))
    return r


def complementarity_residual(problem: ObstacleProblem, v: RealField | np.ndarray) -> float:
    """``max |min(c A v - rhs, v - psi)|`` over the window (``|c A v - rhs|`` on free cells)."""
    vv = v.values if isinstance(v, RealField) else np.asarray(v, dtype=float)
    apply, _ = _operator(problem)
    return _residual(problem, vv, apply(vv) - problem.rhs_values())


def _project(problem: ObstacleProblem, v: np.ndarray) -> np.ndarray:
    v = np.where(problem.window, np.maximum(v, problem.psi.values), v)
    v[problem.collar] = problem.pinned_values()[problem.collar]
    return v


def obstacle_solve(problem: ObstacleProblem, max_iter: int = 50000, tol: float = 1e-9,
                   method: Method | str = Method.ACCELERATED_PROJECTED_GRADIENT,
                   record_history: bool = False, v0: np.ndarray | None = None) -> ObstacleSolution:
    """Projected gradient iteration with step ``1 / (c max|xi'|)``.

    The accelerated variant uses Nesterov momentum and drops the momentum
    (falling back to a plain projected step) whenever the energy would rise,
    so the energy is non-increasing for both methods.
    """
    method = Method(method)
    apply, lip = _operator(problem)
    rhs = problem.rhs_values()
    hvol = problem.grid.cell_volume
    step = 1.0 / lip if lip > 0 else 1.0

    def grad(v):
        return apply(v) - rhs

    def en(v, av):
        return hvol * float(0.5 * np.sum(v * av) - np.sum(rhs * v))

    v = _project(problem, np.zeros(problem.grid.shape) if v0 is None else np.array(v0, dtype=float))
    av = apply(v)
    e = en(v, av)
    y = v.copy()
    theta = 1.0
    history: list[tuple[int, float, float]] = []
    res = _residual(problem, v, av - rhs)
    if record_history:
        history.append((0, e, res))
    it = 0
    while res > tol and it < max_iter:
        it += 1
        if method is Method.ACCELERATED_PROJECTED_GRADIENT:
            cand = _project(problem, y - step * grad(y))
            ac = apply(cand)
            ec = en(cand, ac)
            if ec > e:
                theta = 1.0
                cand = _project(problem, v - step * (av - rhs))
                ac = apply(cand)
                ec = en(cand, ac)
                y = cand.copy()
            else:
                theta_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
                y = cand + ((theta - 1.0) / theta_next) * (cand - v)
                theta = theta_next
        else:
            cand = _project(problem, v - step * (av - rhs))
            ac = apply(cand)
            ec = en(cand, ac)
        v, av, e = cand, ac, ec
        res = _residual(problem, v, av - rhs)
        if record_history:
            history.append((it, e, res))
    return _finish(problem, v, res, it, res <= tol, tol, history)


def _finish(problem, v, res, it, converged, tol, history) -> ObstacleSolution:
    active_tol = 10.0 * tol
    gap = v - problem.psi.values
    active = problem.window & (gap <= active_tol)
    sol = ObstacleSolution(problem, RealField(problem.grid, v), active, np.empty((0, problem.grid.boundary_dim)),
                           float(res), int(it), bool(converged), active_tol, history)
    sol.free_boundary = extract_free_boundary(sol)
    return sol


def dense_operator(problem: ObstacleProblem) -> np.ndarray:
    return problem.operator_constant * spectral.dense_half_laplacian(problem.grid)


def psor_dense(problem: ObstacleProblem, omega: float = 1.0, tol: float = 1e-9,
               max_sweeps: int = 200000) -> ObstacleSolution:
    """Projected SOR on the explicitly assembled operator matrix (small grids only).

    Collar nodes are eliminated (their values are fixed); window nodes are
    clamped to the obstacle after each scalar update.
    """
    grid = problem.grid
    if grid.size > 4096:
        raise DomainError("dense PSOR is limited to 4096 nodes")
    K = dense_operator(problem)
    keep = np.flatnonzero(~problem.collar.ravel())
    fixed = np.flatnonzero(problem.collar.ravel())
    pinned = problem.pinned_values().ravel()
    b = problem.rhs_values().ravel()[keep] - K[np.ix_(keep, fixed)] @ pinned[fixed]
    K = K[np.ix_(keep, keep)]
    psi = problem.psi.values.ravel()[keep]
    clamp = problem.window.ravel()[keep]
    lo = np.where(clamp, psi, -np.inf)
    diag = np.diag(K).copy()
    x = np.maximum(np.zeros(keep.size), lo)
    Kx = K @ x
    rows = [K[i] for i in range(keep.size)]
    res = np.inf
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        for i in range(keep.size):
            ri = Kx[i] - b[i]
            xi = x[i] - omega * ri / diag[i]
            if xi < lo[i]:
                xi = lo[i]
            dx = xi - x[i]
            if dx != 0.0:
                x[i] = xi
                Kx += dx * rows[i]
        g = Kx - b
        res = float(np.max(np.abs(np.where(clamp, np.minimum(g, x - psi), g))))
        if res <= tol:
            break
    v = pinned.copy()
    v[keep] = x
    v = v.reshape(grid.shape)
    return _finish(problem, v, res, sweeps, res <= tol, tol, [])


def extract_free_boundary(sol: ObstacleSolution) -> np.ndarray:
    """Points where the contact mask changes between neighbouring window nodes.

    Near a regular free-boundary point the gap ``v - psi`` grows like
    ``dist^(3/2)``, so ``gap^(2/3)`` is close to linear there.  Each crossing is
    located by extrapolating ``gap^(2/3)`` from the first two non-contact
    nodes to zero, clipped to the cell between the contact and non-contact
    node (midpoint if the second node is unavailable).  Returns ``(k, d)``.
    """
    prob = sol.problem
    grid = prob.grid
    q = np.maximum(sol.gap, 0.0) ** (2.0 / 3.0)
    mask = sol.active_set
    win = prob.window
    coords = grid.coords()
    h = grid.spacing
    n = grid.points_per_dim
    pts = []
    for ax in range(grid.boundary_dim):
        change = win & np.roll(win, -1, axis=ax) & (mask != np.roll(mask, -1, axis=ax))
        # exclude the wrap-around pair
        idx = [slice(None)] * grid.boundary_dim
        idx[ax] = -1
        change[tuple(idx)] = False
        for cell in zip(*np.nonzero(change)):
            nxt = list(cell)
            nxt[ax] = (cell[ax] + 1) % n
            nxt = tuple(nxt)
            # b is the non-contact node, c the one beyond it; step points away from contact
            if mask[cell]:
                b, step = nxt, 1
            else:
                b, step = cell, -1
            c = list(b)
            c[ax] = (b[ax] + step) % n
            c = tuple(c)
            frac = 0.5
            if win[c] and not mask[c] and q[c] > q[b]:
                frac = float(np.clip(q[b] / (q[c] - q[b]), 0.0, 1.0))
            p = np.array([co[b] for co in coords], dtype=float)
            p[ax] -= step * frac * h
            pts.append(p)
    if not pts:
        return np.empty((0, grid.boundary_dim))
    return np.array(pts)
