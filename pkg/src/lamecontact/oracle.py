"""Direct finite-difference solver for the two-dimensional Signorini problem.

The strip ``x in [-L/2, L/2)`` (periodic) times ``0 <= t <= T`` carries nodal
unknowns ``(u^1, u^n)``.  Bulk rows use centred second differences, the
tangential boundary row ``d_t u^1 + d_x u^n = 0`` and the traction at
``t = 0`` use one-sided second-order differences in ``t``.  The top row is
clamped (``u = 0``), or with ``top="floating_mean"`` only the fluctuating part
of ``u^n`` is clamped while its mean is free with zero mean normal strain,
which makes the mean traction-free as on the unbounded half-space.

Everything except the normal boundary displacement ``b = u^n(., 0)`` enters
linearly, so the bulk block is factorised once (sparse LU) and eliminated,
leaving ``tau = tau0 + S b`` for the boundary traction.  The contact
conditions are then enforced by projected Gauss-Seidel sweeps over ``b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .params import DomainError, LameParams


@dataclass(frozen=True)
class StripMesh:
    points: int
    levels: int
    period: float
    depth: float

    def __post_init__(self):
        if self.points % 2 or self.points < 8:
            raise DomainError("points must be even and >= 8")
        if self.points > 128 or self.levels > 128:
            raise DomainError("the direct solver is capped at 128 x 128")
        if self.levels < 3:
            raise DomainError("need at least 3 levels")
        if self.dt > self.h * (1 + 1e-12):
            raise DomainError(f"vertical step {self.dt:.4g} exceeds tangential spacing {self.h:.4g}")

    @property
    def h(self) -> float:
        return self.period / self.points

    @property
    def dt(self) -> float:
        return self.depth / self.levels

    def axis(self) -> np.ndarray:
        return (np.arange(self.points) - self.points // 2) * self.h

    def heights(self) -> np.ndarray:
        return np.arange(self.levels + 1) * self.dt


@dataclass
class DirectSolution:
    mesh: StripMesh
    displacement: np.ndarray
    traction: np.ndarray
    contact: np.ndarray
    residual: float
    sweeps: int
    converged: bool
    history: list[tuple[int, float]] = field(default_factory=list)

    @property
    def trace(self) -> np.ndarray:
        return self.displacement[1, 0]


class _System:
    """Sparse assembly; unknown ``(c, m, i)`` has index ``(c*(M+1) + m)*N + i``."""

    def __init__(self, params: LameParams, mesh: StripMesh, top: str):
        self.params, self.mesh, self.top = params, mesh, top
        N, M = mesh.points, mesh.levels
        self.N, self.M = N, M
        self.size = 2 * (M + 1) * N
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []

    def idx(self, c, m, i):
        return (c * (self.M + 1) + m) * self.N + (i % self.N)

    def add(self, r, c, m, i, v):
        self.rows.append(r)
        self.cols.append(self.idx(c, m, i))
        self.vals.append(v)

    def matrix(self):
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(self.size, self.size))

    def assemble(self):
        mu, lam = self.params.mu, self.params.lam
        h, dt = self.mesh.h, self.mesh.dt
        N, M = self.N, self.M
        cxx, ctt, cxt = 1 / h**2, 1 / dt**2, 1 / (4 * h * dt)
        for m in range(1, M):
            for i in range(N):
                # row for u^1: (2mu+lam) u1_xx + mu u1_tt + (mu+lam) u2_xt
                r = self.idx(0, m, i)
                a, b = (2 * mu + lam), mu
                self.add(r, 0, m, i - 1, a * cxx); self.add(r, 0, m, i + 1, a * cxx)
                self.add(r, 0, m - 1, i, b * ctt); self.add(r, 0, m + 1, i, b * ctt)
                self.add(r, 0, m, i, -2 * a * cxx - 2 * b * ctt)
                self._mixed(r, 1, m, i, (mu + lam) * cxt)
                # row for u^n: mu u2_xx + (2mu+lam) u2_tt + (mu+lam) u1_xt
                r = self.idx(1, m, i)
                a, b = mu, (2 * mu + lam)
                self.add(r, 1, m, i - 1, a * cxx); self.add(r, 1, m, i + 1, a * cxx)
                self.add(r, 1, m - 1, i, b * ctt); self.add(r, 1, m + 1, i, b * ctt)
                self.add(r, 1, m, i, -2 * a * cxx - 2 * b * ctt)
                self._mixed(r, 0, m, i, (mu + lam) * cxt)
        for i in range(N):
            # tangential boundary row: d_t u^1 + d_x u^n = 0 at t = 0
            r = self.idx(0, 0, i)
            self.add(r, 0, 0, i, -3 / (2 * dt)); self.add(r, 0, 1, i, 4 / (2 * dt))
            self.add(r, 0, 2, i, -1 / (2 * dt))
            self.add(r, 1, 0, i + 1, 1 / (2 * h)); self.add(r, 1, 0, i - 1, -1 / (2 * h))
            # top rows
            r = self.idx(0, M, i)
            self.add(r, 0, M, i, 1.0)
            r = self.idx(1, M, i)
            if self.top == "dirichlet":
                self.add(r, 1, M, i, 1.0)
            elif i > 0:
                self.add(r, 1, M, i, 1.0); self.add(r, 1, M, 0, -1.0)
        if self.top == "floating_mean":
            r = self.idx(1, M, 0)
            for i in range(N):
                self.add(r, 1, M, i, 3.0); self.add(r, 1, M - 1, i, -4.0); self.add(r, 1, M - 2, i, 1.0)
        return self.matrix()

    def _mixed(self, r, c, m, i, coef):
        self.add(r, c, m + 1, i + 1, coef); self.add(r, c, m + 1, i - 1, -coef)
        self.add(r, c, m - 1, i + 1, -coef); self.add(r, c, m - 1, i - 1, coef)

    def traction_operator(self):
        """Sparse rows giving ``-(2mu+lam) D_t u^n - lam D_x u^1`` at ``t = 0``."""
        mu, lam = self.params.mu, self.params.lam
        h, dt = self.mesh.h, self.mesh.dt
        N = self.N
        rows, cols, vals = [], [], []
        for i in range(N):
            for m, w in ((0, -3.0), (1, 4.0), (2, -1.0)):
                rows.append(i); cols.append(self.idx(1, m, i)); vals.append(-(2 * mu + lam) * w / (2 * dt))
            rows.append(i); cols.append(self.idx(0, 0, i + 1)); vals.append(-lam / (2 * h))
            rows.append(i); cols.append(self.idx(0, 0, i - 1)); vals.append(lam / (2 * h))
        return sp.csr_matrix((vals, (rows, cols)), shape=(N, self.size))


def direct_signorini_solve(params: LameParams, mesh: StripMesh, F: np.ndarray | None,
                           phi: np.ndarray, window: np.ndarray | None = None,
                           collar: np.ndarray | None = None, tol: float = 1e-10,
                           max_iter: int = 200000, omega: float = 1.0,
                           top: str = "floating_mean") -> DirectSolution:
    """Solve the Signorini problem on the strip.

    ``F`` has shape ``(2, M+1, N)`` (nodal force, only interior levels are
    used) and ``phi`` shape ``(N,)``.  Window nodes carry the unilateral
    constraint, collar nodes are pinned to ``u^n = 0`` and the remaining
    boundary nodes are traction-free.
    """
    if top not in ("dirichlet", "floating_mean"):
        raise DomainError(f"unknown top condition {top!r}")
    N, M = mesh.points, mesh.levels
    phi = np.asarray(phi, dtype=float)
    window = np.ones(N, bool) if window is None else np.asarray(window, bool)
    collar = np.zeros(N, bool) if collar is None else np.asarray(collar, bool)
    if np.any(window & collar):
        raise DomainError("window and collar overlap")
    if np.any(phi[collar] > 0):
        raise DomainError("obstacle is positive on the collar")

    sysm = _System(params, mesh, top)
    K = sysm.assemble()
    Tr = sysm.traction_operator()
    bidx = np.array([sysm.idx(1, 0, i) for i in range(N)])
    rest = np.setdiff1d(np.arange(sysm.size), bidx)
    # the u^n(., 0) rows are the contact rows; drop them from the linear block
    Kzz = K[rest][:, rest].tocsc()
    Kzb = K[rest][:, bidx].toarray()
    rhs = np.zeros(sysm.size)
    if F is not None:
        F = np.asarray(F, dtype=float)
        for c in range(2):
            for m in range(1, M):
                rhs[sysm.idx(c, m, 0):sysm.idx(c, m, 0) + N] = F[c, m]
    lu = spla.splu(Kzz)
    z0 = lu.solve(rhs[rest])
    Zb = lu.solve(-Kzb)
    Tz = Tr[:, rest]
    Tb = Tr[:, bidx].toarray()
    tau0 = Tz @ z0
    S = Tb + Tz @ Zb

    lo = np.where(window, phi, -np.inf)
    b = np.where(window, np.maximum(phi, 0.0), 0.0)
    b[collar] = 0.0
    active_nodes = np.flatnonzero(~collar)
    diag = np.diag(S)
    tau = tau0 + S @ b
    history = []
    res = np.inf
    sweeps = 0
    while sweeps < max_iter:
        sweeps += 1
        for i in active_nodes:
            bi = b[i] - omega * tau[i] / diag[i]
            if bi < lo[i]:
                bi = lo[i]
            db = bi - b[i]
            if db != 0.0:
                b[i] = bi
                tau += db * S[:, i]
        tau = tau0 + S @ b
        res = _residual(tau, b, phi, window, collar)
        history.append((sweeps, res))
        if res <= tol:
            break
    z = z0 + Zb @ b
    u = np.empty(sysm.size)
    u[rest] = z
    u[bidx] = b
    disp = u.reshape(2, M + 1, N)
    contact = window & (b - phi <= 10 * tol)
    return DirectSolution(mesh, disp, tau, contact, res, sweeps, res <= tol, history)


def _residual(tau, b, phi, window, collar):
    r = np.where(window, np.minimum(tau, b - phi), tau)
    r[collar] = 0.0
    return float(np.max(np.abs(r)))


def bulk_residual(params: LameParams, sol: DirectSolution, F: np.ndarray | None = None) -> float:
    """Max of the discrete bulk rows (should be at round-off after a solve)."""
    mesh = sol.mesh
    sysm = _System(params, mesh, "dirichlet")
    K = sysm.assemble()
    r = (K @ sol.displacement.ravel()).reshape(2, mesh.levels + 1, mesh.points)[:, 1:-1]
    if F is not None:
        r = r - np.asarray(F)[:, 1:-1]
    return float(np.max(np.abs(r)))
