"""Free-boundary diagnostics: the 3/2-homogeneous Lamé profile, vanishing orders,
contact densities and point classification."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .params import DomainError, GridSpec, LameParams, RealField


@dataclass(frozen=True)
class P32Profile:
    """3/2-homogeneous Lamé solution in the plane spanned by ``direction`` and ``e_n``.

    With ``s = direction . x'`` and ``(s, t) = r (cos theta, sin theta)``:

        p.e   = sign r^(3/2) (a  cos(3 theta/2) - b cos(theta/2))
        p.e_n = sign r^(3/2) (c3 sin(3 theta/2) - b sin(theta/2))

    For ``sign = -1`` the normal trace vanishes on ``theta = 0`` (contact side)
    and is positive on ``theta = pi``.
    """

    params: LameParams
    direction: tuple[float, ...] = (1.0,)
    sign: int = -1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise DomainError("sign must be +1 or -1")
        e = np.asarray(self.direction, dtype=float)
        nrm = float(np.linalg.norm(e))
        if nrm == 0:
            raise DomainError("direction must be nonzero")
        object.__setattr__(self, "direction", tuple(e / nrm))

    @property
    def a(self) -> float:
        mu, lam = self.params.mu, self.params.lam
        return (3 * mu + lam + 0.5 * (mu + lam)) / (6 * mu)

    @property
    def c3(self) -> float:
        mu, lam = self.params.mu, self.params.lam
        return (3 * mu + lam - 0.5 * (mu + lam)) / (6 * mu)

    @property
    def b(self) -> float:
        return (self.params.mu + self.params.lam) / (4 * self.params.mu)


def p32_eval(profile: P32Profile, r, theta) -> np.ndarray:
    """Components ``(p.e, p.e_n)`` at polar points; output shape ``(2, *broadcast)``."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be non-negative")
    if np.any((theta < 0) | (theta > np.pi)):
        raise DomainError("angle must lie in [0, pi]")
    r32 = profile.sign * r**1.5
    tang = r32 * (profile.a * np.cos(1.5 * theta) - profile.b * np.cos(0.5 * theta))
    norm = r32 * (profile.c3 * np.sin(1.5 * theta) - profile.b * np.sin(0.5 * theta))
    return np.stack(np.broadcast_arrays(tang, norm))


def p32_cartesian(profile: P32Profile, s, t) -> np.ndarray:
    """``p32_eval`` at in-plane Cartesian points ``(s, t)`` with ``t >= 0``."""
    s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
    if np.any(t < 0):
        raise DomainError("profile is defined for t >= 0")
    return p32_eval(profile, np.hypot(s, t), np.arctan2(t, s))


def p32_boundary_trace(profile: P32Profile, s) -> np.ndarray:
    """Normal component on ``t = 0`` as a function of the signed coordinate ``s``."""
    return p32_cartesian(profile, s, np.zeros_like(np.asarray(s, float)))[1]


@dataclass(frozen=True)
class P32Report:
    pde_residual: float
    bc_residual: float
    sigma_contact: np.ndarray
    sigma_noncontact: np.ndarray
    normal_trace_noncontact: np.ndarray
    complementarity: dict


def p32_validate(profile: P32Profile, h: float) -> P32Report:
    """Finite-difference checks of the profile on the annulus ``0.5 <= r <= 1``.

    ``pde_residual`` is the max centred Lamé residual at annulus nodes with
    ``t >= h``; ``bc_residual`` the max tangential traction
    ``d_t(p.e) + d_s(p.e_n)`` on both boundary rays (one-sided in ``t``).
    ``sigma_*`` is ``2 mu d_t(p.e_n) + lam div p`` on the contact ray
    (``theta = 0``) and on the other ray.
    """
    if not 4 * h < 1:
        raise DomainError("spacing too coarse for the annulus stencils")
    mu, lam = profile.params.mu, profile.params.lam
    n = int(round(1.0 / h))
    s = np.arange(-n - 2, n + 3) * h
    t = np.arange(0, n + 3) * h
    S, T = np.meshgrid(s, t, indexing="ij")
    p = p32_cartesian(profile, S, T)
    u, v = p

    def d2s(f):
        return (f[2:, 1:-1] - 2 * f[1:-1, 1:-1] + f[:-2, 1:-1]) / h**2

    def d2t(f):
        return (f[1:-1, 2:] - 2 * f[1:-1, 1:-1] + f[1:-1, :-2]) / h**2

    def dst(f):
        return (f[2:, 2:] - f[2:, :-2] - f[:-2, 2:] + f[:-2, :-2]) / (4 * h * h)

    r1 = (2 * mu + lam) * d2s(u) + mu * d2t(u) + (mu + lam) * dst(v)
    r2 = mu * d2s(v) + (2 * mu + lam) * d2t(v) + (mu + lam) * dst(u)
    rr = np.hypot(S, T)[1:-1, 1:-1]
    inside = (rr >= 0.5) & (rr <= 1.0)
    pde = float(np.max(np.hypot(r1, r2)[inside]))

    # boundary row t = 0
    def dt0(f):
        return (-3 * f[:, 0] + 4 * f[:, 1] - f[:, 2]) / (2 * h)

    def ds0(f):
        out = np.full(f.shape[0], np.nan)
        out[1:-1] = (f[2:, 0] - f[:-2, 0]) / (2 * h)
        return out

    tang = dt0(u) + ds0(v)
    sigma = 2 * mu * dt0(v) + lam * (ds0(u) + dt0(v))
    pos = (s >= 0.5) & (s <= 1.0)
    neg = (s <= -0.5) & (s >= -1.0)
    bc = float(np.max(np.abs(tang[pos | neg])))
    sig_c, sig_nc = sigma[pos], sigma[neg]
    trace_nc = v[neg, 0]
    comp = {
        "sigma_contact_min": float(sig_c.min()),
        "sigma_contact_max": float(sig_c.max()),
        "sigma_noncontact_max_abs": float(np.max(np.abs(sig_nc))),
        "normal_trace_contact_max_abs": float(np.max(np.abs(v[pos, 0]))),
        "normal_trace_noncontact_min": float(trace_nc.min()),
        "normal_trace_noncontact_max": float(trace_nc.max()),
        # with this sign the constraint u^n >= 0 and compressive contact stress hold
        "sign_admissible": bool(trace_nc.min() >= 0 and sig_c.max() <= 0),
    }
    return P32Report(pde, bc, sig_c, sig_nc, trace_nc, comp)


@dataclass(frozen=True)
class VanishingOrderFit:
    point: np.ndarray
    radii: np.ndarray
    averages: np.ndarray
    slope: float
    confidence: float


def _ball(grid: GridSpec, x0, r: float) -> np.ndarray:
    return grid.distance(x0) <= r


def _taylor_affine(values: np.ndarray, grid: GridSpec, x0) -> np.ndarray:
    """First-order Taylor polynomial at ``x0`` from linear interpolation and centred differences."""
    x0 = np.broadcast_to(np.asarray(x0, float), (grid.boundary_dim,))
    h = grid.spacing
    L = grid.period
    idx = [int(np.floor((x + L / 2) / h)) for x in x0]
    frac = [(x + L / 2) / h - i for x, i in zip(x0, idx)]

    def sample(offset):
        # multilinear interpolation at x0 + offset * h along each axis
        total = 0.0
        for corner in np.ndindex(*([2] * grid.boundary_dim)):
            w = 1.0
            cell = []
            for ax, c in enumerate(corner):
                w *= frac[ax] if c else 1 - frac[ax]
                cell.append((idx[ax] + c + offset[ax]) % grid.points_per_dim)
            total += w * values[tuple(cell)]
        return total

    zero = [0] * grid.boundary_dim
    val = sample(zero)
    grads = []
    for ax in range(grid.boundary_dim):
        plus, minus = list(zero), list(zero)
        plus[ax], minus[ax] = 1, -1
        grads.append((sample(plus) - sample(minus)) / (2 * h))
    off = [np.mod(x - c + L / 2, L) - L / 2 for x, c in zip(grid.coords(), x0)]
    return val + sum(g * o for g, o in zip(grads, off))


def _line_average(values: np.ndarray, grid: GridSpec, x0: float, r: float) -> float:
    """Root mean square over ``[x0 - r, x0 + r]`` of the periodic piecewise-linear interpolant."""
    h, L = grid.spacing, grid.period
    x = grid.axis()
    inner = np.arange(np.ceil((x0 - r) / h), np.floor((x0 + r) / h) + 1) * h
    knots = np.unique(np.concatenate([[x0 - r], inner, [x0 + r]]))
    xs = np.concatenate([x - L, x, x + L, [x[0] + 2 * L]])
    vs = np.concatenate([values, values, values, [values[0]]])
    # shift into the central period before interpolating
    shift = np.floor((x0 + L / 2) / L) * L
    f = np.interp(knots - shift, xs, vs)
    a, b = f[:-1], f[1:]
    integral = np.sum(np.diff(knots) * (a * a + a * b + b * b) / 3)
    return float(np.sqrt(integral / (2 * r)))


def vanishing_order(trace: RealField, x0, radii, affine_removal: bool = False) -> VanishingOrderFit:
    """Log-log slope of ``r^(-d/2) ||u - p1||_{L^2(B_r(x0))}`` over ``radii``.

    ``p1`` is the first-order Taylor polynomial at ``x0`` when
    ``affine_removal`` is set and zero otherwise.  On a line the norm is
    integrated exactly for the piecewise-linear interpolant, so ``x0`` need
    not be a node.  In two dimensions the nodal quadrature over the discrete
    disc is used, fitted against the radius of the disc with the same area as
    its nodes.  Averages are normalised by the ball measure, which only shifts
    the intercept.
    """
    grid = trace.grid
    radii = np.asarray(radii, dtype=float)
    h = grid.spacing
    if radii.size < 4:
        raise DomainError("need at least 4 radii")
    if np.any(radii < 2 * h * (1 - 1e-9)):
        raise DomainError(f"radii below 2h = {2 * h:.3g} are not resolved")
    if radii.max() / radii.min() < 8 * (1 - 1e-9):
        raise DomainError("radii must span a factor of at least 8")
    vals = trace.values
    if affine_removal:
        vals = vals - _taylor_affine(vals, grid, x0)
    if grid.boundary_dim == 1:
        x = float(np.ravel(x0)[0])
        reff = radii
        avg = np.array([_line_average(vals, grid, x, r) for r in radii])
    else:
        reff, avg = [], []
        for r in radii:
            ball = _ball(grid, x0, r)
            reff.append(np.sqrt(ball.sum() * grid.cell_volume / np.pi))
            avg.append(np.sqrt(np.mean(vals[ball] ** 2)))
        reff, avg = np.array(reff), np.array(avg)
    if np.any(avg <= 0):
        raise DomainError("function vanishes identically on a ball; order undefined")
    X, Y = np.log(reff), np.log(avg)
    coef, *_ = np.linalg.lstsq(np.stack([X, np.ones_like(X)], axis=1), Y, rcond=None)
    resid = Y - (coef[0] * X + coef[1])
    return VanishingOrderFit(np.atleast_1d(np.asarray(x0, float)), radii, avg, float(coef[0]),
                             float(np.sqrt(np.mean(resid**2))))


class PointLabel(enum.Enum):
    REGULAR = "regular"
    SINGULAR_CANDIDATE = "singular_candidate"
    UNDETERMINED = "undetermined"


def classify_point(fit: VanishingOrderFit | float, density: float, margin: float = 0.15,
                   density_threshold: float = 0.1) -> PointLabel:
    slope = fit.slope if isinstance(fit, VanishingOrderFit) else float(fit)
    if slope < 2 - margin:
        return PointLabel.REGULAR
    if density < density_threshold:
        return PointLabel.SINGULAR_CANDIDATE
    return PointLabel.UNDETERMINED


def contact_density(mask: np.ndarray, grid: GridSpec, x0, radii) -> tuple[np.ndarray, np.ndarray]:
    """Fraction of masked nodes in each discrete ball; returns ``(kept_radii, densities)``.

    Radii below ``2h`` are dropped with a warning.
    """
    mask = np.asarray(mask, dtype=bool)
    radii = np.asarray(radii, dtype=float)
    small = radii < 2 * grid.spacing
    if small.any():
        warnings.warn(f"dropping {int(small.sum())} radii below 2h", stacklevel=2)
    radii = radii[~small]
    dens = []
    for r in radii:
        ball = _ball(grid, x0, r)
        dens.append(mask[ball].sum() / ball.sum())
    return radii, np.array(dens)


def contact_direction(mask: np.ndarray, grid: GridSpec, x0, radius: float) -> np.ndarray:
    """Unit vector from ``x0`` towards the centroid of the contact nodes within ``radius``."""
    x0 = np.broadcast_to(np.asarray(x0, float), (grid.boundary_dim,))
    L = grid.period
    off = np.stack([np.mod(x - c + L / 2, L) - L / 2 for x, c in zip(grid.coords(), x0)])
    sel = np.asarray(mask, bool) & _ball(grid, x0, radius)
    if not sel.any():
        raise DomainError("no contact nodes near the point")
    e = off[:, sel].mean(axis=1)
    nrm = np.linalg.norm(e)
    if nrm == 0:
        raise DomainError("contact set is balanced around the point; no direction")
    return e / nrm


def profile_correlation(gap: RealField, mask: np.ndarray, params: LameParams, x0,
                        inner: float, outer: float) -> float:
    """Normalised inner product of ``gap`` with the profile's normal trace on an annulus.

    The profile is oriented so that its vanishing side points into the
    contact set.
    """
    grid = gap.grid
    e = contact_direction(mask, grid, x0, outer)
    x0 = np.broadcast_to(np.asarray(x0, float), (grid.boundary_dim,))
    L = grid.period
    off = [np.mod(x - c + L / 2, L) - L / 2 for x, c in zip(grid.coords(), x0)]
    s = sum(ei * o for ei, o in zip(e, off))
    dist = grid.distance(x0)
    ring = (dist >= inner) & (dist <= outer)
    prof = p32_boundary_trace(P32Profile(params, tuple(e), -1), s)
    a, b = gap.values[ring], prof[ring]
    den = np.linalg.norm(a) * np.linalg.norm(b)
    return float(a @ b / den) if den > 0 else 0.0


@dataclass(frozen=True)
class PointReport:
    point: np.ndarray
    slope: float
    confidence: float
    density: float
    label: PointLabel


def classify_free_boundary(gap: RealField, mask: np.ndarray, points: np.ndarray, radii,
                           margin: float = 0.15, density_threshold: float = 0.1
                           ) -> list[PointReport]:
    """Vanishing-order fit, smallest-radius contact density and label at each point."""
    out = []
    for x0 in np.atleast_2d(points):
        fit = vanishing_order(gap, x0, radii)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _, dens = contact_density(mask, gap.grid, x0, radii)
        density = float(dens[0]) if dens.size else float("nan")
        out.append(PointReport(np.asarray(x0), fit.slope, fit.confidence, density,
                               classify_point(fit, density, margin, density_threshold)))
    return out
