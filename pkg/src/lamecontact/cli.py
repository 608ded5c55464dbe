"""Command-line experiment runner.

    lamecontact run --config <path> [--out <dir>] [--seed <u64>]
    lamecontact validate-config --config <path>

Exit status: 0 success, 2 configuration error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, analysis, halfspace
from .config import ConfigError, ExperimentConfig, load_config
from .obstacle import ObstacleProblem, obstacle_solve
from .oracle import StripMesh, direct_signorini_solve
from .params import DomainError, GridSpec, RealField, derive_constants
from .pipeline import ConvergenceError, Cutoff, SignoriniProblem, signorini_solve

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 2, 3


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


class Run:
    """Collects summary entries and writes experiment CSVs into ``out``."""

    def __init__(self, cfg: ExperimentConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.summary: list[tuple[str, object]] = []
        self.files: list[str] = []
        self.status = EXIT_OK

    def csv(self, name: str, header: list[str], rows) -> None:
        write_csv(self.out / name, header, rows)
        self.files.append(name)

    def note(self, key: str, value) -> None:
        self.summary.append((key, value))

    def manifest(self) -> None:
        rows = [("timestamp", time.strftime("%Y-%m-%dT%H:%M:%S")),
                ("status", self.status),
                ("lamecontact", __version__), ("python", platform.python_version()),
                ("numpy", np.__version__), ("scipy", scipy.__version__)]
        rows += [(f"config.{k}", v) for k, v in self.cfg.echo()]
        rows += [(f"result.{k}", v) for k, v in self.summary]
        rows += [("file", f) for f in self.files]
        write_csv(self.out / "manifest.csv", ["key", "value"], rows)


def _params(cfg):
    return derive_constants(cfg["material.mu"], cfg["material.lambda"])


def _grid(cfg, N=None) -> GridSpec:
    return GridSpec.uniform(cfg["grid.dim"], cfg["grid.L"], N or cfg["grid.N"],
                            depth=cfg.depth, levels=cfg.levels if N is None else N)


def _cutoff(cfg) -> Cutoff:
    c = cfg["cutoff.center"]
    if len(c) == 1:
        c = c * cfg["grid.dim"]
    return Cutoff(tuple(c), cfg["cutoff.inner"], cfg["cutoff.outer"])


def _obstacle(cfg, grid: GridSpec, cutoff: Cutoff) -> RealField:
    if cfg["problem.obstacle"] == "constant":
        return RealField(grid, np.full(grid.shape, cfg["problem.obstacle_value"]))
    r2 = grid.distance(cutoff.center) ** 2
    return RealField(grid, np.maximum(cfg["problem.obstacle_height"] - r2, cfg["problem.obstacle_floor"]))


def _force(cfg, grid: GridSpec, cutoff: Cutoff):
    if cfg["problem.force"] == "none":
        return None
    # normal Gaussian load centred below the window
    t = np.asarray(grid.heights)
    rho2 = grid.distance(cutoff.center) ** 2
    t = t.reshape((-1,) + (1,) * grid.boundary_dim)
    w = cfg["force.width"]
    F = np.zeros((grid.boundary_dim + 1, t.size) + grid.shape)
    F[-1] = cfg["force.amplitude"] * np.exp(-(rho2 + (t - cfg["force.depth"]) ** 2) / w**2)
    return F


def _signorini(cfg, grid=None):
    params = _params(cfg)
    grid = grid or _grid(cfg)
    cutoff = _cutoff(cfg)
    prob = SignoriniProblem(params, grid, _obstacle(cfg, grid, cutoff), cutoff, _force(cfg, grid, cutoff))
    sol = signorini_solve(prob, tol=cfg["solver.tol"], max_iter=cfg["solver.max_iter"],
                          method=cfg["solver.method"], record_history=True)
    return prob, sol


def _trace_rows(grid: GridSpec, values: np.ndarray):
    coords = [c.ravel() for c in grid.coords()]
    for i, v in enumerate(np.ravel(values)):
        yield (";".join(repr(float(c[i])) for c in coords) if len(coords) > 1 else coords[0][i], v)


def _fb_rows(reports):
    for r in reports:
        yield (";".join(repr(float(c)) for c in r.point), r.slope, r.confidence, r.density, r.label.value)


def _radii(cfg, grid: GridSpec) -> np.ndarray:
    lo = cfg["analysis.radius_min_cells"] * grid.spacing
    hi = max(cfg["analysis.radius_max"], 8 * lo)
    return np.geomspace(lo, hi, cfg["analysis.radius_count"])


def run_verify_symbol(cfg, run: Run) -> None:
    rng = np.random.default_rng(cfg["seed"])
    grid = _grid(cfg)
    params = _params(cfg)
    traced = halfspace.traced_dtn_symbol(params, grid)
    closed = halfspace.dtn_symbol(params, grid)
    q = np.ravel(halfspace.spectral.frequency_lattice(grid).magnitudes)
    run.csv("spectra.csv", ["k", "re", "im"], zip(q, np.ravel(traced.real), np.ravel(traced.imag)))
    err = np.abs(traced - closed)
    run.csv("spectra_error.csv", ["k", "re", "im"], zip(q, np.ravel((traced - closed).real),
                                                        np.ravel((traced - closed).imag)))
    nz = closed > 0
    run.note("max_abs_error", float(err.max()))
    worst = float(np.max(err[nz] / closed[nz]))
    for _ in range(cfg["analysis.samples"]):
        mu, lam = rng.uniform(0.1, 10.0, 2)
        p = derive_constants(mu, lam)
        a, b = halfspace.traced_dtn_symbol(p, grid), halfspace.dtn_symbol(p, grid)
        worst = max(worst, float(np.max(np.abs(a - b)[nz] / b[nz])))
    run.note("max_rel_error_random_materials", worst)


def run_verify_kernel(cfg, run: Run) -> None:
    rng = np.random.default_rng(cfg["seed"])
    d = cfg["grid.dim"]
    rows, worst = [], 0.0
    for i in range(cfg["analysis.samples"]):
        mu, lam = rng.uniform(0.1, 10.0, 2)
        xi = rng.uniform(-5, 5, d)
        t = rng.uniform(0, 3)
        p = derive_constants(mu, lam)
        k = halfspace.extension_kernel(p, xi, t)
        wc = halfspace.fundamental_matrix(p, xi, t) @ halfspace.dirichlet_coefficients(p, xi)
        diff = np.append(k.tangential, k.normal) - wc
        j = int(np.argmax(np.abs(diff)))
        rows.append((i, diff[j].real, diff[j].imag))
        worst = max(worst, float(np.abs(diff).max()))
    run.csv("spectra.csv", ["k", "re", "im"], rows)
    run.note("max_kernel_discrepancy", worst)
    params = _params(cfg)
    xi = np.ones(d) / np.sqrt(d)
    for name, trace in halfspace.tangential_trace_candidates(params, xi).items():
        res = halfspace.boundary_condition_residual(params, xi, trace)
        run.note(f"trace_candidate.{name}.value", complex(trace[0]))
        run.note(f"trace_candidate.{name}.bc_residual", float(np.max(np.abs(res))))
    run.note("kernel_tangential_trace", complex(halfspace.extension_kernel(params, xi, 0.0).tangential[0]))


def run_solve_obstacle(cfg, run: Run) -> None:
    params = _params(cfg)
    grid = _grid(cfg)
    cutoff = _cutoff(cfg)
    phi = _obstacle(cfg, grid, cutoff)
    dist = grid.distance(cutoff.center)
    prob = ObstacleProblem(phi, dist <= cutoff.inner, dist >= cutoff.outer,
                           operator_constant=params.dtn_constant)
    sol = obstacle_solve(prob, max_iter=cfg["solver.max_iter"], tol=cfg["solver.tol"],
                         method=cfg["solver.method"], record_history=True)
    run.csv("traces.csv", ["x", "value"], _trace_rows(grid, sol.v.values))
    run.csv("convergence.csv", ["iter", "energy", "residual"], sol.history)
    run.note("residual", sol.residual)
    run.note("iterations", sol.iterations)
    run.note("contact_nodes", int(sol.active_set.sum()))
    if not sol.converged:
        raise ConvergenceError(sol)


def _free_boundary_reports(cfg, prob, sol):
    """Classify each free-boundary point from the scalar and from the vectorial solution."""
    grid = prob.grid
    radii = _radii(cfg, grid)
    kw = dict(margin=cfg["analysis.margin"], density_threshold=cfg["analysis.density_threshold"])
    scalar_sol = sol.scalar_solution
    scalar = analysis.classify_free_boundary(RealField(grid, scalar_sol.gap), scalar_sol.active_set,
                                             sol.free_boundary, radii, **kw)
    vector_gap = sol.trace_un.values - prob.phi.values
    vector_mask = prob.window & (vector_gap <= scalar_sol.active_tol)
    vector = analysis.classify_free_boundary(RealField(grid, vector_gap), vector_mask,
                                             sol.free_boundary, radii, **kw)
    return radii, scalar, vector


def run_solve_signorini(cfg, run: Run) -> None:
    prob, sol = _signorini(cfg)
    grid = prob.grid
    run.csv("traces.csv", ["x", "value"], _trace_rows(grid, sol.trace_un.values))
    run.csv("convergence.csv", ["iter", "energy", "residual"], sol.scalar_solution.history)
    run.note("residual", sol.scalar_solution.residual)
    run.note("iterations", sol.scalar_solution.iterations)
    run.note("contact_nodes", int(sol.contact_set.sum()))
    run.note("free_boundary_points", len(sol.free_boundary))
    run.note("projected_mean", sol.mean_removed)
    for msg in sol.log:
        run.note("log", msg)
    if len(sol.free_boundary):
        _, scalar, vector = _free_boundary_reports(cfg, prob, sol)
        run.csv("free_boundary.csv", ["point", "slope", "confidence", "density", "label"], _fb_rows(vector))
        run.note("labels_agree", all(a.label == b.label for a, b in zip(scalar, vector)))


def _compare(cfg, N):
    grid = GridSpec.uniform(1, cfg["grid.L"], N, depth=cfg.depth, levels=N)
    prob, sol = _signorini(cfg, grid)
    mesh = StripMesh(N, N, cfg["grid.L"], cfg.depth)
    direct = direct_signorini_solve(prob.params, mesh, None if prob.F is None else prob.F,
                                    prob.phi.values, prob.window, prob.collar, tol=cfg["solver.tol"],
                                    max_iter=cfg["solver.max_iter"], top=cfg["oracle.top"])
    if not direct.converged:
        raise DomainError(f"direct solver did not converge (residual {direct.residual:.3e})")
    scale = np.max(np.abs(sol.trace_un.values))
    disc = float(np.max(np.abs(direct.trace - sol.trace_un.values)) / scale)
    return grid, sol, direct, disc


def run_oracle_compare(cfg, run: Run) -> None:
    if cfg["grid.dim"] != 1:
        raise ConfigError("oracle_compare needs grid.dim = 1")
    if cfg["problem.force"] != "none":
        raise ConfigError("oracle_compare supports problem.force = none only")
    N = cfg["grid.N"]
    grid, sol, direct, disc = _compare(cfg, N)
    x = grid.axis()
    run.csv("traces.csv", ["x", "value"], zip(x, sol.trace_un.values))
    run.csv("traces_oracle.csv", ["x", "value"], zip(x, direct.trace))
    run.csv("convergence.csv", ["iter", "energy", "residual"], sol.scalar_solution.history)
    run.note("max_trace_discrepancy", disc)
    ends = lambda m: np.flatnonzero(m)[[0, -1]] if m.any() else np.array([-1, -1])
    run.note("contact_endpoint_offset_cells", int(np.max(np.abs(ends(sol.contact_set) - ends(direct.contact)))))
    run.note("oracle_sweeps", direct.sweeps)
    if cfg["oracle.refine"] and 2 * N <= 128:
        _, _, _, fine = _compare(cfg, 2 * N)
        run.note("max_trace_discrepancy_refined", fine)
        run.note("refinement_factor", disc / fine if fine > 0 else float("inf"))


def run_regularity_study(cfg, run: Run) -> None:
    prob, sol = _signorini(cfg)
    grid = prob.grid
    run.csv("traces.csv", ["x", "value"], _trace_rows(grid, sol.trace_un.values))
    run.csv("convergence.csv", ["iter", "energy", "residual"], sol.scalar_solution.history)
    if not len(sol.free_boundary):
        run.note("free_boundary_points", 0)
        return
    radii, scalar, vector = _free_boundary_reports(cfg, prob, sol)
    run.csv("free_boundary.csv", ["point", "slope", "confidence", "density", "label"], _fb_rows(vector))
    run.csv("free_boundary_scalar.csv", ["point", "slope", "confidence", "density", "label"], _fb_rows(scalar))
    gap = RealField(grid, sol.scalar_solution.gap)
    corr = [analysis.profile_correlation(gap, sol.contact_set, prob.params, r.point, radii[0], radii[-1])
            for r in vector]
    run.note("free_boundary_points", len(vector))
    run.note("min_profile_correlation", min(corr))
    run.note("slope_range", f"{min(r.slope for r in vector)!r};{max(r.slope for r in vector)!r}")
    run.note("labels_agree", all(a.label == b.label for a, b in zip(scalar, vector)))


def run_singular_study(cfg, run: Run) -> None:
    """Densities and labels on synthetic half-line and single-point contact sets."""
    L = cfg["grid.L"]
    sizes = (cfg["grid.N"], 2 * cfg["grid.N"], 4 * cfg["grid.N"])
    targets = {"half_line": 0.5, "single_point": 0.0}
    rows = []
    fb = {name: [] for name in targets}
    for N in sizes:
        grid = GridSpec.uniform(1, L, N)
        x = grid.axis()
        radii = np.geomspace(L / 4, 3 * L / 8, 4)
        for name, mask, trace in (("half_line", x <= 0, np.maximum(x, 0) ** 1.5),
                                  ("single_point", np.isclose(x, 0), x**2)):
            kept, dens = analysis.contact_density(mask, grid, 0.0, radii)
            rows += [(name, N, r, d) for r, d in zip(kept, dens)]
            run.note(f"{name}.N={N}.max_density_error", float(np.max(np.abs(dens - targets[name]))))
            run.note(f"{name}.N={N}.bound_2_over_N", 2.0 / N)
            fit = analysis.vanishing_order(RealField(grid, trace), 0.0, _radii(cfg, grid))
            label = analysis.classify_point(fit, float(dens[0]), cfg["analysis.margin"],
                                            cfg["analysis.density_threshold"])
            fb[name].append((0.0, fit.slope, fit.confidence, float(dens[0]), label.value))
    run.note("resolutions", ";".join(str(N) for N in sizes))
    run.csv("contact_density.csv", ["mask", "N", "radius", "density"], rows)
    for name, reports in fb.items():
        run.csv(f"free_boundary_{name}.csv", ["point", "slope", "confidence", "density", "label"], reports)


EXPERIMENT_RUNNERS = {
    "verify_symbol": run_verify_symbol,
    "verify_kernel": run_verify_kernel,
    "solve_obstacle": run_solve_obstacle,
    "solve_signorini": run_solve_signorini,
    "oracle_compare": run_oracle_compare,
    "regularity_study": run_regularity_study,
    "singular_study": run_singular_study,
}


def run_experiment(cfg: ExperimentConfig, out: str | Path | None = None) -> int:
    out = Path(out or cfg["output.dir"])
    out.mkdir(parents=True, exist_ok=True)
    run = Run(cfg, out)
    try:
        EXPERIMENT_RUNNERS[cfg.experiment](cfg, run)
    except ConvergenceError as exc:
        run.status = EXIT_NONCONVERGED
        run.note("error", str(exc))
    except (ConfigError, DomainError) as exc:
        run.status = EXIT_CONFIG
        run.note("error", str(exc))
    run.manifest()
    return run.status


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="lamecontact", description="Lamé Signorini experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the experiment described by a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    p_run.add_argument("--seed", type=int, default=None, help="seed (overrides the config)")
    p_val = sub.add_parser("validate-config", help="parse and check a config file")
    p_val.add_argument("--config", required=True)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if getattr(args, "seed", None) is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must fit in an unsigned 64-bit integer")
            cfg.values["seed"] = args.seed
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate-config":
        print(f"{args.config}: ok ({cfg.experiment})")
        return EXIT_OK
    status = run_experiment(cfg, args.out)
    if status:
        print(f"experiment {cfg.experiment} failed with status {status}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
