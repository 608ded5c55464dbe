"""Flat ``section.key = value`` experiment configuration."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

EXPERIMENTS = ("verify_symbol", "verify_kernel", "solve_obstacle", "solve_signorini",
               "oracle_compare", "regularity_study", "singular_study")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _positive(v):
    return v > 0


def _non_negative(v):
    return v >= 0


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


# key -> (parser, default, check, description of the check)
SCHEMA = {
    "experiment": (str, "solve_signorini", lambda v: v in EXPERIMENTS, f"one of {', '.join(EXPERIMENTS)}"),
    "seed": (int, 0, _non_negative, "a non-negative integer"),
    "material.mu": (float, 1.0, _positive, "positive"),
    "material.lambda": (float, 1.0, _positive, "positive"),
    "grid.dim": (int, 1, lambda v: v in (1, 2), "1 or 2"),
    "grid.N": (int, 64, lambda v: v >= 8 and v % 2 == 0, "even and >= 8"),
    "grid.L": (float, 6.283185307179586, _positive, "positive"),
    "grid.levels": (int, 0, _non_negative, "non-negative (0 means N)"),
    "grid.T": (float, 0.0, _non_negative, "non-negative (0 means L)"),
    "problem.obstacle": (str, "bump", lambda v: v in ("bump", "constant"), "bump or constant"),
    "problem.obstacle_height": (float, 0.3, None, ""),
    "problem.obstacle_floor": (float, -1.0, lambda v: v <= 0, "non-positive"),
    "problem.obstacle_value": (float, -1.0, lambda v: v <= 0, "non-positive"),
    "problem.force": (str, "none", lambda v: v in ("none", "gaussian"), "none or gaussian"),
    "force.amplitude": (float, 0.0, None, ""),
    "force.width": (float, 0.3, _positive, "positive"),
    "force.depth": (float, 1.0, _positive, "positive"),
    "cutoff.center": (_floats, (0.0,), None, ""),
    "cutoff.inner": (float, 1.5, _positive, "positive"),
    "cutoff.outer": (float, 2.5, _positive, "positive"),
    "solver.tol": (float, 1e-10, _positive, "positive"),
    "solver.max_iter": (int, 100000, _positive, "positive"),
    "solver.method": (str, "accelerated_projected_gradient",
                      lambda v: v in ("projected_gradient", "accelerated_projected_gradient"),
                      "projected_gradient or accelerated_projected_gradient"),
    "oracle.top": (str, "floating_mean", lambda v: v in ("floating_mean", "dirichlet"),
                   "floating_mean or dirichlet"),
    "oracle.refine": (int, 1, lambda v: v in (0, 1), "0 or 1"),
    "analysis.radius_min_cells": (float, 4.0, lambda v: v >= 2, ">= 2"),
    "analysis.radius_max": (float, 0.2, _positive, "positive"),
    "analysis.radius_count": (int, 6, lambda v: v >= 4, ">= 4"),
    "analysis.margin": (float, 0.15, _non_negative, "non-negative"),
    "analysis.density_threshold": (float, 0.1, _non_negative, "non-negative"),
    "analysis.samples": (int, 20, _positive, "positive"),
    "output.dir": (str, "out", None, ""),
}


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)
    source: str = ""

    def __getitem__(self, key):
        return self.values[key]

    @property
    def experiment(self) -> str:
        return self.values["experiment"]

    @property
    def levels(self) -> int:
        return self.values["grid.levels"] or self.values["grid.N"]

    @property
    def depth(self) -> float:
        return self.values["grid.T"] or self.values["grid.L"]

    def echo(self) -> list[tuple[str, str]]:
        """Resolved settings as ``(key, text)`` pairs in schema order."""
        out = []
        for key in SCHEMA:
            v = self.values[key]
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            out.append((key, str(v)))
        return out


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Unknown keys are errors."""
    values = {k: entry[1] for k, entry in SCHEMA.items()}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first on line {seen[key]})", lineno)
        seen[key] = lineno
        parse, _, check, desc = SCHEMA[key]
        try:
            parsed = parse(val)
        except ValueError:
            raise ConfigError(f"cannot parse {val!r} for {key}", lineno) from None
        if check is not None and not check(parsed):
            raise ConfigError(f"{key} must be {desc}, got {val!r}", lineno)
        values[key] = parsed
    if values["cutoff.inner"] >= values["cutoff.outer"]:
        raise ConfigError("cutoff.inner must be smaller than cutoff.outer", seen.get("cutoff.inner"))
    if values["cutoff.outer"] > values["grid.L"] / 2:
        raise ConfigError("cutoff.outer exceeds half the period", seen.get("cutoff.outer"))
    if len(values["cutoff.center"]) not in (1, values["grid.dim"]):
        raise ConfigError("cutoff.center needs one entry or one per dimension", seen.get("cutoff.center"))
    return ExperimentConfig(values, source)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
