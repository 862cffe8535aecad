"""Experiment drivers: convergence studies, Monte-Carlo runs, report files."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .analysis import ConvergenceReport, convergence_study, norms
from .coefficients import CoefficientSpec, parse_coefficient, sample_random_beta
from .fem import (
    BoundaryCondition,
    EndpointMode,
    PiecewiseLinearFn,
    setup_problem,
)
from .geometry import cantor_extremes

__all__ = [
    "PRESETS",
    "ExperimentConfig",
    "MonteCarloRow",
    "MonteCarloReport",
    "realization_index",
    "monte_carlo",
    "run_experiment",
    "write_report",
    "metadata_path",
    "emit_plot_data",
]

PRESETS = {
    "unscaled": "constant:1",
    "scaled": "scaled:1:2:1/6",
    "geometric": "geometric:2/3",
    "random": "random:3/4:5/4",
}


@dataclass
class ExperimentConfig:
    example: str = "unscaled"
    stages: tuple[int, int] = (6, 9)
    bc: str = "dirichlet_neumann"
    endpoint_mode: str = "include"
    coefficient: CoefficientSpec | None = None
    realizations: int = 1
    experiments: int = 1
    seed: int = 0
    forcing_on: bool = True
    h1_convention: str = "full"

    def __post_init__(self):
        if self.example not in (*PRESETS, "custom"):
            raise ValueError(f"unknown example {self.example!r}")
        if isinstance(self.coefficient, str):
            self.coefficient = parse_coefficient(self.coefficient)
        if self.coefficient is None:
            if self.example == "custom":
                raise ValueError("custom experiments need an explicit coefficient")
            self.coefficient = parse_coefficient(PRESETS[self.example])
        self.bc = BoundaryCondition.parse(self.bc).value
        self.endpoint_mode = EndpointMode.parse(self.endpoint_mode).value
        lo, hi = self.stages
        if lo < 0 or hi < lo:
            raise ValueError(f"invalid stage range {lo}..{hi}")
        if self.realizations < 1 or self.experiments < 1:
            raise ValueError("realizations and experiments must be >= 1")
        if not self.coefficient.is_random and (
            self.realizations > 1 or self.experiments > 1
        ):
            raise ValueError("realizations/experiments > 1 need a random coefficient")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def stage_range(self) -> range:
        return range(self.stages[0], self.stages[1] + 1)

    def metadata(self) -> dict:
        return {
            "example": self.example,
            "stages": list(self.stages),
            "coefficient": self.coefficient.to_string(),
            "bc": self.bc,
            "endpoint_mode": self.endpoint_mode,
            "forcing": "cantor" if self.forcing_on else "none",
            "h1_convention": self.h1_convention,
            "realizations": self.realizations,
            "experiments": self.experiments,
            "seed": self.seed,
        }


@dataclass
class MonteCarloRow:
    experiment: int
    l2_error: float
    h1_error: float


@dataclass
class MonteCarloReport:
    stage: int
    rows: list[MonteCarloRow]
    metadata: dict = field(default_factory=dict)

    def _col(self, name):
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    @property
    def average(self) -> tuple[float, float]:
        return tuple(float(np.mean(self._col(k))) for k in ("l2_error", "h1_error"))

    @property
    def variance(self) -> tuple[float, float]:
        """Sample variance (ddof = 1) across experiments; 0 for a single one."""
        if len(self.rows) < 2:
            return (0.0, 0.0)
        return tuple(
            float(np.var(self._col(k), ddof=1)) for k in ("l2_error", "h1_error")
        )

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("experiment", "l2_error", "h1_error"))
            for r in self.rows:
                w.writerow((r.experiment, f"{r.l2_error:.15g}", f"{r.h1_error:.15g}"))
            if self.rows:
                w.writerow(("Average", *(f"{v:.15g}" for v in self.average)))
                w.writerow(("Variance", *(f"{v:.15g}" for v in self.variance)))

    def to_dict(self) -> dict:
        return {
            "metadata": dict(self.metadata, stage=self.stage),
            "rows": [asdict(r) for r in self.rows],
            "average": list(self.average) if self.rows else None,
            "variance": list(self.variance) if self.rows else None,
        }


Report = Union[ConvergenceReport, MonteCarloReport]


def realization_index(experiment: int, realization: int) -> int:
    """Stream key of realization ``r`` inside experiment ``e``."""
    if not (0 <= experiment < 2**32 and 0 <= realization < 2**32):
        raise ValueError("experiment and realization indices must fit in 32 bits")
    return (experiment << 32) | realization


def monte_carlo(
    stage: int,
    spec: CoefficientSpec,
    realizations: int,
    experiments: int,
    seed: int,
    bc="dirichlet_neumann",
    endpoint_mode="include",
    forcing_on: bool = True,
    h1_convention: str = "full",
) -> MonteCarloReport:
    """Average ``realizations`` random solutions per experiment and compare
    the average with the solution for the mean coefficient."""
    if not spec.is_random:
        raise ValueError("monte_carlo needs a random coefficient")
    micro = cantor_extremes(stage)
    target = setup_problem(
        stage, spec.mean_spec(), forcing_on, None, bc, endpoint_mode, micro=micro
    ).solve()
    rows = []
    for e in range(1, experiments + 1):
        sols = np.empty((realizations, len(target.mesh)))
        for r in range(realizations):
            beta = sample_random_beta(
                micro, stage, spec.lo, spec.hi, seed, realization_index(e, r)
            )
            sols[r] = setup_problem(
                stage, beta, forcing_on, None, bc, endpoint_mode
            ).solve().values
        # fixed-order reduction keeps the result independent of scheduling;
        # shifting by the first draw keeps identical realizations bit-exact
        avg = sols[0] + np.mean(sols - sols[0], axis=0)
        mean = PiecewiseLinearFn(target.mesh, avg)
        nt = norms(mean - target)
        rows.append(MonteCarloRow(e, nt.l2, nt.h1(h1_convention)))
    meta = {
        "coefficient": spec.to_string(),
        "bc": BoundaryCondition.parse(bc).value,
        "endpoint_mode": EndpointMode.parse(endpoint_mode).value,
        "h1_convention": h1_convention,
        "realizations": realizations,
        "experiments": experiments,
        "seed": seed,
        "comparison": spec.mean_spec().to_string(),
    }
    return MonteCarloReport(stage, rows, meta)


def run_experiment(config: ExperimentConfig) -> Report:
    spec = config.coefficient
    if spec.is_random:
        lo, hi = config.stages
        if lo != hi:
            raise ValueError("Monte-Carlo runs take a single stage, not a study range")
        report = monte_carlo(
            lo, spec, config.realizations, config.experiments, config.seed,
            config.bc, config.endpoint_mode, config.forcing_on, config.h1_convention,
        )
    else:
        report = convergence_study(
            config.stage_range, spec, config.bc, config.endpoint_mode,
            config.forcing_on, None, config.h1_convention,
        )
    report.metadata = {**config.metadata(), **report.metadata}
    return report


def metadata_path(path) -> Path:
    """Sidecar holding the run metadata of a CSV report."""
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_report(report: Report, path, format: str = "csv") -> None:
    """Write ``report`` as CSV (plus a metadata sidecar) or as one JSON file."""
    path = Path(path)
    try:
        if format == "csv":
            report.to_csv(path)
            with open(metadata_path(path), "w", encoding="utf-8") as fh:
                json.dump(report.to_dict()["metadata"], fh, indent=2, sort_keys=True)
                fh.write("\n")
        elif format == "json":
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
                fh.write("\n")
        else:
            raise ValueError(f"unknown report format {format!r}")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror}") from exc


def emit_plot_data(solution: PiecewiseLinearFn, points, prefix) -> list[Path]:
    """Write ``<prefix>_p.csv``, ``<prefix>_dp.csv`` and ``<prefix>_verticals.csv``.

    The derivative file holds step data, two rows per element; the verticals
    file lists the interior interface points used as guide lines.
    """
    prefix = str(prefix)
    nodes, vals, slopes = solution.mesh.nodes, solution.values, solution.slopes
    out = [Path(prefix + s) for s in ("_p.csv", "_dp.csv", "_verticals.csv")]
    try:
        with open(out[0], "w", encoding="utf-8") as fh:
            fh.write("x,p\n")
            for x, p in zip(nodes, vals):
                fh.write(f"{x:.17g},{p:.17g}\n")
        with open(out[1], "w", encoding="utf-8") as fh:
            fh.write("x,dp\n")
            for x0, x1, s in zip(nodes[:-1], nodes[1:], slopes):
                fh.write(f"{x0:.17g},{s:.17g}\n{x1:.17g},{s:.17g}\n")
        with open(out[2], "w", encoding="utf-8") as fh:
            fh.write("x\n")
            for b in points:
                if 0 < b < 1:
                    fh.write(f"{float(b):.17g}\n")
    except OSError as exc:
        raise OSError(f"cannot write plot data under {prefix}: {exc.strerror}") from exc
    return out
