"""Norms, nested injection, convergence tables and solution diagnostics."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .coefficients import CoefficientSpec, PointFunction
from .fem import (
    EndpointMode,
    Forcing,
    Mesh1D,
    MeshMismatchError,
    PiecewiseLinearFn,
    StageProblem,
    evaluate,
    setup_problem,
    volume_load,
)

__all__ = [
    "NormTriple",
    "ConvergenceRow",
    "ConvergenceReport",
    "H1_CONVENTIONS",
    "norms",
    "inject",
    "trace_l2",
    "cantor_forcing_l2",
    "apriori_check",
    "verify_interface_conditions",
    "energy_terms",
    "convergence_study",
    "rate_estimate",
]

H1_CONVENTIONS = ("full", "semi")


@dataclass(frozen=True)
class NormTriple:
    l2: float
    h1_semi: float
    h1_full: float

    def h1(self, convention: str = "full") -> float:
        if convention not in H1_CONVENTIONS:
            raise ValueError(f"unknown H1 convention {convention!r}")
        return self.h1_full if convention == "full" else self.h1_semi


def norms(fn: PiecewiseLinearFn) -> NormTriple:
    """Exact L², H¹-seminorm and H¹ norm of a piecewise-linear function."""
    h = fn.mesh.widths
    a, b = fn.values[:-1], fn.values[1:]
    mid = 0.5 * (a + b)
    # Simpson is exact for the quadratic p² on each element
    l2sq = math.fsum(h / 6.0 * (a * a + 4.0 * mid * mid + b * b))
    semisq = math.fsum((b - a) ** 2 / h)
    l2sq = max(l2sq, 0.0)
    return NormTriple(math.sqrt(l2sq), math.sqrt(semisq), math.sqrt(l2sq + semisq))


def inject(coarse: PiecewiseLinearFn, fine_mesh: Mesh1D) -> PiecewiseLinearFn:
    """Represent ``coarse`` on a mesh that contains all of its nodes."""
    if not fine_mesh.contains_mesh(coarse.mesh):
        raise MeshMismatchError("target mesh does not contain the source mesh")
    return PiecewiseLinearFn(
        fine_mesh, np.interp(fine_mesh.nodes, coarse.mesh.nodes, coarse.values)
    )


def _points(points) -> list:
    if isinstance(points, PointFunction):
        return list(points.micro.points(points.stage))
    return list(points)


def trace_l2(fn: PiecewiseLinearFn, points) -> float:
    """``(Σ_b fn(b)²)^½`` over the given interface points."""
    vals = [evaluate(fn, b) for b in _points(points)]
    return math.sqrt(math.fsum(v * v for v in vals))


def cantor_forcing_l2(n: int | None = None) -> float:
    """ℓ² norm of the Cantor interface forcing ``3**-stage``.

    ``n=None`` gives the full series ``Σ 2^k 9^-k = 2/7``.
    """
    if n is None:
        return math.sqrt(2.0 / 7.0)
    return math.sqrt(math.fsum(2.0**k * 9.0**-k for k in range(1, n + 1)))


def apriori_check(
    solution: PiecewiseLinearFn,
    points,
    beta_min: float,
    F_l2: float,
    f_l2_full: float,
) -> float:
    """Margin in the a-priori bound for the constant-storage model.

    Both ``|p|_V`` and the trace norm of ``p`` on the interface are bounded by
    ``(|F|² + |f|²)^½ / min(1, β)``; the returned margin is that bound minus the
    larger of the two. Non-negative means the bound holds.
    """
    if beta_min <= 0:
        raise ValueError("beta_min must be positive")
    rhs = math.hypot(F_l2, f_l2_full) / min(1.0, beta_min)
    lhs = max(norms(solution).h1_semi, trace_l2(solution, points))
    return rhs - lhs


def verify_interface_conditions(
    solution: PiecewiseLinearFn, points, beta: PointFunction, f: PointFunction
) -> float:
    """Max over interior points of ``|p'(b-) - p'(b+) + β p(b) - f(b)|``."""
    worst = 0.0
    for b in _points(points):
        if b <= 0 or b >= 1:
            continue
        r = (
            evaluate(solution, b, "slope_left")
            - evaluate(solution, b, "slope_right")
            + beta(b) * evaluate(solution, b)
            - f(b)
        )
        worst = max(worst, abs(r))
    return worst


def energy_terms(problem: StageProblem, solution: PiecewiseLinearFn) -> tuple[float, float]:
    """``(a(p, p), ℓ(p))`` evaluated directly from the weak form."""
    semi = norms(solution).h1_semi
    storage = 0.0
    point_load = 0.0
    for b in problem.micro.points(problem.stage):
        if problem.endpoint_mode is EndpointMode.EXCLUDE and b in (0, 1):
            continue
        pb = evaluate(solution, b)
        storage += problem.beta(b) * pb * pb
        point_load += problem.f(b) * pb
    volume = float(np.dot(volume_load(solution.mesh, problem.F), solution.values))
    return semi * semi + storage, volume + point_load


@dataclass
class ConvergenceRow:
    stage: int
    nodes: int
    l2_norm: float
    h1_norm: float
    l2_diff: float | None = None
    h1_diff: float | None = None


CSV_HEADER = ("stage", "nodes", "l2_norm", "h1_norm", "l2_diff", "h1_diff")


@dataclass
class ConvergenceReport:
    rows: list[ConvergenceRow]
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in self.rows:
                w.writerow(
                    [r.stage, r.nodes]
                    + ["" if v is None else f"{v:.15g}"
                       for v in (r.l2_norm, r.h1_norm, r.l2_diff, r.h1_diff)]
                )

    @classmethod
    def from_csv(cls, path) -> "ConvergenceReport":
        rows = []
        with open(path, encoding="utf-8", newline="") as fh:
            for rec in csv.DictReader(fh):
                opt = lambda k: float(rec[k]) if rec[k] else None  # noqa: E731
                rows.append(
                    ConvergenceRow(int(rec["stage"]), int(rec["nodes"]),
                                   float(rec["l2_norm"]), float(rec["h1_norm"]),
                                   opt("l2_diff"), opt("h1_diff"))
                )
        return cls(rows)

    def to_dict(self) -> dict:
        return {"metadata": dict(self.metadata), "rows": [asdict(r) for r in self.rows]}


def convergence_study(
    stages: Iterable[int],
    spec: CoefficientSpec,
    bc="dirichlet_neumann",
    endpoint_mode="include",
    forcing_on: bool = True,
    F: Forcing = None,
    h1_convention: str = "full",
) -> ConvergenceReport:
    """Solve each stage and tabulate norms and differences to the previous stage."""
    stages = list(stages)
    if not stages:
        raise ValueError("empty stage range")
    if any(b - a != 1 for a, b in zip(stages, stages[1:])) or stages[0] < 0:
        raise ValueError("stages must be a contiguous ascending range of n >= 0")
    if spec.is_random:
        raise ValueError("convergence studies need a deterministic coefficient")
    if h1_convention not in H1_CONVENTIONS:
        raise ValueError(f"unknown H1 convention {h1_convention!r}")
    rows = []
    prev = None
    first = None
    for n in stages:
        problem = setup_problem(n, spec, forcing_on, F, bc, endpoint_mode)
        first = first or problem
        p = problem.solve()
        nt = norms(p)
        row = ConvergenceRow(n, len(p.mesh), nt.l2, nt.h1(h1_convention))
        if prev is not None:
            d = norms(p - inject(prev, p.mesh))
            row.l2_diff, row.h1_diff = d.l2, d.h1(h1_convention)
        rows.append(row)
        prev = p
    meta = {
        "coefficient": spec.to_string(),
        "bc": first.bc.value,
        "endpoint_mode": first.endpoint_mode.value,
        "h1_convention": h1_convention,
        "forcing": "cantor" if forcing_on else "none",
        "volume_forcing": "zero" if F is None else "custom",
    }
    return ConvergenceReport(rows, meta)


def rate_estimate(diffs: Sequence[float]) -> float:
    """``(log d_{n+1} - log d_n) / (log d_n - log d_{n-1})`` on the last three."""
    if len(diffs) < 3:
        raise ValueError("need at least three differences")
    d0, d1, d2 = diffs[-3:]
    if min(d0, d1, d2) <= 0:
        raise ValueError("differences must be positive")
    den = math.log(d1) - math.log(d0)
    if den == 0:
        raise ValueError("two equal consecutive differences; rate undefined")
    return (math.log(d2) - math.log(d1)) / den
