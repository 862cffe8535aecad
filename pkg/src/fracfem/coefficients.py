"""Storage coefficients and interface forcings on a microstructure."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .geometry import Microstructure

__all__ = [
    "CoefficientSpec",
    "PointFunction",
    "SummabilityWarning",
    "eval_coefficient",
    "eval_forcing",
    "coefficient_table",
    "forcing_table",
    "partial_l1_sum",
    "staged_l1_closed_form",
    "sample_random_beta",
    "zero_table",
    "random_stream",
    "parse_coefficient",
]

KINDS = ("constant", "consistent_scaling", "geometric", "random_uniform")


class SummabilityWarning(UserWarning):
    """The full-series ℓ¹ sum of a staged coefficient does not converge."""


@dataclass(frozen=True)
class CoefficientSpec:
    kind: str
    a: float = 1.0
    L: int = 2
    eps: float = 0.0
    r: float = 0.0
    lo: float = 0.0
    hi: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "constant" and not self.a > 0:
            raise ValueError("constant coefficient must be positive")
        if self.kind == "consistent_scaling":
            if not self.a > 0:
                raise ValueError("scale a must be positive")
            if int(self.L) != self.L or self.L < 2:
                raise ValueError("L must be an integer >= 2")
            if not 0 < self.eps < 1 / self.L:
                raise ValueError(f"eps must lie in (0, 1/L) = (0, {1 / self.L})")
        if self.kind == "geometric" and not 0 < self.r < 1:
            raise ValueError("geometric ratio must lie in (0, 1)")
        if self.kind == "random_uniform" and not 0 <= self.lo <= self.hi:
            raise ValueError("random interval needs 0 <= lo <= hi")

    @classmethod
    def constant(cls, a: float) -> "CoefficientSpec":
        return cls("constant", a=a)

    @classmethod
    def consistent_scaling(cls, a: float, L: int, eps: float) -> "CoefficientSpec":
        return cls("consistent_scaling", a=a, L=L, eps=eps)

    @classmethod
    def geometric(cls, r: float) -> "CoefficientSpec":
        return cls("geometric", r=r)

    @classmethod
    def random_uniform(cls, lo: float, hi: float) -> "CoefficientSpec":
        return cls("random_uniform", lo=lo, hi=hi)

    @property
    def is_random(self) -> bool:
        return self.kind == "random_uniform"

    def stage_value(self, stage: int) -> float:
        """Value on ``B_stage - B_{stage-1}`` for the deterministic kinds."""
        if self.kind == "constant":
            return float(self.a)
        if self.kind == "random_uniform":
            raise ValueError("random coefficients are drawn with sample_random_beta")
        if stage == 0:
            return 0.0
        if self.kind == "consistent_scaling":
            return self.a * (1.0 / self.L - self.eps) ** stage
        return self.r**stage

    def mean_spec(self) -> "CoefficientSpec":
        """Deterministic constant coefficient at the midpoint of a random interval."""
        if not self.is_random:
            return self
        return CoefficientSpec.constant(0.5 * (self.lo + self.hi))

    def to_string(self) -> str:
        if self.kind == "constant":
            return f"constant:{self.a!r}"
        if self.kind == "consistent_scaling":
            return f"scaled:{self.a!r}:{self.L}:{self.eps!r}"
        if self.kind == "geometric":
            return f"geometric:{self.r!r}"
        return f"random:{self.lo!r}:{self.hi!r}"


def _num(tok: str) -> float:
    return float(Fraction(tok))


def parse_coefficient(text: str) -> CoefficientSpec:
    """Parse ``constant:A``, ``scaled:A:L:EPS``, ``geometric:R`` or ``random:LO:HI``.

    Numbers may be written as fractions, e.g. ``scaled:1:2:1/6``.
    """
    head, *args = text.strip().split(":")
    try:
        if head == "constant" and len(args) == 1:
            return CoefficientSpec.constant(_num(args[0]))
        if head == "scaled" and len(args) == 3:
            return CoefficientSpec.consistent_scaling(
                _num(args[0]), int(args[1]), _num(args[2])
            )
        if head == "geometric" and len(args) == 1:
            return CoefficientSpec.geometric(_num(args[0]))
        if head == "random" and len(args) == 2:
            return CoefficientSpec.random_uniform(_num(args[0]), _num(args[1]))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad coefficient spec {text!r}: {exc}") from None
    raise ValueError(
        f"bad coefficient spec {text!r}; expected constant:A, scaled:A:L:EPS, "
        "geometric:R or random:LO:HI"
    )


@dataclass(frozen=True)
class PointFunction:
    """Real values attached to the points of stage ``stage`` of ``micro``."""

    micro: Microstructure
    stage: int
    table: Mapping[Fraction, float]

    def __post_init__(self):
        pts = self.micro.points(self.stage)
        if set(self.table) != set(pts):
            raise ValueError("table domain must equal the stage point set")
        if not all(math.isfinite(v) for v in self.table.values()):
            raise ValueError("point function values must be finite")

    def __call__(self, b) -> float:
        return self.table[Fraction(b)]

    def values(self) -> np.ndarray:
        """Values in ascending point order."""
        return np.array([self.table[b] for b in self.micro.points(self.stage)])

    def scaled(self, factor: float) -> "PointFunction":
        return PointFunction(
            self.micro, self.stage, {b: factor * v for b, v in self.table.items()}
        )


def _check_point(micro: Microstructure, b) -> int:
    b = Fraction(b)
    if b not in micro.stage_of:
        raise KeyError(f"{b} is not a point of the microstructure")
    return micro.stage_of[b]


def eval_coefficient(spec: CoefficientSpec, micro: Microstructure, b) -> float:
    return spec.stage_value(_check_point(micro, b))


def eval_forcing(micro: Microstructure, b) -> float:
    """Interface forcing ``3**-stage`` on new points, zero on ``B_0``."""
    stage = _check_point(micro, b)
    return 0.0 if stage == 0 else 3.0**-stage


def coefficient_table(
    spec: CoefficientSpec, micro: Microstructure, n: int | None = None
) -> PointFunction:
    n = micro.depth if n is None else n
    vals = [spec.stage_value(s) for s in range(n + 1)]
    table = {b: vals[micro.stage_of[b]] for b in micro.points(n)}
    return PointFunction(micro, n, table)


def forcing_table(micro: Microstructure, n: int | None = None) -> PointFunction:
    n = micro.depth if n is None else n
    table = {b: (0.0 if micro.stage_of[b] == 0 else 3.0 ** -micro.stage_of[b])
             for b in micro.points(n)}
    return PointFunction(micro, n, table)


def zero_table(micro: Microstructure, n: int | None = None) -> PointFunction:
    n = micro.depth if n is None else n
    return PointFunction(micro, n, {b: 0.0 for b in micro.points(n)})


def _ratio_test(spec: CoefficientSpec, micro: Microstructure) -> None:
    # card growth of B_k - B_{k-1} against the stage value decay
    if spec.kind == "constant" or micro.n_maps is None:
        return
    growth = micro.n_maps
    decay = spec.stage_value(1)
    if growth * decay >= 1:
        warnings.warn(
            f"{spec.to_string()} is not summable over the full development "
            f"(growth {growth} x decay {decay:.6g} >= 1); finite stages are unaffected",
            SummabilityWarning,
            stacklevel=3,
        )


def partial_l1_sum(spec: CoefficientSpec, micro: Microstructure, n: int) -> float:
    """Direct sum of ``β(b)`` over ``B_n``."""
    if spec.is_random:
        raise ValueError("partial_l1_sum needs a deterministic coefficient")
    if not 0 <= n <= micro.depth:
        raise ValueError(f"stage {n} not in 0..{micro.depth}")
    _ratio_test(spec, micro)
    return math.fsum(spec.stage_value(micro.stage_of[b]) for b in micro.points(n))


def staged_l1_closed_form(spec: CoefficientSpec, micro: Microstructure, n: int) -> float:
    """``Σ_k card(B_k - B_{k-1}) · α_k`` built from the per-stage cardinalities."""
    card = micro.cardinalities()
    total = card[0] * spec.stage_value(0)
    total += math.fsum(
        (card[k] - card[k - 1]) * spec.stage_value(k) for k in range(1, n + 1)
    )
    return total


def random_stream(seed: int, realization_index: int) -> np.random.Generator:
    """Independent generator for one realization.

    Streams are keyed by ``(seed, realization_index)`` through
    :class:`numpy.random.SeedSequence`, so they do not depend on the order in
    which realizations are produced.
    """
    if seed < 0 or realization_index < 0:
        raise ValueError("seed and realization index must be non-negative")
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([seed, realization_index]))
    )


def sample_random_beta(
    micro: Microstructure,
    n: int,
    lo: float,
    hi: float,
    seed: int,
    realization_index: int,
) -> PointFunction:
    """One uniform draw on ``[lo, hi]`` per point of ``B_n``, in ascending order."""
    if lo > hi:
        raise ValueError(f"invalid interval [{lo}, {hi}]")
    pts = micro.points(n)
    if lo == hi:
        draws = np.full(len(pts), float(lo))
    else:
        draws = random_stream(seed, realization_index).uniform(lo, hi, size=len(pts))
    return PointFunction(micro, n, dict(zip(pts, draws.tolist())))
