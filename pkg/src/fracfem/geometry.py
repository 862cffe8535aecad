"""Self-similar point microstructures on [0, 1].

Points are kept as :class:`fractions.Fraction` so that nesting checks and
deduplication across IFS branches are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

__all__ = [
    "Similarity",
    "IteratedFunctionSystem",
    "Microstructure",
    "MicrostructureError",
    "apply_similarity",
    "develop",
    "cantor_ifs",
    "cantor_extremes",
    "similarity_dimension",
    "format_microstructure",
    "parse_microstructure",
]

_ZERO = Fraction(0)
_ONE = Fraction(1)


class MicrostructureError(ValueError):
    """Raised for invalid similarities or non-monotone developments."""


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # floats are only accepted when they are exactly representable as intended
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


@dataclass(frozen=True)
class Similarity:
    """The map ``x -> orientation * ratio * x + offset``."""

    ratio: Fraction
    offset: Fraction
    orientation: int = 1

    def __post_init__(self):
        object.__setattr__(self, "ratio", _as_fraction(self.ratio))
        object.__setattr__(self, "offset", _as_fraction(self.offset))
        if not 0 < self.ratio < 1:
            raise MicrostructureError(f"ratio must lie in (0, 1), got {self.ratio}")
        if self.orientation not in (1, -1):
            raise MicrostructureError("orientation must be +1 or -1")
        lo, hi = sorted((self(_ZERO), self(_ONE)))
        if lo < 0 or hi > 1:
            raise MicrostructureError(
                f"similarity maps [0,1] onto [{lo}, {hi}], outside the unit interval"
            )

    def __call__(self, x: Fraction) -> Fraction:
        return self.orientation * self.ratio * x + self.offset


def apply_similarity(s: Similarity, x) -> Fraction:
    x = _as_fraction(x)
    if not 0 <= x <= 1:
        raise MicrostructureError(f"point {x} outside [0, 1]")
    y = s(x)
    if not 0 <= y <= 1:
        raise MicrostructureError(f"image {y} of {x} leaves [0, 1]")
    return y


@dataclass(frozen=True)
class IteratedFunctionSystem:
    maps: tuple[Similarity, ...]

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if len(self.maps) < 2:
            raise MicrostructureError("an IFS needs at least two maps")

    def __len__(self):
        return len(self.maps)

    @property
    def ratios(self) -> list[float]:
        return [float(s.ratio) for s in self.maps]


@dataclass(frozen=True)
class Microstructure:
    """A finite development ``B_0 ⊆ B_1 ⊆ ... ⊆ B_n`` of interface points.

    ``stages[k]`` is the sorted tuple of points of ``B_k``; ``stage_of`` maps
    every point of the last stage to the first stage containing it.
    """

    stages: tuple[tuple[Fraction, ...], ...]
    stage_of: dict = field(compare=False, repr=False)
    n_maps: int | None = None

    @classmethod
    def from_points(cls, points: Iterable) -> "Microstructure":
        """Single-stage microstructure holding exactly ``points``."""
        pts = tuple(sorted({_as_fraction(b) for b in points}))
        if any(not 0 <= b <= 1 for b in pts):
            raise MicrostructureError("points must lie in [0, 1]")
        return cls((pts,), {b: 0 for b in pts})

    @property
    def depth(self) -> int:
        return len(self.stages) - 1

    def points(self, n: int | None = None) -> tuple[Fraction, ...]:
        return self.stages[self.depth if n is None else n]

    def new_points(self, n: int) -> tuple[Fraction, ...]:
        if n == 0:
            return self.stages[0]
        return tuple(b for b in self.stages[n] if self.stage_of[b] == n)

    def __contains__(self, b) -> bool:
        return _as_fraction(b) in self.stage_of

    def stage(self, b) -> int:
        try:
            return self.stage_of[_as_fraction(b)]
        except KeyError:
            raise KeyError(f"{b} is not a point of the microstructure") from None

    def truncate(self, n: int) -> "Microstructure":
        if not 0 <= n <= self.depth:
            raise ValueError(f"stage {n} not in 0..{self.depth}")
        kept = self.stages[: n + 1]
        return Microstructure(
            kept, {b: s for b, s in self.stage_of.items() if s <= n}, self.n_maps
        )

    def cardinalities(self) -> list[int]:
        return [len(s) for s in self.stages]

    def check_cardinality_bounds(self) -> bool:
        """Counting bounds satisfied by any development of an ``L``-map IFS."""
        if self.n_maps is None:
            raise ValueError("number of IFS maps unknown for this microstructure")
        L = self.n_maps
        card = self.cardinalities()
        c0 = card[0]
        for n in range(1, len(card)):
            if card[n] > L * card[n - 1] or card[n] > L**n * c0:
                return False
            if card[n] - card[n - 1] > L ** (n - 1) * (L - 1) * c0:
                return False
        return True


def develop(ifs: IteratedFunctionSystem, b0: Iterable, n: int) -> Microstructure:
    """Apply ``B_k = ∪ S_i(B_{k-1})`` ``n`` times starting from ``b0``.

    The recursion is checked, not forced, to be monotone.
    """
    if n < 0:
        raise ValueError("stage count must be non-negative")
    current = sorted({_as_fraction(b) for b in b0})
    if not current:
        raise MicrostructureError("B_0 must be non-empty")
    if current[0] < 0 or current[-1] > 1:
        raise MicrostructureError("B_0 must lie in [0, 1]")
    stages = [tuple(current)]
    stage_of = {b: 0 for b in current}
    for k in range(1, n + 1):
        nxt = {apply_similarity(s, b) for s in ifs.maps for b in current}
        if not stage_of.keys() <= nxt:
            missing = sorted(set(stage_of) - nxt)[:3]
            raise MicrostructureError(
                f"development is not monotone at stage {k}: lost {missing}"
            )
        for b in nxt:
            stage_of.setdefault(b, k)
        current = sorted(nxt)
        stages.append(tuple(current))
    return Microstructure(tuple(stages), stage_of, len(ifs))


def cantor_ifs() -> IteratedFunctionSystem:
    third = Fraction(1, 3)
    return IteratedFunctionSystem(
        (Similarity(third, _ZERO, 1), Similarity(third, _ONE, -1))
    )


def cantor_extremes(n: int) -> Microstructure:
    """Endpoints of the removed middle thirds, developed to stage ``n``."""
    return develop(cantor_ifs(), (_ZERO, _ONE), n)


def similarity_dimension(
    ratios: Sequence[float], tol: float = 1e-12, max_iter: int = 200
) -> float:
    """Solve ``sum(c_i ** d) == 1`` for ``d`` by bisection."""
    cs = [float(c) for c in ratios]
    if len(cs) < 2:
        raise ValueError("need at least two ratios")
    if any(not 0 < c < 1 for c in cs):
        raise ValueError("ratios must lie in (0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")

    def g(d):
        return math.fsum(c**d for c in cs) - 1.0

    lo, hi = 0.0, 1.0
    while g(hi) > 0:
        lo, hi = hi, 2 * hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def format_microstructure(micro: Microstructure, n: int | None = None) -> str:
    """One ``numerator/denominator stage`` line per point, ascending."""
    lines = [
        f"{b.numerator}/{b.denominator} {micro.stage_of[b]}" for b in micro.points(n)
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_microstructure(text: str) -> Microstructure:
    """Inverse of :func:`format_microstructure`."""
    pts: dict[Fraction, int] = {}
    for raw in text.splitlines():
        raw = raw.strip()
        if not raw:
            continue
        frac, stage = raw.split()
        pts[Fraction(frac)] = int(stage)
    if not pts:
        raise MicrostructureError("empty microstructure")
    depth = max(pts.values())
    stages = tuple(
        tuple(sorted(b for b, s in pts.items() if s <= k)) for k in range(depth + 1)
    )
    return Microstructure(stages, pts)
