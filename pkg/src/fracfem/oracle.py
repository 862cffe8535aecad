"""Exact solution of the point-interface problem with zero volume forcing.

With ``F = 0`` the solution is linear between consecutive interface points,
so it is fixed by its values ``p_k`` there. The flux-jump condition at each
interior point

    (p_k - p_{k-1}) / h_k - (p_{k+1} - p_k) / h_{k+1} + β_k p_k = f_k

together with the boundary closure is a tridiagonal system in those values.
This module builds it from slopes and jumps and solves it with
:func:`scipy.linalg.solve_banded`; nothing is shared with the Galerkin code.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.linalg import solve_banded

__all__ = ["ExactSolution", "exact_solve"]


@dataclass(frozen=True)
class ExactSolution:
    breakpoints: np.ndarray  # 0, b_1, ..., b_m, 1
    values: np.ndarray
    slopes: np.ndarray  # one per subinterval

    def __call__(self, x):
        return np.interp(x, self.breakpoints, self.values)

    def jump_residuals(self, beta: Sequence[float], f: Sequence[float]) -> np.ndarray:
        """Flux-jump residual at each interior breakpoint."""
        p = self.values[1:-1]
        return self.slopes[:-1] - self.slopes[1:] + np.asarray(beta) * p - np.asarray(f)


def exact_solve(
    points: Sequence[float],
    beta: Sequence[float],
    f: Sequence[float],
    bc: str = "dn",
    right_end_terms: tuple[float, float] | None = None,
) -> ExactSolution:
    """Solve the ``F = 0`` transmission problem with ``p(0) = 0``.

    ``bc`` is ``"dn"`` (no-flux or Robin right end) or ``"dd"`` (``p(1) = 0``).
    ``right_end_terms = (β(1), f(1))`` turns the Dirichlet-Neumann right end
    into ``p'(1) + β(1) p(1) = f(1)``.
    """
    b = np.asarray([float(x) for x in points], dtype=float)
    beta = np.asarray(beta, dtype=float)
    f = np.asarray(f, dtype=float)
    if not (len(b) == len(beta) == len(f)):
        raise ValueError("points, beta and f must have equal length")
    if len(b) and (b[0] <= 0 or b[-1] >= 1 or np.any(np.diff(b) <= 0)):
        raise ValueError("points must be strictly increasing inside (0, 1)")
    if np.any(beta < 0):
        raise ValueError("storage coefficients must be non-negative")
    bc = {"dirichlet_neumann": "dn", "dirichlet_dirichlet": "dd"}.get(bc, bc)
    if bc not in ("dn", "dd"):
        raise ValueError(f"unknown boundary condition {bc!r}")
    if right_end_terms is not None and bc != "dn":
        raise ValueError("right-end interface terms only apply with a Neumann end")

    x = np.concatenate(([0.0], b, [1.0]))
    # interval lengths from exact rational differences of the given points
    exact = [Fraction(0), *(Fraction(p) for p in points), Fraction(1)]
    h = np.array([float(hi - lo) for lo, hi in zip(exact, exact[1:])])
    m = len(b)
    robin = right_end_terms is not None
    nu = m + 1 if robin else m  # unknowns: p_1..p_m (and p(1) when Robin)

    values = np.zeros(m + 2)
    if nu:
        inv = 1.0 / h
        diag = np.zeros(nu)
        off = np.zeros(nu)  # coupling of unknown k to k+1, k = 0..nu-2
        rhs = np.zeros(nu)
        for k in range(m):
            left = inv[k]
            # last interval has zero slope when the right end is pure Neumann
            right = 0.0 if (k == m - 1 and bc == "dn" and not robin) else inv[k + 1]
            diag[k] = left + right + beta[k]
            rhs[k] = f[k]
            if k + 1 < nu:
                off[k] = -inv[k + 1]
        if robin:
            b1, f1 = right_end_terms
            diag[m] = inv[m] + b1
            rhs[m] = f1
        ab = np.zeros((3, nu))
        ab[0, 1:] = off[:-1]
        ab[1] = diag
        ab[2, :-1] = off[:-1]
        sol = solve_banded((1, 1), ab, rhs)
        values[1 : m + 1] = sol[:m]
        if robin:
            values[-1] = sol[m]
        elif bc == "dn" and m:
            values[-1] = values[m]
    slopes = np.diff(values) / h
    return ExactSolution(x, values, slopes)
