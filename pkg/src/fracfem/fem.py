"""P1 Galerkin discretisation of the point-interface problems on [0, 1].

The discrete problem is

    ∫ p' q' + Σ_b β(b) p(b) q(b) = ∫ F q + Σ_b f(b) q(b)

over continuous piecewise-linear ``p, q`` vanishing at the Dirichlet ends.
Because every interface point is a mesh node, the point terms enter the
diagonal and the load vector exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional

import numpy as np

from .coefficients import (
    CoefficientSpec,
    PointFunction,
    coefficient_table,
    forcing_table,
    zero_table,
)
from .geometry import Microstructure, cantor_extremes

__all__ = [
    "BoundaryCondition",
    "EndpointMode",
    "Mesh1D",
    "MeshMismatchError",
    "SingularSystemError",
    "TridiagonalSystem",
    "PiecewiseLinearFn",
    "StageProblem",
    "build_mesh",
    "assemble",
    "solve_tridiagonal",
    "setup_problem",
    "solve_problem",
    "evaluate",
    "write_solution_csv",
]

Forcing = Optional[Callable[[np.ndarray], np.ndarray]]

_GAUSS = 0.5 / np.sqrt(3.0)


class BoundaryCondition(str, enum.Enum):
    DIRICHLET_NEUMANN = "dirichlet_neumann"
    DIRICHLET_DIRICHLET = "dirichlet_dirichlet"

    @classmethod
    def parse(cls, value) -> "BoundaryCondition":
        if isinstance(value, cls):
            return value
        aliases = {"dn": cls.DIRICHLET_NEUMANN, "dd": cls.DIRICHLET_DIRICHLET}
        try:
            return aliases.get(value) or cls(value)
        except ValueError:
            raise ValueError(f"unknown boundary condition {value!r}") from None

    @property
    def short(self) -> str:
        return "dn" if self is BoundaryCondition.DIRICHLET_NEUMANN else "dd"


class EndpointMode(str, enum.Enum):
    """Whether interface terms at ``b = 0, 1`` enter the discrete problem.

    ``include`` follows the variational sums over all of ``B_n`` (a Robin
    condition at ``x = 1`` under Dirichlet-Neumann); ``exclude`` keeps interior
    points only.
    """

    INCLUDE = "include"
    EXCLUDE = "exclude"

    @classmethod
    def parse(cls, value) -> "EndpointMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"unknown endpoint mode {value!r}") from None


class MeshMismatchError(ValueError):
    """An interface point does not coincide with a mesh node."""


class SingularSystemError(ArithmeticError):
    """Zero pivot met during tridiagonal elimination."""


class Mesh1D:
    """Sorted nodes ``0 = x_0 < ... < x_M = 1``.

    Uniform meshes remember their element count so node lookup is exact
    rational arithmetic; general meshes keep their exact node values when
    built from fractions.
    """

    def __init__(self, nodes, *, elements: int | None = None):
        exact = None
        if elements is not None:
            self.nodes = np.arange(elements + 1, dtype=float) / elements
            self.nodes[-1] = 1.0
        else:
            nodes = list(nodes)
            if nodes and all(isinstance(x, (Fraction, int)) for x in nodes):
                exact = tuple(Fraction(x) for x in nodes)
            self.nodes = np.asarray([float(x) for x in nodes], dtype=float)
        self.elements = elements
        self._exact = exact
        self._lookup = {x: i for i, x in enumerate(exact)} if exact else None
        if len(self.nodes) < 2:
            raise ValueError("a mesh needs at least two nodes")
        if self.nodes[0] != 0.0 or self.nodes[-1] != 1.0:
            raise ValueError("mesh endpoints must be exactly 0 and 1")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("mesh nodes must be strictly increasing")
        # widths from exact differences, not from rounded nodes: the stiffness
        # entries 1/h would otherwise carry ~1e-12 relative noise at stage 9
        if elements is not None:
            self._widths = np.full(elements, 1.0 / elements)
        elif exact is not None:
            self._widths = np.array([float(b - a) for a, b in zip(exact, exact[1:])])
        else:
            self._widths = np.diff(self.nodes)
        self._widths.flags.writeable = False

    @classmethod
    def from_points(cls, points: Iterable) -> "Mesh1D":
        return cls(sorted({Fraction(0), Fraction(1), *map(Fraction, points)}))

    def __len__(self):
        return len(self.nodes)

    def __eq__(self, other):
        return isinstance(other, Mesh1D) and np.array_equal(self.nodes, other.nodes)

    def __repr__(self):
        return f"Mesh1D({len(self.nodes)} nodes)"

    @property
    def widths(self) -> np.ndarray:
        return self._widths

    def exact_nodes(self) -> tuple[Fraction, ...] | None:
        if self._exact is not None:
            return self._exact
        if self.elements is not None:
            return tuple(Fraction(i, self.elements) for i in range(self.elements + 1))
        return None

    def index_of(self, b) -> int:
        """Node index of the point ``b``; raises if ``b`` is not a node."""
        if isinstance(b, (Fraction, int)):
            b = Fraction(b)
            if self.elements is not None:
                q = b * self.elements
                if q.denominator == 1 and 0 <= q <= self.elements:
                    return int(q)
                raise MeshMismatchError(f"{b} is not a node of {self!r}")
            if self._lookup is not None:
                try:
                    return self._lookup[b]
                except KeyError:
                    raise MeshMismatchError(f"{b} is not a node of {self!r}") from None
            b = float(b)
        i = int(np.searchsorted(self.nodes, b))
        for j in (i - 1, i):
            if 0 <= j < len(self.nodes) and abs(self.nodes[j] - b) <= 1e-14:
                return j
        raise MeshMismatchError(f"{b} is not a node of {self!r}")

    def contains_mesh(self, coarse: "Mesh1D") -> bool:
        """True if every node of ``coarse`` is a node of this mesh."""
        if self.elements is not None and coarse.elements is not None:
            return self.elements % coarse.elements == 0
        exact = coarse.exact_nodes()
        try:
            for x in exact if exact is not None else coarse.nodes:
                self.index_of(x)
        except MeshMismatchError:
            return False
        return True


def build_mesh(n: int) -> Mesh1D:
    """Uniform mesh with ``3**n`` elements (contains the stage-``n`` extremes)."""
    if n < 0:
        raise ValueError("stage must be non-negative")
    return Mesh1D(None, elements=3**n)


@dataclass
class TridiagonalSystem:
    """Tridiagonal system on the free nodes ``free`` of a mesh.

    ``lower[i]`` couples row ``i + 1`` to column ``i``; ``upper[i]`` couples
    row ``i`` to column ``i + 1``. ``excess``, when known, is the exact row
    sum ``diag + lower + upper`` kept separately from ``diag``.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray
    free: np.ndarray
    excess: np.ndarray | None = None

    def __post_init__(self):
        m = len(self.diag)
        if len(self.rhs) != m or len(self.free) != m:
            raise ValueError("diag, rhs and free must have equal length")
        if len(self.lower) != max(m - 1, 0) or len(self.upper) != max(m - 1, 0):
            raise ValueError("off-diagonals must have length len(diag) - 1")
        if self.excess is not None and len(self.excess) != m:
            raise ValueError("excess must have length len(diag)")

    @property
    def is_m_matrix_form(self) -> bool:
        """Nonpositive off-diagonals with a known nonnegative row excess."""
        return (
            self.excess is not None
            and bool(np.all(self.lower <= 0))
            and bool(np.all(self.upper <= 0))
            and bool(np.all(self.excess >= 0))
        )

    def __len__(self):
        return len(self.diag)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.lower * x[:-1]
        y[:-1] += self.upper * x[1:]
        return y

    def dense(self) -> np.ndarray:
        return (
            np.diag(self.diag)
            + np.diag(self.lower, -1)
            + np.diag(self.upper, 1)
        )


def solve_tridiagonal(sys: TridiagonalSystem) -> np.ndarray:
    """Solve ``sys``; M-matrix systems with a known row excess use an
    elimination free of subtractions, others the Thomas algorithm."""
    if len(sys.diag) == 0:
        return np.zeros(0)
    if sys.is_m_matrix_form:
        return _solve_m_matrix(sys)
    return _solve_thomas(sys)


def _solve_m_matrix(sys: TridiagonalSystem) -> np.ndarray:
    # Pivot D_i = E_i + |u_i| where the reduced excess obeys
    # E_i = e_i + |l_{i-1}| E_{i-1} / D_{i-1}; only nonnegative terms are
    # added, so pivots keep full relative accuracy even when 2/h - 1/h - 1/h
    # would cancel in the plain recursion.
    low = (-np.asarray(sys.lower, dtype=float)).tolist()
    up = (-np.asarray(sys.upper, dtype=float)).tolist() + [0.0]
    ex = np.asarray(sys.excess, dtype=float).tolist()
    rhs = np.asarray(sys.rhs, dtype=float).tolist()
    m = len(ex)
    piv = [0.0] * m
    y = [0.0] * m
    e_prev = d_prev = y_prev = 0.0
    for i in range(m):
        e = ex[i]
        yi = rhs[i]
        if i:
            w = low[i - 1] / d_prev
            e += w * e_prev
            yi += w * y_prev
        d = e + up[i]
        if not d > 0:
            raise SingularSystemError(f"zero pivot in row {i}")
        piv[i], y[i] = d, yi
        e_prev, d_prev, y_prev = e, d, yi
    x = y
    x[m - 1] = y[m - 1] / piv[m - 1]
    for i in range(m - 2, -1, -1):
        x[i] = (y[i] + up[i] * x[i + 1]) / piv[i]
    return np.array(x)


def _solve_thomas(sys: TridiagonalSystem) -> np.ndarray:
    a = np.asarray(sys.lower, dtype=float)
    b = np.asarray(sys.diag, dtype=float)
    c = np.asarray(sys.upper, dtype=float)
    d = np.asarray(sys.rhs, dtype=float)
    m = len(b)
    scale = float(np.max(np.abs(b))) or 1.0
    tiny = 1e-14 * scale
    # plain lists are markedly faster than numpy scalars in this loop
    al, bl, cl, dl = a.tolist(), b.tolist(), c.tolist(), d.tolist()
    cps = [0.0] * m
    dps = [0.0] * m
    cprev = dprev = 0.0
    for i in range(m):
        piv = bl[i] - (al[i - 1] * cprev if i else 0.0)
        if abs(piv) < tiny:
            raise SingularSystemError(f"zero pivot in row {i}")
        dprev = dps[i] = (dl[i] - (al[i - 1] * dprev if i else 0.0)) / piv
        if i < m - 1:
            cprev = cps[i] = cl[i] / piv
    x = dps
    for i in range(m - 2, -1, -1):
        x[i] = dps[i] - cps[i] * x[i + 1]
    return np.array(x)


@dataclass(frozen=True)
class PiecewiseLinearFn:
    mesh: Mesh1D
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.mesh),):
            raise ValueError("one value per mesh node required")
        object.__setattr__(self, "values", vals)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / self.mesh.widths

    def __call__(self, x):
        return np.interp(x, self.mesh.nodes, self.values)

    def __sub__(self, other: "PiecewiseLinearFn") -> "PiecewiseLinearFn":
        if other.mesh != self.mesh:
            raise ValueError("functions live on different meshes")
        return PiecewiseLinearFn(self.mesh, self.values - other.values)

    def __add__(self, other: "PiecewiseLinearFn") -> "PiecewiseLinearFn":
        if other.mesh != self.mesh:
            raise ValueError("functions live on different meshes")
        return PiecewiseLinearFn(self.mesh, self.values + other.values)

    def __mul__(self, k: float) -> "PiecewiseLinearFn":
        return PiecewiseLinearFn(self.mesh, k * self.values)

    __rmul__ = __mul__


def evaluate(fn: PiecewiseLinearFn, x, mode: str = "value") -> float:
    """Point value or one-sided slope of ``fn`` at ``x``."""
    xf = float(x)
    if not 0.0 <= xf <= 1.0:
        raise ValueError(f"x = {x} outside [0, 1]")
    nodes = fn.mesh.nodes
    if mode == "value":
        return float(np.interp(xf, nodes, fn.values))
    if mode == "slope_left":
        if xf <= 0.0:
            raise ValueError("slope_left needs x > 0")
        e = int(np.searchsorted(nodes, xf, side="left")) - 1
    elif mode == "slope_right":
        if xf >= 1.0:
            raise ValueError("slope_right needs x < 1")
        e = int(np.searchsorted(nodes, xf, side="right")) - 1
    else:
        raise ValueError(f"unknown evaluation mode {mode!r}")
    return float(fn.slopes[e])


def _free_nodes(mesh: Mesh1D, bc: BoundaryCondition) -> np.ndarray:
    last = len(mesh) if bc is BoundaryCondition.DIRICHLET_NEUMANN else len(mesh) - 1
    return np.arange(1, last)


def volume_load(mesh: Mesh1D, F: Forcing) -> np.ndarray:
    """``∫ F φ_i`` for every node with two-point Gauss quadrature per element."""
    load = np.zeros(len(mesh))
    if F is None:
        return load
    x0, h = mesh.nodes[:-1], mesh.widths
    mid = x0 + 0.5 * h
    for s in (-_GAUSS, _GAUSS):
        xg = mid + s * h
        w = 0.5 * h * np.asarray(F(xg), dtype=float) * np.ones_like(xg)
        right = (xg - x0) / h
        load[:-1] += w * (1.0 - right)
        load[1:] += w * right
    return load


def interface_terms(
    mesh: Mesh1D, beta: PointFunction, f: PointFunction, endpoint_mode
) -> tuple[np.ndarray, np.ndarray]:
    """Nodal point-storage and point-forcing vectors over the whole mesh."""
    endpoint_mode = EndpointMode.parse(endpoint_mode)
    pts = beta.micro.points(beta.stage)
    if tuple(f.micro.points(f.stage)) != tuple(pts):
        raise ValueError("β and f must be defined on the same point set")
    bvec = np.zeros(len(mesh))
    fvec = np.zeros(len(mesh))
    for b in pts:
        if endpoint_mode is EndpointMode.EXCLUDE and b in (0, 1):
            continue
        i = mesh.index_of(b)
        bvec[i] += beta.table[b]
        fvec[i] += f.table[b]
    return bvec, fvec


def assemble(
    mesh: Mesh1D,
    beta: PointFunction,
    F: Forcing,
    f: PointFunction,
    bc="dirichlet_neumann",
    endpoint_mode="include",
) -> TridiagonalSystem:
    bc = BoundaryCondition.parse(bc)
    h = mesh.widths
    k = 1.0 / h
    diag = np.zeros(len(mesh))
    diag[:-1] += k
    diag[1:] += k
    off = -k
    bvec, fvec = interface_terms(mesh, beta, f, endpoint_mode)
    diag += bvec
    rhs = volume_load(mesh, F) + fvec
    free = _free_nodes(mesh, bc)
    lo, hi = (free[0], free[-1] + 1) if len(free) else (1, 1)
    # row sums: point storage plus couplings to eliminated Dirichlet nodes
    excess = bvec.copy()
    excess[1] += k[0]
    if bc is BoundaryCondition.DIRICHLET_DIRICHLET:
        excess[-2] += k[-1]
    sys = TridiagonalSystem(
        lower=off[lo : hi - 1].copy(),
        diag=diag[lo:hi].copy(),
        upper=off[lo : hi - 1].copy(),
        rhs=rhs[lo:hi].copy(),
        free=free,
        excess=excess[lo:hi].copy(),
    )
    if np.any(sys.diag <= 0):
        raise ValueError("assembled diagonal is not strictly positive")
    return sys


@dataclass(frozen=True)
class StageProblem:
    """Everything needed to solve, and to check, one stage of a model."""

    micro: Microstructure
    mesh: Mesh1D
    beta: PointFunction
    f: PointFunction
    F: Forcing = None
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET_NEUMANN
    endpoint_mode: EndpointMode = EndpointMode.INCLUDE

    @property
    def stage(self) -> int:
        return self.beta.stage

    def system(self) -> TridiagonalSystem:
        return assemble(self.mesh, self.beta, self.F, self.f, self.bc, self.endpoint_mode)

    def solve(self) -> PiecewiseLinearFn:
        sys = self.system()
        values = np.zeros(len(self.mesh))
        values[sys.free] = solve_tridiagonal(sys)
        return PiecewiseLinearFn(self.mesh, values)


def setup_problem(
    n: int,
    spec: CoefficientSpec | PointFunction,
    forcing_on: bool = True,
    F: Forcing = None,
    bc="dirichlet_neumann",
    endpoint_mode="include",
    micro: Microstructure | None = None,
) -> StageProblem:
    """Stage-``n`` Cantor-extremes problem on the uniform ``3**n`` mesh.

    ``spec`` may also be a ready :class:`PointFunction` (random realizations).
    """
    if n < 0:
        raise ValueError("stage must be non-negative")
    if isinstance(spec, PointFunction):
        beta = spec
        micro = spec.micro
        if beta.stage != n:
            raise ValueError(f"β table is for stage {beta.stage}, not {n}")
    else:
        micro = micro if micro is not None else cantor_extremes(n)
        beta = coefficient_table(spec, micro, n)
    f = forcing_table(micro, n) if forcing_on else zero_table(micro, n)
    return StageProblem(
        micro=micro,
        mesh=build_mesh(n),
        beta=beta,
        f=f,
        F=F,
        bc=BoundaryCondition.parse(bc),
        endpoint_mode=EndpointMode.parse(endpoint_mode),
    )


def solve_problem(
    n: int,
    spec: CoefficientSpec | PointFunction,
    forcing_on: bool = True,
    F: Forcing = None,
    bc="dirichlet_neumann",
    endpoint_mode="include",
) -> PiecewiseLinearFn:
    return setup_problem(n, spec, forcing_on, F, bc, endpoint_mode).solve()


def write_solution_csv(fn: PiecewiseLinearFn, path) -> None:
    """``x,p,dp_left`` per node; ``dp_left`` is empty at ``x = 0``."""
    slopes = fn.slopes
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("x,p,dp_left\n")
        for i, (x, p) in enumerate(zip(fn.mesh.nodes, fn.values)):
            dp = "" if i == 0 else f"{slopes[i - 1]:.17g}"
            fh.write(f"{x:.17g},{p:.17g},{dp}\n")
