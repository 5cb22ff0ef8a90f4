"""Grids, grid functions and 1-D first-order linear hyperbolic systems.

A system is ``u_t + A1(x) u_x + A0(x) u = 0`` for an ``m``-vector ``u``.  The
spatial operator ``D u = A1 u_x + A0 u`` is discretised with finite differences
of order ``p`` on a uniform grid.  Cauchy data may be prescribed on a curve
``t = tau(x)``; the curve is non-characteristic where ``det(I - tau' A1) != 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import CharacteristicPointError, InsufficientGridError

STENCIL_ORDERS = (2, 4, 6)
DEFAULT_ORDER = 4
SINGULAR_TOL = 1e-10
HYPERBOLIC_TOL = 1e-8


# {{{ grids

@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError(f"grid needs x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"n_points must be an integer >= 2, got {self.n_points}")
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.x_min, self.x_max, factor * (self.n_points - 1) + 1)


class GridFunction:
    """Vector-valued samples on a :class:`Grid`; ``values`` has shape ``(n, m)``.

    Instances are immutable: the stored array is flagged read-only.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != grid.n_points:
            raise ValueError(
                f"values must have shape ({grid.n_points}, m), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function has non-finite entries")
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable) -> "GridFunction":
        vals = np.asarray(fn(grid.nodes), dtype=float)
        if vals.ndim == 2 and vals.shape[0] != grid.n_points:
            vals = vals.T
        return cls(grid, vals)

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def component(self, i: int) -> np.ndarray:
        return self.values[:, i]

    def sup_norm(self) -> float:
        """Sup over nodes of the Euclidean norm of the value vector."""
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def __add__(self, other):
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return GridFunction(self.grid, scalar * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __repr__(self):
        return f"GridFunction(m={self.m}, grid={self.grid})"

# }}}


# {{{ finite differences

def fd_weights(z: float, nodes, order: int) -> np.ndarray:
    """Fornberg's recursion for the weights of the ``order``-th derivative at ``z``."""
    x = np.asarray(nodes, dtype=float)
    n = len(x)
    c = np.zeros((n, order + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


@lru_cache(maxsize=None)
def _stencils(p: int):
    r = p // 2
    interior = fd_weights(0.0, np.arange(-r, r + 1), 1)
    # rows i = 0..r-1 use nodes 0..p (one-sided, same order)
    left = np.array([fd_weights(float(i), np.arange(p + 1), 1) for i in range(r)])
    right = np.array([fd_weights(float(p - r + 1 + i), np.arange(p + 1), 1)
                      for i in range(r)])
    return interior, left, right


def _diff_array(values: np.ndarray, h: float, p: int) -> np.ndarray:
    n = values.shape[0]
    r = p // 2
    interior, left, right = _stencils(p)
    out = np.empty_like(values)
    acc = np.zeros((n - 2 * r,) + values.shape[1:])
    for j, w in enumerate(interior):
        if w != 0.0:
            acc += w * values[j:n - 2 * r + j]
    out[r:n - r] = acc
    out[:r] = np.tensordot(left, values[:p + 1], axes=(1, 0))
    out[n - r:] = np.tensordot(right, values[n - p - 1:], axes=(1, 0))
    return out / h


def derivative(f: GridFunction, p: int = DEFAULT_ORDER) -> GridFunction:
    """First derivative of every component with an order-``p`` stencil.

    Central differences in the interior, one-sided ``p+1`` point stencils of the
    same order in the ``p/2`` nodes next to each boundary.
    """
    if p not in STENCIL_ORDERS:
        raise ValueError(f"stencil order must be one of {STENCIL_ORDERS}, got {p}")
    if f.grid.n_points <= p:
        raise InsufficientGridError(
            f"insufficient grid: {f.grid.n_points} points for a stencil of order {p}")
    return GridFunction(f.grid, _diff_array(f.values, f.grid.h, p))

# }}}


# {{{ coefficient fields and systems

class MatrixField:
    """A map ``x -> (m, m)`` matrix, evaluated on arrays of points.

    ``fn`` takes an array of shape ``(n,)`` and returns shape ``(n, m, m)``.
    """

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], m: int):
        self._fn = fn
        self.m = int(m)

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.asarray(self._fn(x), dtype=float)
        return np.broadcast_to(out, x.shape + (self.m, self.m))

    @classmethod
    def constant(cls, matrix) -> "MatrixField":
        mat = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(lambda x: np.broadcast_to(mat, x.shape + mat.shape), mat.shape[0])

    @classmethod
    def from_samples(cls, grid: Grid, samples) -> "MatrixField":
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None, None]
        spline = CubicSpline(grid.nodes, samples, axis=0)
        nodes = grid.nodes

        def fn(x):
            out = spline(x)
            # exact sample values at grid nodes
            idx = np.searchsorted(nodes, x)
            hit = (idx < len(nodes)) & (nodes[np.minimum(idx, len(nodes) - 1)] == x)
            out[hit] = samples[idx[hit]]
            return out

        return cls(fn, samples.shape[1])


@dataclass(frozen=True)
class HyperbolicSystem1D:
    """``u_t + A1(x) u_x + A0(x) u = 0`` with ``m`` components."""

    m: int
    a1: MatrixField
    a0: MatrixField

    def __post_init__(self):
        if self.a1.m != self.m or self.a0.m != self.m:
            raise ValueError("coefficient matrices do not match the system size")

    def check_hyperbolic(self, grid: Grid, tol: float = HYPERBOLIC_TOL) -> None:
        """Raise ``ValueError`` unless A1 is real-diagonalizable at every node."""
        mats = self.a1(grid.nodes)
        lam, vecs = np.linalg.eig(mats)
        if np.max(np.abs(lam.imag)) > tol:
            raise ValueError("A1 has complex eigenvalues (system is not hyperbolic)")
        if np.any(np.abs(np.linalg.det(vecs)) < tol):
            raise ValueError("A1 is not diagonalizable (defective eigenvectors)")
        resid = mats @ vecs - vecs * lam[:, None, :]
        if np.max(np.abs(resid)) > tol * max(1.0, np.max(np.abs(mats))):
            raise ValueError("eigen-decomposition residual of A1 exceeds tolerance")


@dataclass(frozen=True)
class SWESystem(HyperbolicSystem1D):
    """The hodograph shallow-water system for a bay profile ``c(sigma) >= 0``.

    ``A1 = [[0, 1], [c, 0]]`` and ``A0 = [[0, 0], [1, 0]]``; eigenvalues of A1
    are ``+-sqrt(c)``.  At ``c = 0`` (the shoreline) A1 is a Jordan block, so
    hyperbolicity is checked through the sign of ``c`` alone.
    """

    c: Callable = field(default=None, repr=False)

    def check_hyperbolic(self, grid: Grid, tol: float = HYPERBOLIC_TOL) -> None:
        cv = np.asarray(self.c(grid.nodes), dtype=float)
        if np.any(cv < -tol):
            raise ValueError("bay profile c(sigma) must be non-negative")


def swe_system(c: Callable) -> SWESystem:
    def a1(s):
        out = np.zeros(s.shape + (2, 2))
        out[..., 0, 1] = 1.0
        out[..., 1, 0] = c(s)
        return out

    return SWESystem(2, MatrixField(a1, 2),
                     MatrixField.constant([[0.0, 0.0], [1.0, 0.0]]), c=c)


def apply_D(system: HyperbolicSystem1D, f: GridFunction, p: int = DEFAULT_ORDER) -> GridFunction:
    """Node-wise ``A1(x) f'(x) + A0(x) f(x)``."""
    if f.m != system.m:
        raise ValueError(f"grid function has {f.m} components, system has {system.m}")
    x = f.grid.nodes
    df = derivative(f, p).values
    out = (np.einsum("nij,nj->ni", system.a1(x), df)
           + np.einsum("nij,nj->ni", system.a0(x), f.values))
    return GridFunction(f.grid, out)

# }}}


# {{{ manifolds

@dataclass(frozen=True)
class Manifold:
    """The curve ``t = tau(x)``; both callables are vectorised."""

    tau: Callable
    tau_prime: Callable

    @classmethod
    def flat(cls) -> "Manifold":
        return cls(np.zeros_like, np.zeros_like)

    @classmethod
    def linear(cls, beta: float) -> "Manifold":
        return cls(lambda x: beta * np.asarray(x, dtype=float),
                   lambda x: np.full_like(np.asarray(x, dtype=float), beta))

    @classmethod
    def from_samples(cls, grid: Grid, tau_values, tau_prime_values=None,
                     p: int = DEFAULT_ORDER) -> "Manifold":
        tau_values = np.asarray(tau_values, dtype=float)
        if tau_prime_values is None:
            tau_prime_values = derivative(GridFunction(grid, tau_values), p).values[:, 0]
        tau_f = MatrixField.from_samples(grid, tau_values)
        dtau_f = MatrixField.from_samples(grid, tau_prime_values)
        return cls(lambda x: tau_f(x)[..., 0, 0], lambda x: dtau_f(x)[..., 0, 0])


def characteristic_matrix(system: HyperbolicSystem1D, manifold: Manifold, x) -> np.ndarray:
    """``tau'(x) A1(x)``; shape ``(m, m)`` for scalar ``x``, else ``(n, m, m)``."""
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.asarray(manifold.tau_prime(xs), dtype=float)[:, None, None] * system.a1(xs)
    return out[0] if scalar else out


def transversal_matrices(system: HyperbolicSystem1D, manifold: Manifold, grid: Grid) -> np.ndarray:
    """``I - tau' A1`` at every node, shape ``(n, m, m)``."""
    return np.eye(system.m) - characteristic_matrix(system, manifold, grid.nodes)


def noncharacteristic_margin(system: HyperbolicSystem1D, manifold: Manifold, grid: Grid) -> float:
    """``min_x |det(I - tau'(x) A1(x))|`` over the grid nodes."""
    return float(np.min(np.abs(np.linalg.det(transversal_matrices(system, manifold, grid)))))


def check_noncharacteristic(mats: np.ndarray, nodes: np.ndarray, tol: float = SINGULAR_TOL) -> None:
    """Raise :class:`CharacteristicPointError` at the first near-singular node.

    The test is ``|det M| <= tol * max(1, |M|_2)^m``.
    """
    det = np.abs(np.linalg.det(mats))
    scale = np.maximum(1.0, np.linalg.norm(mats, ord=2, axis=(1, 2))) ** mats.shape[-1]
    bad = np.flatnonzero(det <= tol * scale)
    if bad.size:
        i = bad[np.argmin(det[bad])]
        raise CharacteristicPointError(nodes[i], det[i])


@dataclass(frozen=True)
class ManifoldIC:
    """Cauchy data ``u|_Gamma = g`` on ``Gamma = {(x, tau(x))}``."""

    system: HyperbolicSystem1D
    manifold: Manifold
    g: GridFunction
    singular_tol: float = SINGULAR_TOL

    def __post_init__(self):
        if self.g.m != self.system.m:
            raise ValueError(f"data has {self.g.m} components, system has {self.system.m}")
        self.system.check_hyperbolic(self.g.grid)
        tau = np.asarray(self.manifold.tau(self.g.grid.nodes), dtype=float)
        dtau = np.asarray(self.manifold.tau_prime(self.g.grid.nodes), dtype=float)
        if not (np.all(np.isfinite(tau)) and np.all(np.isfinite(dtau))):
            raise ValueError("tau or tau' is not finite on the grid")
        check_noncharacteristic(self.transversal(), self.g.grid.nodes, self.singular_tol)

    @property
    def grid(self) -> Grid:
        return self.g.grid

    def tau_values(self) -> np.ndarray:
        return np.asarray(self.manifold.tau(self.grid.nodes), dtype=float)

    def transversal(self) -> np.ndarray:
        return transversal_matrices(self.system, self.manifold, self.grid)

    def margin(self) -> float:
        return noncharacteristic_margin(self.system, self.manifold, self.grid)

# }}}
