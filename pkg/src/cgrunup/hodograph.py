"""Carrier-Greenspan transform between physical and hodograph variables.

Physical data live on ``x`` (offshore distance, still-water shoreline at 0)
with elevation ``eta`` and velocity ``u``.  The hodograph variables are

    sigma = x + eta,   tau = t - u,   phi = u,   psi = eta + u^2 / 2,

so the moving shoreline (zero total depth) is always ``sigma = 0``.  At
``t = 0`` the data sit on the curve ``tau = -u0(gamma(sigma))``, where
``gamma`` inverts ``x + eta0(x)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .core import (DEFAULT_ORDER, Grid, GridFunction, Manifold, ManifoldIC,
                   derivative, swe_system)
from .errors import HodographFoldError, HorizonError, PostBreakingError
from .evolver import HodographSolution

logger = logging.getLogger(__name__)

ROOT_TOL = 1e-13
TAU_TOL = 1e-10
MARGIN_TOL = 1e-6


# {{{ bay profiles

@dataclass(frozen=True)
class BayProfile:
    """Profile function ``c(sigma) >= 0`` of an inclined bay."""

    name: str
    fn: Callable = field(repr=False)

    def __call__(self, sigma):
        return self.fn(np.asarray(sigma, dtype=float))

    @property
    def is_plane_beach(self) -> bool:
        return self.name == "plane-beach"


def plane_beach() -> BayProfile:
    return BayProfile("plane-beach", lambda s: np.array(s, dtype=float, copy=True))


def tabulated_profile(sigma, c) -> BayProfile:
    """Monotone-cubic interpolant of samples, held constant beyond the last sample."""
    sigma = np.asarray(sigma, dtype=float)
    c = np.asarray(c, dtype=float)
    if sigma.ndim != 1 or sigma.shape != c.shape or len(sigma) < 2:
        raise ValueError("tabulated profile needs matching 1-D sigma and c arrays")
    if np.any(np.diff(sigma) <= 0):
        raise ValueError("tabulated sigma values must be strictly increasing")
    if np.any(c < 0):
        raise ValueError("bay profile c(sigma) must be non-negative")
    interp = PchipInterpolator(sigma, c)
    lo, hi = sigma[0], sigma[-1]
    return BayProfile("tabulated", lambda s: interp(np.clip(s, lo, hi)))

# }}}


# {{{ physical data

def _as_function(data, grid: Grid) -> tuple[Callable, Callable]:
    """Value and derivative callables for analytic or sampled data."""
    if callable(data):
        step = 1e-3

        def deriv(x):
            x = np.asarray(x, dtype=float)
            # sixth-order central difference of the analytic function
            return (45 * (data(x + step) - data(x - step))
                    - 9 * (data(x + 2 * step) - data(x - 2 * step))
                    + (data(x + 3 * step) - data(x - 3 * step))) / (60 * step)

        return (lambda x: np.asarray(data(np.asarray(x, dtype=float)), dtype=float)), deriv
    values = np.asarray(data, dtype=float)
    if values.shape != (grid.n_points,):
        raise ValueError(f"sampled data must have {grid.n_points} values")
    spline = CubicSpline(grid.nodes, values)
    return spline, spline.derivative()


class PhysicalIC:
    """Initial elevation and velocity on ``x_grid`` for a bay profile ``c``.

    ``eta0`` and ``u0`` may be vectorised callables or arrays of node values
    (interpolated by cubic splines).  The grid must reach the shoreline, i.e.
    ``x_min + eta0(x_min) <= 0``.
    """

    def __init__(self, x_grid: Grid, eta0, u0, c: Callable | None = None):
        self.x_grid = x_grid
        self.c = c if c is not None else plane_beach()
        self._eta, self._deta = _as_function(eta0, x_grid)
        self._u, self._du = _as_function(u0, x_grid)
        x = x_grid.nodes
        if not (np.all(np.isfinite(self.eta(x))) and np.all(np.isfinite(self.u(x)))):
            raise ValueError("initial data must be finite on the grid")

    def eta(self, x):
        return self._eta(x)

    def u(self, x):
        return self._u(x)

    def deta(self, x):
        return self._deta(x)

    def du(self, x):
        return self._du(x)

    def monotonicity_margin(self) -> float:
        """``min (1 + eta0')`` over the grid nodes."""
        return float(np.min(1.0 + self.deta(self.x_grid.nodes)))

    def tail_ratio(self, fraction: float = 0.05) -> float:
        """Largest offshore value (last ``fraction`` of the grid) relative to the peak."""
        x = self.x_grid.nodes
        vals = np.maximum(np.abs(self.eta(x)), np.abs(self.u(x)))
        peak = vals.max()
        if peak == 0:
            return 0.0
        tail = x >= self.x_grid.x_max - fraction * (self.x_grid.x_max - self.x_grid.x_min)
        return float(vals[tail].max() / peak)

    def default_sigma_grid(self, n_points: int | None = None) -> Grid:
        """``[0, x_max + eta0(x_max)]`` with the same node count as the physical grid."""
        xm = self.x_grid.x_max
        top = float(xm + self.eta(np.array([xm]))[0])
        return Grid(0.0, top, n_points or self.x_grid.n_points)

# }}}


# {{{ forward transform

def invert_monotone(F: Callable, dF: Callable, x_nodes: np.ndarray, targets: np.ndarray,
                    tol: float = ROOT_TOL, max_iter: int = 100) -> np.ndarray:
    """Solve ``F(x) = target`` for increasing ``F`` by safeguarded Newton steps.

    The starting guess is a monotone cubic interpolant of ``x`` against
    ``F(x_nodes)``; brackets come from the same samples, and any Newton step
    that leaves its bracket is replaced by bisection.
    """
    f_nodes = F(x_nodes)
    if np.any(np.diff(f_nodes) <= 0):
        raise HodographFoldError("hodograph fold (wave breaking in data): x + eta0 is not increasing")
    targets = np.asarray(targets, dtype=float)
    if targets.min() < f_nodes[0] or targets.max() > f_nodes[-1]:
        raise ValueError(
            f"sigma range [{targets.min():.6g}, {targets.max():.6g}] is not covered by "
            f"x + eta0 on the grid [{f_nodes[0]:.6g}, {f_nodes[-1]:.6g}]")
    idx = np.clip(np.searchsorted(f_nodes, targets), 1, len(x_nodes) - 1)
    lo = x_nodes[idx - 1].copy()
    hi = x_nodes[idx].copy()
    x = np.clip(PchipInterpolator(f_nodes, x_nodes)(targets), lo, hi)
    scale = max(1.0, float(np.max(np.abs(x_nodes))))
    for _ in range(max_iter):
        r = F(x) - targets
        lo = np.where(r < 0, x, lo)
        hi = np.where(r > 0, x, hi)
        d = dF(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d > 0, r / d, np.inf)
        trial = x - step
        bad = ~((trial >= lo) & (trial <= hi))
        new = np.where(bad, 0.5 * (lo + hi), trial)
        done = np.max(np.abs(new - x)) <= tol * scale
        x = new
        if done:
            break
    return x


def hodograph_map(ic: PhysicalIC, sigma_grid: Grid) -> np.ndarray:
    """``gamma(sigma)`` at the sigma nodes: the inverse of ``x + eta0(x)``."""
    if ic.monotonicity_margin() <= 0:
        raise HodographFoldError("hodograph fold (wave breaking in data): 1 + eta0' <= 0")
    return invert_monotone(lambda x: x + ic.eta(x), lambda x: 1.0 + ic.deta(x),
                           ic.x_grid.nodes, sigma_grid.nodes)


def transformed_data(ic: PhysicalIC, sigma_grid: Grid):
    """``(gamma, phi0, psi0)`` on the sigma nodes."""
    gamma = hodograph_map(ic, sigma_grid)
    phi0 = ic.u(gamma)
    psi0 = ic.eta(gamma) + 0.5 * phi0 ** 2
    return gamma, phi0, psi0


def forward_cg(ic: PhysicalIC, sigma_grid: Grid | None = None, p: int = DEFAULT_ORDER,
               singular_tol: float | None = None) -> ManifoldIC:
    """Cauchy data ``(phi0, psi0)`` on ``tau = -phi0(sigma)`` for the hodograph system.

    ``tau'`` is the order-``p`` finite-difference derivative of the sampled
    ``phi0``, the same operator used later for the projection.
    """
    sigma_grid = sigma_grid or ic.default_sigma_grid()
    _, phi0, psi0 = transformed_data(ic, sigma_grid)
    tau = -phi0
    if np.all(tau == 0.0):
        manifold = Manifold.flat()
    else:
        dtau = derivative(GridFunction(sigma_grid, tau), p).values[:, 0]
        manifold = Manifold.from_samples(sigma_grid, tau, dtau)
    g = GridFunction(sigma_grid, np.column_stack([phi0, psi0]))
    kw = {} if singular_tol is None else {"singular_tol": singular_tol}
    return ManifoldIC(swe_system(ic.c), manifold, g, **kw)


@dataclass(frozen=True)
class NonBreakingReport:
    monotonicity_margin: float       # min (1 + eta0')
    characteristic_margin: float     # min |1 - (phi0')^2 c(sigma)|; nan if not computable
    tolerance: float = MARGIN_TOL

    @property
    def ok(self) -> bool:
        return (self.monotonicity_margin > self.tolerance
                and np.isfinite(self.characteristic_margin)
                and self.characteristic_margin > self.tolerance)

    def to_dict(self) -> dict:
        return {"monotonicity_margin": self.monotonicity_margin,
                "characteristic_margin": self.characteristic_margin,
                "tolerance": self.tolerance, "ok": self.ok}


def check_nonbreaking(ic: PhysicalIC, sigma_grid: Grid | None = None, p: int = DEFAULT_ORDER,
                      tol: float = MARGIN_TOL) -> NonBreakingReport:
    """Both validity margins of the transform; never raises for bad data."""
    mono = ic.monotonicity_margin()
    sigma_grid = sigma_grid or ic.default_sigma_grid()
    char = float("nan")
    if mono > 0:
        try:
            _, phi0, _ = transformed_data(ic, sigma_grid)
        except HodographFoldError:
            pass
        else:
            dphi = derivative(GridFunction(sigma_grid, phi0), p).values[:, 0]
            c = np.asarray(ic.c(sigma_grid.nodes), dtype=float)
            char = float(np.min(np.abs(1.0 - dphi ** 2 * c)))
    return NonBreakingReport(mono, char, tol)

# }}}


# {{{ inverse transform

def _solve_levels(taus: np.ndarray, phi: np.ndarray, t: float):
    """Per column, the root of ``tau + phi(tau) = t`` on the stored levels.

    ``phi`` has shape ``(n_tau, n_cols)``.  Returns ``(tau_star, spline)``.
    """
    if len(taus) < 2:
        raise HorizonError("at least two tau levels are needed to invert the transform")
    spline = CubicSpline(taus, phi, axis=0)
    F = taus[:, None] + phi - t
    pos = F > 0
    change = pos[1:] != pos[:-1]
    n_changes = change.sum(axis=0)
    exact_end = (np.abs(F[-1]) <= TAU_TOL) & (n_changes == 0)
    exact_start = (np.abs(F[0]) <= TAU_TOL) & (n_changes == 0)
    missing = (n_changes == 0) & ~exact_end & ~exact_start
    if np.any(missing):
        col = int(np.flatnonzero(missing)[0])
        raise HorizonError(
            f"t={t:.6g} is outside the solution horizon at column {col} "
            f"(tau + phi spans [{F[:, col].min() + t:.6g}, {F[:, col].max() + t:.6g}])")
    if np.any(n_changes > 1):
        raise PostBreakingError("post-breaking state, inverse CG invalid: "
                                "tau + phi is not monotone in tau")
    j = np.where(n_changes == 1, np.argmax(change, axis=0), 0)
    j = np.where(exact_end, len(taus) - 2, j)
    cols = np.arange(phi.shape[1])
    coef = spline.c[:, j, cols]            # (4, n_cols), powers 3..0 of (tau - taus[j])
    width = taus[j + 1] - taus[j]

    def f(d):
        return ((coef[0] * d + coef[1]) * d + coef[2]) * d + coef[3] + taus[j] + d - t

    def df(d):
        return (3 * coef[0] * d + 2 * coef[1]) * d + coef[2] + 1.0

    # monotonicity on the bracket: derivative positive at both ends and the middle
    if np.any((df(0.0 * width) <= 0) | (df(width) <= 0) | (df(0.5 * width) <= 0)):
        raise PostBreakingError("post-breaking state, inverse CG invalid: "
                                "1 + phi_tau <= 0 inside a bracket")
    lo = np.zeros_like(width)
    hi = width.copy()
    d = np.where(exact_end, width, np.where(exact_start & (n_changes == 0), 0.0, 0.5 * width))
    for _ in range(100):
        r = f(d)
        lo = np.where(r < 0, d, lo)
        hi = np.where(r > 0, d, hi)
        trial = d - r / df(d)
        bad = ~((trial >= lo) & (trial <= hi))
        new = np.where(bad, 0.5 * (lo + hi), trial)
        done = np.max(np.abs(new - d)) <= 1e-15 * max(1.0, float(np.max(np.abs(taus))))
        d = new
        if done:
            break
    tau_star = taus[j] + d
    if np.max(np.abs(f(d))) > TAU_TOL:
        raise PostBreakingError("inverse CG root-finding did not converge")
    return tau_star, j, d


def _eval_columns(taus, values, j, d):
    spline = CubicSpline(taus, values, axis=0)
    cols = np.arange(values.shape[1])
    c = spline.c[:, j, cols]
    return ((c[0] * d + c[1]) * d + c[2]) * d + c[3]


@dataclass(frozen=True)
class PhysicalSnapshot:
    """Physical state at time ``t``, one entry per sigma node."""

    t: float
    x: np.ndarray
    eta: np.ndarray
    u: np.ndarray
    shoreline_x: float
    shoreline_u: float
    sigma: np.ndarray = field(repr=False, default=None)
    tau: np.ndarray = field(repr=False, default=None)
    phi: np.ndarray = field(repr=False, default=None)
    psi: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if not (len(self.x) == len(self.eta) == len(self.u)):
            raise ValueError("snapshot arrays must have equal length")

    @property
    def shoreline_eta(self) -> float:
        return float(self.eta[0])

    def cg_residual(self) -> float:
        """Largest violation of the four algebraic transform relations."""
        r = [np.abs(self.sigma - (self.x + self.eta)),
             np.abs(self.tau - (self.t - self.u)),
             np.abs(self.phi - self.u),
             np.abs(self.psi - (self.eta + 0.5 * self.u ** 2))]
        return float(max(np.max(v) for v in r))

    def resampled(self, n_points: int | None = None):
        """``(x, eta, u)`` on a uniform grid over the wet region, linear interpolation."""
        n = n_points or len(self.x)
        xu = np.linspace(self.x[0], self.x[-1], n)
        return xu, np.interp(xu, self.x, self.eta), np.interp(xu, self.x, self.u)


def inverse_cg_snapshot(sol: HodographSolution, t: float) -> PhysicalSnapshot:
    """Physical fields at time ``t`` from a hodograph solution.

    For every sigma node the level ``tau`` with ``tau + phi(sigma, tau) = t`` is
    found by bracketing over the stored levels and Newton/bisection on the
    cubic interpolant in ``tau``.
    """
    taus = np.asarray(sol.tau_values, dtype=float)
    tau_star, j, d = _solve_levels(taus, sol.phi, t)
    phi = _eval_columns(taus, sol.phi, j, d)
    psi = _eval_columns(taus, sol.psi, j, d)
    sigma = sol.sigma_grid.nodes
    u = phi
    eta = psi - 0.5 * phi ** 2
    x = sigma - eta
    if np.any(np.diff(x) <= 0):
        raise PostBreakingError("post-breaking state, inverse CG invalid: x(sigma) is not increasing")
    return PhysicalSnapshot(float(t), x, eta, u, float(-eta[0]), float(u[0]),
                            sigma=sigma, tau=tau_star, phi=phi, psi=psi)


@dataclass(frozen=True)
class ShorelineSeries:
    t: np.ndarray
    x_s: np.ndarray
    eta_s: np.ndarray
    u_s: np.ndarray
    tau: np.ndarray

    @property
    def runup(self) -> float:
        return float(np.max(self.eta_s))

    @property
    def rundown(self) -> float:
        return float(np.min(self.eta_s))


def shoreline_series(sol: HodographSolution, t_values) -> ShorelineSeries:
    """Shoreline position, elevation and velocity at the requested times."""
    if sol.sigma_grid.x_min != 0.0:
        raise ValueError("the sigma grid must include the shoreline sigma = 0")
    taus = np.asarray(sol.tau_values, dtype=float)
    t_values = np.atleast_1d(np.asarray(t_values, dtype=float))
    phi0 = sol.phi[:, :1]
    psi0 = sol.psi[:, :1]
    tau_s = np.empty(len(t_values))
    u_s = np.empty(len(t_values))
    psi_s = np.empty(len(t_values))
    for i, t in enumerate(t_values):
        ts, j, d = _solve_levels(taus, phi0, t)
        tau_s[i] = ts[0]
        u_s[i] = _eval_columns(taus, phi0, j, d)[0]
        psi_s[i] = _eval_columns(taus, psi0, j, d)[0]
    eta_s = psi_s - 0.5 * u_s ** 2
    return ShorelineSeries(t_values, -eta_s, eta_s, u_s, tau_s)

# }}}
