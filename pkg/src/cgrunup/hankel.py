"""Bessel-mode solution of the hodograph system on a plane beach, ``c(sigma) = sigma``.

With ``s = 2 sqrt(sigma)`` the system ``phi_tau + psi_sigma = 0``,
``psi_tau + (sigma phi)_sigma = 0`` has separated solutions

    psi = J0(k s) cos(k tau),        phi =  J1(k s)/sqrt(sigma) sin(k tau)
    psi = J0(k s) sin(k tau),        phi = -J1(k s)/sqrt(sigma) cos(k tau)

(from ``J0' = -J1`` and ``(x J1)' = x J0``).  A general solution is the sum

    psi(sigma, tau) = sum_i w_i [a_i cos(k_i tau) + b_i sin(k_i tau)] J0(k_i s)
    phi(sigma, tau) = sum_i w_i [a_i sin(k_i tau) - b_i cos(k_i tau)] J1(k_i s)/sqrt(sigma)

so ``psi(., 0)`` is an order-0 and ``sqrt(sigma) phi(., 0)`` an order-1 Hankel
expansion.  Two wavenumber sets are supported:

``fourier-bessel``
    ``k_n = j_{0,n} / R`` on ``s in [0, R]`` with unit weights.  ``J0(k_n s)`` and
    ``J1(k_n s)`` are then both orthogonal on ``[0, R]`` with weight ``s`` and the
    same norm ``R^2 J1(j_{0,n})^2 / 2``; the energy
    ``int (sigma phi^2 + psi^2) dsigma`` is exactly ``sum e_n (a_n^2 + b_n^2)``.
    ``R`` defaults to three times the data radius, which keeps the artificial
    wall at ``R`` out of reach for ``tau`` below roughly ``4 R / 3``.

``gauss-legendre``
    Quadrature of the continuous Hankel transform on ``[0, k_max]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import j0, j1, jn_zeros

from .core import Grid, GridFunction
from .errors import SpectralResolutionError
from .evolver import HodographSolution

KINDS = ("fourier-bessel", "gauss-legendre")
TAIL_TOL = 1e-8


@dataclass(frozen=True)
class KGrid:
    kind: str = "fourier-bessel"
    n: int = 256
    pad: float = 3.0                 # fourier-bessel: R = pad * 2 sqrt(sigma_max)
    radius: float | None = None      # fourier-bessel: explicit R, overrides pad
    k_max: float | None = None       # gauss-legendre: explicit cutoff

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"k-grid kind must be one of {KINDS}, got {self.kind!r}")
        if self.n < 1:
            raise ValueError("k-grid needs at least one node")


@dataclass(frozen=True)
class SpectralCoefficients:
    k_nodes: np.ndarray
    k_weights: np.ndarray
    a: np.ndarray
    b: np.ndarray
    energy_weights: np.ndarray       # energy = sum e_i (a_i^2 + b_i^2)
    kind: str = "fourier-bessel"
    radius: float | None = None
    residual: float = 0.0

    def __post_init__(self):
        n = len(self.k_nodes)
        if not all(len(v) == n for v in (self.k_weights, self.a, self.b, self.energy_weights)):
            raise ValueError("spectral coefficient arrays must have equal length")
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b))):
            raise ValueError("spectral coefficients must be finite")

    def energy(self) -> float:
        return float(np.sum(self.energy_weights * (self.a ** 2 + self.b ** 2)))

    @classmethod
    def single_mode(cls, k: float, a: float = 1.0, b: float = 0.0) -> "SpectralCoefficients":
        return cls(np.array([k]), np.array([1.0]), np.array([a]), np.array([b]),
                   np.array([np.nan]), kind="mode")


# {{{ mode shapes

def psi_mode(k, sigma):
    """``J0(2 k sqrt(sigma))``."""
    return j0(2.0 * np.multiply.outer(np.sqrt(sigma), k))


def phi_mode(k, sigma):
    """``J1(2 k sqrt(sigma)) / sqrt(sigma)``, equal to ``k`` at ``sigma = 0``."""
    k = np.asarray(k, dtype=float)
    x = 2.0 * np.multiply.outer(np.sqrt(sigma), k)
    small = x < 1e-4
    xs = np.where(small, 1.0, x)
    # J1(x)/x = 1/2 - x^2/16 + O(x^4)
    ratio = np.where(small, 0.5 - x ** 2 / 16.0, j1(xs) / xs)
    return 2.0 * k * ratio

# }}}


def _gauss_panels(edges, n_per_panel):
    xg, wg = np.polynomial.legendre.leggauss(n_per_panel)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (xg + 1.0)).ravel()
    weights = (half * wg).ravel()
    return nodes, weights


def _sigma_quadrature(grid: Grid, k_top: float, n_per_panel: int = 8):
    """Panels aligned with the data grid, split so that ``2 k sqrt(sigma)`` turns by <= 1 rad."""
    sig = grid.nodes
    s = 2.0 * np.sqrt(sig)
    splits = np.maximum(1, np.ceil(k_top * np.diff(s))).astype(int)
    edges = [sig[:1]]
    for lo, hi, m in zip(sig[:-1], sig[1:], splits):
        edges.append(np.linspace(lo, hi, m + 1)[1:])
    return _gauss_panels(np.concatenate(edges), n_per_panel)


def _tail_ratio(values: np.ndarray, sigma: np.ndarray) -> float:
    peak = np.max(np.abs(values))
    if peak == 0:
        return 0.0
    tail = sigma >= sigma[0] + 0.95 * (sigma[-1] - sigma[0])
    return float(np.max(np.abs(values[tail])) / peak)


def kgrid_for_horizon(sigma_max: float, horizon: float, base: KGrid | None = None) -> KGrid:
    """A Fourier-Bessel grid whose wall at ``R`` cannot echo back into the data
    interval before ``|tau| = horizon``; the node count grows with ``R`` so the
    wavenumber cutoff stays that of ``base``."""
    base = base or KGrid()
    if base.kind != "fourier-bessel":
        return base
    data_radius = 2.0 * math.sqrt(sigma_max)
    r0 = base.radius if base.radius is not None else base.pad * data_radius
    radius = max(r0, data_radius + 0.5 * horizon + 2.0)
    n = max(base.n, int(math.ceil(base.n * radius / r0)))
    return KGrid("fourier-bessel", n=n, pad=base.pad, radius=radius)


def _fb_nodes(k_grid: KGrid, data_radius: float):
    radius = k_grid.radius if k_grid.radius is not None else k_grid.pad * data_radius
    if radius < data_radius * (1 - 1e-12):
        raise ValueError("Fourier-Bessel radius must cover the data interval")
    zeros = jn_zeros(0, k_grid.n)
    k = zeros / radius
    norm = radius ** 2 * j1(zeros) ** 2 / 2.0
    return k, np.ones_like(k), norm, radius


def _gl_nodes(k_grid: KGrid, k_max: float):
    x, w = np.polynomial.legendre.leggauss(k_grid.n)
    return 0.5 * k_max * (x + 1.0), 0.5 * k_max * w


def _transform(psi_fn, phi_fn, sigma_q, w_q, k):
    """``int psi J0 ds s`` and ``int sqrt(sigma) phi J1 s ds`` for every ``k`` (in ``s``)."""
    # s ds = 2 dsigma
    psi_q = psi_fn(sigma_q) * w_q * 2.0
    phi_q = phi_fn(sigma_q) * np.sqrt(sigma_q) * w_q * 2.0
    x = 2.0 * np.multiply.outer(np.sqrt(sigma_q), k)
    return psi_q @ j0(x), phi_q @ j1(x)


def _auto_k_max(psi_fn, phi_fn, grid: Grid, k_cap: float = 100.0, n_scan: int = 400) -> float:
    k = np.linspace(k_cap / n_scan, k_cap, n_scan)
    sq, wq = _sigma_quadrature(grid, k_cap, 6)
    fa, fb = _transform(psi_fn, phi_fn, sq, wq, k)
    spec = np.maximum(np.abs(k * fa), np.abs(k * fb))
    if spec.max() == 0:
        return 1.0
    above = np.flatnonzero(spec > TAIL_TOL * spec.max())
    return float(min(k_cap, 1.2 * k[above[-1]] + k[0]))


def hankel_analyze(ic: GridFunction, k_grid: KGrid | None = None,
                   tol: float = 1e-6) -> SpectralCoefficients:
    """Expand ``(phi, psi)`` at ``tau = 0`` in Bessel modes.

    The data are interpolated with cubic splines in ``sigma`` and integrated
    with Gauss panels aligned to the data grid.  The reconstruction residual
    (sup error at the data nodes, relative to the data sup norm) is stored on
    the result; above ``tol`` a :class:`SpectralResolutionError` is raised.
    """
    k_grid = k_grid or KGrid()
    grid = ic.grid
    if grid.x_min != 0.0:
        raise ValueError("spectral analysis needs a sigma grid starting at the shoreline")
    if ic.m != 2:
        raise ValueError("hodograph data must have two components (phi, psi)")
    sigma = grid.nodes
    phi0, psi0 = ic.values[:, 0], ic.values[:, 1]
    data_radius = 2.0 * math.sqrt(grid.x_max)
    scale = float(np.max(np.abs(ic.values)))
    zero = scale == 0.0

    extends = k_grid.kind == "gauss-legendre" or (
        k_grid.radius if k_grid.radius is not None else k_grid.pad * data_radius
    ) > data_radius * (1 + 1e-12)
    if extends and not zero:
        tail = max(_tail_ratio(phi0, sigma), _tail_ratio(psi0, sigma))
        if tail > TAIL_TOL:
            raise ValueError(
                f"data must decay inside the sigma interval for a zero-extended "
                f"expansion (tail ratio {tail:.2e} > {TAIL_TOL:g})")

    psi_fn = CubicSpline(sigma, psi0)
    phi_fn = CubicSpline(sigma, phi0)

    if k_grid.kind == "fourier-bessel":
        k, w, norm, radius = _fb_nodes(k_grid, data_radius)
        if zero:
            a = np.zeros_like(k)
            b = np.zeros_like(k)
        else:
            sq, wq = _sigma_quadrature(grid, k[-1])
            fa, fb = _transform(psi_fn, phi_fn, sq, wq, k)
            a = fa / norm
            b = -fb / norm
        energy_w = norm / 2.0
    else:
        radius = None
        k_max = k_grid.k_max
        if k_max is None:
            k_max = 1.0 if zero else _auto_k_max(psi_fn, phi_fn, grid)
        k, w = _gl_nodes(k_grid, k_max)
        if zero:
            a = np.zeros_like(k)
            b = np.zeros_like(k)
        else:
            sq, wq = _sigma_quadrature(grid, k_max)
            fa, fb = _transform(psi_fn, phi_fn, sq, wq, k)
            a = k * fa
            b = -k * fb
        energy_w = w / (2.0 * k)

    coeffs = SpectralCoefficients(k, w, a, b, energy_w, k_grid.kind, radius)
    if zero:
        return coeffs
    phi_r, psi_r = hankel_evaluate(coeffs, sigma, 0.0)
    residual = max(np.max(np.abs(phi_r - phi0)), np.max(np.abs(psi_r - psi0))) / scale
    coeffs = SpectralCoefficients(k, w, a, b, energy_w, k_grid.kind, radius, float(residual))
    if residual > tol:
        raise SpectralResolutionError(
            f"spectral resolution insufficient: reconstruction residual {residual:.2e} > {tol:g}")
    return coeffs


def hankel_evaluate(coeffs: SpectralCoefficients, sigma, tau):
    """``(phi, psi)`` at points ``(sigma, tau)`` (broadcast together)."""
    sigma, tau = np.broadcast_arrays(np.asarray(sigma, dtype=float), np.asarray(tau, dtype=float))
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    k = coeffs.k_nodes
    wa = coeffs.k_weights * coeffs.a
    wb = coeffs.k_weights * coeffs.b
    kt = np.multiply.outer(tau, k)
    cos, sin = np.cos(kt), np.sin(kt)
    psi = np.sum((wa * cos + wb * sin) * psi_mode(k, sigma), axis=-1)
    phi = np.sum((wa * sin - wb * cos) * phi_mode(k, sigma), axis=-1)
    return phi, psi


def energy_integral(coeffs: SpectralCoefficients, tau, s_max: float | None = None,
                    n_per_panel: int = 16) -> np.ndarray:
    """``int (sigma phi^2 + psi^2) dsigma`` at each ``tau`` by Gauss quadrature in
    ``s = 2 sqrt(sigma)``, where the integrand is smooth up to the shoreline.

    ``s_max`` defaults to the Fourier-Bessel radius (the whole expansion
    interval), which captures all of the energy.
    """
    if s_max is None:
        if coeffs.radius is None:
            raise ValueError("s_max is required for expansions without a radius")
        s_max = coeffs.radius
    k_top = float(np.max(coeffs.k_nodes))
    panels = max(1, int(math.ceil(s_max * k_top / 2.0)))
    s_q, w_q = _gauss_panels(np.linspace(0.0, s_max, panels + 1), n_per_panel)
    sigma_q = 0.25 * s_q ** 2
    out = []
    for t in np.atleast_1d(np.asarray(tau, dtype=float)):
        phi, psi = hankel_evaluate(coeffs, sigma_q, np.full_like(sigma_q, t))
        # dsigma = s ds / 2
        out.append(np.sum(w_q * 0.5 * s_q * (sigma_q * phi ** 2 + psi ** 2)))
    return np.array(out)


def evolve_spectral(coeffs: SpectralCoefficients, sigma_grid: Grid, tau_out) -> HodographSolution:
    """Evaluate the Bessel expansion on ``sigma_grid`` at every level of ``tau_out`` (0 added)."""
    taus = np.unique(np.append(np.asarray(tau_out, dtype=float), 0.0))
    sigma = sigma_grid.nodes
    k = coeffs.k_nodes
    jpsi = psi_mode(k, sigma)
    jphi = phi_mode(k, sigma)
    wa = coeffs.k_weights * coeffs.a
    wb = coeffs.k_weights * coeffs.b
    kt = np.multiply.outer(taus, k)
    cos, sin = np.cos(kt), np.sin(kt)
    out = np.empty((len(taus), len(sigma), 2))
    out[..., 0] = (wa * sin - wb * cos) @ jphi.T
    out[..., 1] = (wa * cos + wb * sin) @ jpsi.T
    return HodographSolution(sigma_grid, taus, out, "spectral",
                             info={"kind": coeffs.kind, "n_modes": len(k),
                                   "radius": coeffs.radius})
