"""Method-of-lines solver for the hodograph system.

Solves ``phi_tau + A(sigma) phi_sigma + B phi = 0`` with ``A = [[0, 1], [c, 0]]``,
``B = [[0, 0], [1, 0]]``, i.e.

    phi_tau = -psi_sigma
    psi_tau = -(c phi)_sigma + (c' - 1) phi

The c-term is written in conservative form so that a diagonal-norm
summation-by-parts (SBP) difference operator gives a discrete energy
``phi^T C H phi + psi^T H psi`` whose rate of change is a boundary term only
(plus ``(c' - 1)`` coupling).  At ``sigma = 0`` with ``c(0) = 0`` that boundary
term vanishes and no condition is imposed; the incoming characteristic at
``sigma_max`` is set weakly (SAT), and a sponge layer absorbs outgoing waves.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.integrate import simpson

from .core import Grid, GridFunction, HyperbolicSystem1D, fd_weights
from .errors import InstabilityError

logger = logging.getLogger(__name__)

CFL = 0.4
SPONGE_WIDTH = 0.1
SPONGE_STRENGTH = 2.0
SBP_ORDERS = (2, 4)


# {{{ solution container

@dataclass(frozen=True)
class HodographSolution:
    sigma_grid: Grid
    tau_values: np.ndarray
    slices: np.ndarray            # (n_tau, n_sigma, 2): phi, psi
    method: str
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        tau = np.asarray(self.tau_values, dtype=float)
        if self.slices.shape != (len(tau), self.sigma_grid.n_points, 2):
            raise ValueError("slice array does not match tau levels and sigma grid")
        if len(tau) > 1 and np.any(np.diff(tau) <= 0):
            raise ValueError("tau levels must be strictly increasing")
        if not np.any(tau == 0.0):
            raise ValueError("tau levels must include 0")
        if not np.all(np.isfinite(self.slices)):
            raise ValueError("solution contains non-finite values")

    @property
    def phi(self) -> np.ndarray:
        return self.slices[..., 0]

    @property
    def psi(self) -> np.ndarray:
        return self.slices[..., 1]

    def slice(self, i: int) -> GridFunction:
        return GridFunction(self.sigma_grid, self.slices[i])

    def level(self, tau: float) -> int:
        hits = np.flatnonzero(np.isclose(self.tau_values, tau, rtol=0, atol=1e-12))
        if not hits.size:
            raise KeyError(f"tau={tau} is not a stored level")
        return int(hits[0])

    def energy(self, c: Callable | None = None) -> np.ndarray:
        """``int (c phi^2 + psi^2) dsigma`` at every stored level (``c = sigma`` by default)."""
        sigma = self.sigma_grid.nodes
        cv = sigma if c is None else np.asarray(c(sigma), dtype=float)
        return hodograph_energy(sigma, self.phi, self.psi, cv)


def hodograph_energy(sigma, phi, psi, c) -> np.ndarray:
    return simpson(c * phi ** 2 + psi ** 2, x=sigma, axis=-1)

# }}}


# {{{ SBP operators

class SBPOperator:
    """Diagonal-norm first-derivative operator ``D = H^{-1} Q`` with ``Q + Q^T = diag(-1, 0, ..., 0, 1)``.

    ``order=2``: central interior, first-order boundary rows.
    ``order=4``: fourth-order interior with the classical second-order
    boundary closure (norm weights 17/48, 59/48, 43/48, 49/48).
    """

    _CLOSURE_4 = np.array([
        [-24 / 17, 59 / 34, -4 / 17, -3 / 34, 0.0, 0.0],
        [-1 / 2, 0.0, 1 / 2, 0.0, 0.0, 0.0],
        [4 / 43, -59 / 86, 0.0, 59 / 86, -4 / 43, 0.0],
        [3 / 98, 0.0, -59 / 98, 0.0, 32 / 49, -4 / 49],
    ])

    def __init__(self, n: int, h: float, order: int = 4, degenerate_left: bool = False):
        if order not in SBP_ORDERS:
            raise ValueError(f"SBP order must be one of {SBP_ORDERS}, got {order}")
        if order == 4 and n < 12:
            raise ValueError("fourth-order SBP operator needs at least 12 points")
        if n < 3:
            raise ValueError("SBP operator needs at least 3 points")
        self.n = n
        self.h = h
        self.order = order
        norm = np.ones(n)
        if order == 2:
            norm[0] = norm[-1] = 0.5
            self._closure = np.array([[-1.0, 1.0]])
            self._interior = np.array([-0.5, 0.0, 0.5])
        else:
            w = np.array([17 / 48, 59 / 48, 43 / 48, 49 / 48])
            norm[:4] = w
            norm[-4:] = w[::-1]
            self._closure = self._CLOSURE_4
            self._interior = np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12])
        self.norm = h * norm
        self._left = self._closure
        if degenerate_left:
            # c(0) = 0: no boundary condition is needed at the left end, and the
            # SBP closure there limits accuracy; use 6-point, fifth-order rows
            nb = self._closure.shape[0]
            self._left = np.array([fd_weights(float(i), np.arange(6), 1) for i in range(nb)])

    def __call__(self, u: np.ndarray) -> np.ndarray:
        n = self.n
        nb, width = self._closure.shape
        lb, lwidth = self._left.shape
        r = len(self._interior) // 2
        out = np.empty_like(u)
        acc = np.zeros_like(u[r:n - r])
        for j, w in enumerate(self._interior):
            if w != 0.0:
                acc += w * u[j:n - 2 * r + j]
        out[r:n - r] = acc
        out[:lb] = self._left @ u[:lwidth]
        out[n - nb:] = -(self._closure[::-1, ::-1] @ u[n - width:])
        return out / self.h

    def sparse(self) -> sparse.csr_matrix:
        n = self.n
        nb, width = self._closure.shape
        r = len(self._interior) // 2
        rows, cols, vals = [], [], []
        for j, w in enumerate(self._interior):
            if w != 0.0:
                i = np.arange(self._left.shape[0], n - nb)
                rows.append(i)
                cols.append(i + j - r)
                vals.append(np.full(i.size, w))
        for block, r0, c0 in ((self._left, 0, 0),
                              (-self._closure[::-1, ::-1], n - nb, n - width)):
            bi, bj = np.nonzero(block)
            rows.append(bi + r0)
            cols.append(bj + c0)
            vals.append(block[bi, bj])
        mat = sparse.coo_matrix((np.concatenate(vals) / self.h,
                                 (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
        return mat.tocsr()

    def matrix(self) -> np.ndarray:
        return self.sparse().toarray()

# }}}


def _profile_from_system(system: HyperbolicSystem1D, sigma: np.ndarray) -> np.ndarray:
    a1 = system.a1(sigma)
    a0 = system.a0(sigma)
    ok = (system.m == 2
          and np.allclose(a1[:, 0, 0], 0) and np.allclose(a1[:, 1, 1], 0)
          and np.allclose(a1[:, 0, 1], 1)
          and np.allclose(a0, [[0.0, 0.0], [1.0, 0.0]]))
    if not ok:
        raise ValueError("evolve_fd expects the hodograph system A=[[0,1],[c,0]], B=[[0,0],[1,0]]")
    c = a1[:, 1, 0].copy()
    if np.any(c < 0):
        raise ValueError("bay profile c(sigma) must be non-negative")
    return c


def _sponge(sigma: np.ndarray, width: float, strength: float) -> np.ndarray:
    if width <= 0 or strength <= 0:
        return np.zeros_like(sigma)
    start = sigma[-1] - width * (sigma[-1] - sigma[0])
    ramp = np.clip((sigma - start) / (sigma[-1] - start), 0.0, None)
    return strength * ramp ** 3


class _Rhs:
    """Semi-discrete right-hand side ``L u + f(tau)`` for one direction of travel.

    The state is the flat vector ``[phi; psi]``.  The operator is linear and
    tau-independent, so it is assembled once as a sparse matrix.
    """

    def __init__(self, sigma, c, op: SBPOperator, direction: int, sponge: np.ndarray | None,
                 boundary_state: Callable | None):
        n = len(sigma)
        s = direction
        D = op.sparse()
        dc = op(c)
        hn, h0 = op.norm[-1], op.norm[0]
        a = math.sqrt(c[-1])
        self.n = n
        self.s = s
        self.boundary_state = boundary_state
        self._sat = (a, hn)

        blocks = [[None, -s * D],
                  [s * (-(D @ sparse.diags(c)) + sparse.diags(dc - 1.0)), None]]
        lin = sparse.bmat(blocks, format="lil")

        # weak characteristic condition at sigma_max on w = psi - s*a*phi
        N = n - 1
        lin[N, N] += -0.5 * a / hn
        lin[N, n + N] += 0.5 * s / hn
        lin[n + N, N] += 0.5 * s * a * a / hn
        lin[n + N, n + N] += -0.5 * a / hn

        if c[0] > 0:
            # wall phi = 0 at sigma = 0, energy-neutral penalty
            lin[n, 0] += -s * c[0] / h0

        lin = lin.tocsr()
        if sponge is not None:
            if np.any(sponge[c <= 0] > 0):
                raise ValueError("sponge layer must lie where c > 0")
            # damp only the incoming characteristic psi - s*sqrt(c)*phi
            sq = np.sqrt(c)
            with np.errstate(divide="ignore", invalid="ignore"):
                inv_sq = np.where(c > 0, 1.0 / sq, 0.0)
            damp = sparse.bmat([[sparse.diags(-0.5 * sponge), sparse.diags(0.5 * s * sponge * inv_sq)],
                                [sparse.diags(0.5 * s * sponge * sq), sparse.diags(-0.5 * sponge)]])
            lin = (lin + damp).tocsr()
        self.lin = lin

    def __call__(self, tau: float, u: np.ndarray) -> np.ndarray:
        out = self.lin @ u
        if self.boundary_state is not None:
            a, hn = self._sat
            n, s = self.n, self.s
            bphi, bpsi = self.boundary_state(tau)
            g = bpsi - s * a * bphi
            out[n - 1] -= 0.5 * s * g / hn
            out[2 * n - 1] += 0.5 * a * g / hn
        return out


def _rk4_march(rhs, u, tau0, tau1, dt_max, nan_every=1):
    shore = len(u) // 2
    span = tau1 - tau0
    if span == 0:
        return u
    n_steps = max(1, math.ceil(abs(span) / dt_max - 1e-12))
    dt = abs(span) / n_steps
    t = 0.0
    for step in range(n_steps):
        # overflow is caught below and reported as an InstabilityError
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = rhs(t, u)
            k2 = rhs(t + dt / 2, u + dt / 2 * k1)
            k3 = rhs(t + dt / 2, u + dt / 2 * k2)
            k4 = rhs(t + dt, u + dt * k3)
            u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
        if step % nan_every == 0 and not (math.isfinite(u[0]) and math.isfinite(u[shore])):
            raise InstabilityError(f"instability: non-finite shoreline values at tau~{tau0 + math.copysign(t, span):.4g}")
    if not np.all(np.isfinite(u)):
        raise InstabilityError(f"instability: non-finite values by tau={tau1:.4g}")
    return u


def evolve_fd(system: HyperbolicSystem1D, ic: GridFunction, tau_out, *, p: int = 4,
              cfl: float = CFL, sponge_width: float = SPONGE_WIDTH,
              sponge_strength: float = SPONGE_STRENGTH,
              boundary_state: Callable | None = None,
              extend: bool = False) -> HodographSolution:
    """Evolve standard data ``ic`` (at ``tau = 0``) to every level in ``tau_out``.

    Negative levels are reached by integrating backwards from 0; the sponge and
    the characteristic condition are set up for the reversed direction so the
    backward problem is equally well posed.

    Args:
        system: hodograph system, e.g. from :func:`cgrunup.core.swe_system`.
        ic: ``(phi, psi)`` at ``tau = 0`` on a grid starting at ``sigma = 0``.
        tau_out: output levels; 0 is added if missing.
        p: interior order of the SBP operator (2 or 4).
        boundary_state: optional ``tau -> (phi, psi)`` exact state at ``sigma_max``
            used as incoming characteristic data (default: no incoming wave).
        extend: pad the grid (zero data) far enough that nothing from the
            truncated end can reach ``[0, sigma_max]`` by ``max|tau|``; the
            returned solution lives on the original grid.  Needed when the
            profile scatters outgoing waves back shoreward (e.g. ``c = sigma``).
    """
    if extend:
        if boundary_state is not None:
            raise ValueError("boundary_state and extend are mutually exclusive")
        taus = np.asarray(tau_out, dtype=float)
        horizon = float(np.max(np.abs(taus))) if taus.size else 0.0
        big = extend_for_horizon(system, ic, horizon, sponge_width=sponge_width)
        full = evolve_fd(system, big, tau_out, p=p, cfl=cfl, sponge_width=sponge_width,
                         sponge_strength=sponge_strength)
        n = ic.grid.n_points
        info = dict(full.info, extended_points=big.grid.n_points)
        return HodographSolution(ic.grid, full.tau_values, full.slices[:, :n].copy(),
                                 full.method, info=info)

    grid = ic.grid
    sigma = grid.nodes
    if ic.m != 2:
        raise ValueError("hodograph data must have two components (phi, psi)")
    c = _profile_from_system(system, sigma)
    op = SBPOperator(grid.n_points, grid.h, p, degenerate_left=c[0] == 0.0)
    nu = _sponge(sigma, sponge_width, sponge_strength)

    taus = np.unique(np.append(np.asarray(tau_out, dtype=float), 0.0))
    speed = max(float(np.sqrt(c.max())), 1e-3)
    dt_max = cfl * grid.h / speed

    u0 = np.concatenate([ic.values[:, 0], ic.values[:, 1]])
    out = np.empty((len(taus), grid.n_points, 2))
    i0 = int(np.flatnonzero(taus == 0.0)[0])
    out[i0] = ic.values

    for direction, order in ((1, range(i0 + 1, len(taus))), (-1, range(i0 - 1, -1, -1))):
        bstate = None
        if boundary_state is not None:
            bstate = (lambda tt, d=direction: boundary_state(d * tt))
        rhs = _Rhs(sigma, c, op, direction, nu if nu.any() else None, bstate)
        u = u0
        t_prev = 0.0
        for i in order:
            t_next = abs(taus[i])
            u = _march_from(rhs, u, t_prev, t_next, dt_max)
            out[i] = u.reshape(2, -1).T
            t_prev = t_next

    return HodographSolution(grid, taus, out, "finite-difference",
                             info={"p": p, "cfl": cfl, "dt_max": dt_max,
                                   "sponge_width": sponge_width})


def extension_length(system: HyperbolicSystem1D, grid: Grid, horizon: float,
                     margin: float = 1.0) -> float:
    """Smallest ``L >= sigma_max`` (on the grid lattice) with travel time
    ``int_{sigma_max}^{L} dsigma / sqrt(c) >= horizon + margin``."""
    h = grid.h
    target = horizon + margin
    start = grid.x_max
    travelled = 0.0
    block = 4096
    while True:
        nodes = start + h * np.arange(block + 1)
        c = _profile_from_system(system, nodes)
        if np.any(c <= 0):
            raise ValueError("bay profile must stay positive beyond sigma_max to extend the domain")
        slow = 1.0 / np.sqrt(c)
        cum = travelled + np.concatenate([[0.0], np.cumsum(0.5 * h * (slow[1:] + slow[:-1]))])
        hit = np.flatnonzero(cum >= target)
        if hit.size:
            return float(nodes[hit[0]])
        travelled = cum[-1]
        start = nodes[-1]


def extend_for_horizon(system: HyperbolicSystem1D, ic: GridFunction, horizon: float,
                       sponge_width: float = SPONGE_WIDTH, margin: float = 1.0) -> GridFunction:
    """Zero-pad ``ic`` so the sponge starts beyond the domain of dependence of
    ``[0, sigma_max]`` over ``|tau| <= horizon``."""
    grid = ic.grid
    h = grid.h
    reach = extension_length(system, grid, horizon, margin) + 8 * h
    total = grid.x_min + (reach - grid.x_min) / (1.0 - min(sponge_width, 0.9))
    n_ext = int(math.ceil((total - grid.x_min) / h - 1e-9)) + 1
    big = Grid(grid.x_min, grid.x_min + (n_ext - 1) * h, n_ext)
    values = np.zeros((n_ext, ic.m))
    values[:grid.n_points] = ic.values
    return GridFunction(big, values)


def _march_from(rhs, u, t0, t1, dt_max):
    # rhs time argument is measured from tau = 0 along the direction of travel
    def shifted(t, v):
        return rhs(t0 + t, v)
    return _rk4_march(shifted, u, t0, t1, dt_max)
