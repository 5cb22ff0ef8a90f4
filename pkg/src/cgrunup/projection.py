"""Projection of Cauchy data from a non-characteristic curve onto ``t = 0``.

For ``u_t = -D u`` with ``u = g`` on ``t = tau(x)``, the time derivatives on the
curve are ``d^k u/dt^k |_Gamma = (-K)^k g`` with ``K = (I - tau' A1)^{-1} D``.
Reversing the Taylor expansion from ``(x, tau(x))`` to ``(x, 0)`` gives the
``j``-th order projection

    g_j = sum_{k=0}^{j} tau^k / k! * K^k g.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_ORDER, GridFunction, ManifoldIC, apply_D, check_noncharacteristic
from .errors import OrderGridMismatchError

logger = logging.getLogger(__name__)

DEFAULT_J_MAX = 8


class ProjectionAccuracyWarning(UserWarning):
    """Stencil order is low for the requested projection order."""


@dataclass(frozen=True)
class ProjectionResult:
    g_proj: GridFunction
    order: int
    terms: np.ndarray               # (order + 1, n, m), term k = tau^k/k! K^k g
    term_sup_norms: np.ndarray
    next_term_estimate: float
    converged: bool = True
    diverging: bool = False

    def reconstruct(self) -> np.ndarray:
        return self.terms.sum(axis=0)


def projection_step(ic: ManifoldIC, h: GridFunction, p: int = DEFAULT_ORDER,
                    tol: float | None = None) -> GridFunction:
    """``K h``: solve ``(I - tau' A1) y = D h`` at every node."""
    mats = ic.transversal()
    check_noncharacteristic(mats, ic.grid.nodes, ic.singular_tol if tol is None else tol)
    rhs = apply_D(ic.system, h, p).values
    return GridFunction(ic.grid, np.linalg.solve(mats, rhs[..., None])[..., 0])


def _check_support(ic: ManifoldIC, n_powers: int, p: int) -> None:
    n = ic.grid.n_points
    if n_powers * p + 1 > n:
        raise OrderGridMismatchError(
            f"order/grid mismatch: {n_powers} applications of an order-{p} stencil "
            f"need {n_powers * p + 1} nodes, grid has {n}")
    if p < 2 * n_powers:
        warnings.warn(
            f"stencil order {p} is below 2(j+1) = {2 * n_powers} for "
            f"projection order {n_powers - 1}", ProjectionAccuracyWarning, stacklevel=3)


def k_powers(ic: ManifoldIC, count: int, p: int = DEFAULT_ORDER) -> list[GridFunction]:
    """``[g, K g, ..., K^count g]``, each power differenced afresh from the previous one."""
    _check_support(ic, count, p)
    out = [ic.g]
    for _ in range(count):
        out.append(projection_step(ic, out[-1], p))
    return out


def _assemble(ic: ManifoldIC, powers: list[GridFunction], j: int) -> ProjectionResult:
    tau = ic.tau_values()[:, None]
    terms = np.array([(tau ** k / math.factorial(k)) * powers[k].values
                      for k in range(j + 2)])
    norms = np.max(np.linalg.norm(terms, axis=2), axis=1)
    kept = terms[:j + 1]
    return ProjectionResult(
        g_proj=GridFunction(ic.grid, kept.sum(axis=0)),
        order=j,
        terms=kept,
        term_sup_norms=norms[:j + 1],
        next_term_estimate=float(norms[j + 1]),
    )


def project(ic: ManifoldIC, j: int, p: int = DEFAULT_ORDER) -> ProjectionResult:
    """The ``j``-th order projection of the manifold data onto ``t = 0``.

    ``next_term_estimate`` is the sup norm of term ``j+1``; it is a surrogate
    for the truncation error, not a bound.
    """
    if j < 0:
        raise ValueError("projection order must be >= 0")
    return _assemble(ic, k_powers(ic, j + 1, p), j)


def _increasing_run(norms) -> bool:
    run = 0
    for a, b in zip(norms[:-1], norms[1:]):
        run = run + 1 if b > a else 0
        if run >= 3:
            return True
    return False


def choose_order(ic: ManifoldIC, eps: float, j_max: int = DEFAULT_J_MAX,
                 p: int = DEFAULT_ORDER) -> tuple[int, ProjectionResult]:
    """Smallest ``j <= j_max`` whose next-term estimate is below ``eps``.

    If no order qualifies, the ``j_max`` projection is returned with
    ``converged=False``.  Three consecutive increases of the term norms before
    ``eps`` is met set ``diverging=True``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if j_max < 0:
        raise ValueError("j_max must be >= 0")

    powers = [ic.g]
    norms = [ic.g.sup_norm()]
    tau = ic.tau_values()[:, None]
    diverging = False
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProjectionAccuracyWarning)
        _check_support(ic, j_max + 1, p)
    for j in range(j_max + 1):
        powers.append(projection_step(ic, powers[-1], p))
        k = j + 1
        norms.append(float(np.max(np.linalg.norm(
            (tau ** k / math.factorial(k)) * powers[-1].values, axis=1))))
        if norms[-1] < eps:
            res = _assemble(ic, powers, j)
            return j, _flagged(res, True, diverging)
        diverging = diverging or _increasing_run(norms)

    if diverging:
        logger.warning("projection terms grow with order (asymptotic divergence)")
    res = _assemble(ic, powers, j_max)
    return j_max, _flagged(res, False, diverging)


def _flagged(res: ProjectionResult, converged: bool, diverging: bool) -> ProjectionResult:
    return ProjectionResult(res.g_proj, res.order, res.terms, res.term_sup_norms,
                            res.next_term_estimate, converged, diverging)


def taylor_coefficients(ic: ManifoldIC, j: int, p: int = DEFAULT_ORDER) -> list[GridFunction]:
    """Time derivatives ``d^k u/dt^k`` on the curve for ``k = 0..j``.

    Uses the recursion: if ``u`` originates from ``v`` then ``u_t`` originates
    from ``-K v``.
    """
    out = [ic.g]
    for _ in range(j):
        out.append(-projection_step(ic, out[-1], p))
    return out


def project_from_taylor(ic: ManifoldIC, j: int, p: int = DEFAULT_ORDER) -> GridFunction:
    """``sum_k (-tau)^k / k! * d^k u/dt^k``, the Taylor form of :func:`project`."""
    tau = ic.tau_values()[:, None]
    coeffs = taylor_coefficients(ic, j, p)
    terms = np.array([((-tau) ** k / math.factorial(k)) * c.values
                      for k, c in enumerate(coeffs)])
    return GridFunction(ic.grid, terms.sum(axis=0))
