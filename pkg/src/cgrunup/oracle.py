"""Independent reference solutions used to check the solvers.

Nothing here calls the projection, the evolvers or the spectral code: the
advection oracle is a closed form, the Bessel mode uses ``scipy.special``
directly, the short-time expansion differentiates the physical equations, and
the round-trip residual inverts the transform algebraically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import j0, j1

from .hodograph import PhysicalIC, transformed_data


@dataclass
class OracleReport:
    name: str
    inputs: dict
    sup: float
    l2: float = float("nan")
    order: float | None = None
    tolerance: float = float("inf")
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sup < 0 or (np.isfinite(self.l2) and self.l2 < 0):
            raise ValueError("error norms must be non-negative")

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.sup):
            return False
        ok = self.sup <= self.tolerance
        if np.isfinite(self.l2):
            ok = ok and self.l2 <= self.tolerance
        return bool(ok)

    def to_dict(self) -> dict:
        return {"name": self.name, "inputs": self.inputs, "sup": self.sup, "l2": self.l2,
                "order": self.order, "tolerance": self.tolerance, "passed": self.passed,
                **({"extra": self.extra} if self.extra else {})}


def fit_order(params, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(param)``."""
    p = np.log(np.asarray(params, dtype=float))
    e = np.log(np.asarray(errors, dtype=float))
    slope, _ = np.polyfit(p, e, 1)
    return float(slope)


# {{{ scalar advection u_t + u_x = 0

def advection_exact(beta: float, h: Callable, x, t):
    """``h(x - t)``; ``beta`` only documents the curve ``t = beta x`` and must satisfy ``|beta| < 1``."""
    if abs(beta) >= 1:
        raise ValueError("t = beta x is characteristic for |beta| >= 1")
    return h(np.asarray(x, dtype=float) - t)


def advection_curve_data(beta: float, h: Callable, x):
    """The solution restricted to ``t = beta x``: ``h((1 - beta) x)``."""
    return advection_exact(beta, h, x, beta * np.asarray(x, dtype=float))


def advection_target(h: Callable, x):
    return h(np.asarray(x, dtype=float))


def advection_envelope(beta: float, h_derivs: list[Callable], x, j: int) -> float:
    """``sup |tau^{j+1}/(j+1)! d^{j+1}u/dt^{j+1}|`` on the curve, from analytic derivatives of ``h``.

    For ``u = h(x - t)``, ``d^k u/dt^k = (-1)^k h^{(k)}(x - t)``.
    """
    x = np.asarray(x, dtype=float)
    k = j + 1
    tau = beta * x
    return float(np.max(np.abs(tau ** k / math.factorial(k) * h_derivs[k]((1 - beta) * x))))

# }}}


# {{{ Bessel mode on a plane beach

def bessel_mode(k: float, sigma, tau):
    """Exact separated solution ``psi = J0(2k sqrt(sigma)) cos(k tau)``,
    ``phi = J1(2k sqrt(sigma))/sqrt(sigma) sin(k tau)`` of the plane-beach system."""
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    sigma, tau = np.broadcast_arrays(np.asarray(sigma, dtype=float), np.asarray(tau, dtype=float))
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    r = np.sqrt(sigma)
    arg = 2.0 * k * r
    with np.errstate(divide="ignore", invalid="ignore"):
        shape = np.where(r > 0, j1(arg) / np.where(r > 0, r, 1.0), k)
    return shape * np.sin(k * tau), j0(arg) * np.cos(k * tau)


def bessel_mode_energy(k: float, sigma_max: float, tau: float, n: int = 4000) -> float:
    """``int_0^sigma_max (sigma phi^2 + psi^2) dsigma`` by Gauss-Legendre in ``s = 2 sqrt(sigma)``."""
    x, w = np.polynomial.legendre.leggauss(n)
    s_max = 2.0 * math.sqrt(sigma_max)
    s = 0.5 * s_max * (x + 1.0)
    sigma = 0.25 * s ** 2
    phi, psi = bessel_mode(k, sigma, tau)
    return float(np.sum(0.5 * s_max * w * 0.5 * s * (sigma * phi ** 2 + psi ** 2)))


def mode_pde_residual(k: float, sigma, tau, delta: float = 1e-3) -> np.ndarray:
    """Residual of ``phi_tau + psi_sigma`` and ``psi_tau + sigma phi_sigma + phi``
    by fourth-order central differences; shape ``(2, n)``."""
    sigma = np.asarray(sigma, dtype=float)
    tau = np.asarray(tau, dtype=float)

    def d(f, axis):
        ds = np.array([delta, 0.0]) if axis == 0 else np.array([0.0, delta])
        fp1, fm1 = f(sigma + ds[0], tau + ds[1]), f(sigma - ds[0], tau - ds[1])
        fp2, fm2 = f(sigma + 2 * ds[0], tau + 2 * ds[1]), f(sigma - 2 * ds[0], tau - 2 * ds[1])
        return tuple((8 * (a - b) - (c - e)) / (12 * delta)
                     for a, b, c, e in zip(fp1, fm1, fp2, fm2))

    def mode(s, t):
        return bessel_mode(k, s, t)

    phi, _ = mode(sigma, tau)
    phi_s, psi_s = d(mode, 0)
    phi_t, psi_t = d(mode, 1)
    return np.array([phi_t + psi_s, psi_t + sigma * phi_s + phi])

# }}}


# {{{ short-time expansion of the physical equations

def _weights(offsets, order: int) -> np.ndarray:
    """Finite-difference weights from the Vandermonde system on integer offsets."""
    offsets = np.asarray(offsets, dtype=float)
    n = len(offsets)
    V = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


_OFFSETS = np.arange(-4, 5)
_D1 = _weights(_OFFSETS, 1)


def _ddx(f: Callable, delta: float) -> Callable:
    def df(x):
        x = np.asarray(x, dtype=float)
        return sum(w * f(x + o * delta) for o, w in zip(_OFFSETS, _D1) if w != 0.0) / delta
    return df


def nonlinear_taylor(ic: PhysicalIC, x, t: float, order: int = 2, delta: float = 2e-3):
    """``(eta, u)`` at time ``t`` from the Taylor series in ``t`` of
    ``eta_t + (1 + eta_x) u + c(x + eta) u_x = 0``, ``u_t + u u_x + eta_x = 0``.

    Time derivatives come from the equations themselves; space derivatives of
    the data are eighth-order central differences with step ``delta``.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    x = np.asarray(x, dtype=float)
    eta, u, c = ic.eta, ic.u, ic.c
    eta_x, u_x = _ddx(eta, delta), _ddx(u, delta)
    c_s = _ddx(c, delta)

    def eta_t(y):
        return -(1.0 + eta_x(y)) * u(y) - c(y + eta(y)) * u_x(y)

    def u_t(y):
        return -u(y) * u_x(y) - eta_x(y)

    e1, v1 = eta_t(x), u_t(x)
    e_out = eta(x) + t * e1
    u_out = u(x) + t * v1
    if order == 2:
        eta_xt, u_xt = _ddx(eta_t, delta)(x), _ddx(u_t, delta)(x)
        ux, ex, u0 = u_x(x), eta_x(x), u(x)
        e2 = (-eta_xt * u0 - (1.0 + ex) * v1
              - c_s(x + eta(x)) * e1 * ux - c(x + eta(x)) * u_xt)
        v2 = -v1 * ux - u0 * u_xt - eta_xt
        e_out = e_out + 0.5 * t ** 2 * e2
        u_out = u_out + 0.5 * t ** 2 * v2
    return e_out, u_out

# }}}


def cg_roundtrip_residual(ic: PhysicalIC, sigma_grid=None, tolerance: float = 1e-10) -> OracleReport:
    """Transform the data and invert algebraically at ``t = 0``.

    ``u = phi0``, ``eta = psi0 - phi0^2/2``, ``x = sigma - eta``; the errors are
    ``eta - eta0(x)`` and ``u - u0(x)`` at those ``x``.
    """
    sigma_grid = sigma_grid or ic.default_sigma_grid()
    _, phi0, psi0 = transformed_data(ic, sigma_grid)
    u = phi0
    eta = psi0 - 0.5 * phi0 ** 2
    x = sigma_grid.nodes - eta
    err = np.maximum(np.abs(eta - ic.eta(x)), np.abs(u - ic.u(x)))
    report = OracleReport("cg-roundtrip", {"n_sigma": sigma_grid.n_points}, float(err.max()),
                          tolerance=tolerance)
    report.extra["monotonicity_margin"] = ic.monotonicity_margin()
    return report
