"""Agreement between the finite-difference and Bessel-mode solvers on a plane beach."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .core import GridFunction, swe_system
from .evolver import HodographSolution, evolve_fd
from .hankel import KGrid, evolve_spectral, hankel_analyze, kgrid_for_horizon


@dataclass
class CrossCheckReport:
    tau_values: np.ndarray
    sup: np.ndarray          # per level, sup over sigma of |(phi, psi)_fd - (phi, psi)_spec|
    l2: np.ndarray
    tolerance: float
    fd: HodographSolution
    spectral: HodographSolution

    @property
    def max_sup(self) -> float:
        return float(self.sup.max())

    @property
    def passed(self) -> bool:
        return self.max_sup <= self.tolerance

    def to_dict(self) -> dict:
        return {"max_sup": self.max_sup, "max_l2": float(self.l2.max()),
                "tolerance": self.tolerance, "passed": self.passed,
                "levels": len(self.tau_values)}


def compare_solutions(a: HodographSolution, b: HodographSolution):
    """Per-level sup and L2 norms of the pointwise Euclidean difference."""
    if a.slices.shape != b.slices.shape or not np.allclose(a.tau_values, b.tau_values):
        raise ValueError("solutions are not on the same (sigma, tau) lattice")
    diff = np.linalg.norm(a.slices - b.slices, axis=2)
    sup = diff.max(axis=1)
    l2 = np.sqrt(simpson(diff ** 2, x=a.sigma_grid.nodes, axis=1))
    return sup, l2


def cross_check(ic: GridFunction, T: float, tolerance: float = 1e-3, dtau: float = 0.25,
                p: int = 4, k_grid: KGrid | None = None) -> CrossCheckReport:
    """Run both solvers for ``c(sigma) = sigma`` from the same data to ``tau = T``.

    The FD run uses a grid extended past the domain of dependence; the
    spectral wall radius is pushed out likewise.  Discrepancies are data, not
    errors: check ``report.passed``.
    """
    taus = np.linspace(0.0, T, int(round(abs(T) / dtau)) + 1) if T else np.array([0.0])
    if T < 0:
        taus = taus[::-1]
    system = swe_system(lambda s: s)
    fd = evolve_fd(system, ic, taus, p=p, extend=True)
    kg = kgrid_for_horizon(ic.grid.x_max, abs(T), k_grid)
    spec = evolve_spectral(hankel_analyze(ic, kg), ic.grid, taus)
    sup, l2 = compare_solutions(fd, spec)
    return CrossCheckReport(fd.tau_values, sup, l2, tolerance, fd, spec)
