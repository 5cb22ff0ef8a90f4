"""End-to-end run-up computation for physical initial data with non-zero velocity."""

from __future__ import annotations

import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .core import DEFAULT_ORDER, GridFunction, ManifoldIC, swe_system
from .crosscheck import CrossCheckReport, compare_solutions
from .errors import BreakingError, HorizonError
from .evolver import HodographSolution, evolve_fd
from .hankel import KGrid, evolve_spectral, hankel_analyze, kgrid_for_horizon
from .hodograph import (MARGIN_TOL, NonBreakingReport, PhysicalIC,
                        ShorelineSeries, check_nonbreaking, forward_cg, inverse_cg_snapshot,
                        shoreline_series)
from .projection import DEFAULT_J_MAX, ProjectionResult, choose_order, project

logger = logging.getLogger(__name__)

SOLVERS = ("fd", "spectral", "both")


@dataclass
class PipelineConfig:
    sigma_points: int | None = None     # default: as many as the physical grid
    p: int = DEFAULT_ORDER              # stencil order for the projection
    j: int | None = None
    eps: float | None = 1e-10
    j_max: int = DEFAULT_J_MAX
    solver: str | None = None           # default: spectral on a plane beach, else fd
    fd_order: int = 4
    times: tuple = (0.0,)
    shoreline_times: tuple | None = None
    dtau: float = 0.05
    k_grid: KGrid = field(default_factory=KGrid)
    spectral_tol: float = 1e-6
    margin_tol: float = MARGIN_TOL
    extend: bool = True
    cross_check_tol: float = 1e-3
    skip_projection: bool = False       # evolve the transformed data as if it were standard

    def __post_init__(self):
        if self.j is not None and self.eps is not None:
            # an explicit order wins; keeps the two modes exclusive
            self.eps = None
        if self.j is None and self.eps is None:
            raise ValueError("either a projection order j or a tolerance eps is required")
        if self.solver is not None and self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if self.dtau <= 0:
            raise ValueError("dtau must be positive")


@dataclass
class PipelineResult:
    nonbreaking: NonBreakingReport
    manifold_ic: ManifoldIC
    projection: ProjectionResult | None
    standard_data: GridFunction
    solution: HodographSolution
    solutions: dict
    snapshots: dict
    shoreline: ShorelineSeries | None
    cross_check: CrossCheckReport | None = None

    @property
    def order(self) -> int | None:
        return None if self.projection is None else self.projection.order

    def summary(self) -> dict:
        out = {
            "margins": self.nonbreaking.to_dict(),
            "noncharacteristic_margin": self.manifold_ic.margin(),
            "projection": None if self.projection is None else {
                "order": self.projection.order,
                "term_sup_norms": [float(v) for v in self.projection.term_sup_norms],
                "next_term_estimate": self.projection.next_term_estimate,
                "converged": self.projection.converged,
                "diverging": self.projection.diverging,
            },
            "solver": self.solution.method,
            "tau_range": [float(self.solution.tau_values[0]), float(self.solution.tau_values[-1])],
            "snapshots": {f"{t:g}": {"shoreline_x": s.shoreline_x, "shoreline_u": s.shoreline_u,
                                     "cg_residual": s.cg_residual()}
                          for t, s in self.snapshots.items()},
        }
        if self.shoreline is not None:
            out["runup"] = self.shoreline.runup
            out["rundown"] = self.shoreline.rundown
        if self.cross_check is not None:
            out["cross_check"] = self.cross_check.to_dict()
        return out


@contextmanager
def _stage(name: str):
    """Tag any exception escaping the block with the pipeline stage that raised it."""
    try:
        yield
    except Exception as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
        raise


def _levels(t_lo: float, t_hi: float, dtau: float) -> np.ndarray:
    i_lo = math.floor(t_lo / dtau)
    i_hi = math.ceil(t_hi / dtau)
    return dtau * np.arange(min(i_lo, 0), max(i_hi, 0) + 1)


def _evolve(data: GridFunction, ic: PhysicalIC, taus: np.ndarray, cfg: PipelineConfig,
            solver: str) -> dict:
    out = {}
    if solver in ("spectral", "both"):
        kg = kgrid_for_horizon(data.grid.x_max, float(np.max(np.abs(taus))), cfg.k_grid)
        coeffs = hankel_analyze(data, kg, tol=cfg.spectral_tol)
        out["spectral"] = evolve_spectral(coeffs, data.grid, taus)
    if solver in ("fd", "both"):
        out["fd"] = evolve_fd(swe_system(ic.c), data, taus, p=cfg.fd_order, extend=cfg.extend)
    return out


def run_pipeline(ic: PhysicalIC, cfg: PipelineConfig | None = None) -> PipelineResult:
    """Check, transform, project, evolve and invert.

    Raises :class:`BreakingError` (naming ``check_nonbreaking``) when either
    validity margin is below ``cfg.margin_tol``; other numerical failures
    propagate from the stage that detects them.
    """
    cfg = cfg or PipelineConfig()
    sigma_grid = ic.default_sigma_grid(cfg.sigma_points)

    with _stage("check_nonbreaking"):
        report = check_nonbreaking(ic, sigma_grid, cfg.p, cfg.margin_tol)
        if not report.ok:
            raise BreakingError(
                f"check_nonbreaking failed: monotonicity margin {report.monotonicity_margin:.3e}, "
                f"characteristic margin {report.characteristic_margin:.3e} "
                f"(tolerance {report.tolerance:g})")

    with _stage("forward_cg"):
        mic = forward_cg(ic, sigma_grid, cfg.p)

    with _stage("projection"):
        if cfg.skip_projection:
            proj = None
            data = mic.g
        elif cfg.eps is not None:
            _, proj = choose_order(mic, cfg.eps, cfg.j_max, cfg.p)
            data = proj.g_proj
        else:
            proj = project(mic, cfg.j, cfg.p)
            data = proj.g_proj
    if proj is not None and not proj.converged:
        logger.warning("projection did not reach eps=%g by j=%d", cfg.eps, cfg.j_max)

    plane = getattr(ic.c, "is_plane_beach", False)
    solver = cfg.solver or ("spectral" if plane else "fd")
    if solver != "fd" and not plane:
        raise ValueError("the spectral solver requires the plane-beach profile c(sigma) = sigma")

    times = np.atleast_1d(np.asarray(cfg.times, dtype=float))
    shore_t = None if cfg.shoreline_times is None else np.atleast_1d(
        np.asarray(cfg.shoreline_times, dtype=float))
    all_t = times if shore_t is None else np.concatenate([times, shore_t])
    reach = 0.05 + 2.0 * float(np.max(np.abs(data.values[:, 0])))

    for attempt in range(4):
        taus = _levels(all_t.min() - reach, all_t.max() + reach, cfg.dtau)
        with _stage("evolve"):
            sols = _evolve(data, ic, taus, cfg, solver)
        primary = sols.get("spectral", sols.get("fd"))
        try:
            with _stage("inverse_cg"):
                snaps = {float(t): inverse_cg_snapshot(primary, float(t)) for t in times}
                shore = None if shore_t is None else shoreline_series(primary, shore_t)
            break
        except HorizonError:
            if attempt == 3:
                raise
            reach *= 2.0
            logger.info("extending the tau range to +-%g beyond the requested times", reach)

    cc = None
    if solver == "both":
        sup, l2 = compare_solutions(sols["fd"], sols["spectral"])
        cc = CrossCheckReport(sols["fd"].tau_values, sup, l2, cfg.cross_check_tol,
                              sols["fd"], sols["spectral"])

    return PipelineResult(report, mic, proj, data, primary, sols, snaps, shore, cc)
