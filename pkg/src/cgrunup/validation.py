"""Validation suites and convergence studies built on the oracles."""

from __future__ import annotations

import logging
import math
import warnings
from typing import Callable

import numpy as np
from numpy.polynomial.hermite import hermval

from .core import (Grid, GridFunction, HyperbolicSystem1D, Manifold, ManifoldIC, MatrixField,
                   noncharacteristic_margin, swe_system)
from .crosscheck import cross_check
from .errors import BreakingError, ScenarioError
from .evolver import HodographSolution, evolve_fd, extend_for_horizon
from .hankel import KGrid, SpectralCoefficients, energy_integral, evolve_spectral, hankel_analyze
from .hodograph import PhysicalIC, check_nonbreaking, forward_cg, inverse_cg_snapshot
from .oracle import (OracleReport, advection_curve_data, advection_target, bessel_mode,
                     cg_roundtrip_residual, fit_order, nonlinear_taylor)
from .pipeline import PipelineConfig, run_pipeline
from .projection import ProjectionAccuracyWarning, choose_order, project

logger = logging.getLogger(__name__)

SUITES = ("projection", "evolver", "cg", "pipeline", "all")


# {{{ shared problem builders

def advection_system() -> HyperbolicSystem1D:
    return HyperbolicSystem1D(1, MatrixField.constant([[1.0]]), MatrixField.constant([[0.0]]))


def advection_ic(beta: float, h: Callable, grid: Grid) -> ManifoldIC:
    g = advection_curve_data(beta, h, grid.nodes)
    return ManifoldIC(advection_system(), Manifold.linear(beta), GridFunction(grid, g))


def gaussian(x):
    return np.exp(-np.asarray(x, dtype=float) ** 2)


def gaussian_derivative(k: int) -> Callable:
    """``d^k/dx^k exp(-x^2) = (-1)^k H_k(x) exp(-x^2)``."""
    coef = np.zeros(k + 1)
    coef[k] = 1.0
    return lambda x: (-1) ** k * hermval(x, coef) * np.exp(-np.asarray(x, dtype=float) ** 2)


def advection_errors(beta: float = 0.3, j_top: int = 5, grid: Grid | None = None, p: int = 6):
    """Projection errors ``sup|g_j - h|`` and the analytic envelope terms for ``j = 0..j_top``."""
    grid = grid or Grid(-6.0, 6.0, 1601)
    ic = advection_ic(beta, gaussian, grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProjectionAccuracyWarning)
        res = project(ic, j_top, p)
    x = grid.nodes
    partial = np.cumsum(res.terms[:, :, 0], axis=0)
    errors = np.max(np.abs(partial - advection_target(gaussian, x)), axis=1)
    tau = beta * x
    envelope = np.array([
        np.max(np.abs(tau ** (j + 1) / math.factorial(j + 1)
                      * gaussian_derivative(j + 1)((1 - beta) * x)))
        for j in range(j_top + 1)])
    return errors, envelope


def plane_beach_gaussian(center: float = 6.0, width: float = 2.0, sigma_max: float = 25.0,
                         n: int = 2001) -> GridFunction:
    """Standard data ``phi = 0``, ``psi = exp(-((sigma - center)/width)^2)``."""
    g = Grid(0.0, sigma_max, n)
    s = g.nodes
    return GridFunction(g, np.column_stack([np.zeros_like(s), np.exp(-((s - center) / width) ** 2)]))


def mode_errors(k: float = 1.0, tau: float = 1.0, sizes=(1001, 2001, 4001), p: int = 4,
                sigma_max: float = 25.0):
    """Sup errors of the FD solver against the exact Bessel mode at ``tau = +-tau``.

    The exact mode is fed in as incoming data at ``sigma_max`` (no sponge), so
    the comparison isolates the interior and shoreline discretisation.
    """
    system = swe_system(lambda s: s)
    out = []
    for n in sizes:
        grid = Grid(0.0, sigma_max, n)
        s = grid.nodes
        ic = GridFunction(grid, np.column_stack(bessel_mode(k, s, 0.0)))
        sol = evolve_fd(system, ic, [-tau, tau], p=p, sponge_width=0.0,
                        boundary_state=lambda t: bessel_mode(k, sigma_max, t))
        err = 0.0
        for t in (-tau, tau):
            ph, ps = bessel_mode(k, s, t)
            i = sol.level(t)
            err = max(err, np.max(np.abs(sol.phi[i] - ph)), np.max(np.abs(sol.psi[i] - ps)))
        out.append(err)
    return np.array(out)


def short_time_pulse(amplitude: float = 0.01, center: float = 5.0, width: float = 1.0,
                     n: int = 3001) -> PhysicalIC:
    """Small Gaussian elevation with a shoreward Gaussian velocity of the same shape."""
    def eta(x):
        return amplitude * np.exp(-((np.asarray(x, dtype=float) - center) / width) ** 2)

    def u(x):
        return -eta(x) / math.sqrt(center)

    return PhysicalIC(Grid(-1.0, 30.0, n), eta, u)


def short_time_errors(ic: PhysicalIC | None = None, times=(0.025, 0.05, 0.1),
                      solver: str = "spectral"):
    """Sup discrepancy of the pipeline against the order-2 Taylor oracle at each time."""
    ic = ic or short_time_pulse()
    cfg = PipelineConfig(times=tuple(times), dtau=0.005, eps=1e-14, p=6, solver=solver,
                         k_grid=KGrid(n=512))
    res = run_pipeline(ic, cfg)
    errs = []
    for t in times:
        snap = res.snapshots[float(t)]
        eta, u = nonlinear_taylor(ic, snap.x, t, order=2)
        errs.append(max(np.max(np.abs(snap.eta - eta)), np.max(np.abs(snap.u - u))))
    return np.array(errs), res

# }}}


# {{{ suites

def _projection_suite() -> list[OracleReport]:
    reports = []
    rng = np.random.default_rng(1)
    grid = Grid(-1.0, 1.0, 201)
    x = grid.nodes
    worst = 0.0
    for m in (1, 2):
        coeffs = rng.normal(size=(4, m))
        g = sum(np.outer(np.cos((k + 1) * x), coeffs[k]) for k in range(4))
        system = HyperbolicSystem1D(m, MatrixField.constant(np.eye(m) + 0.1 * np.ones((m, m))),
                                    MatrixField.constant(0.2 * np.eye(m)))
        ic = ManifoldIC(system, Manifold.flat(), GridFunction(grid, g))
        for j in range(9):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ProjectionAccuracyWarning)
                res = project(ic, j, 6)
            worst = max(worst, float(np.max(np.abs(res.g_proj.values - ic.g.values))))
    reports.append(OracleReport("projection-identity", {"j": "0..8", "m": [1, 2]}, worst,
                                tolerance=0.0))

    grid = Grid(-2.0, 2.0, 41)
    ic = advection_ic(0.5, lambda xi: xi, grid)
    res = project(ic, 1, 4)
    err = float(np.max(np.abs(res.g_proj.values[:, 0] - grid.nodes)))
    reports.append(OracleReport("advection-j1-exact", {"beta": 0.5, "h": "xi"}, err,
                                tolerance=1e-12))
    j, _ = choose_order(ic, 1e-10, 8, 4)
    reports.append(OracleReport("advection-choose-order", {"eps": 1e-10}, float(abs(j - 1)),
                                tolerance=0.0, extra={"chosen_j": j}))

    errors, env = advection_errors()
    ratios = (errors[1:] / errors[:-1]) / (env[1:] / env[:-1])
    decreasing = bool(np.all(np.diff(errors) < 0))
    dev = float(np.max(np.abs(ratios - 1.0))) if decreasing else float("inf")
    reports.append(OracleReport("advection-convergence", {"beta": 0.3, "j": "0..5"}, dev,
                                tolerance=0.2, extra={"errors": errors.tolist(),
                                                      "ratio_over_envelope": ratios.tolist()}))

    reports.append(linearity_report())
    return reports


def linearity_report(seed: int = 7) -> OracleReport:
    rng = np.random.default_rng(seed)
    grid = Grid(0.0, 4.0, 201)
    s = grid.nodes
    tau = 0.05 * np.sin(s)
    manifold = Manifold.from_samples(grid, tau, 0.05 * np.cos(s))
    system = swe_system(lambda z: z)

    def rand_smooth():
        c = rng.normal(size=(5, 2))
        return sum(np.outer(np.sin((k + 1) * s / 2 + k), c[k]) for k in range(5))

    g1, g2 = rand_smooth(), rand_smooth()
    a, b = rng.normal(size=2)

    def proj(v):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ProjectionAccuracyWarning)
            return project(ManifoldIC(system, manifold, GridFunction(grid, v)), 3, 4).g_proj.values

    lhs = proj(a * g1 + b * g2)
    rhs = a * proj(g1) + b * proj(g2)
    defect = float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))
    return OracleReport("projection-linearity", {"j": 3, "seed": seed}, defect, tolerance=1e-10)


def _evolver_suite() -> list[OracleReport]:
    reports = []
    errs = mode_errors()
    orders = np.log2(errs[:-1] / errs[1:])
    reports.append(OracleReport("bessel-mode-fd-order", {"n": [1001, 2001, 4001], "tau": 1.0},
                                float(max(0.0, 2.0 - orders.min())), tolerance=0.0,
                                order=float(orders.min()), extra={"errors": errs.tolist()}))

    grid = Grid(0.0, 25.0, 2001)
    s = grid.nodes
    sol = evolve_spectral(SpectralCoefficients.single_mode(1.0), grid, [1.0])
    ph, ps = bessel_mode(1.0, s, 1.0)
    i = sol.level(1.0)
    err = float(max(np.max(np.abs(sol.phi[i] - ph)), np.max(np.abs(sol.psi[i] - ps))))
    reports.append(OracleReport("bessel-mode-spectral", {"k": 1.0, "tau": 1.0}, err,
                                tolerance=1e-10))

    ic = plane_beach_gaussian()
    coeffs = hankel_analyze(ic)
    e = energy_integral(coeffs, np.linspace(0.0, 10.0, 41))
    reports.append(OracleReport("energy-spectral", {"T": 10.0},
                                float(np.max(np.abs(e - e[0])) / e[0]), tolerance=1e-10))

    big = extend_for_horizon(swe_system(lambda z: z), ic, 10.0)
    fd = evolve_fd(swe_system(lambda z: z), big, np.linspace(0.0, 10.0, 11))
    E = fd.energy()
    reports.append(OracleReport("energy-fd", {"T": 10.0, "n": big.grid.n_points},
                                float(np.max(np.abs(E - E[0])) / E[0]), tolerance=1e-4))

    cc = cross_check(ic, 10.0)
    reports.append(OracleReport("cross-check", {"T": 10.0}, cc.max_sup, float(cc.l2.max()),
                                tolerance=1e-3))
    return reports


def _cg_suite() -> list[OracleReport]:
    reports = []
    amp = 0.02

    def eta(x):
        return amp * np.exp(-(np.asarray(x, dtype=float) - 5.0) ** 2)

    def u(x):
        x = np.asarray(x, dtype=float)
        return -2.0 * (np.sqrt(np.maximum(x + eta(x), 0.0)) - np.sqrt(np.maximum(x, 0.0)))

    ic = PhysicalIC(Grid(-1.0, 25.0, 2601), eta, u)
    reports.append(cg_roundtrip_residual(ic))

    # steep elevation front: min(1 + eta0') = 1e-3
    a_near = 0.999 / math.sqrt(2.0 / math.e)
    near = PhysicalIC(Grid(-1.0, 25.0, 2601),
                      lambda x: a_near * np.exp(-(np.asarray(x, dtype=float) - 8.0) ** 2),
                      lambda x: np.zeros_like(np.asarray(x, dtype=float)))
    rep = cg_roundtrip_residual(near, tolerance=1e-8)
    rep.name = "cg-roundtrip-near-breaking"
    reports.append(rep)

    grid = Grid(0.0, 4.0, 401)
    s = grid.nodes
    manifold = Manifold.from_samples(grid, -0.1 * s, np.full_like(s, -0.1))
    margin = noncharacteristic_margin(swe_system(lambda z: z), manifold, grid)
    reports.append(OracleReport("characteristic-margin", {"phi0'": 0.1, "sigma_max": 4.0},
                                abs(margin - 0.96), tolerance=1e-12))

    # identity evolution: constant slices, inverted at t = 0
    mic = forward_cg(ic)
    taus = np.linspace(-0.1, 0.1, 21)
    sol = HodographSolution(mic.grid, taus, np.repeat(mic.g.values[None], len(taus), axis=0),
                            "identity")
    snap = inverse_cg_snapshot(sol, 0.0)
    err = float(max(np.max(np.abs(snap.eta - eta(snap.x))), np.max(np.abs(snap.u - u(snap.x)))))
    reports.append(OracleReport("cg-inverse-identity", {"t": 0.0}, err, tolerance=1e-10,
                                extra={"cg_residual": snap.cg_residual()}))
    return reports


def _pipeline_suite() -> list[OracleReport]:
    reports = []
    ic = PhysicalIC(Grid(-1.0, 30.0, 3001),
                    lambda x: 0.01 * np.exp(-((np.asarray(x, dtype=float) - 6.0) / 1.5) ** 2),
                    lambda x: np.zeros_like(np.asarray(x, dtype=float)))
    cfg = PipelineConfig(times=(0.0, 1.0), eps=1e-12)
    res = run_pipeline(ic, cfg)
    classical = run_pipeline(ic, PipelineConfig(times=(0.0, 1.0), eps=1e-12, skip_projection=True))
    same = np.array_equal(res.standard_data.values, classical.standard_data.values) and \
        np.array_equal(res.solution.slices, classical.solution.slices)
    reports.append(OracleReport("zero-velocity-degeneracy", {"eps": 1e-12},
                                float(res.order != 0) + float(not same), tolerance=0.0,
                                extra={"chosen_j": res.order}))

    times = (0.025, 0.05, 0.1)
    errs, _ = short_time_errors(times=times)
    slope = fit_order(times, errs)
    reports.append(OracleReport("short-time-taylor", {"times": list(times)}, abs(slope - 3.0),
                                order=slope, tolerance=0.3, extra={"errors": errs.tolist()}))

    steep = PhysicalIC(Grid(-1.0, 25.0, 1001),
                       lambda x: 2.0 * np.exp(-(np.asarray(x, dtype=float) - 8.0) ** 2),
                       lambda x: np.zeros_like(np.asarray(x, dtype=float)))
    try:
        run_pipeline(steep, PipelineConfig())
        refused = 0.0
    except BreakingError as exc:
        refused = 1.0 if "check_nonbreaking" in str(exc) else 0.0
    reports.append(OracleReport("breaking-refused", {"amplitude": 2.0}, 1.0 - refused,
                                tolerance=0.0))
    return reports


_SUITE_FUNCS = {
    "projection": _projection_suite,
    "evolver": _evolver_suite,
    "cg": _cg_suite,
    "pipeline": _pipeline_suite,
}


def run_validation(suite: str) -> list[OracleReport]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    names = list(_SUITE_FUNCS) if suite == "all" else [suite]
    reports = []
    for name in names:
        logger.info("running suite %s", name)
        reports.extend(_SUITE_FUNCS[name]())
    return reports

# }}}


# {{{ convergence studies

def convergence_study(scenario, axis: str) -> dict:
    """Error table along ``axis`` (``j``, ``grid`` or ``dt``) for a scenario.

    Returns ``{"axis", "columns", "rows", "fitted_order"}``.
    """
    problem = scenario.problem
    if axis == "j":
        if problem == "advection":
            return _advection_j(scenario)
        if problem == "runup":
            return _runup_j(scenario)
    elif axis == "grid":
        if problem == "bessel-mode":
            return _mode_grid(scenario)
        if problem == "advection":
            return _advection_grid(scenario)
    elif axis == "dt":
        if problem == "bessel-mode":
            return _mode_dt(scenario)
    else:
        raise ScenarioError(f"unknown axis {axis!r}")
    raise ScenarioError(f"axis {axis!r} is not available for problem {problem!r}")


def _advection_setup(scenario):
    from .scenario import profile_function
    adv = scenario.section("advection")
    beta = float(adv.get("beta", 0.3))
    h = profile_function(adv.get("profile", {"family": "gaussian", "amplitude": 1.0,
                                             "center": 0.0, "width": 1.0}))
    return beta, h


def _advection_j(scenario) -> dict:
    beta, h = _advection_setup(scenario)
    grid = scenario.x_grid()
    n = scenario.section("numerics")
    p = int(n.get("p", 4))
    j_max = int(n.get("j_max", 8))
    ic = advection_ic(beta, h, grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProjectionAccuracyWarning)
        res = project(ic, j_max, p)
    partial = np.cumsum(res.terms[:, :, 0], axis=0)
    errs = np.max(np.abs(partial - h(grid.nodes)), axis=1)
    rows = [[j, float(errs[j]), float(res.term_sup_norms[j + 1]) if j + 1 <= j_max
             else res.next_term_estimate] for j in range(j_max + 1)]
    return {"axis": "j", "columns": ["j", "sup_error", "next_term_estimate"], "rows": rows,
            "fitted_order": None}


def _runup_j(scenario) -> dict:
    ic = scenario.physical_ic()
    cfg = scenario.pipeline_config()
    grid = ic.default_sigma_grid(cfg.sigma_points)
    mic = forward_cg(ic, grid, cfg.p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProjectionAccuracyWarning)
        res = project(mic, cfg.j_max, cfg.p)
    partial = np.cumsum(res.terms, axis=0)
    ref = partial[-1]
    rows = [[j, float(np.max(np.linalg.norm(partial[j] - ref, axis=1))),
             float(res.term_sup_norms[j + 1]) if j < cfg.j_max else res.next_term_estimate]
            for j in range(cfg.j_max + 1)]
    return {"axis": "j", "columns": ["j", "difference_to_jmax", "next_term_estimate"],
            "rows": rows, "fitted_order": None}


def _advection_grid(scenario) -> dict:
    """Self-convergence of ``g_j`` on the central half of the domain.

    The levels coarsen the scenario grid rather than refine it: ``K^j`` amplifies
    rounding like ``h^-j``, so differences below ten times that floor are
    reported but left out of the fit.
    """
    beta, h = _advection_setup(scenario)
    grid = scenario.x_grid()
    n = scenario.section("numerics")
    p = int(n.get("p", 4))
    j = int(n.get("j", 2))
    cells = grid.n_points - 1
    levels = [m for m in range(4, -1, -1) if cells % (2 ** m) == 0 and cells // 2 ** m >= 8]
    grids = [Grid(grid.x_min, grid.x_max, cells // 2 ** m + 1) for m in levels]
    values = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProjectionAccuracyWarning)
        for g in grids:
            values.append(project(advection_ic(beta, h, g), j, p).g_proj.values[:, 0])
    mid, half = 0.5 * (grid.x_min + grid.x_max), 0.25 * (grid.x_max - grid.x_min)
    rows, fit_h, fit_e = [], [], []
    for level in range(len(grids) - 1):
        g = grids[level]
        inner = np.abs(g.nodes - mid) <= half
        diff = float(np.max(np.abs(values[level] - values[level + 1][::2])[inner]))
        floor = float(np.finfo(float).eps * g.h ** (-j) * np.max(np.abs(values[level])))
        rows.append([g.n_points, g.h, diff, floor])
        if diff > 10.0 * floor:
            fit_h.append(g.h)
            fit_e.append(diff)
    order = fit_order(fit_h, fit_e) if len(fit_h) >= 2 else float("nan")
    return {"axis": "grid", "columns": ["n_points", "h", "difference_to_next", "rounding_floor"],
            "rows": rows, "fitted_order": order}


def _mode_setup(scenario):
    mode = scenario.section("mode")
    k = float(mode.get("k", 1.0))
    taus = [float(t) for t in mode.get("tau", [1.0])]
    return k, taus


def _mode_grid(scenario) -> dict:
    k, taus = _mode_setup(scenario)
    grid = scenario.x_grid()
    fd_order = int(scenario.section("numerics").get("fd_order", 4))
    tau = max(abs(t) for t in taus)
    sizes = [grid.n_points, 2 * grid.n_points - 1, 4 * grid.n_points - 3]
    errs = mode_errors(k, tau, sizes, fd_order, grid.x_max)
    hs = [grid.x_max / (n - 1) for n in sizes]
    rows = [[n, h, float(e)] for n, h, e in zip(sizes, hs, errs)]
    return {"axis": "grid", "columns": ["n_points", "h", "sup_error"], "rows": rows,
            "fitted_order": fit_order(hs, errs)}


def _mode_dt(scenario) -> dict:
    """Self-convergence in the time step on a fixed grid, against the smallest step."""
    k, taus = _mode_setup(scenario)
    grid = scenario.x_grid()
    fd_order = int(scenario.section("numerics").get("fd_order", 4))
    tau = max(abs(t) for t in taus)
    system = swe_system(lambda s: s)
    s = grid.nodes
    ic = GridFunction(grid, np.column_stack(bessel_mode(k, s, 0.0)))
    speed = math.sqrt(grid.x_max)
    # steps that divide tau exactly, halving each time
    n0 = math.ceil(tau / (0.4 * grid.h / speed))
    steps = [n0, 2 * n0, 4 * n0, 16 * n0]
    sols = []
    for n_steps in steps:
        cfl = (tau / n_steps) * speed / grid.h * (1 + 1e-9)
        sol = evolve_fd(system, ic, [tau], p=fd_order, cfl=cfl, sponge_width=0.0,
                        boundary_state=lambda t: bessel_mode(k, grid.x_max, t))
        sols.append(sol.slices[sol.level(tau)])
    ref = sols[-1]
    rows = []
    for n_steps, v in zip(steps[:-1], sols[:-1]):
        rows.append([n_steps, tau / n_steps, float(np.max(np.abs(v - ref)))])
    return {"axis": "dt", "columns": ["steps", "dt", "difference_to_finest"], "rows": rows,
            "fitted_order": fit_order([r[1] for r in rows], [r[2] for r in rows])}

# }}}
