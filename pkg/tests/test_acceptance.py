"""Acceptance checks, one test per criterion.

Every test records a PASS/FAIL line through the ``criterion`` fixture (listed
again in the terminal summary) before asserting, so a failure still leaves its
measured numbers behind.
"""

import math

import numpy as np
import pytest
from numpy.polynomial.hermite import hermval
from scipy.special import j0, j1

from cgrunup import (CharacteristicPointError, Grid, GridFunction, HodographSolution,
                     HyperbolicSystem1D, KGrid, Manifold, ManifoldIC, MatrixField, PhysicalIC,
                     PipelineConfig, SpectralCoefficients, check_nonbreaking, choose_order,
                     cross_check, evolve_fd, evolve_spectral, forward_cg, hankel_analyze,
                     inverse_cg_snapshot, project, run_pipeline, swe_system)
from cgrunup.evolver import extend_for_horizon
from cgrunup.hankel import energy_integral
from cgrunup.oracle import nonlinear_taylor

pytestmark = pytest.mark.filterwarnings("ignore::cgrunup.projection.ProjectionAccuracyWarning")


def advection():
    return HyperbolicSystem1D(1, MatrixField.constant([[1.0]]), MatrixField.constant([[0.0]]))


def plane_gaussian(n=2001):
    g = Grid(0.0, 25.0, n)
    s = g.nodes
    return GridFunction(g, np.column_stack([np.zeros_like(s), np.exp(-((s - 6.0) / 2.0) ** 2)]))


def exact_mode(k, sigma, tau):
    r = np.sqrt(sigma)
    with np.errstate(divide="ignore", invalid="ignore"):
        shape = np.where(r > 0, j1(2 * k * r) / np.where(r > 0, r, 1.0), k)
    return shape * np.sin(k * tau), j0(2 * k * r) * np.cos(k * tau)


def test_criterion_01_identity_on_flat_manifold(criterion, rng):
    grid = Grid(-1.0, 2.0, 201)
    x = grid.nodes
    worst = 0.0
    exact = True
    for m in (1, 2):
        for trial in range(3):
            c = rng.normal(size=(6, m))
            g = sum(np.outer(np.sin((k + 1) * x + rng.uniform(0, 6)), c[k]) for k in range(6))
            a1 = rng.normal(size=(m, m))
            system = HyperbolicSystem1D(m, MatrixField.constant(a1 + a1.T),
                                        MatrixField.constant(rng.normal(size=(m, m))))
            ic = ManifoldIC(system, Manifold.flat(), GridFunction(grid, g))
            for j in range(9):
                out = project(ic, j, 4).g_proj.values
                exact = exact and np.array_equal(out, ic.g.values)
                worst = max(worst, float(np.max(np.abs(out - ic.g.values))))
    assert criterion(1, "projection identity for tau = 0", exact,
                     f"m in (1,2), j=0..8, max deviation {worst:.1e}")


def test_criterion_02_advection_exactness(criterion):
    grid = Grid(-3.0, 3.0, 61)
    x = grid.nodes
    ic = ManifoldIC(advection(), Manifold.linear(0.5), GridFunction(grid, 0.5 * x))
    err = float(np.max(np.abs(project(ic, 1, 4).g_proj.values[:, 0] - x)))
    assert criterion(2, "advection j=1 exactness", err <= 1e-12, f"sup error {err:.2e} <= 1e-12")


def test_criterion_03_projection_convergence(criterion):
    beta = 0.3
    grid = Grid(-6.0, 6.0, 1601)
    x = grid.nodes
    ic = ManifoldIC(advection(), Manifold.linear(beta),
                    GridFunction(grid, np.exp(-((1 - beta) * x) ** 2)))
    res = project(ic, 5, 6)
    partial = np.cumsum(res.terms[:, :, 0], axis=0)
    errors = np.max(np.abs(partial - np.exp(-x ** 2)), axis=1)

    # next Taylor term of u = h(x - t) on the curve, h^(k) from Hermite polynomials
    def envelope(j):
        k = j + 1
        coef = np.zeros(k + 1)
        coef[k] = 1.0
        y = (1 - beta) * x
        return np.max(np.abs((beta * x) ** k / math.factorial(k) * hermval(y, coef) * np.exp(-y ** 2)))

    env = np.array([envelope(j) for j in range(6)])
    observed = errors[1:] / errors[:-1]
    predicted = env[1:] / env[:-1]
    deviation = np.abs(observed / predicted - 1.0)
    decreasing = bool(np.all(np.diff(errors) < 0))
    ok = decreasing and bool(np.all(deviation <= 0.2))
    assert criterion(3, "projection convergence vs envelope", ok,
                     f"errors {', '.join(f'{e:.2e}' for e in errors)}; "
                     f"max ratio deviation {deviation.max():.1%} <= 20%")


def test_criterion_04_characteristic_rejection(criterion):
    system = swe_system(lambda s: np.asarray(s, dtype=float))
    grid = Grid(0.0, 8.0, 81)
    s = grid.nodes
    refused = []
    for margin in (0.0, 5e-11, 1e-10):
        # constant phi0' = a with 1 - a^2 * 4 = margin at the node sigma = 4
        a = math.sqrt((1.0 - margin) / 4.0)
        manifold = Manifold.from_samples(grid, -a * s, np.full_like(s, -a))
        try:
            ManifoldIC(system, manifold, GridFunction(grid, np.column_stack([a * s, 0 * s])))
        except CharacteristicPointError as exc:
            refused.append(abs(exc.x - 4.0) < 1e-12)
        else:
            refused.append(False)

    # closed-form margin of physical data vs the numerical determinant of I - tau' A1
    ic = PhysicalIC(Grid(-1.0, 20.0, 1051),
                    lambda x: 0.05 * np.exp(-(np.asarray(x) - 6.0) ** 2),
                    lambda x: -0.3 * np.exp(-(np.asarray(x) - 6.0) ** 2))
    report = check_nonbreaking(ic)
    det_margin = forward_cg(ic).margin()
    gap = abs(report.characteristic_margin - det_margin)
    ok = all(refused) and gap <= 1e-12
    assert criterion(4, "non-characteristic rejection", ok,
                     f"refused {sum(refused)}/3 near-singular cases; "
                     f"formula vs determinant {gap:.1e} <= 1e-12")


def test_criterion_05_bessel_mode(criterion):
    k, tau, smax = 1.0, 1.0, 25.0
    system = swe_system(lambda z: np.asarray(z, dtype=float))
    errors, hs = [], []
    for n in (1001, 2001, 4001):
        grid = Grid(0.0, smax, n)
        s = grid.nodes
        ic = GridFunction(grid, np.column_stack(exact_mode(k, s, 0.0)))
        sol = evolve_fd(system, ic, [tau], p=4, sponge_width=0.0,
                        boundary_state=lambda t: exact_mode(k, smax, t))
        ph, ps = exact_mode(k, s, tau)
        i = sol.level(tau)
        errors.append(max(np.max(np.abs(sol.phi[i] - ph)), np.max(np.abs(sol.psi[i] - ps))))
        hs.append(grid.h)
    errors, hs = np.array(errors), np.array(hs)
    orders = np.log2(errors[:-1] / errors[1:])
    bounded = bool(np.all(errors / hs ** 2 <= errors[0] / hs[0] ** 2 * (1 + 1e-12)))

    grid = Grid(0.0, smax, 2001)
    s = grid.nodes
    spec = evolve_spectral(SpectralCoefficients.single_mode(k), grid, [tau])
    ph, ps = exact_mode(k, s, tau)
    i = spec.level(tau)
    spec_err = max(np.max(np.abs(spec.phi[i] - ph)), np.max(np.abs(spec.psi[i] - ps)))

    ok = bool(np.all(orders >= 2.0)) and bounded and spec_err <= 1e-10
    assert criterion(5, "evolvers vs exact Bessel mode", ok,
                     f"FD errors {', '.join(f'{e:.2e}' for e in errors)}, orders "
                     f"{', '.join(f'{o:.2f}' for o in orders)} >= 2; spectral {spec_err:.1e} <= 1e-10")


def test_criterion_06_energy_conservation(criterion):
    ic = plane_gaussian()
    taus = np.linspace(0.0, 10.0, 21)
    system = swe_system(lambda z: np.asarray(z, dtype=float))
    # the energy leaves [0, 25] seaward, so it is measured on a domain the waves cannot exit
    big = extend_for_horizon(system, ic, 10.0)
    E = evolve_fd(system, big, taus, p=4).energy()
    fd_drift = float(np.max(np.abs(E - E[0])) / E[0])

    coeffs = hankel_analyze(ic)
    Es = energy_integral(coeffs, taus)
    spec_drift = float(np.max(np.abs(Es - Es[0])) / Es[0])
    ok = fd_drift <= 1e-4 and spec_drift <= 1e-10
    assert criterion(6, "energy conservation", ok,
                     f"FD drift {fd_drift:.1e} <= 1e-4 ({big.grid.n_points} nodes); "
                     f"spectral drift {spec_drift:.1e} <= 1e-10")


def test_criterion_07_solver_agreement(criterion):
    report = cross_check(plane_gaussian(), 10.0)
    assert criterion(7, "FD vs spectral agreement", report.max_sup <= 1e-3,
                     f"sup discrepancy {report.max_sup:.2e} <= 1e-3 over tau in [0, 10]")


def test_criterion_08_cg_round_trip(criterion):
    def eta(x):
        return 0.03 * np.exp(-((np.asarray(x, dtype=float) - 6.0) / 1.5) ** 2)

    def u(x):
        x = np.asarray(x, dtype=float)
        return -0.2 * eta(x) + 0.01 * np.exp(-((x - 9.0) / 2.0) ** 2)

    ic = PhysicalIC(Grid(-1.0, 25.0, 2601), eta, u)
    mic = forward_cg(ic)
    taus = np.linspace(-0.2, 0.2, 41)
    frozen = HodographSolution(mic.grid, taus, np.repeat(mic.g.values[None], len(taus), axis=0),
                               "identity")
    snap = inverse_cg_snapshot(frozen, 0.0)
    err = float(max(np.max(np.abs(snap.eta - eta(snap.x))), np.max(np.abs(snap.u - u(snap.x)))))
    assert criterion(8, "CG round trip at t = 0", err <= 1e-10, f"sup error {err:.1e} <= 1e-10")


def test_criterion_09_zero_velocity_degeneracy(criterion):
    ic = PhysicalIC(Grid(-1.0, 30.0, 1551),
                    lambda x: 0.01 * np.exp(-((np.asarray(x, dtype=float) - 6.0) / 1.5) ** 2),
                    lambda x: np.zeros_like(np.asarray(x, dtype=float)))
    mic = forward_cg(ic)
    flat = bool(np.all(mic.tau_values() == 0.0))
    orders = [choose_order(mic, eps)[0] for eps in (1e-12, 1e-9, 1e-4, 1.0)]

    cfg = dict(times=(0.0, 1.0), shoreline_times=(0.0, 0.5, 1.0), eps=1e-12, solver="spectral")
    projected = run_pipeline(ic, PipelineConfig(**cfg))
    classical = run_pipeline(ic, PipelineConfig(**cfg, skip_projection=True))
    same = (np.array_equal(projected.standard_data.values, classical.standard_data.values)
            and np.array_equal(projected.standard_data.values, mic.g.values)
            and np.array_equal(projected.solution.slices, classical.solution.slices)
            and np.array_equal(projected.shoreline.eta_s, classical.shoreline.eta_s))
    ok = flat and orders == [0, 0, 0, 0] and projected.order == 0 and same
    assert criterion(9, "u0 = 0 degeneracy", ok,
                     f"tau identically 0: {flat}; chosen j {orders}; bitwise equal path: {same}")


def test_criterion_10_short_time_consistency(criterion):
    amp, x0 = 0.01, 5.0

    def eta(x):
        return amp * np.exp(-(np.asarray(x, dtype=float) - x0) ** 2)

    def u(x):
        return -eta(x) / math.sqrt(x0)

    ic = PhysicalIC(Grid(-1.0, 30.0, 3001), eta, u)
    times = (0.025, 0.05, 0.1)
    cfg = PipelineConfig(times=times, dtau=0.005, eps=1e-14, p=6, solver="spectral",
                         k_grid=KGrid(n=512))
    res = run_pipeline(ic, cfg)
    errs = []
    for t in times:
        snap = res.snapshots[t]
        e_ref, u_ref = nonlinear_taylor(ic, snap.x, t, order=2)
        errs.append(max(np.max(np.abs(snap.eta - e_ref)), np.max(np.abs(snap.u - u_ref))))
    slope = float(np.polyfit(np.log(times), np.log(errs), 1)[0])
    assert criterion(10, "short-time consistency with Taylor oracle", abs(slope - 3.0) <= 0.3,
                     f"errors {', '.join(f'{e:.2e}' for e in errs)}; exponent {slope:.2f} in 3 +- 0.3")


def test_criterion_11_linearity(criterion, rng):
    grid = Grid(0.0, 5.0, 251)
    s = grid.nodes
    system = swe_system(lambda z: np.asarray(z, dtype=float))
    manifold = Manifold.from_samples(grid, 0.04 * np.cos(s), -0.04 * np.sin(s))
    worst = 0.0
    for _ in range(5):
        def smooth():
            c = rng.normal(size=(5, 2))
            return sum(np.outer(np.cos((k + 1) * s / 2 + rng.uniform(0, 6)), c[k])
                       for k in range(5))

        g1, g2 = smooth(), smooth()
        a, b = rng.normal(size=2) * 10.0 ** rng.uniform(-3, 3, size=2)

        def proj(v):
            return project(ManifoldIC(system, manifold, GridFunction(grid, v)), 4, 4).g_proj.values

        lhs = proj(a * g1 + b * g2)
        rhs = a * proj(g1) + b * proj(g2)
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))))
    assert criterion(11, "linearity of the projection map", worst <= 1e-10,
                     f"relative defect {worst:.1e} <= 1e-10")

