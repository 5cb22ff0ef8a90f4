"""Command-line front end.

    cgrunup run --scenario pulse.yaml --out results/pulse
    cgrunup validate --suite projection
    cgrunup converge --scenario mode.yaml --axis grid

Exit codes: 0 success, 2 validation failure (or usage error), 3 scenario
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import NumericalFailure, ScenarioError
from .results import write_csv, write_json
from .scenario import Scenario, load_scenario, profile_function

logger = logging.getLogger("cgrunup")

EXIT_OK, EXIT_VALIDATION, EXIT_SCENARIO, EXIT_NUMERICAL = 0, 2, 3, 4


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


# {{{ run

def _run_runup(sc: Scenario, out: Path) -> dict:
    from .pipeline import run_pipeline

    ic = sc.physical_ic()
    cfg = sc.pipeline_config()
    if ic.tail_ratio() > 1e-8:
        logger.warning("initial data do not decay at the offshore end (tail ratio %.2e)",
                       ic.tail_ratio())
    res = run_pipeline(ic, cfg)
    js = sc.resolved_json()

    if res.projection is not None:
        norms = res.projection.term_sup_norms
        write_csv(out / "projection.csv", ["k", "term_sup_norm"],
                  np.column_stack([np.arange(len(norms)), norms]), js, "projection diagnostics")

    o = sc.section("output")
    sol = res.solution
    ts = o.get("tau_stride", max(1, len(sol.tau_values) // 100))
    ss = o.get("sigma_stride", max(1, sol.sigma_grid.n_points // 500))
    taus = sol.tau_values[::ts]
    sig = sol.sigma_grid.nodes[::ss]
    T, S = np.meshgrid(taus, sig, indexing="ij")
    rows = np.column_stack([T.ravel(), S.ravel(), sol.phi[::ts, ::ss].ravel(),
                            sol.psi[::ts, ::ss].ravel()])
    write_csv(out / "hodograph.csv", ["tau", "sigma", "phi", "psi"], rows, js, "hodograph slices")

    files = []
    for i, (t, snap) in enumerate(sorted(res.snapshots.items())):
        x, eta, u = snap.resampled()
        name = f"snapshot_{i:03d}.csv"
        write_csv(out / name, ["x", "eta", "u"], np.column_stack([x, eta, u]), js,
                  f"physical snapshot t={t:.17g}")
        files.append({"t": t, "file": name})

    if res.shoreline is not None:
        sh = res.shoreline
        write_csv(out / "shoreline.csv", ["t", "x_s", "eta_s", "u_s"],
                  np.column_stack([sh.t, sh.x_s, sh.eta_s, sh.u_s]), js, "shoreline series")

    summary = res.summary()
    summary["snapshot_files"] = files
    return summary


def _run_advection(sc: Scenario, out: Path) -> dict:
    from .projection import choose_order, project
    from .validation import advection_ic

    adv = sc.section("advection")
    beta = float(adv.get("beta", 0.3))
    h = profile_function(adv.get("profile", {"family": "gaussian", "amplitude": 1.0,
                                             "center": 0.0, "width": 1.0}))
    grid = sc.x_grid()
    n = sc.section("numerics")
    p = int(n.get("p", 4))
    ic = advection_ic(beta, h, grid)
    if "eps" in n:
        _, res = choose_order(ic, float(n["eps"]), int(n.get("j_max", 8)), p)
    else:
        res = project(ic, int(n["j"]), p)
    err = float(np.max(np.abs(res.g_proj.values[:, 0] - h(grid.nodes))))
    js = sc.resolved_json()
    write_csv(out / "projection.csv", ["k", "term_sup_norm"],
              np.column_stack([np.arange(len(res.term_sup_norms)), res.term_sup_norms]), js,
              "projection diagnostics")
    write_csv(out / "projected.csv", ["x", "g_proj", "exact"],
              np.column_stack([grid.nodes, res.g_proj.values[:, 0], h(grid.nodes)]), js,
              "projected data")
    return {"order": res.order, "next_term_estimate": res.next_term_estimate,
            "converged": res.converged, "diverging": res.diverging, "sup_error": err}


def _run_mode(sc: Scenario, out: Path) -> dict:
    from .core import GridFunction, swe_system
    from .evolver import evolve_fd
    from .hankel import SpectralCoefficients, evolve_spectral
    from .oracle import bessel_mode

    mode = sc.section("mode")
    k = float(mode.get("k", 1.0))
    taus = [float(t) for t in mode.get("tau", [1.0])]
    grid = sc.x_grid()
    if grid.x_min != 0.0:
        raise ScenarioError("domain.x_min must be 0 for a Bessel-mode problem")
    n = sc.section("numerics")
    solver = n.get("solver", "both")
    s = grid.nodes
    sols = {}
    if solver in ("fd", "both"):
        ic = GridFunction(grid, np.column_stack(bessel_mode(k, s, 0.0)))
        sols["fd"] = evolve_fd(swe_system(lambda z: z), ic, taus, p=int(n.get("fd_order", 4)),
                               sponge_width=0.0,
                               boundary_state=lambda t: bessel_mode(k, grid.x_max, t))
    if solver in ("spectral", "both"):
        sols["spectral"] = evolve_spectral(SpectralCoefficients.single_mode(k), grid, taus)
    js = sc.resolved_json()
    summary = {}
    for name, sol in sols.items():
        errs = []
        for i, t in enumerate(sol.tau_values):
            ph, ps = bessel_mode(k, s, t)
            errs.append(float(max(np.max(np.abs(sol.phi[i] - ph)), np.max(np.abs(sol.psi[i] - ps)))))
        summary[name] = {"tau": sol.tau_values.tolist(), "sup_error": errs}
        T, S = np.meshgrid(sol.tau_values, s, indexing="ij")
        write_csv(out / f"hodograph_{name}.csv", ["tau", "sigma", "phi", "psi"],
                  np.column_stack([T.ravel(), S.ravel(), sol.phi.ravel(), sol.psi.ravel()]),
                  js, f"{name} solution")
    return summary


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    out = Path(args.out) if args.out else Path("results") / sc.name
    runner = {"runup": _run_runup, "advection": _run_advection, "bessel-mode": _run_mode}
    summary = runner[sc.problem](sc, out)
    write_json(out / "summary.json", {"problem": sc.problem, **summary}, sc.raw)
    _say(args, f"{sc.name}: results written to {out}")
    if "runup" in summary:
        _say(args, f"  run-up R = {summary['runup']:.6g}")
    if summary.get("projection"):
        _say(args, f"  projection order j = {summary['projection']['order']}")
    cc = summary.get("cross_check")
    if cc is not None:
        _say(args, f"  cross-check sup discrepancy = {cc['max_sup']:.3e}")
        if not cc["passed"]:
            return EXIT_VALIDATION
    return EXIT_OK

# }}}


def cmd_validate(args) -> int:
    from .validation import run_validation

    reports = run_validation(args.suite)
    width = max(len(r.name) for r in reports)
    if not args.quiet:
        print(f"{'check':<{width}}  {'sup':>10}  {'tolerance':>10}  result")
        for r in reports:
            print(f"{r.name:<{width}}  {r.sup:10.3e}  {r.tolerance:10.3e}  "
                  f"{'pass' if r.passed else 'FAIL'}")
    if args.out:
        write_json(Path(args.out) / f"validation_{args.suite}.json",
                   {"suite": args.suite, "reports": [r.to_dict() for r in reports]}, None)
    failed = [r.name for r in reports if not r.passed]
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_converge(args) -> int:
    from .validation import convergence_study

    sc = load_scenario(args.scenario)
    table = convergence_study(sc, args.axis)
    out = Path(args.out) if args.out else Path("results") / sc.name
    write_csv(out / f"convergence_{args.axis}.csv", table["columns"], table["rows"],
              sc.resolved_json(), f"convergence along {args.axis}")
    write_json(out / f"convergence_{args.axis}.json", table, sc.raw)
    if not args.quiet:
        print("  ".join(f"{c:>20}" for c in table["columns"]))
        for row in table["rows"]:
            print("  ".join(f"{v:>20.6g}" for v in row))
        if table["fitted_order"] is not None:
            print(f"fitted order: {table['fitted_order']:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgrunup",
                                     description="Run-up with non-zero initial velocity via data projection")
    parser.add_argument("--quiet", action="store_true", help="suppress console summaries")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario end to end")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--out", help="output directory (default results/<name>)")

    p_val = sub.add_parser("validate", help="run a validation suite")
    p_val.add_argument("--suite", default="all",
                       choices=["projection", "evolver", "cg", "pipeline", "all"])
    p_val.add_argument("--out", help="directory for the JSON report")

    p_conv = sub.add_parser("converge", help="convergence study along one axis")
    p_conv.add_argument("--scenario", required=True)
    p_conv.add_argument("--axis", required=True, choices=["j", "grid", "dt"])
    p_conv.add_argument("--out")

    for p in (p_run, p_val, p_conv):
        p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "validate": cmd_validate, "converge": cmd_converge}[args.command]
    try:
        return handler(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except NumericalFailure as exc:
        stage = getattr(exc, "stage", None)
        where = f" in stage {stage}" if stage else ""
        print(f"numerical failure{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        stage = getattr(exc, "stage", None)
        where = f" (stage {stage})" if stage else ""
        print(f"invalid parameter{where}: {exc}", file=sys.stderr)
        return EXIT_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
