import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from cgrunup.cli import main
from cgrunup.errors import ScenarioError
from cgrunup.results import STAMP_PREFIX, strip_stamp, write_csv, write_json
from cgrunup.scenario import load_scenario, profile_function, validate_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

SMALL_PULSE = {
    "name": "small-pulse",
    "problem": "runup",
    "bay": {"preset": "plane-beach"},
    "initial": {"eta": {"family": "gaussian", "amplitude": 0.01, "center": 6.0, "width": 1.5},
                "u": {"family": "proportional", "factor": -0.4}},
    "domain": {"x_min": -1.0, "x_max": 30.0, "points": 776},
    "numerics": {"eps": 1.0e-12, "dtau": 0.05},
    "output": {"times": [0.0, 1.0], "shoreline": {"t_min": 0.0, "t_max": 4.0, "count": 21}},
}


def write_scenario(tmp_path, doc, name="sc.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return path


def read_table(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return lines[0].split(","), rows


# {{{ scenario files

class TestScenario:
    def test_shipped_scenarios_validate(self):
        for path in sorted(SCENARIOS.glob("*.yaml")):
            load_scenario(path)

    @pytest.mark.parametrize("patch, msg", [
        ({"numerics": {"eps": 1e-8, "j": 2}}, "exactly one"),
        ({"numerics": {}}, "exactly one"),
        ({"numerics": {"eps": -1.0}}, "numerics.eps"),
        ({"domain": {"x_max": 10.0, "points": 5}}, "domain.points"),
        ({"bogus": 1}, "Additional properties"),
        ({"initial": {"eta": {"family": "square"}}}, "initial.eta.family"),
    ])
    def test_invalid_documents(self, patch, msg):
        doc = {**SMALL_PULSE, **patch}
        with pytest.raises(ScenarioError, match=msg):
            validate_scenario(doc)

    def test_missing_table_fails_at_load(self, tmp_path):
        doc = {**SMALL_PULSE, "bay": {"table": "nowhere.csv"}}
        with pytest.raises(ScenarioError, match="not found"):
            load_scenario(write_scenario(tmp_path, doc))

    def test_tables(self, tmp_path):
        s = np.linspace(0.0, 60.0, 61)
        np.savetxt(tmp_path / "bay.csv", np.column_stack([s, s]), delimiter=",",
                   header="sigma,c", comments="")
        x = np.linspace(-1.0, 30.0, 311)
        eta = 0.01 * np.exp(-(x - 6.0) ** 2)
        np.savetxt(tmp_path / "ic.csv", np.column_stack([x, eta, 0 * x]), delimiter=",",
                   header="x,eta,u", comments="")
        doc = {**SMALL_PULSE, "bay": {"table": "bay.csv"}, "initial": {"table": "ic.csv"}}
        sc = load_scenario(write_scenario(tmp_path, doc))
        assert sc.bay()(12.5) == pytest.approx(12.5)
        ic = sc.physical_ic()
        assert ic.eta(6.0) == pytest.approx(0.01, rel=1e-3)

    def test_inline_profile_and_config(self, tmp_path):
        doc = {**SMALL_PULSE, "bay": {"sigma": [0.0, 10.0, 40.0], "c": [0.0, 10.0, 40.0]},
               "numerics": {"j": 2, "solver": "fd", "k_modes": 64}}
        sc = load_scenario(write_scenario(tmp_path, doc))
        cfg = sc.pipeline_config()
        assert cfg.j == 2 and cfg.eps is None and cfg.solver == "fd"
        assert cfg.shoreline_times[-1] == 4.0 and len(cfg.shoreline_times) == 21
        assert not sc.bay().is_plane_beach

    def test_families(self):
        x = np.linspace(-5, 5, 20001)
        nw = profile_function({"family": "n-wave", "amplitude": 0.3, "center": 1.0, "width": 2.0})(x)
        assert nw.max() == pytest.approx(0.3, rel=1e-6)
        assert x[np.argmax(nw)] == pytest.approx(1.0 - 2.0 / np.sqrt(2), abs=1e-3)
        eta = profile_function({"family": "gaussian", "amplitude": 0.1, "center": 5.0})
        u = profile_function({"family": "riemann-incoming"}, eta)
        assert u(5.0) == pytest.approx(-2 * (np.sqrt(5.1) - np.sqrt(5.0)))
        assert u(-0.5) == 0.0
        with pytest.raises(ScenarioError):
            profile_function({"family": "proportional"}, None, "initial.eta")

# }}}


# {{{ result files

def test_result_files_carry_scenario_and_stamp(tmp_path):
    p = write_csv(tmp_path / "a.csv", ["x", "y"], [[1.0, 0.1], [2.0, 1 / 3]], '{"k":1}', "demo")
    text = p.read_text().splitlines()
    assert text[0] == "# demo" and text[1] == '# scenario: {"k":1}'
    assert text[2].startswith(STAMP_PREFIX)
    assert text[3] == "x,y"
    assert float(text[5].split(",")[1]) == 1 / 3
    j = write_json(tmp_path / "b.json", {"v": np.float64(2.5), "bad": float("nan")}, {"k": 1})
    doc = json.loads(j.read_text())
    assert doc["scenario"] == {"k": 1} and doc["v"] == 2.5 and doc["bad"] == "nan"
    assert "generated" not in strip_stamp(j.read_text())

# }}}


# {{{ command line

def test_run_pulse_outputs_and_reruns(tmp_path, capsys):
    path = write_scenario(tmp_path, SMALL_PULSE)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["run", "--scenario", str(path), "--out", str(out1)]) == 0
    assert main(["--quiet", "run", "--scenario", str(path), "--out", str(out2)]) == 0
    names = sorted(p.name for p in out1.iterdir())
    assert names == ["hodograph.csv", "projection.csv", "shoreline.csv", "snapshot_000.csv",
                     "snapshot_001.csv", "summary.json"]
    for name in names:
        a, b = (out1 / name).read_text(), (out2 / name).read_text()
        assert a != "" and strip_stamp(a) == strip_stamp(b)
        assert "small-pulse" in a
    cols, data = read_table(out1 / "shoreline.csv")
    assert cols == ["t", "x_s", "eta_s", "u_s"] and data.shape == (21, 4)
    cols, _ = read_table(out1 / "snapshot_001.csv")
    assert cols == ["x", "eta", "u"]
    cols, proj = read_table(out1 / "projection.csv")
    assert cols == ["k", "term_sup_norm"] and proj[0, 0] == 0
    summary = json.loads((out1 / "summary.json").read_text())
    assert summary["scenario"]["name"] == "small-pulse"
    assert summary["runup"] == pytest.approx(data[:, 2].max())
    assert "run-up R" in capsys.readouterr().out


def test_run_zero_velocity_cross_check(tmp_path):
    doc = {**SMALL_PULSE, "initial": {"eta": SMALL_PULSE["initial"]["eta"]},
           "numerics": {"eps": 1e-12, "solver": "both"}}
    out = tmp_path / "o"
    assert main(["--quiet", "run", "--scenario", str(write_scenario(tmp_path, doc)), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["projection"]["order"] == 0
    assert summary["cross_check"]["passed"] and summary["cross_check"]["max_sup"] <= 1e-3
    assert (out / "snapshot_000.csv").exists()


def test_breaking_scenario_exit_code(tmp_path, capsys):
    code = main(["--quiet", "run", "--scenario", str(SCENARIOS / "breaking.yaml"),
                 "--out", str(tmp_path)])
    assert code == 4
    assert "check_nonbreaking" in capsys.readouterr().err


def test_scenario_errors_exit_3(tmp_path, capsys):
    assert main(["run", "--scenario", str(tmp_path / "missing.yaml")]) == 3
    bad = write_scenario(tmp_path, {**SMALL_PULSE, "numerics": {"j": 1, "eps": 1e-3}})
    assert main(["run", "--scenario", str(bad)]) == 3
    assert "exactly one" in capsys.readouterr().err


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["validate", "--suite", "nonsense"])
    assert info.value.code == 2
    with pytest.raises(SystemExit):
        main(["converge", "--scenario", "x.yaml", "--axis", "time"])


def test_advection_run(tmp_path):
    out = tmp_path / "adv"
    assert main(["--quiet", "run", "--scenario", str(SCENARIOS / "advection_linear.yaml"),
                 "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["order"] == 1 and summary["sup_error"] <= 1e-12


def test_mode_run(tmp_path):
    out = tmp_path / "mode"
    assert main(["--quiet", "run", "--scenario", str(SCENARIOS / "mode.yaml"), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert max(summary["spectral"]["sup_error"]) <= 1e-10
    assert max(summary["fd"]["sup_error"]) <= 1e-7


@pytest.mark.parametrize("suite, expected", [("projection", "advection-j1-exact"),
                                             ("cg", "cg-roundtrip")])
def test_validate_suites(tmp_path, capsys, suite, expected):
    assert main(["validate", "--suite", suite, "--out", str(tmp_path)]) == 0
    assert expected in capsys.readouterr().out
    doc = json.loads((tmp_path / f"validation_{suite}.json").read_text())
    assert all(r["passed"] for r in doc["reports"])
    assert expected in [r["name"] for r in doc["reports"]]


@pytest.mark.parametrize("scenario, axis, check", [
    ("advection_linear.yaml", "j", lambda t: min(r[1] for r in t["rows"][1:]) < 1e-12),
    ("advection.yaml", "grid", lambda t: t["fitted_order"] > 4.0),
    ("mode.yaml", "grid", lambda t: t["fitted_order"] >= 2.0),
    ("mode.yaml", "dt", lambda t: abs(t["fitted_order"] - 4.0) < 0.5),
])
def test_converge(tmp_path, scenario, axis, check):
    out = tmp_path / "c"
    assert main(["--quiet", "converge", "--scenario", str(SCENARIOS / scenario), "--axis", axis,
                 "--out", str(out)]) == 0
    table = json.loads((out / f"convergence_{axis}.json").read_text())
    assert check(table)
    cols, rows = read_table(out / f"convergence_{axis}.csv")
    assert cols == table["columns"] and len(rows) == len(table["rows"])

# }}}
