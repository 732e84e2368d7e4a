import csv
import json

import numpy as np
import pytest

from weightlab import cli, harness
from weightlab.corpus import make_function
from weightlab.errors import ConfigError, ParameterError
from weightlab.grid import GridSpec, SampledFunction
from weightlab.operators import hilbert
from weightlab.registry import load_registry
from weightlab.weights import make_symbol, make_weight

SMALL = """\
name = "small"
[grid]
dimension = 1
resolution = 256

[[kernels]]
name = "hilbert"
kind = "kernel"
spec = "hilbert"

[[symbols]]
name = "x"
kind = "linear"

[[functions]]
name = "bump"
kind = "bump"
seeds = [0, 1]

[[weights]]
name = "power"
kind = "power"
alphas = [-0.5, 0.5]

[[experiments]]
id = "theorem1"
kind = "theorem1"
p = 2.0
theta = [0.3, 0.7]
"""


def test_parse_small_config():
    cfg = harness.parse_config(SMALL)
    assert sorted(cfg.functions) == ["bump:0", "bump:1"]
    assert sorted(cfg.weights) == ["power:-0.5", "power:0.5"]
    assert cfg.select(cfg.weights, "power") == ["power:-0.5", "power:0.5"]
    shifted = cfg.with_seed_offset(1000)
    assert shifted.functions["bump:1"]["seed"] == 1001


@pytest.mark.parametrize("bad,field", [
    (SMALL.replace("theta = [0.3, 0.7]", "theta = 1.0"), "theta"),
    (SMALL.replace("p = 2.0", "p = 1.0"), "p"),
    (SMALL + 'q = 2.5\n', "q"),
    (SMALL + '\n[[experiments]]\nid = "theorem1"\nkind = "buckley"\n', "id"),
    (SMALL + '\n[[experiments]]\nid = "c"\nkind = "corollary1"\nvariant = "nope"\n', "variant"),
    (SMALL + '\n[[experiments]]\nid = "v"\nkind = "verify"\nlemma = "nope"\n', "lemma"),
    (SMALL + 'weights = ["missing"]\n', "weights"),
    (SMALL + '\n[[experiments]]\nid = "k"\nkind = "nope"\n', "kind"),
    (SMALL + '\n[[experiments]]\nid = "t2"\nkind = "theorem1"\np = 0.5\n', "p"),
])
def test_config_errors_name_field_and_line(bad, field):
    with pytest.raises(ConfigError) as exc:
        harness.parse_config(bad, "bad.toml")
    msg = str(exc.value)
    assert f"field '{field}'" in msg
    line = int(msg.split(":")[1])
    assert bad.splitlines()[line - 1].strip().startswith(field)


def test_error_line_points_into_failing_block():
    bad = SMALL + '\n[[experiments]]\nid = "t2"\nkind = "theorem1"\np = 0.5\n'
    with pytest.raises(ConfigError) as exc:
        harness.parse_config(bad, "bad.toml")
    assert str(exc.value).startswith(f"bad.toml:{len(bad.splitlines())}: field 'p'")


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        harness.load_config(tmp_path / "nope.toml")
    with pytest.raises(ConfigError):
        harness.parse_config("name = [", "broken.toml")


def test_ratio_trivial_cases():
    g = GridSpec.uniform(1, 256)
    K = hilbert()
    zero = make_function("zero", {}, g)
    w = make_weight("power", {"alpha": 0.3}, g)
    row = harness.ratio_theorem1(zero, w, K, 2.0, 2.0, 0.5)
    assert row.lhs == 0 and row.ratio == 0
    f = make_function("bump", {"seed": 3}, g)
    const = make_symbol("constant", {"value": 2.0}, g)
    row = harness.ratio_theorem1_commutator(f, w, K, const, 2.0, 2.0, 0.5)
    assert row.lhs < 1e-12 and row.bmo == 0
    one = make_weight("constant", {}, g)
    row = harness.ratio_corollary1(f, one, K, 2.0, "a1")
    assert row.ainf == pytest.approx(1.0) and row.a1 == pytest.approx(1.0)
    assert row.factor == pytest.approx(1.0)
    row = harness.ratio_buckley(f, one, 2.0)
    assert row.factor == pytest.approx(1.0) and row.ratio >= 1.0
    with pytest.raises(ParameterError):
        harness.ratio_corollary2(f, w, K, 2.0, 2.0)
    with pytest.raises(ParameterError):
        harness.ratio_corollary1(f, w, K, 2.0, "commutator-mw")


def test_ratio_theorem1_by_hand():
    g = GridSpec.uniform(1, 128)
    K = hilbert()
    f = make_function("step", {"seed": 1}, g)
    u = make_weight("lognormal", {"seed": 2}, g)
    row = harness.ratio_theorem1(f, u, K, 3.0, 1.5, 0.25)
    assert row.factor == pytest.approx(3.0 ** (0.25 * 2 / 3) / 0.75)
    assert row.rhs == pytest.approx(row.omega * row.bmo * row.factor * row.fnorm)


def test_empty_experiment_list_passes(tmp_path):
    text = SMALL[:SMALL.index("[[experiments]]")]
    code, reports = harness.run_suite(harness.parse_config(text), tmp_path)
    assert code == harness.EXIT_PASS and reports == []
    assert (tmp_path / "small.csv").read_text().strip() == ",".join(harness.COLUMNS)


def test_suite_rows_recomputable(tmp_path):
    cfg = harness.parse_config(SMALL)
    code, reports = harness.run_suite(cfg, tmp_path)
    assert code == harness.EXIT_PASS
    with open(tmp_path / "small.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 2 * 2
    for r in rows:
        rhs = float(r["omega"]) * float(r["bmo"]) * float(r["factor"]) * float(r["fnorm"])
        assert float(r["rhs"]) == pytest.approx(rhs, rel=1e-12)
        assert float(r["ratio"]) == pytest.approx(float(r["lhs"]) / rhs, rel=1e-12)
    summary = json.loads((tmp_path / "small.json").read_text())
    assert summary["passed"] is True


def test_suite_fails_against_tiny_bound(tmp_path):
    reg = dict(load_registry())
    reg["ratio"] = dict(reg["ratio"], theorem1=1e-6)
    code, reports = harness.run_suite(harness.parse_config(SMALL), tmp_path, registry=reg)
    assert code == harness.EXIT_FAIL and not reports[0].passed


def test_missing_symbol_is_usage_error(tmp_path):
    text = SMALL + '\n[[experiments]]\nid = "c"\nkind = "theorem1_commutator"\n'
    code, _ = harness.run_suite(harness.parse_config(text), tmp_path)
    assert code == harness.EXIT_USAGE


def test_verify_experiment(tmp_path):
    text = SMALL + '\n[[experiments]]\nid = "v"\nkind = "verify"\nlemma = "desig"\ncases = 6\nresolution = 64\n'
    code, reports = harness.run_suite(harness.parse_config(text), tmp_path)
    assert code == harness.EXIT_PASS
    assert reports[1].kind == "verify" and len(reports[1].rows) == 6 * 4


def test_reconstruction_errors_shrink():
    g = GridSpec.uniform(1, 1024)
    f = make_function("bump", {"seed": 2}, g)
    from weightlab.operators import DecompositionPlan
    errs = harness.reconstruction_errors(f, hilbert(), DecompositionPlan(j_max=5))
    assert len(errs) == 6
    assert all(b <= a * (1 + 1e-9) + 1e-15 for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-12


# -- CLI smoke tests ---------------------------------------------------------

def test_cli_constants(tmp_path, capsys):
    assert cli.main(["constants", "constant:2", "--grid", "256"]) == 0
    out = capsys.readouterr().out
    assert "a1" in out
    path = tmp_path / "c.json"
    assert cli.main(["constants", "power:0.5", "--grid", "256", "--format", "json",
                     "--out", str(path)]) == 0
    assert json.loads(path.read_text())


def test_cli_constants_from_csv(tmp_path, capsys):
    from weightlab.grid import save_csv
    g = GridSpec.uniform(1, 64)
    path = tmp_path / "w.csv"
    save_csv(SampledFunction(g, np.linspace(1, 2, 64)), path)
    assert cli.main(["constants", str(path)]) == 0


@pytest.mark.parametrize("argv", [
    ["maximal", "bump:1", "--grid", "256"],
    ["maximal", "step", "--grid", "256", "--kind", "power:2"],
    ["maximal", "step", "--grid", "16x16", "--kind", "orlicz:llogl:1", "--scope", "full"],
    ["transform", "bump", "--grid", "256"],
    ["transform", "bump", "--grid", "256", "--symbol", "linear"],
    ["transform", "bump", "--grid", "1024", "--piece", "1"],
    ["sparse", "bump", "--grid", "256", "--scope", "full"],
    ["sparse", "bump", "--grid", "256", "--format", "json"],
    ["verify", "desig", "--grid", "64", "--cases", "6"],
])
def test_cli_subcommands(argv, capsys):
    assert cli.main(argv) == 0
    assert capsys.readouterr().out


def test_cli_usage_errors(tmp_path, capsys):
    assert cli.main(["nope"]) == harness.EXIT_USAGE
    assert cli.main(["constants", "power:x"]) == harness.EXIT_USAGE
    bad = tmp_path / "bad.toml"
    bad.write_text(SMALL.replace("theta = [0.3, 0.7]", "theta = 1.0"))
    assert cli.main(["sweep", str(bad), "--out", str(tmp_path)]) == harness.EXIT_USAGE
    assert "field 'theta'" in capsys.readouterr().err


def test_cli_sweep(tmp_path):
    cfg = tmp_path / "small.toml"
    cfg.write_text(SMALL)
    assert cli.main(["sweep", str(cfg), "--out", str(tmp_path / "r")]) == 0
    assert (tmp_path / "r" / "small.csv").exists()


def test_exp_symbol_experiment(tmp_path):
    text = SMALL + '\n[[experiments]]\nid = "e"\nkind = "exp_symbol"\np = [2.0, 4.0]\nsteps = 5\n'
    code, reports = harness.run_suite(harness.parse_config(text), tmp_path)
    rep = reports[1]
    assert code == harness.EXIT_PASS and len(rep.rows) == 2 * 5
    mid = [r for r in rep.rows if r.case.endswith("s=0")]
    assert mid and all(r.ap == pytest.approx(1.0) for r in mid)
    assert all(np.isfinite(r.ratio) and r.ratio >= 1 - 1e-12 for r in rep.rows)
    with pytest.raises(ConfigError, match="alpha"):
        harness.parse_config(text + "alpha = 0.0\n")


def test_calibrate_writes_only_the_target(tmp_path):
    from weightlab.registry import REGISTRY_PATH
    shipped = REGISTRY_PATH.read_bytes()
    target = tmp_path / "registry.json"
    entries = harness.calibrate(harness.parse_config(SMALL), target)
    assert REGISTRY_PATH.read_bytes() == shipped
    data = json.loads(target.read_text())
    assert data == json.loads(json.dumps(entries))
    assert set(data["ratio"]) == {"theorem1"} and data["ratio"]["theorem1"] > 0
    assert 0 < data["tau"] and data["reconstruction_threshold"] >= 1e-12
    assert load_registry(target)["ratio"] is not load_registry(target)["ratio"]
