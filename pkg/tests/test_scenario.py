import json

import numpy as np
import pytest

from nhur.errors import NumericalGuard
from nhur.scenario import (
    CSV_HEADER,
    ScenarioError,
    list_scenarios,
    load_scenario,
    parse_scenario,
    render_text,
    resolve_scenario_path,
    run_scenario,
    write_outputs,
)

BUNDLED = {"example1", "example2", "eq39", "gamma_fixed_points", "triple_random"}


def minimal(**over):
    data = {
        "name": "mini",
        "space": {"kind": "explicit", "dim": 2},
        "operators": {"A": [["1", "0"], ["0", "-1"]], "B": [["0", "1"], ["1", "0"]]},
        "state": {"kind": "vector", "vector": ["1", "1i"]},
        "analysis": [{"kind": "ur_report", "A": "A", "B": "B", "expect": ["delta_A >= 0"]}],
    }
    data.update(over)
    return data


def test_minimal_scenario_runs():
    res = run_scenario(parse_scenario(minimal()))
    assert res.passed
    rec = res.records[0]
    # sigma_z, sigma_x on (1, i)/sqrt2: both centered vectors have norm one
    assert rec["result"]["delta_A"] == pytest.approx(1.0)
    assert rec["result"]["delta_B"] == pytest.approx(1.0)
    assert rec["truncation"] == 2
    assert rec["tolerances"]["saturation"] == pytest.approx(1e-8)
    assert rec["analysis"] == "0_ur_report"


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"name": "has space"}, "name"),
        ({"seed": -1}, "seed"),
        ({"colour": 1}, ".colour"),
        ({"space": {"kind": "hilbert"}}, "space.kind"),
        ({"space": {"kind": "explicit"}}, "space.dim"),
        ({"space": {"kind": "fock", "N": 1}}, "space.N"),
        ({"state": {"kind": "coherent", "z": "1"}}, "state.kind"),
        ({"state": {"kind": "ghost"}}, "state.kind"),
        ({"product": "weighted"}, "product.kind"),
        ({"product": 3}, "product"),
        ({"analysis": []}, "analysis"),
        ({"analysis": [{"kind": "fft", "A": "A"}]}, "analysis[0].kind"),
        ({"analysis": [{"kind": "ur_report", "A": "A"}]}, "analysis[0].B"),
        ({"analysis": [{"kind": "ur_report", "A": "A", "B": "B", "expect": "x"}]}, "analysis[0].expect"),
        ({"tolerances": {"saturation": -1.0}}, "tolerances.saturation"),
        ({"tolerances": {"speed": 1.0}}, "tolerances.speed"),
    ],
)
def test_schema_errors_name_the_field(patch, field):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(minimal(**patch))
    assert info.value.field.endswith(field.lstrip("."))


@pytest.mark.parametrize(
    "operators, state, field",
    [
        ({"A": "Q", "B": "A"}, None, "operators.A"),
        ({"A": "B", "B": "A"}, None, "operators."),
        ({"A": [["1", "0", "0"]] * 3, "B": "A"}, None, "A"),
        ({"A": "A0", "B": "A0", "A0": [["1", "0"], ["0", "1"]]}, {"kind": "vector", "vector": ["1"]}, "state.vector"),
        ({"A": "good_observable(rand_op())", "B": "A"}, None, "metric"),
    ],
)
def test_runtime_schema_errors(operators, state, field):
    data = minimal(operators=operators)
    if state is not None:
        data["state"] = state
    with pytest.raises(ScenarioError) as info:
        run_scenario(parse_scenario(data))
    assert field in info.value.field


def test_bad_expectation_is_schema_error():
    data = minimal()
    data["analysis"][0]["expect"] = ["no_such_field > 0"]
    with pytest.raises(ScenarioError):
        run_scenario(parse_scenario(data))


def test_non_hermitian_explicit_metric():
    data = minimal(metric={"kind": "explicit", "S": [["1", "1"], ["0", "1"]]}, product="weighted")
    with pytest.raises(ScenarioError) as info:
        run_scenario(parse_scenario(data))
    assert info.value.field == "metric.S"


def test_ill_conditioned_metric_is_numerical_guard():
    data = minimal(metric={"kind": "explicit", "S": [["1", "0"], ["0", "1e-14"]]}, product="weighted")
    with pytest.raises(NumericalGuard):
        run_scenario(parse_scenario(data))


def test_failing_expectation_recorded():
    data = minimal()
    data["analysis"][0]["expect"] = ["delta_A > 2", "delta_B > 0"]
    res = run_scenario(parse_scenario(data))
    assert not res.passed
    verdicts = [v["passed"] for v in res.records[0]["expectations"]]
    assert verdicts == [False, True]
    assert "FAIL  delta_A > 2" in render_text(res)


def test_list_bundled_and_custom(tmp_path):
    assert set(list_scenarios()) == BUNDLED
    assert set(list_scenarios(tmp_path)) == BUNDLED
    (tmp_path / "mine.toml").write_text(
        'name = "mine"\ndescription = "custom"\n[space]\nkind = "explicit"\ndim = 1\n'
        '[state]\nkind = "vector"\nvector = ["1"]\n'
        '[[analysis]]\nkind = "ur_report"\nA = "I"\nB = "I"\n'
    )
    cat = list_scenarios(tmp_path)
    assert set(cat) == BUNDLED | {"mine"}
    assert cat["mine"][0] == "custom"
    assert resolve_scenario_path("mine", tmp_path).name == "mine.toml"
    with pytest.raises(ScenarioError):
        resolve_scenario_path("nothing_here")


def test_invalid_toml(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("name = \n")
    with pytest.raises(ScenarioError):
        load_scenario(p)


@pytest.mark.parametrize("name", sorted(BUNDLED))
def test_bundled_scenarios_pass(name):
    res = run_scenario(load_scenario(resolve_scenario_path(name)))
    assert res.passed, render_text(res)
    for rec in res.records:
        json.dumps(rec)


def test_example2_grid_verdicts():
    res = run_scenario(load_scenario(resolve_scenario_path("example2")))
    recs = [r for r in res.records if r["kind"] == "ur_report"]
    assert len(recs) == 25
    for r in recs:
        x, y = r["label"]["x"], r["label"]["y"]
        assert r["result"]["saturated210"] == (x * y == 0)
        assert r["result"]["delta_product"] == pytest.approx(np.hypot(x, y), abs=1e-8)


def test_overrides_and_determinism(tmp_path):
    scn = load_scenario(resolve_scenario_path("triple_random"))
    a = run_scenario(scn, seed=3, tol=1e-6)
    assert a.records[0]["seed"] == 3
    assert a.records[0]["tolerances"]["saturation"] == 1e-6
    out1, out2 = tmp_path / "one", tmp_path / "two"
    write_outputs(run_scenario(scn, seed=3), out1)
    write_outputs(run_scenario(scn, seed=3), out2)
    assert (out1 / "triple_random.jsonl").read_bytes() == (out2 / "triple_random.jsonl").read_bytes()
    write_outputs(run_scenario(scn, seed=4), tmp_path / "three")
    assert (out1 / "triple_random.jsonl").read_bytes() != (tmp_path / "three" / "triple_random.jsonl").read_bytes()


def test_truncation_override():
    scn = load_scenario(resolve_scenario_path("example1"))
    res = run_scenario(scn, truncation=40)
    assert res.records[0]["truncation"] == 40
    with pytest.raises(NumericalGuard):
        run_scenario(scn, truncation=5)
    with pytest.raises(ScenarioError):
        run_scenario(load_scenario(resolve_scenario_path("triple_random")), truncation=5)


def test_gamma_orbit_csv(tmp_path):
    res = run_scenario(load_scenario(resolve_scenario_path("gamma_fixed_points")))
    files = write_outputs(res, tmp_path)
    csvs = [f for f in files if f.suffix == ".csv"]
    assert len(csvs) == 1
    lines = csvs[0].read_text().splitlines()
    assert lines[0].split(",") == CSV_HEADER
    assert len(lines) == 22
    assert all(line.endswith(",1") for line in lines[1:])
