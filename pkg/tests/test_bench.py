from __future__ import annotations

import json

import numpy as np
import pytest

from lgga.bench import (
    DISC,
    NO_DISC,
    ExperimentResult,
    SweepResult,
    TrialResult,
    data_efficiency,
    experiment1_table,
    experiment_classic_vs_lgga,
    export_augmented,
    get_problem,
    minimal_size,
    problem_names,
    registry,
    solves,
    table2_csv,
)
from lgga.dataset import load_csv, sample_from_oracle
from lgga.engine import RunConfig
from lgga.expr import evaluate_batch, parse
from lgga.truths import InverseSwap, truth_error


def test_registry():
    assert len(registry()) == 16
    assert len(registry(include_optional=True)) == 17
    assert "larmor" not in problem_names() and "larmor" in problem_names(True)
    assert get_problem("Resistance") is get_problem("resistance")
    with pytest.raises(KeyError) as info:
        get_problem("nope")
    assert "resistance" in str(info.value)


def test_snell_uses_inverse_swap():
    assert [type(t) for t in get_problem("snell").truths] == [InverseSwap]


def test_resistance_evaluator():
    p = get_problem("resistance")
    assert p.evaluate([[2.0, 2.0]]).tolist() == [1.0]
    assert p.evaluate([[0.0, 0.0]]).tolist() == [0.0]
    assert p.evaluate([[3.0, 0.0]]).tolist() == [0.0]


def test_reflection_output_stays_in_unit_interval():
    p = get_problem("reflection")
    rng = np.random.default_rng(0)
    X = rng.uniform(0.01, 100, (100_000, 2))
    y = p.evaluate(X)
    assert np.all((y >= 0) & (y < 1))


@pytest.mark.parametrize("name", problem_names(True))
def test_ground_truth_satisfies_its_truths(name):
    p = get_problem(name)
    ds = sample_from_oracle(p, 200, np.random.default_rng(1))
    got = evaluate_batch(p.ground_truth, ds.X).values
    assert np.allclose(got, ds.y, rtol=1e-9, atol=1e-12)
    assert truth_error(p.truths, p.ground_truth, ds) <= 1e-6
    assert solves(p, p.ground_truth)


def test_solves_rejects_wrong_formula():
    p = get_problem("resistance")
    assert not solves(p, parse("r1 + r2", p.var_names))


def test_data_efficiency():
    assert data_efficiency(1, 1) == 0.0
    assert data_efficiency(3, 12) == 75.0
    assert data_efficiency(20, 10) == -100.0
    with pytest.raises(ValueError):
        data_efficiency(1, 0)


@pytest.mark.parametrize("boundary", [1, 2, 3, 7, 8, 9, 31, 63, 64])
def test_minimal_size_finds_monotone_boundary(boundary):
    calls = []

    def at(s):
        calls.append(s)
        return s >= boundary

    assert minimal_size(at, 64) == boundary
    assert len(calls) == len(set(calls)) <= 16


def test_minimal_size_sentinels_and_confirmation():
    assert minimal_size(lambda s: False, 64) is None
    assert minimal_size(lambda s: True, 64) == 1
    assert minimal_size(lambda s: True, 0) is None
    # a non-monotone predicate: bisection lands on 9, confirmation walks down to 7
    good = {64, 32, 16, 9, 10, 11, 12, 13, 14, 15, 7}
    assert minimal_size(lambda s: s in good, 64, confirm=2) == 7
    assert minimal_size(lambda s: s in good, 64, confirm=0) == 9


def test_sweep_summaries():
    r = SweepResult("resistance", 64, lgga=[4, 6, None], rand=[8, 10, None])
    assert r.lgga_summary == "5 ± 1 (2/3)"
    assert r.efficiency == pytest.approx(100 * (9 - 5) / 9)
    assert r.trial_efficiencies == [50.0, 40.0]
    assert r.lgga_never_worse
    assert not SweepResult("gas", 64, lgga=[None], rand=[5]).lgga_never_worse
    assert SweepResult("gas", 64, lgga=[None], rand=[None]).efficiency == NO_DISC
    assert SweepResult("gas", 64, lgga=[3], rand=[None]).efficiency == DISC
    json.loads(r.to_json())


def test_table2_shape():
    rows = table2_csv([SweepResult("resistance", 64, [4, 4], [8, 8]),
                       SweepResult("gas", 64, [None], [None])]).splitlines()
    assert rows[0] == "equation,LGGA,No LGGA,DE %"
    assert rows[1] == "r1 * r2 / (r1 + r2),4 ± 0,8 ± 0,50"
    assert rows[2].endswith("NoDisc,NoDisc,NoDisc")


def test_experiment_result_bookkeeping():
    t = lambda solved, mse, size=10: TrialResult(0, "x", solved, "r1", 0.0, mse, 1, size, 0.0)
    r = ExperimentResult("resistance", [t(False, 1.0, 12), t(False, 3.0, 14)], [t(False, 4.0)] * 2)
    assert r.m_star == [12, 14] and r.mse_ratio == 0.5
    r.classic[0] = t(True, 0.0)
    assert r.classic_solves == 1 and r.mse_ratio is None
    head, row = experiment1_table([r]).splitlines()
    assert head.startswith("problem,lgga_solves") and row.startswith("resistance,0,1,False,True,13.0")


def test_small_experiment1_run():
    cfg = RunConfig(population_size=40, num_generations=4)
    [r] = experiment_classic_vs_lgga(["resistance"], seeds=2, m=10, config=cfg)
    assert len(r.lgga) == len(r.classic) == 2
    assert [t.mode for t in r.lgga] == ["lgga_full"] * 2
    assert [t.mode for t in r.classic] == ["classic"] * 2
    # classic gets as many points as LGGA ended with
    assert [t.dataset_size for t in r.classic] == r.m_star
    again = experiment_classic_vs_lgga(["resistance"], seeds=2, m=10, config=cfg)[0]
    assert [t.expression for t in again.lgga] == [t.expression for t in r.lgga]


def test_export_is_sound_and_reproducible(tmp_path):
    p = get_problem("gas")
    cfg = RunConfig(seed=1, population_size=60, num_generations=10)
    a = export_augmented(p, 6, cfg, tmp_path / "a.csv")
    export_augmented(p, 6, cfg, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert load_csv(tmp_path / "a.csv") == a
    assert np.allclose(p.evaluate(a.X), a.y, rtol=1e-9, atol=1e-12)
    meta = json.loads((tmp_path / "a.csv.json").read_text())
    assert meta["initial_m"] == 6 and meta["final_m"] == len(a)
    export_augmented(p, 6, cfg, tmp_path / "s.csv", strip_provenance=True)
    header = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert header.split(",") == list(p.var_names) + ["y"]
