import random
import sys

import pytest

from moledit import parse_smiles, random_smiles
from moledit.errors import EmptyInput, JsonError, UnknownOracle
from moledit.evalx import (
    OptimizationGoal,
    PredictionRecord,
    builtin_oracles,
    evaluate,
    score_record,
    score_records,
)


def test_validity_five_records():
    recs = [PredictionRecord(str(i), "CCO", predicted=p) for i, p in enumerate(["CCN", "CCC", "c1ccccc1", "CC(=O)O", "C1CC"])]
    m = evaluate(recs)
    assert m.validity_rate == pytest.approx(80.0, abs=1e-9)
    assert m.success_rate is None and m.n_valid == 4


def test_chlorine_is_success_for_weight():
    rec = PredictionRecord("a", "c1ccccc1O", predicted="Clc1ccccc1O")
    r = score_record(rec, OptimizationGoal("mol_weight"))
    assert r.success and r.improvement == pytest.approx(34.45, abs=0.01)
    r = score_record(rec, OptimizationGoal("mol_weight", "decrease"))
    assert r.success is False


def test_margin_is_strict():
    rec = PredictionRecord("a", "Cc1ccccc1", predicted="CCc1ccccc1")
    assert score_record(rec, OptimizationGoal("heavy_atoms", margin=0.5)).success
    assert not score_record(rec, OptimizationGoal("heavy_atoms", margin=1.0)).success


def test_second_permutation_counts_correct():
    truths = ["Fc1ccc(nc1)N1CCOCC1", "Fc1ncc(cc1)N1CCOCC1"]
    rec = PredictionRecord("a", "Fc1ccc(cc1)N1CCOCC1", predicted="C1COCCN1c1ccc(F)nc1", ground_truths=truths)
    assert score_record(rec).correct
    rec = PredictionRecord("b", "Fc1ccc(cc1)N1CCOCC1", predicted="C1COCCN1c1ccc(F)cn1", ground_truths=truths)
    assert score_record(rec).correct
    rec = PredictionRecord("c", "Fc1ccc(cc1)N1CCOCC1", predicted="C1COCCN1c1cnc(F)cc1", ground_truths=truths[:1])
    assert score_record(rec).correct is False


def test_symmetric_actions_ground_truths():
    # two orientations of a pyridine core swap; either product is a ground truth
    rec = PredictionRecord(
        "a", "Fc1ccc(cc1)N1CCOCC1",
        actions=["replace [*:1]c1ccc([*:2])cc1 with [*:1]c1ccc([*:2])nc1"],
        ground_truths=["Fc1ccc(nc1)N1CCOCC1", "Fc1ncc(cc1)N1CCOCC1"],
    )
    assert score_record(rec, seed=0).correct and score_record(rec, seed=1).correct


def test_spelling_invariance():
    rng = random.Random(0)
    truth = "CC(=O)Nc1ccc(O)cc1"
    for _ in range(10):
        pred = random_smiles(parse_smiles(truth), rng)
        assert score_record(PredictionRecord("x", "Nc1ccc(O)cc1", predicted=pred, ground_truths=[truth])).correct


def test_consistency():
    ok = PredictionRecord("a", "Cc1ccccc1", actions=["replace [*:1]C with [*:1]F"], predicted="Fc1ccccc1")
    bad = PredictionRecord("b", "Cc1ccccc1", actions=["replace [*:1]C with [*:1]F"], predicted="Clc1ccccc1")
    none = PredictionRecord("c", "Cc1ccccc1", predicted="Clc1ccccc1")
    m = evaluate([ok, bad, none])
    assert m.n_consistency_eligible == 2
    assert m.consistency_rate == pytest.approx(50.0, abs=1e-9)


def test_actions_only_record_uses_products():
    rec = PredictionRecord("a", "Cc1ccccc1", actions=["replace [*:1]C with [*:1]N"])
    r = score_record(rec)
    assert r.valid and r.consistent is None and r.products == ["Nc1ccccc1"]


def test_errors():
    with pytest.raises(EmptyInput):
        evaluate([])
    with pytest.raises(UnknownOracle):
        evaluate([PredictionRecord("a", "C", predicted="CC")], OptimizationGoal("qed"))
    with pytest.raises(JsonError):
        PredictionRecord.from_dict({"id": "x"})
    with pytest.raises(ValueError):
        OptimizationGoal("mol_weight", "sideways")


def test_external_oracle():
    reg = builtin_oracles()
    reg.register_command("len", [sys.executable, "-c", "import sys; print(len(sys.stdin.read().strip()))"])
    rec = PredictionRecord("a", "CC", predicted="CCCC")
    r = score_record(rec, OptimizationGoal("len"), oracles=reg)
    assert r.improvement == pytest.approx(2.0) and r.success


def test_failing_external_oracle_is_not_success():
    reg = builtin_oracles()
    reg.register_command("bad", [sys.executable, "-c", "import sys; sys.exit(3)"])
    r = score_record(PredictionRecord("a", "CC", predicted="CCC"), OptimizationGoal("bad"), oracles=reg)
    assert r.success is False and "status 3" in r.error


def test_jobs_parity():
    from conftest import read_smi

    smis = read_smi("robust_500.smi")[:40]
    recs = [PredictionRecord(str(i), smis[i], predicted=smis[i + 1]) for i in range(39)]
    goal = OptimizationGoal("ring_count")
    assert score_records(recs, goal, jobs=1) == score_records(recs, goal, jobs=3)
