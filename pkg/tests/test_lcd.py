import itertools
import math

import numpy as np
import pytest

from polyatest.errors import DomainError
from polyatest.lcd import (
    CausalGraph,
    Dataset,
    LcdScoreParams,
    LcdTripleResult,
    evidence_tier,
    graph_emit,
    lcd_scan,
    lcd_score,
    to_dot,
)
from polyatest.simgen import MenuConfig, draw_round

# chain graph, mean shift theta = 4, linear link
POSITIVE_SEED = 0
POSITIVE_MENU = MenuConfig("chain", "mean_shift", ("linear",), 4)


def test_score_examples():
    p = LcdScoreParams(0.05, 0.5, "clamped")
    assert lcd_score(0.01, 0.02, 0.9, p) == 1
    assert lcd_score(0.01, 0.02, 0.3, p) == 0
    for mode in ("clamped", "same_threshold", "mirrored"):
        assert lcd_score(0.2, 0.01, 0.9, LcdScoreParams(0.05, 0.5, mode)) == 0
    assert lcd_score(0.01, 0.02, 0.3, LcdScoreParams(0.05, 0.5, "same_threshold")) == 1
    assert lcd_score(0.01, 0.02, 0.9, LcdScoreParams(0.05, 0.5, "mirrored")) == 0
    assert lcd_score(0.01, 0.02, 0.96, LcdScoreParams(0.05, 0.5, "mirrored")) == 1


def test_params_validation():
    with pytest.raises(DomainError):
        LcdScoreParams(alpha=1.5)
    with pytest.raises(DomainError):
        LcdScoreParams(alpha0=-0.1)
    with pytest.raises(DomainError):
        LcdScoreParams(mode="other")


def test_clamped_monotone_in_alpha():
    rng = np.random.default_rng(0)
    grid = np.linspace(0, 1, 101)
    for p in rng.uniform(size=(300, 3)):
        scores = [lcd_score(*p, LcdScoreParams(a, 0.5)) for a in grid]
        assert all(a <= b for a, b in zip(scores, scores[1:]))


def test_evidence_tiers():
    ln = math.log
    assert evidence_tier(-ln(11), -ln(11), ln(11)) == "strong"
    assert evidence_tier(-ln(11), -ln(5), ln(11)) == "substantial"
    assert evidence_tier(-ln(2), -ln(11), ln(11)) == "weak"
    assert evidence_tier(-ln(11), -ln(11), -0.1) == "none"
    assert evidence_tier(-ln(3), -ln(3), ln(3), {"strong": 3, "substantial": 2, "weak": 1}) == "strong"


def _triple(cause, effect, ctx, k):
    lk = math.log(k)
    return LcdTripleResult(ctx, cause, effect, 0.01, 0.01, 0.9, -lk, -lk, lk, 1)


def test_graph_emit():
    assert graph_emit([]) == CausalGraph((), ())
    g = graph_emit([_triple("X", "Y", "C1", 20)])
    assert g.edges == (("X", "Y", "strong"),)
    results = [_triple("X", "Y", "C1", 2), _triple("X", "Y", "C2", 20), _triple("Y", "Z", "C1", 5),
               LcdTripleResult("C1", "Z", "X", skipped="DegenerateSample: x")]
    g = graph_emit(results)
    assert g.edges == (("X", "Y", "strong"), ("Y", "Z", "substantial"))
    for perm in itertools.permutations(results):
        assert graph_emit(list(perm)) == g
    assert graph_emit([], nodes=["A"]).nodes == ("A",)


def test_dot_output():
    g = CausalGraph(("X", "Y", "Z"), (("X", "Y", "strong"), ("Y", "Z", "weak")))
    dot = to_dot(g)
    assert dot.startswith("digraph lcd {")
    assert '"X" -> "Y" [color=black, tier="strong"];' in dot
    assert '"Y" -> "Z" [color=blue, tier="weak"];' in dot
    assert dot.endswith("}\n")


def test_dataset_validation():
    with pytest.raises(DomainError):
        Dataset({"C": [0, 2]}, {"X": [1.0, 2.0]})
    with pytest.raises(DomainError):
        Dataset({"C": [0, 1]}, {"X": [1.0, 2.0, 3.0]})
    with pytest.raises(DomainError):
        Dataset({"X": [0, 1]}, {"X": [1.0, 2.0]})
    with pytest.raises(DomainError):
        lcd_scan(Dataset({"C": [0, 1]}, {"X": [1.0, 2.0]}))


def test_scan_two_triples_and_order():
    rng = np.random.default_rng(1)
    data = Dataset({"C": rng.integers(0, 2, 50)}, {"B": rng.standard_normal(50), "A": rng.standard_normal(50)})
    res = lcd_scan(data)
    assert [(r.context, r.cause, r.effect) for r in res] == [("C", "A", "B"), ("C", "B", "A")]
    assert all(r.skipped is None and 0 < r.p_cx < 1 for r in res)


def test_constant_column_skipped():
    rng = np.random.default_rng(2)
    data = Dataset({"C": rng.integers(0, 2, 40)}, {"X": np.ones(40), "Y": rng.standard_normal(40)})
    res = lcd_scan(data)
    assert len(res) == 2
    assert all(r.skipped.startswith("DegenerateSample") for r in res)
    assert res[0].to_dict()["p_cx"] is None


def test_positive_fixture():
    r = draw_round(400, POSITIVE_SEED, POSITIVE_MENU)
    assert r.labels.lcd_positive
    res = lcd_scan(Dataset({"C": r.c}, {"X": r.x, "Y": r.y}))
    by_pair = {(t.cause, t.effect): t for t in res}
    assert by_pair["X", "Y"].score == 1
    assert by_pair["Y", "X"].score == 0
    assert graph_emit(res).edges == (("X", "Y", "strong"),)


def test_scan_parallel_matches_serial():
    rng = np.random.default_rng(3)
    c = rng.integers(0, 2, 120)
    x = rng.standard_normal(120) + c
    data = Dataset({"C": c, "D": 1 - c}, {"X": x, "Y": x + rng.standard_normal(120), "Z": rng.standard_normal(120)})
    assert lcd_scan(data, workers=2) == lcd_scan(data)
