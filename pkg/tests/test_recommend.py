import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_dataset
from slimlogr import joint, recommend as rec
from slimlogr.joint import JointHyper, JointModel
from slimlogr.logreg import LogRModel
from slimlogr.recommend import RecConfig
from slimlogr.slim import SlimModel


def _model(Wp, Wm, x, c=0.0, variant="inclusive"):
    return JointModel(SlimModel(np.asarray(Wp, float)), SlimModel(np.asarray(Wm, float)), LogRModel(np.asarray(x, float), c), variant)


def _positive_W(n, seed):
    rng = np.random.default_rng(seed)
    W = rng.uniform(0.1, 1.0, size=(n, n))
    np.fill_diagonal(W, 0.0)
    return W


prescriptions = st.frozensets(st.integers(0, 7), min_size=1, max_size=6)


@st.composite
def models(draw, n=8):
    W = draw(arrays(np.float64, (n, n), elements=st.sampled_from([0.0, 0.0, 0.25, 0.5, 1.0, 2.0])))
    np.fill_diagonal(W, 0.0)
    x = draw(arrays(np.float64, n, elements=st.floats(-3, 3)))
    variant = draw(st.sampled_from(["inclusive", "exclusive"]))
    return _model(W, W.T.copy(), x, draw(st.floats(-2, 2)), variant)


configs = st.builds(
    lambda M, extra, pred, d: RecConfig(M + extra, M, pred, d),
    st.integers(1, 8), st.integers(0, 4), st.sampled_from(["score", "content"]), st.sampled_from(["to_avoid", "safe"]),
)


def test_config_validation():
    with pytest.raises(ValueError):
        RecConfig(M=3, N=5)
    with pytest.raises(ValueError):
        RecConfig(prediction="mixed")


def test_full_pass_through_orders_by_probability():
    n = 6
    x = np.array([0.0, 0.3, -1.0, 2.0, 0.7, -0.2])
    model = _model(_positive_W(n, 0), _positive_W(n, 1), x)
    a = {0}
    recs = rec.recommend(model, a, RecConfig(5, 5, "content", "to_avoid"))
    assert {r.drug for r in recs} == {1, 2, 3, 4, 5}
    assert [r.drug for r in recs] == [3, 4, 1, 5, 2]
    assert [r.rank for r in recs] == [1, 2, 3, 4, 5]
    safe = rec.recommend(model, a, RecConfig(5, 5, "content", "safe"))
    assert [r.drug for r in safe] == [2, 5, 1, 4, 3]


def test_zero_logr_falls_back_to_slim_order():
    W = np.array([[0, 0.2, 0.5, 0.5], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]], dtype=float)
    model = _model(W, W, np.zeros(4))
    recs = rec.recommend(model, {0}, RecConfig(3, 3, "score"))
    assert [r.drug for r in recs] == [2, 3, 1]
    assert all(r.adr_probability == 0.5 for r in recs)


def test_fewer_positive_candidates_than_n():
    W = np.zeros((4, 4))
    W[0, 2] = 1.0
    recs = rec.recommend(_model(W, W, np.zeros(4)), {0}, RecConfig(3, 3))
    assert [r.drug for r in recs] == [2]


@settings(max_examples=200)
@given(models(), prescriptions, configs)
def test_structural_invariants(model, a, cfg):
    for recs in (
        rec.recommend(model, a, cfg),
        rec.baseline_slim(model.W_plus, model.W_minus, a, cfg),
        rec.baseline_logr(model.logr, a, cfg),
        rec.baseline_slim_plus_logr(model, a, cfg),
        rec.baseline_rand(a, cfg, 0, 8),
    ):
        assert all(r.drug not in a for r in recs)
        assert [r.rank for r in recs] == list(range(1, len(recs) + 1))
        assert len(recs) <= cfg.N
        assert len({r.drug for r in recs}) == len(recs)


@settings(max_examples=150)
@given(models(), prescriptions, configs)
def test_increasing_n_keeps_order(model, a, cfg):
    short = [r.drug for r in rec.recommend(model, a, cfg)]
    longer = [r.drug for r in rec.recommend(model, a, RecConfig(cfg.M, cfg.M, cfg.prediction, cfg.direction))]
    assert longer[: len(short)] == short


@settings(max_examples=100)
@given(arrays(np.float64, 6, elements=st.floats(-3, 3)), st.floats(-2, 2), st.sampled_from(["to_avoid", "safe"]))
def test_binary_scores_make_score_and_content_agree(x, c, direction):
    # with a = {0, 1} this W reconstructs a score of exactly 1 for every drug
    n = 6
    W = np.zeros((n, n))
    W[0, 1:] = 1.0
    W[1, 0] = 1.0
    model = _model(W, W, x, c, "exclusive")
    a = {0, 1}
    by_score = rec.recommend(model, a, RecConfig(4, 4, "score", direction))
    by_content = rec.recommend(model, a, RecConfig(4, 4, "content", direction))
    assert [r.drug for r in by_score] == [r.drug for r in by_content]


def test_rand_is_deterministic_and_complete():
    cfg = RecConfig(20, 5)
    a = {1, 4}
    first = [r.drug for r in rec.baseline_rand(a, cfg, 7, 12)]
    assert first == [r.drug for r in rec.baseline_rand(a, cfg, 7, 12)]
    everything = rec.baseline_rand(a, RecConfig(10, 10), 3, 12)
    assert sorted(r.drug for r in everything) == [0, 2, 3, 5, 6, 7, 8, 9, 10, 11]


def test_rand_hit_rate_matches_pool_density():
    n, a, N = 20, frozenset({0, 1}), 3
    truths = {2, 5, 9, 13}
    rng = np.random.default_rng(0)
    draws = 10_000
    hits = sum(
        sum(r.drug in truths for r in rec.baseline_rand(a, RecConfig(N, N), rng, n)) for _ in range(draws)
    ) / (draws * N)
    p = len(truths) / (n - len(a))
    sigma = math.sqrt(p * (1 - p) / (draws * N))
    assert abs(hits - p) < 3 * sigma + 1e-3


def test_logr_baseline_prefers_heavy_drug():
    x = np.zeros(5)
    x[3] = 10.0
    lr = LogRModel(x, 0.0)
    assert rec.baseline_logr(lr, {0}, RecConfig(4, 4))[0].drug == 3
    assert rec.baseline_logr(lr, {0}, RecConfig(4, 4, direction="safe"))[-1].drug == 3
    assert [r.drug for r in rec.baseline_logr(LogRModel(np.zeros(5)), {0}, RecConfig(4, 4))] == [1, 2, 3, 4]


def test_logr_baseline_matches_enumeration(planted3):
    x, c = np.array([0.4, -1.3, 0.9]), -0.2
    lr = LogRModel(x, c)
    a = {1}
    probs = {d: 1 / (1 + math.exp(-(x[1] + x[d] + c))) for d in (0, 2)}
    expected = sorted(probs, key=lambda d: -probs[d])
    recs = rec.baseline_logr(lr, a, RecConfig(2, 2))
    assert [r.drug for r in recs] == expected
    for r in recs:
        assert r.adr_probability == pytest.approx(probs[r.drug], abs=1e-15)


def test_slim_baseline_is_stage_one():
    W = np.array([[0, 0.2, 0.5, 0.1], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]], dtype=float)
    recs = rec.baseline_slim(SlimModel(W), SlimModel(np.zeros((4, 4))), {0}, RecConfig(3, 2))
    assert [(r.drug, r.slim_score) for r in recs] == [(2, 0.5), (1, 0.2)]
    assert rec.baseline_slim(SlimModel(W), SlimModel(np.zeros((4, 4))), {0}, RecConfig(3, 2, direction="safe")) == []


def test_slim_baseline_on_planted(planted3):
    model = joint.train_separate(planted3)
    assert rec.baseline_slim(model.W_plus, model.W_minus, {0}, RecConfig(2, 1))[0].drug == 1
    assert rec.baseline_slim(model.W_plus, model.W_minus, {2}, RecConfig(2, 1, direction="safe"))[0].drug == 1


def test_omega_zero_joint_equals_slim_plus_logr():
    data = random_dataset(4, n=6, m=8)
    sep = joint.train_separate(data)
    zero = joint.train_joint(data, JointHyper(omega=0.0))
    for a in ({0}, {1, 2}, {3, 5}, {0, 4}):
        for pred in ("score", "content"):
            for d in ("to_avoid", "safe"):
                cfg = RecConfig(5, 3, pred, d)
                assert [r.drug for r in rec.recommend(zero, a, cfg)] == [r.drug for r in rec.baseline_slim_plus_logr(sep, a, cfg)]


def test_unknown_drug_rejected():
    model = _model(np.zeros((3, 3)), np.zeros((3, 3)), np.zeros(3))
    with pytest.raises(ValueError):
        rec.recommend(model, {3}, RecConfig())
