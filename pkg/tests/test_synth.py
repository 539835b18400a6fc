import numpy as np
import pytest

from slimlogr.synth import SynthSizeError, SynthSpec, generate, pair_lift


def test_pure_pairs_without_noise():
    data, truth = generate(SynthSpec(n_drugs=16, n_pos=4, n_neg=4, pair_strength=1.0, noise_rate=0.0))
    assert set(data.positives.rows) == {frozenset(p) for p in truth.pos_pairs}
    assert set(data.negatives.rows) == {frozenset(p) for p in truth.neg_pairs}


def test_full_noise_gives_dense_rows():
    # every draw is the full row, so the second class can never be filled
    with pytest.raises(SynthSizeError, match="0 of 1"):
        generate(SynthSpec(n_drugs=16, n_pos=1, n_neg=1, noise_rate=1.0, max_attempts_per_row=5))
    data, _ = generate(SynthSpec(n_drugs=16, n_pos=1, n_neg=1, noise_rate=0.99, seed=1))
    assert all(len(r) >= 14 for r in data.positives.rows + data.negatives.rows)


def test_planted_pairs_stand_out():
    data, truth = generate(SynthSpec())
    for a, b in truth.pos_pairs:
        assert pair_lift(data.positives.rows, a, b, data.n_drugs) > 5
    for a, b in truth.neg_pairs:
        assert pair_lift(data.negatives.rows, a, b, data.n_drugs) > 5


def test_rows_unique_and_deterministic():
    d1, _ = generate(SynthSpec(seed=9))
    d2, _ = generate(SynthSpec(seed=9))
    assert d1 == d2
    rows = d1.positives.rows + d1.negatives.rows
    assert len(set(rows)) == len(rows) and min(map(len, rows)) >= 2
    assert generate(SynthSpec(seed=10))[0] != d1


def test_oversized_request_fails():
    with pytest.raises(SynthSizeError):
        generate(SynthSpec(n_drugs=16, n_pos=500, n_neg=5, noise_rate=0.0, max_attempts_per_row=3))


@pytest.mark.parametrize("kw", [dict(n_drugs=1), dict(pair_strength=0.0), dict(noise_rate=1.5),
                                dict(planted_pos_pairs=[(0, 0)]), dict(planted_neg_pairs=[(0, 1)])])
def test_bad_specs(kw):
    with pytest.raises(ValueError):
        SynthSpec(**kw)


def test_truth_text_names_pairs():
    data, truth = generate(SynthSpec(n_pos=10, n_neg=10))
    text = truth.to_text(data.vocabulary)
    assert "positive\td00|d01" in text and "negative\td14|d15" in text
    assert np.isfinite(pair_lift(data.positives.rows, 0, 1, data.n_drugs))
