import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import hypergeom

from oracles import fisher_exact, fisher_tails_exact
from slimlogr import mining
from slimlogr.cli import build_parser
from slimlogr.core import DatasetError
from slimlogr.mining import ContingencyTable, EventLog, MiningConfig

AB, AC, BC, ABC = frozenset("ab"), frozenset("ac"), frozenset("bc"), frozenset("abc")


def _log(case, control):
    return EventLog(tuple(case), tuple(control))


def test_contingency_counts():
    log = _log([AB, AB, AC, BC, ABC], [AB, AC, AC, BC, BC, BC, ABC])
    assert mining.contingency(log, AB) == ContingencyTable(2, 1, 3, 6)
    assert mining.contingency(log, frozenset("xy")) == ContingencyTable(0, 0, 5, 7)
    everywhere = _log([AB] * 3, [AB] * 4)
    assert mining.contingency(everywhere, AB) == ContingencyTable(3, 4, 0, 0)


def test_containment_flag():
    log = _log([AB, ABC], [AC, ABC])
    assert mining.contingency(log, AB) == ContingencyTable(1, 0, 1, 2)
    assert mining.contingency(log, AB, containment=True) == ContingencyTable(2, 1, 0, 1)


def test_events_need_two_drugs():
    with pytest.raises(DatasetError):
        EventLog((frozenset("a"),), ())


@pytest.mark.parametrize(
    "cells, expected", [((2, 1, 3, 6), 4.0), ((1, 1, 1, 1), 1.0), ((3, 0, 5, 10), math.inf), ((0, 3, 5, 10), 0.0)]
)
def test_odds_ratio(cells, expected):
    assert mining.odds_ratio(ContingencyTable(*cells)) == expected


def test_odds_ratio_undefined():
    assert math.isnan(mining.odds_ratio(ContingencyTable(0, 0, 4, 4)))


@given(st.tuples(*[st.integers(1, 1000)] * 4), st.integers(1, 50))
def test_odds_ratio_scale_free(cells, k):
    t = ContingencyTable(*cells)
    scaled = ContingencyTable(*(k * v for v in cells))
    assert mining.odds_ratio(scaled) == pytest.approx(mining.odds_ratio(t), rel=1e-15)


def test_fisher_examples():
    assert mining.fisher_right_tail(ContingencyTable(1, 9, 11, 3)) == pytest.approx(fisher_exact(1, 9, 11, 3), abs=1e-15)
    assert mining.fisher_right_tail(ContingencyTable(1, 9, 11, 3)) > 0.9999
    assert mining.fisher_right_tail(ContingencyTable(5, 0, 0, 5)) == pytest.approx(1 / math.comb(10, 5), rel=1e-13)
    assert mining.fisher_right_tail(ContingencyTable(0, 0, 4, 7)) == 1.0


@settings(max_examples=300)
@given(st.tuples(*[st.integers(0, 200)] * 4))
def test_fisher_matches_enumeration(cells):
    assert mining.fisher_right_tail(ContingencyTable(*cells)) == pytest.approx(fisher_exact(*cells), abs=1e-12)


@settings(max_examples=50)
@given(st.integers(0, 10**7), st.integers(1, 10**7), st.integers(1, 10**7), st.integers(1, 10**7))
def test_fisher_large_counts_stay_finite(n1, m1, n2, m2):
    p = mining.fisher_right_tail(ContingencyTable(n1, m1, n2, m2))
    assert 0.0 <= p <= 1.0
    total, cases, drawn = n1 + m1 + n2 + m2, n1 + n2, n1 + m1
    assert p == pytest.approx(hypergeom.sf(n1 - 1, total, cases, drawn), abs=1e-9)


def test_fisher_tails_are_monotone():
    lo, tails = mining._tail_table(30, 40, 25)
    assert tails[0] == 1.0
    assert all(b <= a for a, b in zip(tails, tails[1:]))
    exact = fisher_tails_exact(30, 40, 25)
    assert all(abs(tails[k - lo] - exact[k]) < 1e-12 for k in exact)


named = st.frozensets(st.sampled_from("abcdef"), min_size=2, max_size=4)


@settings(max_examples=100)
@given(st.lists(named, min_size=1, max_size=30), st.lists(named, min_size=1, max_size=30), st.booleans())
def test_partition_is_exact(case, control, containment):
    log = _log(case, control)
    part = mining.partition(log, containment)
    rows = [r.drugs for r in part.all_rows()]
    assert sorted(map(sorted, rows)) == sorted(map(sorted, set(case) | set(control)))
    assert all(r.table.m1 == 0 for r in part.m_plus)
    assert all(r.table.n1 == 0 for r in part.n_minus)
    assert all(r.odds_ratio > 1 for r in part.m_zero)
    assert all(r.odds_ratio < 1 for r in part.n_zero)
    if not containment:
        assert all(r.drugs not in control for r in part.m_plus)
        assert all(r.drugs not in case for r in part.n_minus)


@settings(max_examples=100)
@given(st.lists(named, min_size=1, max_size=30), st.lists(named, min_size=1, max_size=30), st.integers(0, 5), st.integers(0, 5))
def test_build_dataset_invariants(case, control, top_m, top_n):
    log = _log(case, control)
    try:
        data, universe = mining.build_dataset(log, MiningConfig(top_m, top_n, 0.5))
    except DatasetError:
        return
    pos, neg = set(data.positives.rows), set(data.negatives.rows)
    assert not pos & neg
    assert set(universe.positives.rows) >= pos and set(universe.negatives.rows) >= neg
    assert data.vocabulary.names == tuple(sorted(set().union(*case, *control)))


def test_frequency_ties_follow_first_occurrence():
    log = _log([BC, AB, AB, BC, AC, frozenset("de")], [frozenset("ef")])
    data, _ = mining.build_dataset(log, MiningConfig(m_plus_top=2, n_minus_top=1))
    names = data.vocabulary.names
    assert [frozenset(names[j] for j in r) for r in data.positives.rows] == [BC, AB]


def test_shared_prescription_with_high_or_is_positive():
    case = [AB] * 20 + [AC] * 5
    control = [AB] * 1 + [BC] * 30
    data, _ = mining.build_dataset(_log(case, control), MiningConfig(m_plus_top=0, n_minus_top=5, alpha_sig=0.05))
    names = data.vocabulary.names
    pos = [frozenset(names[j] for j in r) for r in data.positives.rows]
    assert pos == [AB]
    none, _ = mining.build_dataset(_log(case, control), MiningConfig(m_plus_top=1, n_minus_top=5, alpha_sig=0.0))
    assert [frozenset(names[j] for j in r) for r in none.positives.rows] == [AC]


def test_empty_side_is_an_error():
    with pytest.raises(DatasetError):
        mining.build_dataset(_log([AB], [AB, AC]), MiningConfig(m_plus_top=0, n_minus_top=0, alpha_sig=0.0))


def test_cli_defaults_follow_published_configuration():
    # 1,000 frequent case-only prescriptions, 2,200 control-only, 5% Fisher level
    args = build_parser().parse_args(["mine", "--case", "c", "--control", "k", "--out", "o"])
    assert (args.m_plus_top, args.n_minus_top, args.alpha) == (1000, 2200, 0.05)
