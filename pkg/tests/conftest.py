import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from slimlogr.core import DrugVocabulary, LabeledDataset, PrescriptionMatrix

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(label: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append((label, bool(ok), detail))
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())


def random_dataset(seed: int, n: int = 6, m: int = 10, density: float = 0.4, min_size: int = 2) -> LabeledDataset:
    """``m`` positive and ``m`` negative distinct random rows over ``n`` drugs."""
    rng = np.random.default_rng(seed)
    seen, rows = set(), []
    while len(rows) < 2 * m:
        r = frozenset(np.flatnonzero(rng.random(n) < density).tolist())
        if len(r) >= min_size and r not in seen:
            seen.add(r)
            rows.append(r)
    vocab = DrugVocabulary(tuple(f"d{j}" for j in range(n)))
    return LabeledDataset(PrescriptionMatrix(tuple(rows[:m]), n), PrescriptionMatrix(tuple(rows[m:]), n), vocab)


@pytest.fixture
def planted3() -> LabeledDataset:
    """Drugs 0-1 co-prescribed only with the ADR, 1-2 only without."""
    vocab = DrugVocabulary(("d0", "d1", "d2"))
    return LabeledDataset(
        PrescriptionMatrix((frozenset({0, 1}),), 3), PrescriptionMatrix((frozenset({1, 2}),), 3), vocab
    )
