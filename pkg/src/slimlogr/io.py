"""Text file formats.

Prescription files hold one prescription per line with drug names separated
by ``|``; blank lines and lines starting with ``#`` are ignored.  Models are
plain text with ``key=value`` headers; floats are written with ``repr`` so a
save/load round trip is exact.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .core import DrugVocabulary, LabeledDataset, ParseError, PrescriptionMatrix
from .joint import JointHyper, JointModel
from .logreg import LogRHyper, LogRModel
from .mining import EventLog
from .slim import SlimHyper, SlimModel

PathLike = str | Path


def _lines(path: PathLike):
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield no, line


def read_prescriptions(path: PathLike, allow_duplicates: bool = False) -> list[frozenset]:
    """Named prescriptions in file order."""
    rows, seen = [], {}
    for no, line in _lines(path):
        names = [n.strip() for n in line.split("|")]
        if any(not n for n in names):
            raise ParseError("empty drug name", str(path), no)
        row = frozenset(names)
        if len(row) != len(names):
            raise ParseError("drug listed twice in one prescription", str(path), no)
        if not allow_duplicates and row in seen:
            raise ParseError(f"duplicate prescription (first on line {seen[row]})", str(path), no)
        seen.setdefault(row, no)
        rows.append(row)
    return rows


def write_prescriptions(path: PathLike, rows: Iterable[Iterable[str]], header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(f"# {header}\n")
        for r in rows:
            fh.write("|".join(sorted(r)) + "\n")


def read_vocabulary(path: PathLike) -> DrugVocabulary:
    names = []
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            name = raw.rstrip("\n").rstrip("\r")
            if not name.strip():
                raise ParseError("blank line in vocabulary (line number is the column id)", str(path), no)
            names.append(name)
    try:
        return DrugVocabulary(tuple(names))
    except ValueError as exc:
        raise ParseError(str(exc), str(path)) from None


def write_vocabulary(path: PathLike, vocab: DrugVocabulary) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(name + "\n" for name in vocab.names)


def load_dataset(pos_path: PathLike, neg_path: PathLike, vocab_path: PathLike | None = None) -> LabeledDataset:
    """Read both label files; without a vocabulary file the sorted drug names are used."""
    pos, neg = read_prescriptions(pos_path), read_prescriptions(neg_path)
    if vocab_path is not None:
        vocab = read_vocabulary(vocab_path)
    else:
        vocab = DrugVocabulary(tuple(sorted(set().union(*pos, *neg))))
    overlap = set(pos) & set(neg)
    if overlap:
        raise ParseError(f"{len(overlap)} prescriptions appear with both labels, e.g. {sorted(next(iter(overlap)))}")
    return LabeledDataset(
        PrescriptionMatrix(tuple(vocab.encode(r) for r in pos), len(vocab)),
        PrescriptionMatrix(tuple(vocab.encode(r) for r in neg), len(vocab)),
        vocab,
    )


def save_dataset(data: LabeledDataset, pos_path: PathLike, neg_path: PathLike, vocab_path: PathLike | None = None) -> None:
    names = data.vocabulary.names
    write_prescriptions(pos_path, ([names[j] for j in r] for r in data.positives.rows), "ADR-inducing prescriptions")
    write_prescriptions(neg_path, ([names[j] for j in r] for r in data.negatives.rows), "non-inducing prescriptions")
    if vocab_path is not None:
        write_vocabulary(vocab_path, data.vocabulary)


def read_event_log(case_path: PathLike, control_path: PathLike) -> EventLog:
    case = read_prescriptions(case_path, allow_duplicates=True)
    control = read_prescriptions(control_path, allow_duplicates=True)
    for path, rows in ((case_path, case), (control_path, control)):
        for r in rows:
            if len(r) < 2:
                raise ParseError(f"event {sorted(r)} has fewer than two drugs", str(path))
    return EventLog(tuple(case), tuple(control))


# models


def _header(line: str, kind: str, path: str | None, no: int) -> dict[str, str]:
    parts = line.split()
    if not parts or parts[0] != kind:
        raise ParseError(f"expected a '{kind}' header", path, no)
    out = {}
    for p in parts[1:]:
        key, sep, value = p.partition("=")
        if not sep:
            raise ParseError(f"malformed header field {p!r}", path, no)
        out[key] = value
    return out


def _num(value: str, what: str, path, no, cast=float):
    try:
        return cast(value)
    except ValueError:
        raise ParseError(f"bad {what} {value!r}", path, no) from None


def format_slim(model: SlimModel) -> str:
    h = model.hyper
    lines = [f"slim n={model.n_drugs} alpha={h.alpha!r} lambda={h.lam!r}"]
    rows, cols = np.nonzero(model.W)
    lines += [f"{i} {j} {float(model.W[i, j])!r}" for i, j in zip(rows.tolist(), cols.tolist())]
    return "\n".join(lines) + "\n"


def parse_slim(lines: Sequence[tuple[int, str]], path: str | None = None) -> SlimModel:
    no, first = lines[0]
    head = _header(first, "slim", path, no)
    try:
        n = int(head["n"])
        hyper = SlimHyper(float(head["alpha"]), float(head["lambda"]))
    except (KeyError, ValueError) as exc:
        raise ParseError(f"incomplete slim header ({exc})", path, no) from None
    W = np.zeros((n, n))
    for no, line in lines[1:]:
        parts = line.split()
        if len(parts) != 3:
            raise ParseError("expected 'row col value'", path, no)
        i, j = (_num(p, "index", path, no, int) for p in parts[:2])
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(f"index ({i}, {j}) outside {n}x{n}", path, no)
        W[i, j] = _num(parts[2], "value", path, no)
    return SlimModel(W, hyper)


def format_logr(model: LogRModel) -> str:
    h = model.hyper
    lines = [f"logr n={model.n_features} beta={h.beta!r} gamma={h.gamma!r}", f"c={model.c!r}"]
    lines += [f"{j} {float(model.x[j])!r}" for j in np.flatnonzero(model.x).tolist()]
    return "\n".join(lines) + "\n"


def parse_logr(lines: Sequence[tuple[int, str]], path: str | None = None) -> LogRModel:
    no, first = lines[0]
    head = _header(first, "logr", path, no)
    try:
        n = int(head["n"])
        hyper = LogRHyper(float(head["beta"]), float(head["gamma"]))
    except (KeyError, ValueError) as exc:
        raise ParseError(f"incomplete logr header ({exc})", path, no) from None
    if len(lines) < 2 or not lines[1][1].startswith("c="):
        raise ParseError("expected 'c=<bias>' after the logr header", path, lines[1][0] if len(lines) > 1 else no)
    c = _num(lines[1][1][2:], "bias", path, lines[1][0])
    x = np.zeros(n)
    for no, line in lines[2:]:
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("expected 'idx value'", path, no)
        j = _num(parts[0], "index", path, no, int)
        if not 0 <= j < n:
            raise ParseError(f"index {j} outside 0..{n - 1}", path, no)
        x[j] = _num(parts[1], "value", path, no)
    return LogRModel(x, c, hyper)


def _split_lines(path: PathLike) -> list[tuple[int, str]]:
    return list(_lines(path))


def save_slim(path: PathLike, model: SlimModel) -> None:
    Path(path).write_text(format_slim(model), encoding="utf-8")


def load_slim(path: PathLike) -> SlimModel:
    lines = _split_lines(path)
    if not lines:
        raise ParseError("empty model file", str(path))
    return parse_slim(lines, str(path))


def save_logr(path: PathLike, model: LogRModel) -> None:
    Path(path).write_text(format_logr(model), encoding="utf-8")


def load_logr(path: PathLike) -> LogRModel:
    lines = _split_lines(path)
    if not lines:
        raise ParseError("empty model file", str(path))
    return parse_logr(lines, str(path))


_HYPER_FIELDS = ("omega", "alpha", "lam", "beta", "gamma", "rho_plus", "rho_minus",
                 "max_admm_iters", "inner_iters", "tol", "slim_init_iters", "logr_init_iters")
_SECTIONS = ("vocabulary", "W_plus", "W_minus", "logr")


def format_joint(model: JointModel, vocab: DrugVocabulary) -> str:
    h = model.hyper
    fields = " ".join(f"{k}={getattr(h, k)!r}" for k in _HYPER_FIELDS)
    out = [f"slimlogr variant={model.variant} {fields}", "[vocabulary]"]
    out += list(vocab.names)
    out += ["[W_plus]", format_slim(model.W_plus).rstrip("\n")]
    out += ["[W_minus]", format_slim(model.W_minus).rstrip("\n")]
    out += ["[logr]", format_logr(model.logr).rstrip("\n")]
    return "\n".join(out) + "\n"


def save_joint(path: PathLike, model: JointModel, vocab: DrugVocabulary) -> None:
    Path(path).write_text(format_joint(model, vocab), encoding="utf-8")


def load_joint(path: PathLike) -> tuple[JointModel, DrugVocabulary]:
    p = str(path)
    lines = _split_lines(path)
    if not lines:
        raise ParseError("empty model file", p)
    no, first = lines[0]
    head = _header(first, "slimlogr", p, no)
    variant = head.pop("variant", None)
    if variant not in ("inclusive", "exclusive", "separate"):
        raise ParseError(f"unknown variant {variant!r}", p, no)
    kwargs = {}
    for k in _HYPER_FIELDS:
        if k not in head:
            raise ParseError(f"header lacks {k}", p, no)
        kwargs[k] = _num(head[k], k, p, no, int if k.endswith("iters") else float)
    hyper = JointHyper(**kwargs)
    sections: dict[str, list[tuple[int, str]]] = {}
    current = None
    for no, line in lines[1:]:
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            if current not in _SECTIONS or current in sections:
                raise ParseError(f"unexpected section {line}", p, no)
            sections[current] = []
        elif current is None:
            raise ParseError("content before the first section", p, no)
        else:
            sections[current].append((no, line))
    missing = [s for s in _SECTIONS if not sections.get(s)]
    if missing:
        raise ParseError(f"missing sections {missing}", p)
    vocab = DrugVocabulary(tuple(line for _, line in sections["vocabulary"]))
    model = JointModel(
        parse_slim(sections["W_plus"], p), parse_slim(sections["W_minus"], p), parse_logr(sections["logr"], p),
        variant, hyper,
    )
    if not (model.W_plus.n_drugs == model.W_minus.n_drugs == model.logr.n_features == len(vocab)):
        raise ParseError("model blocks disagree on the number of drugs", p)
    return model, vocab


# outputs


REC_COLUMNS = ("prescription_id", "rank", "drug", "slim_score", "adr_prob", "direction")


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else f"{v:.6g}"


def write_recommendations(fh: TextIO, rows: Iterable[tuple[int, str, object]], vocab: DrugVocabulary) -> None:
    """``rows`` yields ``(prescription_id, direction, Recommendation)``."""
    fh.write("\t".join(REC_COLUMNS) + "\n")
    for pid, direction, r in rows:
        fh.write(f"{pid}\t{r.rank}\t{vocab.names[r.drug]}\t{_fmt(r.slim_score)}\t{_fmt(r.adr_probability)}\t{direction}\n")


REPORT_COLUMNS = ("pool", "model", "prediction", "rec", "prec", "acc")


def format_report(rows: Iterable[tuple[str, str, str, float, float, float]], params: dict) -> str:
    out = ["\t".join(REPORT_COLUMNS)]
    for pool, model, pred, r, p, a in rows:
        out.append(f"{pool}\t{model}\t{pred}\t{r:.4f}\t{p:.4f}\t{a:.4f}")
    out.append("")
    out += [f"{k}={v}" for k, v in params.items()]
    return "\n".join(out) + "\n"
