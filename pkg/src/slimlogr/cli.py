"""Command-line front end: mine, synth, train, recommend, evaluate, sweep."""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io, recommend as rec, synth
from .core import DatasetError, ParseError, VocabularyMismatchError
from .evaluation import METHODS, CVConfig, cross_validate
from .joint import VARIANTS, AdmmDivergenceError, JointHyper, train_joint, train_separate
from .mining import MiningConfig, build_dataset
from .slim import ConvergenceWarning

log = logging.getLogger("slimlogr")

OMEGA_GRID = (20.0, 10.0, 5.0, 1.0)
ALPHA_GRID = (100.0, 50.0, 20.0, 10.0, 5.0)


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_hyper(p: argparse.ArgumentParser) -> None:
    d = JointHyper()
    g = p.add_argument_group("model hyperparameters")
    g.add_argument("--omega", type=float, default=d.omega, help="weight of the label-prediction term")
    g.add_argument("--alpha", type=float, default=d.alpha, help="SLIM Frobenius weight")
    g.add_argument("--lam", "--lambda", dest="lam", type=float, default=d.lam, help="SLIM L1 weight")
    g.add_argument("--beta", type=float, default=d.beta, help="LogR L2 weight")
    g.add_argument("--gamma", type=float, default=d.gamma, help="LogR L1 weight")
    g.add_argument("--rho", type=float, default=d.rho_plus, help="ADMM penalty for both classes")
    g.add_argument("--max-admm-iters", type=int, default=d.max_admm_iters)
    g.add_argument("--inner-iters", type=int, default=d.inner_iters)
    g.add_argument("--tol", type=float, default=d.tol)


def _hyper(args, **override) -> JointHyper:
    kw = dict(omega=args.omega, alpha=args.alpha, lam=args.lam, beta=args.beta, gamma=args.gamma,
              rho_plus=args.rho, rho_minus=args.rho, max_admm_iters=args.max_admm_iters,
              inner_iters=args.inner_iters, tol=args.tol)
    kw.update(override)
    return JointHyper(**kw)


def _add_data(p: argparse.ArgumentParser, universe: bool = False) -> None:
    p.add_argument("--pos", required=True, help="ADR-inducing prescriptions file")
    p.add_argument("--neg", required=True, help="non-inducing prescriptions file")
    p.add_argument("--vocab", help="vocabulary file (default: sorted drug names)")
    if universe:
        p.add_argument("--universe-pos", help="all known positive prescriptions")
        p.add_argument("--universe-neg", help="all known negative prescriptions")


def _load(args):
    return io.load_dataset(args.pos, args.neg, args.vocab)


def _load_universe(args, parser, vocab_path):
    given = (args.universe_pos is not None, args.universe_neg is not None)
    if any(given) and not all(given):
        parser.error("--universe-pos and --universe-neg must be given together")
    if not any(given):
        return None
    return io.load_dataset(args.universe_pos, args.universe_neg, vocab_path)


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def cmd_mine(args, parser) -> int:
    event_log = io.read_event_log(args.case, args.control)
    cfg = MiningConfig(args.m_plus_top, args.n_minus_top, args.alpha, args.containment)
    data, universe = build_dataset(event_log, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.save_dataset(data, out / "positives.txt", out / "negatives.txt", out / "vocab.txt")
    io.save_dataset(universe, out / "universe_positives.txt", out / "universe_negatives.txt")
    print(f"{len(data.positives)} positive, {len(data.negatives)} negative prescriptions over {data.n_drugs} drugs")
    return 0


def cmd_synth(args, parser) -> int:
    spec = synth.SynthSpec(args.n_drugs, args.n_pos, args.n_neg, pair_strength=args.pair_strength,
                           noise_rate=args.noise_rate, seed=args.seed)
    data, truth = synth.generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.save_dataset(data, out / "positives.txt", out / "negatives.txt", out / "vocab.txt")
    (out / "truth.txt").write_text(truth.to_text(data.vocabulary), encoding="utf-8")
    print(f"wrote {len(data.positives)}+{len(data.negatives)} prescriptions to {out}")
    return 0


def cmd_train(args, parser) -> int:
    data = _load(args)
    hyper = _hyper(args)
    if args.method == "separate":
        model = train_separate(data, hyper)
    else:
        model = train_joint(data, hyper, args.variant)
        tr = model.trace
        log.info("ADMM: %d iterations, converged=%s", tr.n_iter, tr.converged)
    io.save_joint(args.out, model, data.vocabulary)
    return 0


def cmd_recommend(args, parser) -> int:
    model, vocab = io.load_joint(args.model)
    rows = io.read_prescriptions(args.input, allow_duplicates=True)
    directions = ("to_avoid", "safe") if args.direction == "both" else (args.direction,)
    M = max(args.M, args.N)
    rng = np.random.default_rng(args.seed)
    out = []
    for pid, names in enumerate(rows):
        a = vocab.encode(names)
        for direction in directions:
            cfg = rec.RecConfig(M, args.N, args.prediction, direction)
            if args.method == "rand":
                recs = rec.baseline_rand(a, cfg, rng, len(vocab))
            elif args.method == "slim":
                recs = rec.baseline_slim(model.W_plus, model.W_minus, a, cfg)
            elif args.method == "logr":
                recs = rec.baseline_logr(model.logr, a, cfg)
            else:
                recs = rec.recommend(model, a, cfg)
            out.extend((pid, direction, r) for r in recs)
    fh, close = _open_out(args.out)
    try:
        io.write_recommendations(fh, out, vocab)
    finally:
        if close:
            fh.close()
    return 0


def _params(args, hyper: JointHyper, **extra) -> dict:
    d = {k: repr(v) for k, v in asdict(hyper).items()}
    d.update({"seed": str(args.seed), "M": str(args.M), "variant": args.variant})
    d.update({k: str(v) for k, v in extra.items()})
    return d


def cmd_evaluate(args, parser) -> int:
    data = _load(args)
    universe = _load_universe(args, parser, args.vocab)
    if universe is not None and universe.vocabulary != data.vocabulary:
        parser.error("the universe must use the dataset vocabulary (pass --vocab)")
    hyper = _hyper(args)
    pools = ("test_only", "full_universe") if args.pool == "both" else (args.pool,)
    rows = []
    for pool in pools:
        for method in args.methods:
            cfg = CVConfig(method, pool, args.variant, args.prediction, max(args.M, args.N), args.seed, hyper)
            r = cross_validate(data, cfg, (args.N,), universe)[args.N]
            label = f"{method}-{args.variant[:2]}" if method == "slimlogr" else method
            rows.append((pool, label, args.prediction, r.rec, r.prec, r.acc))
    text = io.format_report(rows, _params(args, hyper, N=args.N, prediction=args.prediction))
    fh, close = _open_out(args.out)
    try:
        fh.write(text)
    finally:
        if close:
            fh.close()
    return 0


def interior_maximum(grid: np.ndarray) -> tuple[int, int] | None:
    """Position of the grid maximum when it lies strictly inside the grid."""
    i, j = np.unravel_index(int(np.argmax(grid)), grid.shape)
    if 0 < i < grid.shape[0] - 1 and 0 < j < grid.shape[1] - 1:
        return int(i), int(j)
    return None


def cmd_sweep(args, parser) -> int:
    data = _load(args)
    omegas, alphas = args.omegas, args.alphas
    grid = np.zeros((len(omegas), len(alphas)))
    for i, w in enumerate(omegas):
        for j, a in enumerate(alphas):
            hyper = _hyper(args, omega=w, alpha=a)
            cfg = CVConfig("slimlogr", args.pool, args.variant, args.prediction, max(args.M, args.N), args.seed, hyper)
            r = cross_validate(data, cfg, (args.N,))[args.N]
            grid[i, j] = getattr(r, args.metric)
            log.info("omega=%g alpha=%g %s=%.4f", w, a, args.metric, grid[i, j])
    lines = ["omega\\alpha\t" + "\t".join(f"{a:g}" for a in alphas)]
    for w, row in zip(omegas, grid):
        lines.append(f"{w:g}\t" + "\t".join(f"{v:.4f}" for v in row))
    peak = interior_maximum(grid)
    i, j = np.unravel_index(int(np.argmax(grid)), grid.shape)
    lines += ["", f"metric={args.metric}", f"best_omega={omegas[i]:g}", f"best_alpha={alphas[j]:g}",
              f"interior_maximum={'yes' if peak else 'no'}", f"seed={args.seed}", f"N={args.N}",
              f"variant={args.variant}", f"prediction={args.prediction}", f"pool={args.pool}"]
    fh, close = _open_out(args.out)
    try:
        fh.write("\n".join(lines) + "\n")
    finally:
        if close:
            fh.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slimlogr", description="Joint SLIM + logistic regression drug recommendation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="build a labeled dataset from case/control event logs")
    p.add_argument("--case", required=True)
    p.add_argument("--control", required=True)
    p.add_argument("--m-plus-top", type=int, default=1000)
    p.add_argument("--n-minus-top", type=int, default=2200)
    p.add_argument("--alpha", type=float, default=0.05, help="Fisher significance level")
    p.add_argument("--containment", action="store_true", help="count events containing a prescription")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mine)

    d = synth.SynthSpec()
    p = sub.add_parser("synth", help="generate a synthetic dataset with planted pairs")
    p.add_argument("--n-drugs", type=int, default=d.n_drugs)
    p.add_argument("--n-pos", type=int, default=d.n_pos)
    p.add_argument("--n-neg", type=int, default=d.n_neg)
    p.add_argument("--pair-strength", type=float, default=d.pair_strength)
    p.add_argument("--noise-rate", type=float, default=d.noise_rate)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit a model")
    _add_data(p)
    _add_hyper(p)
    p.add_argument("--method", choices=("slimlogr", "separate"), default="slimlogr")
    p.add_argument("--variant", choices=VARIANTS, default="inclusive")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recommend", help="recommend drugs for prescriptions")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="prescriptions file")
    p.add_argument("--method", choices=("slimlogr", "slim", "logr", "rand"), default="slimlogr")
    p.add_argument("--direction", choices=("to_avoid", "safe", "both"), default="both")
    p.add_argument("--prediction", choices=("score", "content"), default="score")
    p.add_argument("-M", "--M", type=int, default=20)
    p.add_argument("-N", "--N", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("evaluate", help="five-fold cross validation report")
    _add_data(p, universe=True)
    _add_hyper(p)
    p.add_argument("--methods", type=lambda s: tuple(s.split(",")), default=("rand", "logr", "slim", "slim+logr", "slimlogr"))
    p.add_argument("--pool", choices=("test_only", "full_universe", "both"), default="test_only")
    p.add_argument("--variant", choices=VARIANTS, default="inclusive")
    p.add_argument("--prediction", choices=("score", "content"), default="score")
    p.add_argument("-M", "--M", type=int, default=20)
    p.add_argument("-N", "--N", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="omega x alpha grid of cross-validated scores")
    _add_data(p)
    _add_hyper(p)
    p.add_argument("--omegas", type=_floats, default=OMEGA_GRID)
    p.add_argument("--alphas", type=_floats, default=ALPHA_GRID)
    p.add_argument("--metric", choices=("rec", "prec", "acc"), default="rec")
    p.add_argument("--pool", choices=("test_only", "full_universe"), default="test_only")
    p.add_argument("--variant", choices=VARIANTS, default="inclusive")
    p.add_argument("--prediction", choices=("score", "content"), default="score")
    p.add_argument("-M", "--M", type=int, default=20)
    p.add_argument("-N", "--N", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", ConvergenceWarning)
    if getattr(args, "methods", None) is not None:
        bad = [m for m in args.methods if m not in METHODS]
        if bad:
            parser.error(f"unknown methods {bad}; choose from {METHODS}")
    if getattr(args, "N", 1) < 1 or getattr(args, "M", 1) < 1:
        parser.error("M and N must be positive")
    try:
        return args.func(args, parser)
    except (ParseError, DatasetError, VocabularyMismatchError, AdmmDivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
