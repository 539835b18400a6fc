"""Cross-validated comparison of every method on the default synthetic benchmark.

Prints normalized rec_t for each method, seed and top-N, then the seed means.

    python3 scripts/synthetic_benchmark.py --seeds 0 1 2 3 4
"""

import argparse
import time

import numpy as np

from slimlogr.evaluation import METHODS, CVConfig, cross_validate
from slimlogr.synth import SynthSpec, generate


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--Ns", type=int, nargs="+", default=[1, 5, 10, 20])
    p.add_argument("--methods", nargs="+", default=list(METHODS), choices=METHODS)
    p.add_argument("--pool", default="test_only", choices=("test_only", "full_universe"))
    args = p.parse_args()

    results: dict[str, list[dict[int, float]]] = {m: [] for m in args.methods}
    print("seed\tmethod\t" + "\t".join(f"N={N}" for N in args.Ns) + "\tseconds")
    for seed in args.seeds:
        data, _ = generate(SynthSpec(seed=seed))
        for method in args.methods:
            start = time.perf_counter()
            reports = cross_validate(data, CVConfig(method=method, pool_mode=args.pool, seed=seed), args.Ns)
            rec = {N: reports[N].rec for N in args.Ns}
            results[method].append(rec)
            cells = "\t".join(f"{rec[N]:.4f}" for N in args.Ns)
            print(f"{seed}\t{method}\t{cells}\t{time.perf_counter() - start:.1f}", flush=True)

    print("\nmean over seeds")
    for method, rows in results.items():
        print(f"{method:10s}" + "".join(f"\t{np.mean([r[N] for r in rows]):.4f}" for N in args.Ns))


if __name__ == "__main__":
    main()
