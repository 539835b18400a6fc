"""omega x alpha grid of cross-validated SlimLogR rec_t on a synthetic dataset.

Thin wrapper over ``slimlogr sweep`` that generates the data first.

    python3 scripts/hyper_sweep.py --seed 0 --N 5
"""

import argparse
import sys
import tempfile
from pathlib import Path

from slimlogr.cli import main as cli


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--N", type=int, default=5)
    p.add_argument("--omegas", default="20,10,5,1")
    p.add_argument("--alphas", default="100,50,20,10,5")
    p.add_argument("--variant", default="inclusive", choices=("inclusive", "exclusive"))
    args = p.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        d = Path(tmp)
        if cli(["synth", "--seed", str(args.seed), "--out", str(d)]) != 0:
            return 1
        return cli(["sweep", "--pos", str(d / "positives.txt"), "--neg", str(d / "negatives.txt"),
                    "--vocab", str(d / "vocab.txt"), "--omegas", args.omegas, "--alphas", args.alphas,
                    "--variant", args.variant, "-N", str(args.N), "--seed", str(args.seed)])


if __name__ == "__main__":
    sys.exit(main())
