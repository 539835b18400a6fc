"""Compare the Fisher right tail with scipy's hypergeometric survival function.

Large tables only; small ones are covered exactly by the test suite.
"""

import numpy as np
from scipy.stats import hypergeom

from slimlogr.mining import ContingencyTable, fisher_right_tail

rng = np.random.default_rng(0)
worst = 0.0
for _ in range(200):
    n1, m1, n2, m2 = (int(v) for v in rng.integers(0, 10**6, size=4))
    r1, c1, total = n1 + m1, n1 + n2, n1 + m1 + n2 + m2
    ref = float(hypergeom.sf(n1 - 1, total, r1, c1))
    got = fisher_right_tail(ContingencyTable(n1, m1, n2, m2))
    worst = max(worst, abs(got - ref))
print(f"max |fisher_right_tail - hypergeom.sf| over 200 tables: {worst:.2e}")
