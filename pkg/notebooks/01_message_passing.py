"""
Generator messages, their limits and tree exactness
===================================================

A generator with source bit x_a and other incoming messages eta_j sends
(1/beta) atanh((-1)^x_a tanh(beta/2) prod tanh(beta eta_j)).
"""

import numpy as np

from ccldgm.bp import check_update, converge, marginals
from ccldgm.oracle import exact_marginals_tree, random_tree

# a lone generator sends +-1/2: the bias then prefers u = x_a
print("empty input, x=0:", check_update(0, 2.0, []))
print("empty input, x=1:", check_update(1, 2.0, []))

# worked example
print("x=0, beta=2, (0.3, 0.5):", round(check_update(0, 2.0, (0.3, 0.5)), 6))

# the message never leaves [-1/2, 1/2]
rng = np.random.default_rng(0)
worst = max(abs(check_update(int(rng.integers(2)), 10 ** rng.uniform(-2, 3), rng.normal(0, 2, 4))) for _ in range(2000))
print("largest |eta_hat| over 2000 random calls:", worst)

# large beta: sign times the smallest input magnitude (capped at 1/2)
inc = np.array([0.8, -0.3, 0.45])
for beta in (1.0, 10.0, 100.0, 1000.0):
    print(f"beta={beta:>6}: {check_update(0, beta, inc):+.6f}   min-sum: {-0.3:+.6f}")

# on a tree, BP marginals equal brute-force enumeration
g = random_tree(6, 9, 3)
x = rng.integers(0, 2, 9).astype(np.uint8)
bp_m = marginals(converge(g, x, 1.5))
ex_m = exact_marginals_tree(g, x, 1.5)
print("tree marginals, BP vs enumeration, max diff:", np.abs(bp_m - ex_m).max())
