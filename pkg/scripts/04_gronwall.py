"""
Discrete Gronwall bounds on random recursions
=============================================

Build the largest sequence allowed by the one-step recursion and compare it
with the plain bound and with the uniform bound from window sums.
"""

import math

import numpy as np

from oneleg.gronwall import (
    SequenceBundle,
    dgl_bound,
    equality_recursion,
    log_dugl_bound,
    verify_hypotheses,
)

rng = np.random.default_rng(0)
tau, length = 0.05, 201
alpha, eta = rng.uniform(0, 1, (2, length))
zeta = rng.uniform(0, 2, length)
xi = equality_recursion(tau, 5.0, alpha, eta, zeta)
b = SequenceBundle(tau, xi, alpha, eta, zeta)

for n in (2, 10, 50, 200):
    print(f"n={n:3}  xi={xi[n]:.4e}  plain bound={dgl_bound(b, n):.4e}")

# the uniform bound forgets xi_0 but needs window sums of width n2 + 1
n1, n2 = 20, 40
a = verify_hypotheses(b, n1, n2, length - 1)
lb = log_dugl_bound(*a, tau, n2)
print("window constants", [f"{x:.3f}" for x in a])
print(f"uniform bound {math.exp(lb):.4e} vs max xi on its range {xi[n1 + n2 + 1:].max():.4e}")
