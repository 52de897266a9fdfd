"""
Discrete Gronwall bounds, plain and uniform (windowed), with the sequences
they act on.

A bundle (tau, xi, alpha, eta, zeta) satisfies the recursion

    xi_n <= xi_{n-1} (1 + tau alpha_{n-1}) (1 + tau eta_{n-1}) + tau zeta_n

and the two calculators below turn window sums of the sequences into upper
bounds on xi_n.  Sums are compensated (math.fsum) so the exponents stay
accurate over long index ranges.
"""

import math
from dataclasses import dataclass

import numpy as np


class IndexRangeError(ValueError):
    pass


@dataclass
class SequenceBundle:
    tau: float
    xi: np.ndarray
    alpha: np.ndarray
    eta: np.ndarray
    zeta: np.ndarray

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.eta = np.asarray(self.eta, dtype=float)
        self.zeta = np.asarray(self.zeta, dtype=float)
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        n = len(self.xi)
        if not all(len(s) == n for s in (self.alpha, self.eta, self.zeta)):
            raise ValueError("sequences must share one length")

    @property
    def n_star(self):
        return len(self.xi) - 1

    def recursion_rhs(self, n):
        """Right side of the one-step recursion producing xi_n."""
        t = self.tau
        return self.xi[n - 1] * (1 + t * self.alpha[n - 1]) * (1 + t * self.eta[n - 1]) + t * self.zeta[n]

    def recursion_slack(self):
        """recursion_rhs(n) - xi_n for n = 1..n_star (nonnegative when the recursion holds)."""
        t = self.tau
        x, a, e, z = self.xi, self.alpha, self.eta, self.zeta
        return x[:-1] * (1 + t * a[:-1]) * (1 + t * e[:-1]) + t * z[1:] - x[1:]


def equality_recursion(tau, xi0, alpha, eta, zeta):
    """The largest xi sequence allowed by the recursion (equality at every step)."""
    alpha, eta, zeta = (np.asarray(s, dtype=float) for s in (alpha, eta, zeta))
    xi = np.empty(len(alpha))
    xi[0] = xi0
    for n in range(1, len(xi)):
        xi[n] = xi[n - 1] * (1 + tau * alpha[n - 1]) * (1 + tau * eta[n - 1]) + tau * zeta[n]
    return xi


def dgl_bound(b, n):
    """Plain discrete Gronwall bound on xi_n, valid for 2 <= n <= n_star.

    For n in {0, 1} the recursion itself is returned.
    """
    if not 0 <= n <= b.n_star:
        raise IndexRangeError(f"n={n} outside [0, {b.n_star}]")
    t = b.tau
    if n == 0:
        return float(b.xi[0])
    if n == 1:
        return float(b.recursion_rhs(1))
    te = [t * v for v in b.eta[:n]]
    ta = [t * v for v in b.alpha[:n]]
    total = b.xi[0] * math.exp(math.fsum(te)) * math.exp(math.fsum(ta))
    terms = []
    for i in range(1, n):
        terms.append(t * b.zeta[i] * math.exp(math.fsum(te[i:n])) * math.exp(math.fsum(ta[i:n])))
    return math.fsum([total] + terms + [t * b.zeta[n]])


def dugl_bound(a1, a2, a3, a4, tau, n2):
    """Uniform discrete Gronwall bound (a3/(tau n2) + a2) e^{a1} e^{a4}."""
    if min(a1, a2, a3, a4) < 0:
        raise ValueError("window constants must be nonnegative")
    if n2 < 1:
        raise IndexRangeError("n2 must be at least 1")
    return (a3 / (tau * n2) + a2) * math.exp(a1) * math.exp(a4)


def log_dugl_bound(a1, a2, a3, a4, tau, n2):
    """Natural log of dugl_bound; usable when the bound overflows."""
    if n2 < 1:
        raise IndexRangeError("n2 must be at least 1")
    return math.log(a3 / (tau * n2) + a2) + a1 + a4


def _window_max(seq, tau, n1, n2, n_star):
    # max over n' in [n1, n_star - n2] of sum_{n'..n'+n2} tau seq
    s = np.asarray(seq[n1:n_star + 1], dtype=float) * tau
    k = n2 + 1
    best = -math.inf
    for start in range(0, len(s) - k + 1):
        v = math.fsum(s[start:start + k])
        if v > best:
            best = v
    return best


def _window_max_fast(seq, tau, n1, n2, n_star):
    s = np.asarray(seq[n1:n_star + 1], dtype=float) * tau
    k = n2 + 1
    c = np.concatenate([[0.0], np.cumsum(s)])
    sums = c[k:] - c[:-k]
    # refine the top candidates with compensated sums
    cand = np.argsort(sums)[-min(8, len(sums)):]
    return max(math.fsum(s[i:i + k]) for i in cand)


def verify_hypotheses(b, n1, n2, n_star, exhaustive=None):
    """Tightest window constants (a1, a2, a3, a4) for the uniform bound.

    a1, a2, a3, a4 are the maxima over n1 <= n' <= n_star - n2 of the window
    sums of tau*eta, tau*zeta, tau*xi, tau*alpha over n' .. n'+n2.

    The maxima only need one window to fit (n1 + n2 <= n_star).  The uniform
    bound then covers n1 + n2 + 1 <= n <= n_star, which is empty when
    n1 = n_star - n2.
    """
    if not (0 <= n1 < n_star and n1 + n2 <= n_star and n2 >= 0):
        raise IndexRangeError(f"window infeasible: n1={n1}, n2={n2}, n_star={n_star}")
    if n_star > b.n_star:
        raise IndexRangeError(f"n_star={n_star} beyond sequence end {b.n_star}")
    if exhaustive is None:
        exhaustive = (n_star - n1) <= 2000
    f = _window_max if exhaustive else _window_max_fast
    return tuple(f(s, b.tau, n1, n2, n_star) for s in (b.eta, b.zeta, b.xi, b.alpha))
