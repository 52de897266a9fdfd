import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oneleg.gronwall import (
    IndexRangeError,
    SequenceBundle,
    dgl_bound,
    dugl_bound,
    equality_recursion,
    log_dugl_bound,
    verify_hypotheses,
)


def random_bundle(rng, length, tau=None):
    tau = rng.uniform(0.001, 0.2) if tau is None else tau
    alpha = rng.uniform(0.01, 3.0, length)
    eta = rng.uniform(0.01, 3.0, length)
    zeta = rng.uniform(0.01, 5.0, length)
    xi = equality_recursion(tau, rng.uniform(0.01, 10.0), alpha, eta, zeta)
    return SequenceBundle(tau, xi, alpha, eta, zeta)


def brute_window_max(seq, tau, n1, n2, nstar):
    return max(math.fsum(tau * seq[m] for m in range(s, s + n2 + 1))
               for s in range(n1, nstar - n2 + 1))


# --- plain bound ------------------------------------------------------------

def test_dgl_no_growth_collapses_to_sum():
    tau, n = 0.1, 6
    zeta = np.arange(1.0, 8.0)
    b = SequenceBundle(tau, np.ones(7) * 3.0, np.zeros(7), np.zeros(7), zeta)
    assert dgl_bound(b, n) == pytest.approx(3.0 + tau * zeta[1:n].sum() + tau * zeta[n], rel=1e-15)


def test_dgl_geometric_collapse():
    tau, n, a, e = 0.05, 9, 0.7, 1.3
    L = 12
    b = SequenceBundle(tau, np.full(L, 2.0), np.full(L, a), np.full(L, e), np.zeros(L))
    assert dgl_bound(b, n) == pytest.approx(2.0 * math.exp(n * tau * e) * math.exp(n * tau * a),
                                            rel=1e-14)


def test_dgl_small_indices_are_the_recursion():
    rng = np.random.default_rng(0)
    b = random_bundle(rng, 5)
    assert dgl_bound(b, 0) == b.xi[0]
    assert dgl_bound(b, 1) == pytest.approx(b.xi[1], rel=1e-15)


def test_dgl_index_out_of_range():
    b = random_bundle(np.random.default_rng(1), 5)
    with pytest.raises(IndexRangeError):
        dgl_bound(b, 5)
    with pytest.raises(IndexRangeError):
        dgl_bound(b, -1)


def test_dgl_dominates_equality_recursion_at_7():
    rng = np.random.default_rng(2)
    for _ in range(50):
        b = random_bundle(rng, 8)
        assert dgl_bound(b, 7) >= b.xi[7]


def test_dgl_monotone_under_perturbation():
    rng = np.random.default_rng(3)
    b = random_bundle(rng, 12)
    base = dgl_bound(b, 11)
    for name in ("xi", "alpha", "eta", "zeta"):
        for i in range(0, 12):
            seq = getattr(b, name).copy()
            seq[i] *= 1.5
            kw = dict(tau=b.tau, xi=b.xi, alpha=b.alpha, eta=b.eta, zeta=b.zeta)
            kw[name] = seq
            assert dgl_bound(SequenceBundle(**kw), 11) >= base * (1 - 1e-15)


# --- uniform bound ----------------------------------------------------------

def test_dugl_trivial_cases():
    assert dugl_bound(0.0, 2.5, 0.0, 0.0, 0.1, 7) == 2.5
    tau, n2 = 0.1, 7
    assert dugl_bound(0.3, 0.0, tau * n2, 0.4, tau, n2) == pytest.approx(math.exp(0.7), rel=1e-15)


def test_dugl_log_matches():
    assert log_dugl_bound(0.3, 1.0, 2.0, 0.4, 0.1, 5) == pytest.approx(
        math.log(dugl_bound(0.3, 1.0, 2.0, 0.4, 0.1, 5)), rel=1e-15)


def test_dugl_rejects_bad_input():
    with pytest.raises(ValueError):
        dugl_bound(-1.0, 0, 0, 0, 0.1, 3)
    with pytest.raises(IndexRangeError):
        dugl_bound(0, 0, 0, 0, 0.1, 0)


def test_window_constants_constant_sequences():
    tau, L, n1, n2, ns = 0.1, 30, 3, 5, 25
    b = SequenceBundle(tau, np.full(L, 2.0), np.full(L, 3.0), np.full(L, 5.0), np.full(L, 7.0))
    a = verify_hypotheses(b, n1, n2, ns)
    want = ((n2 + 1) * tau * 5.0, (n2 + 1) * tau * 7.0, (n2 + 1) * tau * 2.0, (n2 + 1) * tau * 3.0)
    assert a == pytest.approx(want, rel=1e-15)


def test_window_constants_single_window():
    rng = np.random.default_rng(4)
    b = random_bundle(rng, 20)
    n2, ns = 6, 15
    n1 = ns - n2
    a = verify_hypotheses(b, n1, n2, ns)
    sl = slice(n1, n1 + n2 + 1)
    want = tuple(math.fsum(b.tau * s[sl]) for s in (b.eta, b.zeta, b.xi, b.alpha))
    assert a == want


def test_window_constants_match_exhaustive_enumeration():
    rng = np.random.default_rng(5)
    for _ in range(30):
        b = random_bundle(rng, 40)
        n1 = int(rng.integers(0, 10))
        n2 = int(rng.integers(1, 10))
        ns = int(rng.integers(n1 + n2 + 1, 40))
        a = verify_hypotheses(b, n1, n2, ns)
        for got, seq in zip(a, (b.eta, b.zeta, b.xi, b.alpha)):
            assert got == brute_window_max(seq, b.tau, n1, n2, ns)


def test_fast_window_agrees_with_exhaustive():
    rng = np.random.default_rng(6)
    b = random_bundle(rng, 3000, tau=0.001)
    e = verify_hypotheses(b, 10, 50, 2999, exhaustive=True)
    f = verify_hypotheses(b, 10, 50, 2999, exhaustive=False)
    assert f == pytest.approx(e, rel=1e-13)


def test_window_infeasible():
    b = random_bundle(np.random.default_rng(7), 10)
    with pytest.raises(IndexRangeError):
        verify_hypotheses(b, 6, 4, 9)
    with pytest.raises(IndexRangeError):
        verify_hypotheses(b, 0, 2, 10)


def test_bundle_validation():
    with pytest.raises(ValueError):
        SequenceBundle(0.0, [1], [1], [1], [1])
    with pytest.raises(ValueError):
        SequenceBundle(0.1, [1, 2], [1], [1], [1])


def test_recursion_slack_zero_for_equality():
    b = random_bundle(np.random.default_rng(8), 15)
    s = b.recursion_slack()
    assert np.all(np.abs(s) <= 1e-12 * np.abs(b.xi[1:]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(3, 40))
def test_uniform_bound_dominates_property(seed, length):
    rng = np.random.default_rng(seed)
    b = random_bundle(rng, length)
    n1 = int(rng.integers(0, length - 2))
    n2 = int(rng.integers(1, length - n1 - 1))
    ns = length - 1
    a = verify_hypotheses(b, n1, n2, ns)
    lb = log_dugl_bound(*a, b.tau, n2)
    for n in range(n1 + n2 + 1, ns + 1):
        assert math.log(b.xi[n]) <= lb
