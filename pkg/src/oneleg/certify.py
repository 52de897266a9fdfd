"""
Certificates: every energy estimate, stability bound and Gronwall conclusion
evaluated on a computed trajectory.

All checks read the logged norms only, so certifying a stored CSV log is
bit-reproducible.  An inequality LHS <= RHS is reported through its margin
RHS - LHS; a step passes when margin >= -tol * scale, where scale is the
largest magnitude among the terms of that step.  Each check also records
whether the hypotheses of the underlying estimate were met.  A conclusion is
asserted only when they were; otherwise it is evaluated for information.
"""

import json
import math
import platform
import sys
from dataclasses import dataclass, field

import mpmath
import numpy as np
import scipy

from . import gronwall
from .constants import (
    DomainError,
    LogReal,
    admissible_tau,
    as_json_number,
    ledger as build_ledger,
    log_json,
    log_of,
    theta_constants,
)

SCHEMA_VERSION = 1
TOL_CERT = 1e-10
IDENTITY_TOL = 1e-10

PASS, FAIL, UNMET, NA = "pass", "fail", "hypothesis-unmet", "not-applicable"

# index convention for the finite-horizon bound versus the uniform bound
INDEX_NOTE = ("finite-horizon bound checked for n = 0..floor(T/tau); uniform bound for "
              "n >= N0 + Nr; the step n = N0 + Nr belongs to both ranges")

DEVIATIONS = [
    "periodic torus with mean-zero fields instead of a bounded no-slip domain",
    "Fourier-Galerkin truncation treated as exact in space",
]


@dataclass
class CheckResult:
    id: str
    anchor: str
    status: str
    hypothesis_met: bool
    hypothesis: str = ""
    variant: str = ""
    tol: float = TOL_CERT
    steps_checked: int = 0
    min_margin: float = math.inf
    min_relative_margin: float = math.inf
    worst_step: int = -1
    scale_at_worst: float = 0.0
    first_violation: int = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.status in (PASS, UNMET, NA)

    @property
    def violated(self):
        return self.first_violation is not None

    def to_dict(self):
        d = {k: getattr(self, k) for k in (
            "id", "anchor", "status", "hypothesis_met", "hypothesis", "variant", "tol",
            "steps_checked", "min_margin", "min_relative_margin", "worst_step",
            "scale_at_worst", "first_violation")}
        d["extra"] = self.extra
        return _jsonable(d)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return as_json_number(x)


def _margins(cid, anchor, lhs, rhs, terms, steps, hyp_met, hyp_text, variant="",
             assert_mask=None, tol=TOL_CERT, extra=None):
    """Build a CheckResult for the per-step inequalities lhs <= rhs."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    steps = np.asarray(steps)
    res = CheckResult(cid, anchor, PASS, bool(hyp_met), hyp_text, variant, tol,
                      extra=dict(extra or {}))
    if lhs.size == 0:
        res.status = NA if hyp_met else UNMET
        return res
    scale = np.zeros_like(lhs)
    for t in terms:
        scale = np.maximum(scale, np.abs(np.broadcast_to(np.asarray(t, dtype=float), lhs.shape)))
    margin = rhs - lhs
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(scale > 0, margin / np.where(scale > 0, scale, 1.0),
                       np.where(margin >= 0, 0.0, -np.inf))
    i = int(np.argmin(rel))
    res.steps_checked = int(lhs.size)
    res.min_margin = float(margin[i])
    res.min_relative_margin = float(rel[i])
    res.worst_step = int(steps[i])
    res.scale_at_worst = float(scale[i])
    bad = rel < -tol
    if assert_mask is not None:
        mask = np.asarray(assert_mask, dtype=bool)
        res.extra["steps_asserted"] = int(mask.sum())
        res.extra["violations_outside_hypothesis"] = int((bad & ~mask).sum())
        bad = bad & mask
    if bad.any():
        res.first_violation = int(steps[int(np.argmax(bad))])
    if not hyp_met:
        res.status = UNMET
        if res.first_violation is not None:
            res.extra["informative_violation_step"] = res.first_violation
            res.first_violation = None
    elif res.first_violation is not None:
        res.status = FAIL
    return res


def _na(cid, anchor, reason):
    return CheckResult(cid, anchor, NA, False, reason)


def _error(cid, anchor, exc):
    r = CheckResult(cid, anchor, "error", False, "")
    r.extra["error"] = f"{type(exc).__name__}: {exc}"
    return r


# ---------------------------------------------------------------------------
# shared quantities


class _Data:
    """Logged columns as float arrays plus the run parameters."""

    def __init__(self, log):
        c = log.config
        self.nu = float(c["nu"])
        self.theta = float(c["theta"])
        self.tau = float(c["tau"])
        self.lambda1 = float(c["lambda1"])
        self.f_inf = float(c["f_inf"])
        self.u0_l2 = float(c["u0_l2"])
        self.u0_h1 = float(c["u0_h1"])
        cols = log.columns()
        self.N = len(log)
        self.n = cols["n"]
        for k, v in cols.items():
            setattr(self, k, v)
        # state sequences at n = 0..N
        if self.N:
            self.usq = np.concatenate([self.l2_n ** 2, [self.l2_np1[-1] ** 2]])
            self.gsq = np.concatenate([self.h1_n ** 2, [self.h1_np1[-1] ** 2]])
        else:
            self.usq = np.array([self.u0_l2 ** 2])
            self.gsq = np.array([self.u0_h1 ** 2])
        self.L = self.lambda1 * self.nu * self.tau
        self.step_ok = self.L <= 1.0
        self.theta_open = 0.5 < self.theta < 1.0


def _prefix(x):
    # extended-precision prefix sums; long logs stay well inside tol_cert
    return np.concatenate([[0.0], np.cumsum(np.asarray(x, dtype=np.longdouble))])


def _step_text(d):
    return f"lambda1 nu tau = {d.L:.6g} <= 1" + ("" if d.step_ok else " (violated)")


# ---------------------------------------------------------------------------
# H-level checks


def check_energy0(log, led=None):
    """Energy estimate of the implicit substep, valid for every theta in [0, 1]."""
    d = _Data(log)
    lhs = (1 + d.L * d.theta) * d.l2_mid ** 2 - d.l2_n ** 2 + d.d_mid ** 2
    rhs = np.full(d.N, d.theta * d.tau / (d.nu * d.lambda1) * d.f_inf ** 2)
    terms = [(1 + d.L * d.theta) * d.l2_mid ** 2, d.l2_n ** 2, d.d_mid ** 2, rhs]
    return _margins("energy_substep", "substep energy estimate", lhs, rhs, terms, d.n,
                    True, "theta in [0, 1]")


def _energy1_residual(d, tc, naive=False):
    """Relative residual of the energy equality at every step.

    Both sides are expanded around u^n so that the O(||u||^2) parts cancel
    analytically: with w - u^n and u^{n+1} - u^n small, the sides are sums of
    O(tau) terms and stay well conditioned where the energy flux changes sign.
    naive=True evaluates the sides from the full squared norms instead.
    """
    L, th = d.L, d.theta
    Y = d.l2_n ** 2
    if naive:
        X, Z = d.l2_np1 ** 2, d.inner_np1_n
        lhs_terms = [(1 + L * th) * d.l2_mid ** 2, -Y, d.d_mid ** 2]
        rhs_terms = [(tc.alpha + tc.epsilon) * X, -tc.alpha * Y,
                     tc.a ** 2 * X, -2 * tc.a * tc.b * Z, tc.b ** 2 * Y]
    else:
        # ||w||^2 = Y + 2 p_mid + d_mid^2, ||u^{n+1}||^2 = Y + 2 p_step + d_step^2
        Dm, Ds = d.d_mid ** 2, d.d_step ** 2
        lhs_terms = [L * th * Y, (1 + L * th) * 2 * d.p_mid, (1 + L * th) * Dm, Dm]
        cY = tc.epsilon + (tc.a - tc.b) ** 2
        cP = 2 * (tc.alpha + tc.epsilon + tc.a ** 2 - tc.a * tc.b)
        cD = tc.alpha + tc.epsilon + tc.a ** 2
        rhs_terms = [cY * Y, cP * d.p_step, cD * Ds]
    lhs = sum(lhs_terms)
    rhs = sum(rhs_terms)
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    with np.errstate(divide="ignore", invalid="ignore"):
        res = np.where(scale > 0, np.abs(lhs - rhs) / np.where(scale > 0, scale, 1.0), 0.0)
    return res, scale


def check_energy1_identity(log, led=None):
    """Rewriting of the substep energy in terms of u^{n+1} and u^n (an equality)."""
    d = _Data(log)
    anchor = "energy equality in terms of consecutive states"
    hyp = d.step_ok and 0.5 < d.theta <= 1.0
    text = f"theta in (1/2, 1], {_step_text(d)}"
    if not 0.5 <= d.theta <= 1.0:
        return _na("energy_identity", anchor, "theta outside [1/2, 1]")
    if d.L < 0 or d.N == 0:
        return _na("energy_identity", anchor, "empty log")
    try:
        tc = theta_constants(d.theta, d.lambda1, d.nu, d.tau, "derived")
        tcp = theta_constants(d.theta, d.lambda1, d.nu, d.tau, "paper")
    except DomainError as exc:
        return _error("energy_identity", anchor, exc)
    res, scale = _energy1_residual(d, tc)
    resp, _ = _energy1_residual(d, tcp)
    naive, _ = _energy1_residual(d, tc, naive=True)
    i = int(np.argmax(res))
    out = CheckResult("energy_identity", anchor, PASS, bool(hyp), text, "derived", IDENTITY_TOL)
    out.steps_checked = d.N
    out.min_margin = float(IDENTITY_TOL - res[i])
    out.min_relative_margin = out.min_margin
    out.worst_step = int(d.n[i])
    out.scale_at_worst = float(scale[i])
    out.extra = {"max_residual": float(res[i]),
                 "constants": {"alpha": tc.alpha, "epsilon": tc.epsilon, "a": tc.a, "b": tc.b},
                 "paper_variant_max_residual": float(np.max(resp)),
                 "unexpanded_max_residual": float(np.max(naive))}
    bad = res > IDENTITY_TOL
    if bad.any():
        first = int(d.n[int(np.argmax(bad))])
        if hyp:
            out.first_violation = first
            out.status = FAIL
        else:
            out.extra["informative_violation_step"] = first
    if not hyp:
        out.status = UNMET
    return out


def check_h_decay(log, led):
    """Decay-plus-constant envelope, the uniform bound K1 and the absorbing level."""
    d = _Data(log)
    hyp = d.step_ok and d.theta_open
    text = f"theta in (1/2, 1), {_step_text(d)}"
    s = 2 * d.theta - 1
    idx = np.arange(d.N + 1)
    rho0 = d.f_inf ** 2 / (d.lambda1 * d.nu ** 2 * s) if s > 0 else math.inf
    out = []
    env = np.exp(-d.lambda1 * d.nu * s * idx * d.tau / 15) * d.u0_l2 ** 2 + 3 * rho0
    out.append(_margins("h_envelope", "H decay envelope", d.usq, env, [d.usq, env], idx,
                        hyp, text))
    K1 = float(led.K1) if led is not None else d.u0_l2 ** 2 + 3 * rho0
    rhs = np.full(d.N + 1, K1)
    out.append(_margins("h_uniform", "uniform H bound K1", d.usq, rhs, [d.usq, rhs], idx,
                        hyp, text))
    T0 = float(led.T0) if led is not None else math.inf
    late = idx * d.tau >= T0
    rhs = np.full(int(late.sum()), 4 * rho0)
    r = _margins("h_absorbing", "absorbing ball in H after T0", d.usq[late], rhs,
                 [d.usq[late], rhs], idx[late], hyp, text + f", n tau >= T0 = {T0:.6g}")
    r.extra["T0"] = T0
    r.extra["absorbing_level"] = 4 * rho0
    out.append(r)
    return out


def check_l2h1_sums(log, led, windows=(1, 10, 100)):
    """Per-step dissipation estimates and their summed and windowed forms."""
    d = _Data(log)
    hyp = d.step_ok and d.theta_open
    text = f"theta in (1/2, 1), {_step_text(d)}"
    th, nu, tau, lam = d.theta, d.nu, d.tau, d.lambda1
    s = 2 * th - 1
    out = []
    X, Y = d.l2_np1 ** 2, d.l2_n ** 2
    diss = nu * tau * d.h1_mid ** 2
    # per-step, with the instantaneous forcing and with its sup
    lhs = X - Y + s * d.d_step ** 2 + diss
    rhs = tau / (nu * lam) * d.f_mid ** 2
    out.append(_margins("energy_step", "per-step H energy estimate", lhs, rhs,
                        [X, Y, s * d.d_step ** 2, diss, rhs], d.n, hyp, text))
    rhs_inf = np.full(d.N, tau / (nu * lam) * d.f_inf ** 2)
    out.append(_margins("energy_step_sup", "per-step H energy estimate, sup forcing", lhs,
                        rhs_inf, [X, Y, s * d.d_step ** 2, diss, rhs_inf], d.n, hyp, text))

    # cumulative dissipation of the blended states
    P = _prefix(d.h1_mid ** 2)
    cum = (nu * tau * P[1:]).astype(float)
    rhs = d.u0_l2 ** 2 + (d.n + 1) * tau / (nu * lam) * d.f_inf ** 2
    out.append(_margins("dissipation_sum", "cumulative dissipation of blended states",
                        cum, rhs, [cum, rhs], d.n, hyp, text))
    # windows from every starting step
    for p in windows:
        m = d.N - p
        if m <= 0:
            continue
        st = np.arange(m)
        w = (nu * tau * (P[st + p + 1] - P[st])).astype(float)
        rhs = Y[st] + (p + 1) * tau / (nu * lam) * d.f_inf ** 2
        r = _margins(f"dissipation_window_{p}", f"windowed dissipation, width {p + 1}",
                     w, rhs, [w, rhs], st, hyp, text)
        out.append(r)

    if led is None:
        return out
    K1, K2, K3, K4 = (float(led.K1), float(led.K2), float(led.K3), float(led.K4))
    Q = float(led.finite.Q)
    ca = nu * s / (16 * th)
    cb = nu / (8 * th) * (4 * th ** 2 - 6 * th + 3)
    Gp, Gn = d.h1_np1 ** 2, d.h1_n ** 2
    terms = [0.5 * X, 0.5 * Y, 0.5 * d.d_step ** 2, ca * tau * Gp, cb * tau * Gp, cb * tau * Gn]
    lhs = terms[0] - terms[1] + terms[2] + terms[3] + terms[4] - terms[5]
    f_term = tau * 4 * th / (nu * s * lam) * d.f_mid ** 2
    q_term = tau * Q * d.h1_mid ** 2
    rhs = f_term + q_term
    out.append(_margins("gradient_step", "per-step estimate with gradient of u^{n+1}", lhs, rhs,
                        terms + [f_term, q_term], d.n, hyp, text, variant="derived"))

    PG = _prefix(Gp)
    cum = (ca * tau * PG[1:]).astype(float)
    rhs = K2 + (d.n + 1) * tau * K3
    out.append(_margins("gradient_sum", "cumulative gradient of u^{n+1}", cum, rhs, [cum, rhs],
                        d.n, hyp, text))
    for p in windows:
        m = d.N - p
        if m <= 0:
            continue
        st = np.arange(m)
        w = (ca * tau * (PG[st + p + 1] - PG[st])).astype(float)
        rhs = 4 * K4 * K1 + K3 * (p + 1) * tau + cb * tau * Gn[st]
        out.append(_margins(f"gradient_window_{p}", f"windowed gradient of u^{{n+1}}, width {p + 1}",
                            w, rhs, [w, rhs], st, hyp, text))
    return out


# ---------------------------------------------------------------------------
# V-level checks


def check_v_recursion(log, led):
    """Gradient energy inequality, the quadratic dichotomy and the one-step V bound."""
    d = _Data(log)
    th, nu, tau = d.theta, d.nu, d.tau
    hyp0 = d.step_ok and d.theta_open
    text = f"theta in (1/2, 1), {_step_text(d)}"
    out = []
    Gp, Gn = d.h1_np1 ** 2, d.h1_n ** 2
    terms = [0.5 * Gp, 0.5 * Gn, 0.5 * (2 * th - 1) * d.h1_step ** 2, 0.5 * nu * tau * d.lap_mid ** 2]
    lhs = terms[0] - terms[1] + terms[2] + terms[3]
    f_term = np.full(d.N, tau / nu * d.f_inf ** 2)
    nl_term = tau * 27 / 16 / nu ** 3 * d.l2_mid ** 2 * d.h1_mid ** 4
    out.append(_margins("gradient_energy", "gradient energy inequality", lhs, f_term + nl_term,
                        terms + [f_term, nl_term], d.n, hyp0, text))
    if led is None:
        return out

    K1 = float(led.K1)
    g = 108 / nu ** 3 * K1
    # the quadratic inequality in ||grad u^{n+1}||^2
    qt = [tau * g * Gp ** 2, Gp, Gn, tau * g * Gn ** 2, np.full(d.N, 2 / nu * tau * d.f_inf ** 2)]
    val = qt[0] - qt[1] + qt[2] + qt[3] + qt[4]
    out.append(_margins("quadratic", "quadratic inequality in the next gradient norm",
                        np.zeros(d.N), val, qt, d.n, hyp0, text))

    H = np.array([float(led.finite.bound_hypothesis(x)) for x in Gn]) if d.N < 2000 else \
        _bound_hypothesis_vec(led, Gn)
    holds = H <= 0.2
    disc = 1 - 4 * tau * g * (Gn + tau * g * Gn ** 2 + 2 / nu * tau * d.f_inf ** 2)
    sub = holds
    r = _margins("discriminant", "positive discriminant under the smallness hypothesis",
                 np.zeros(int(sub.sum())), disc[sub], [np.ones(int(sub.sum()))], d.n[sub],
                 hyp0, text + ", smallness hypothesis at step n")
    # strict positivity is required, not just >= -tol
    if sub.any() and hyp0 and np.min(disc[sub]) <= 0:
        r.status = FAIL
        r.first_violation = int(d.n[sub][int(np.argmax(disc[sub] <= 0))])
    if hyp0 and not holds.any():
        r.status = UNMET
    r.extra["steps_with_hypothesis"] = int(holds.sum())
    out.append(r)

    bound = Gn * (1 + tau * g * Gn) * (1 + 2 * tau * g * (Gn + tau * g * Gn ** 2)) \
        + 18 / (5 * nu) * tau * d.f_inf ** 2
    r = _margins("one_step_v", "one-step V bound under the smallness hypothesis", Gp, bound,
                 [Gp, bound], d.n, hyp0, text + ", smallness hypothesis at step n",
                 assert_mask=holds)
    r.extra["steps_with_hypothesis"] = int(holds.sum())
    r.extra["max_hypothesis_value"] = float(np.max(H)) if d.N else 0.0
    r.extra["min_hypothesis_value"] = float(np.min(H)) if d.N else 0.0
    if hyp0 and not holds.any():
        r.status = UNMET
        r.hypothesis_met = False
        r.hypothesis += " (never met on this run)"
    out.append(r)
    return out


def _bound_hypothesis_vec(led, Gn):
    fin = led.finite
    nu, lam, tau, K1 = (float(fin.nu), float(fin.lambda1), float(fin.tau), float(fin.K1))
    C3, C4, f = float(fin.C3), float(fin.C4), float(fin.f_inf)
    g = 108 * K1 / nu ** 3
    return tau * g * ((2 / (nu * C3 * lam) + 2 / (nu ** 2 * lam)) * f ** 2
                      + (1 + C4 / C3) * Gn + 108 / (nu ** 4 * lam) * K1 * Gn ** 2)


def _log_pair(y, ln_rhs):
    """ln y against ln_rhs; exact zero states satisfy any bound and get margin 0."""
    y = np.asarray(y, dtype=float)
    ln_rhs = np.broadcast_to(np.asarray(ln_rhs, dtype=float), y.shape)
    zero = y == 0
    with np.errstate(divide="ignore"):
        ly = np.log(np.where(zero, 1.0, y))
    return np.where(zero, 0.0, ly), np.where(zero, 0.0, ln_rhs)


def _lnK5(fin, x, f, t):
    t = np.asarray(t, dtype=float)
    C6, C7, C8 = (float(fin.C6), float(fin.C7), float(fin.C8))
    base = x * x + t * 18 / (5 * float(fin.nu)) * f * f
    with np.errstate(divide="ignore"):
        return np.log(base) + C6 + C7 * t + C8 * t * t


def _longtime_bundle(d, led):
    """Sequences of the V recursion, with K1 replaced by 4 rho0 after the absorbing time."""
    nu, tau = d.nu, d.tau
    K1 = float(led.K1)
    rho0 = float(led.rho0)
    idx = np.arange(d.N + 1)
    Kn = np.where(idx >= led.N0 + 1, min(K1, 4 * rho0), K1)
    g = 108 / nu ** 3 * Kn
    xi = d.gsq
    alpha = g * xi
    eta = 2 * g * (xi + tau * g * xi ** 2)
    zeta = np.full(d.N + 1, 18 * d.f_inf ** 2 / (5 * nu))
    return gronwall.SequenceBundle(tau, xi, alpha, eta, zeta)


def check_v_longtime(log, led, shadow=None):
    """Finite-horizon envelope, windowed uniform bound and the global V bounds."""
    d = _Data(log)
    out = []
    tau = d.tau
    adm = admissible_tau(led)
    tau_ok = LogReal.of(tau) <= adm
    r_ok = led.inputs["r"] >= 4 * float(led.kappa1)
    base = d.theta_open and d.step_ok
    variant = led.variant
    fin = led.finite

    # finite horizon
    T = float(led.inputs["T"])
    finite_tau = min(led.tau_terms["kappa1"], led.tau_terms["kappa2"], led.kappa3, led.kappa4)
    hyp = base and LogReal.of(tau) <= finite_tau
    nmax = min(d.N, int(math.floor(T / tau + 1e-12)))
    idx = np.arange(nmax + 1)
    lny, lnK5 = _log_pair(d.gsq[:nmax + 1], _lnK5(fin, d.u0_h1, d.f_inf, idx * tau))
    r = _margins("v_finite_horizon", "finite-horizon V bound K5", lny, lnK5,
                 [np.ones_like(lny)], idx, hyp,
                 f"tau <= min(kappa1, kappa2, kappa3(T), kappa4(T)) = {finite_tau.decimal()}",
                 variant=variant, extra={"margin_units": "natural log", "T": T})
    out.append(r)

    # windowed uniform bound from the measured sequences
    anchor = "uniform V bound from measured window sums"
    N0, Nr = led.N0, led.Nr
    n1, n2, nstar = N0 + 1, Nr - 2, N0 + Nr
    if N0 < 0:
        out.append(_na("v_uniform_measured", anchor, "absorbing time is infinite"))
    elif n2 < 1 or nstar > d.N:
        out.append(_na("v_uniform_measured", anchor,
                       f"log too short for the window (need {nstar} steps, have {d.N})"))
    else:
        b = _longtime_bundle(d, led)
        out.append(_dugl_check("v_uniform_measured", anchor, b, n1, n2, nstar, led, tau_ok and r_ok
                               and base, variant))
        if d.N > nstar:
            out.append(_dugl_check("v_uniform_measured_full", anchor + ", whole log", b, n1, n2,
                                   d.N, led, tau_ok and r_ok and base, variant))

    # global bounds
    hyp = base and tau_ok and r_ok
    text = f"tau <= admissible tau = {adm.decimal()}, r >= 4 kappa1"
    all_idx = np.arange(d.N + 1)
    K7 = log_of(led.K7)
    ly, rhs7 = _log_pair(d.gsq, K7)
    out.append(_margins("v_global_K7", "global V bound K7", ly, rhs7,
                        [np.ones(d.N + 1)], all_idx, hyp, text, variant=variant,
                        extra={"margin_units": "natural log", "ln_K7": K7,
                               "sup_grad_sq": float(np.max(d.gsq))}))
    late = all_idx >= max(N0 + Nr, 0) if N0 >= 0 else np.zeros(d.N + 1, bool)
    K6 = log_of(led.K6)
    ly6, rhs6 = _log_pair(d.gsq[late], K6)
    out.append(_margins("v_global_K6", "V bound K6 after the absorbing window", ly6,
                        rhs6, [np.ones(int(late.sum()))], all_idx[late],
                        hyp, text, variant=variant,
                        extra={"margin_units": "natural log", "ln_K6": K6}))
    bounded = bool(np.all(np.isfinite(d.gsq)))
    for c in out:
        c.extra.setdefault("tau_admissible", bool(tau_ok))
    if shadow is not None:
        sh_adm = admissible_tau(shadow)
        for c in out:
            if c.id.startswith("v_global"):
                key = "ln_K7" if c.id.endswith("K7") else "ln_K6"
                val = log_of(shadow.K7 if key == "ln_K7" else shadow.K6)
                sel_l, sel_r = _log_pair(d.gsq if key == "ln_K7" else d.gsq[late], val)
                c.extra["paper_variant"] = {
                    key: val,
                    "admissible_tau": sh_adm.decimal(17),
                    "hypothesis_met": bool(base and LogReal.of(tau) <= sh_adm and r_ok),
                    "holds": bool(np.all(sel_l <= sel_r)),
                }
    out[-1].extra["empirically_bounded"] = bounded
    return out


def _dugl_check(cid, anchor, b, n1, n2, nstar, led, hyp_global, variant):
    slack = b.recursion_slack()[n1 - 1:nstar]  # producing xi_n for n = n1..nstar
    rhs_scale = np.maximum(np.abs(b.xi[n1:nstar + 1]), 1e-300)
    rec_ok = bool(np.all(slack >= -TOL_CERT * rhs_scale))
    a = gronwall.verify_hypotheses(b, n1, n2, nstar)
    ln_bound = gronwall.log_dugl_bound(*[max(x, 0.0) for x in a], b.tau, n2)
    idx = np.arange(n1 + n2 + 1, nstar + 1)
    ly, lrhs = _log_pair(b.xi[idx], ln_bound)
    r = _margins(cid, anchor, ly, lrhs, [np.ones(idx.size)], idx,
                 rec_ok, "one-step recursion holds on the window", variant=variant,
                 extra={"margin_units": "natural log", "n1": n1, "n2": n2, "n_star": nstar,
                        "a1": a[0], "a2": a[1], "a3": a[2], "a4": a[3],
                        "ln_measured_bound": ln_bound,
                        "ln_rho1_sq": log_of(led.rho1_sq),
                        "recursion_min_slack": float(np.min(slack)) if slack.size else 0.0})
    # the ledger's rho1^2 is only claimed under the step-size hypothesis
    r.extra["rho1_sq_holds_at_n_star"] = bool(b.xi[nstar] == 0 or
                                              math.log(b.xi[nstar]) <= log_of(led.rho1_sq))
    r.extra["rho1_sq_hypothesis_met"] = bool(hyp_global)
    if hyp_global and not r.extra["rho1_sq_holds_at_n_star"]:
        r.status = FAIL
        r.first_violation = nstar
    return r


# ---------------------------------------------------------------------------
# solver-level identities


def check_solver(log, led=None):
    d = _Data(log)
    out = []
    tol = float(log.config.get("picard_tol", 1e-12))
    z = np.zeros(d.N)
    out.append(_margins("reconstruction", "blend identity u^{n+theta} = theta u^{n+1} + (1-theta) u^n",
                        d.reconstruction_error, 1e-13 * d.l2_mid, [np.ones(d.N)], d.n, True,
                        "always", tol=0.0))
    out.append(_margins("substep_residual", "implicit substep solved to tolerance",
                        d.solver_residual, np.full(d.N, tol), [np.ones(d.N)], d.n, True,
                        "accepted steps", tol=0.0))
    # the one-leg defect equals the substep defect, so it shares the substep scale
    sc = np.where(d.residual_scale > 0, d.residual_scale, 1.0)
    rel = np.where(d.residual_scale > 0, d.one_leg_residual / sc, d.one_leg_residual)
    out.append(_margins("one_leg_residual", "one-leg form reproduced by substep + extrapolation",
                        rel, np.full(d.N, 2 * tol), [np.ones(d.N)], d.n, True, "accepted steps",
                        tol=0.0))
    scale = np.maximum(d.l2_np1 * d.lambda1 ** 0.5, 1e-300)
    out.append(_margins("divergence", "divergence-free states", d.divergence, 1e-13 * scale + z,
                        [np.ones(d.N)], d.n, True, "always", tol=0.0))
    return out


# ---------------------------------------------------------------------------
# report


@dataclass
class CertificateReport:
    schema_version: int
    config: dict
    ledger_inputs: dict
    checks: list
    verdicts: dict
    metadata: dict

    @property
    def hypothesis_met_violations(self):
        return [c for c in self.checks if c.status in (FAIL, "error")]

    @property
    def ok(self):
        return not self.hypothesis_met_violations

    def check(self, cid):
        for c in self.checks:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def to_dict(self):
        return _jsonable({
            "schema_version": self.schema_version,
            "config": self.config,
            "ledger_inputs": self.ledger_inputs,
            "checks": [c.to_dict() for c in self.checks],
            "verdicts": self.verdicts,
            "metadata": self.metadata,
        })

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def summary(self):
        lines = []
        w = max((len(c.id) for c in self.checks), default=10)
        for c in self.checks:
            m = c.min_relative_margin
            ms = f"{m: .3e}" if isinstance(m, float) and math.isfinite(m) else str(m)
            lines.append(f"{c.id:<{w}}  {c.status:<17} min rel margin {ms}"
                         + ("" if c.first_violation is None else f"  first violation n={c.first_violation}"))
        lines.append("verdicts: " + ", ".join(f"{k}={v}" for k, v in self.verdicts.items()))
        return "\n".join(lines)


def ledger_for_log(log, T=None, r=None, variant="derived", eps1=None, delta1=None):
    """Bound ledger for the data echoed in a log header."""
    c = log.config
    nu, lam = float(c["nu"]), float(c["lambda1"])
    if T is None:
        T = float(c["tau"]) * int(c["steps"])
    if r is None:
        r = 4.0 / (lam * nu)
    return build_ledger(nu, lam, float(c["theta"]), float(c["tau"]), float(c["u0_l2"]),
                        float(c["u0_h1"]), float(c["f_inf"]), T, r, eps1=eps1, delta1=delta1,
                        variant=variant)


def _guarded(fn, cid, *args):
    try:
        r = fn(*args)
    except Exception as exc:  # aggregated, never aborts the report
        return [_error(cid, fn.__name__, exc)]
    return r if isinstance(r, list) else [r]


def full_report(log, led=None, shadow=None, T=None, r=None, variant="derived"):
    """Run every check and aggregate them into a CertificateReport."""
    errors = []
    if led is None:
        try:
            led = ledger_for_log(log, T=T, r=r, variant=variant)
        except (DomainError, ValueError) as exc:
            errors.append(f"{type(exc).__name__}: {exc}")
            led = None
    if shadow is None and led is not None:
        other = "paper" if led.variant == "derived" else "derived"
        try:
            shadow = ledger_for_log(log, T=led.inputs["T"], r=led.inputs["r"], variant=other,
                                    eps1=led.inputs["eps1"], delta1=led.inputs["delta1"])
        except (DomainError, ValueError):
            shadow = None
    checks = []
    checks += _guarded(check_solver, "solver", log)
    checks += _guarded(check_energy0, "energy_substep", log, led)
    checks += _guarded(check_energy1_identity, "energy_identity", log, led)
    if led is not None:
        checks += _guarded(check_h_decay, "h_decay", log, led)
        checks += _guarded(check_l2h1_sums, "l2h1_sums", log, led)
        checks += _guarded(check_v_recursion, "v_recursion", log, led)
        checks += _guarded(check_v_longtime, "v_longtime", log, led, shadow)
    else:
        checks += _guarded(check_l2h1_sums, "l2h1_sums", log, None)
        checks += _guarded(check_v_recursion, "v_recursion", log, None)
        checks.append(_na("bound_ledger", "ledger-dependent checks",
                          "; ".join(errors) or "ledger unavailable"))

    def verdict(prefixes):
        sel = [c for c in checks if c.id.startswith(prefixes)]
        if any(c.status in (FAIL, "error") for c in sel):
            return "violated"
        # checks that do not apply to this log (window too long, ...) are neutral
        live = [c for c in sel if c.status != NA]
        if live and all(c.status == PASS for c in live):
            return "certified"
        return "not certified (hypotheses unmet)" if sel else "not evaluated"

    verdicts = {
        "H_stability": verdict(("energy_substep", "energy_identity", "h_")),
        "L2H1": verdict(("energy_step", "dissipation", "gradient_")),
        "V_one_step": verdict(("gradient_energy", "quadratic", "discriminant", "one_step_v")),
        "V_stability": verdict(("v_",)),
        "empirically_bounded": bool(np.all(np.isfinite(_Data(log).gsq))),
    }
    meta = {
        "tol_cert": TOL_CERT,
        "identity_tol": IDENTITY_TOL,
        "index_convention": INDEX_NOTE,
        "deviations": DEVIATIONS,
        "ledger_errors": errors,
        "environment": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "mpmath": mpmath.__version__,
            "machine": platform.machine(),
        },
    }
    ledgers = {}
    for L in (led, shadow):
        if L is not None:
            ledgers[L.variant] = {
                "admissible_tau": admissible_tau(L).decimal(17),
                "ln_admissible_tau": log_json(admissible_tau(L)),
                "ln_K6": log_json(L.K6), "ln_K7": log_json(L.K7),
                "T0": L.T0, "N0": L.N0, "Nr": L.Nr, "rho0": L.rho0,
                "ln_rho1_sq": log_json(L.rho1_sq),
            }
    meta["ledgers"] = ledgers
    inputs = dict(led.inputs) if led is not None else {}
    inputs["variant"] = led.variant if led is not None else variant
    return CertificateReport(SCHEMA_VERSION, dict(log.config), inputs, checks, verdicts, meta)
