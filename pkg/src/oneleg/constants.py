"""
Closed-form stability constants for the one-leg theta scheme.

The theta-dependent quadruple (alpha, epsilon, a, b) and the long chain of
bound constants K1..K7, C1..C11, kappa1..kappa4, rho0, rho1, T0.

Several long-time constants are astronomically large (exponents of order
1e8 for unit data), so everything past the theta quadruple is evaluated in
mpmath with arbitrary exponent range.  Values are handed back as ``mpf``;
use :func:`as_float` or :func:`as_json_number` to export.
"""

import math
import random
from fractions import Fraction
from dataclasses import dataclass, field

import mpmath

VARIANTS = ("derived", "paper")


class DomainError(ValueError):
    pass


def _variant(v):
    v = {"derivation_consistent": "derived", "paper_literal": "paper"}.get(v, v)
    if v not in VARIANTS:
        raise ValueError(f"unknown variant {v!r}")
    return v


# ---------------------------------------------------------------------------
# theta quadruple

@dataclass(frozen=True)
class ThetaConstants:
    theta: float
    lambda1_nu_tau: float
    alpha: float
    epsilon: float
    a: float
    b: float
    variant: str = "derived"


def theta_constants_from_L(theta, L, variant="derived"):
    """(alpha, epsilon, a, b) as functions of theta and L = lambda1*nu*tau.

    variant "derived" uses sqrt(2 theta - 1) as the prefactor of the first
    radical in a and b, which is what the three defining identities require.
    variant "paper" keeps the printed (2 theta - 1) prefactor; the two agree
    at theta = 1/2 and theta = 1 only.
    """
    variant = _variant(variant)
    theta = float(theta)
    L = float(L)
    if not 0.5 <= theta <= 1.0:
        raise DomainError(f"theta={theta} outside [1/2, 1]")
    if L < 0:
        raise DomainError(f"lambda1*nu*tau={L} is negative")
    s = 2.0 * theta - 1.0
    q = 1.0 - theta
    inner = 4.0 * theta - q * (2.0 * theta + 1.0) * L
    if inner < 0:
        raise DomainError(f"radicand 4theta - L(2theta+1)(1-theta) = {inner} < 0")
    rad_alpha = s * q * inner * L
    alpha = theta - 0.5 * s * q * L + 0.5 * math.sqrt(rad_alpha)
    epsilon = L * s
    r2 = math.sqrt(L * q)
    if variant == "derived":
        r1 = math.sqrt(s * inner)
        # r1^2 - r2^2 = 4 theta (s - L theta q); avoids cancelling r1 - r2
        # the factor vanishes inside the range, so form it exactly before rounding
        d = float(Fraction(s) - Fraction(L) * Fraction(theta) * Fraction(q))
        a = 2.0 * theta * d / (r1 + r2) if r1 + r2 > 0 else 0.0
        if s == 0.0:
            a = -0.5 * r2     # r1 = 0: no cancellation, and a + b = 0 exactly
    else:
        r1 = s * math.sqrt(inner)
        a = 0.5 * (r1 - r2)
    b = 0.5 * (r1 + r2)
    return ThetaConstants(theta, L, alpha, epsilon, a, b, variant)


def theta_constants(theta, lambda1, nu, tau, variant="derived"):
    return theta_constants_from_L(theta, float(lambda1) * float(nu) * float(tau), variant)


def identity_terms(tc):
    """Left side, right side and term list for each of the three identities.

    Right sides are evaluated exactly in rationals from the float inputs.
    """
    th, L = Fraction(tc.theta), Fraction(tc.lambda1_nu_tau)
    al, ep, a, b = tc.alpha, tc.epsilon, tc.a, tc.b
    out = []
    lhs_terms = (al, ep, a * a)
    rhs = float(th * th * (2 + L * th))
    out.append((sum(lhs_terms), rhs, lhs_terms + (rhs,)))
    lhs_terms = (b * b, -al)
    rhs = float((th - 1) * ((1 + L * th) * (th - 1) + (th + 1)))
    out.append((sum(lhs_terms), rhs, lhs_terms + (rhs,)))
    lhs_terms = (2.0 * a * b,)
    rhs = float(2 * th * (th - (1 - th) * (1 + L * th)))
    out.append((lhs_terms[0], rhs, lhs_terms + (rhs,)))
    return out


def check_identities(tc):
    """Relative residuals of the three identities tying (alpha, eps, a, b) together.

    The right sides of the second and third identity pass through zero inside
    the admissible range, so each residual is scaled by the largest magnitude
    among the right side and the individual left-side terms.
    """
    res = []
    for lhs, rhs, terms in identity_terms(tc):
        scale = max(abs(t) for t in terms)
        res.append(abs(lhs - rhs) / scale if scale > 0 else abs(lhs - rhs))
    return tuple(res)


def half_theta_obstruction(theta, lambda1_nu_tau):
    """(a+b)^2 + eps in closed form: 4 theta^2 - 1 + (2 theta - 1)^2 (1 + L theta)."""
    th, L = float(theta), float(lambda1_nu_tau)
    if not 0.5 <= th <= 1.0:
        raise DomainError(f"theta={th} outside [1/2, 1]")
    return 4.0 * th * th - 1.0 + (2.0 * th - 1.0) ** 2 * (1.0 + L * th)


def obstruction_from_constants(tc):
    return (tc.a + tc.b) ** 2 + tc.epsilon


# ---------------------------------------------------------------------------
# positive reals stored by their logarithm

class LogReal:
    """Positive real x kept as ln(x).

    Restarted bound chains produce values like exp(exp(1e10)) whose binary
    exponent cannot be stored even by mpmath, so K5 and everything derived
    from it are carried in log form.
    """

    __slots__ = ("ln",)

    def __init__(self, ln):
        self.ln = mpmath.mpf(ln)

    @classmethod
    def of(cls, x):
        if isinstance(x, LogReal):
            return x
        x = mpmath.mpf(x)
        if x < 0:
            raise ValueError("LogReal holds nonnegative values only")
        return cls(-mpmath.inf if x == 0 else mpmath.log(x))

    def __mul__(self, o):
        return LogReal(self.ln + LogReal.of(o).ln)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return LogReal(self.ln - LogReal.of(o).ln)

    def __rtruediv__(self, o):
        return LogReal(LogReal.of(o).ln - self.ln)

    def __add__(self, o):
        a, b = self.ln, LogReal.of(o).ln
        if a < b:
            a, b = b, a
        if mpmath.isinf(a) and a < 0:
            return LogReal(a)
        return LogReal(a + mpmath.log1p(mpmath.exp(b - a)))

    __radd__ = __add__

    def __pow__(self, p):
        return LogReal(self.ln * p)

    def _cmp(self, o):
        return self.ln, LogReal.of(o).ln

    def __lt__(self, o):
        a, b = self._cmp(o)
        return a < b

    def __le__(self, o):
        a, b = self._cmp(o)
        return a <= b

    def __gt__(self, o):
        a, b = self._cmp(o)
        return a > b

    def __ge__(self, o):
        a, b = self._cmp(o)
        return a >= b

    def __eq__(self, o):
        try:
            a, b = self._cmp(o)
        except (TypeError, ValueError):
            return NotImplemented
        return a == b

    def __hash__(self):
        return hash(self.ln)

    def __float__(self):
        if self.ln > 709.7:
            return math.inf
        if self.ln < -745.2:
            return 0.0
        return float(mpmath.exp(self.ln))

    def decimal(self, digits=6):
        """Scientific notation string valid at any magnitude."""
        if mpmath.isinf(self.ln):
            return "inf" if self.ln > 0 else "0"
        if abs(self.ln) > 1e15:
            # the decimal exponent itself would not fit; show the logarithm
            return f"exp({mpmath.nstr(self.ln, digits)})"
        e10 = self.ln / mpmath.log(10)
        k = mpmath.floor(e10)
        mant = mpmath.power(10, e10 - k)
        return f"{mpmath.nstr(mant, digits)}e{int(k):+d}"

    def __repr__(self):
        return f"LogReal({self.decimal()})"


# ---------------------------------------------------------------------------
# export helpers

def as_float(x):
    """float(x), or +inf when x exceeds the double range."""
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, LogReal):
        return float(x)
    if mpmath.isinf(x):
        return math.inf if x > 0 else -math.inf
    try:
        v = float(x)
    except OverflowError:
        return math.inf
    return v


def as_json_number(x):
    """Finite double when representable, else a decimal string keeping the exponent."""
    if isinstance(x, bool):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, LogReal):
        v = float(x)
        if math.isfinite(v) and v > 1e-300:
            return v
        return x.decimal(17) if not (mpmath.isinf(x.ln) and x.ln < 0) else 0.0
    if mpmath.isinf(x) or mpmath.isnan(x):
        return str(x)
    v = as_float(x)
    if math.isfinite(v) and ((x == 0 and v == 0) or abs(v) > 1e-300):
        return v
    sign = "-" if x < 0 else ""
    return sign + LogReal.of(abs(x)).decimal(17)


def log_of(x):
    """Natural log of a nonnegative number as a float (-inf at 0)."""
    if isinstance(x, LogReal):
        return float(x.ln)
    x = mpmath.mpf(x)
    if x == 0:
        return -math.inf
    if mpmath.isinf(x):
        return math.inf
    return float(mpmath.log(x))


def log_json(x):
    """ln(x) as a double, or as a decimal string when it does not fit one."""
    ln = x.ln if isinstance(x, LogReal) else (
        -mpmath.inf if mpmath.mpf(x) == 0 else mpmath.log(mpmath.mpf(x)))
    v = as_float(ln)
    return v if math.isfinite(v) else mpmath.nstr(ln, 17)


# ---------------------------------------------------------------------------
# finite-time bound chain


@dataclass
class FiniteTimeConstants:
    """Constants of the H1 finite-horizon estimate for one set of starting data."""

    nu: object
    lambda1: object
    theta: object
    tau: object
    f_inf: object
    u_l2sq: object
    u_h1sq: object
    eps1: object
    delta1: object
    K1: object = None
    C1: object = None
    Q: object = None
    K2: object = None
    K3: object = None
    K4: object = None
    C2: object = None
    C3: object = None
    C4: object = None
    C5: object = None
    C6: object = None
    C7: object = None
    C8: object = None
    rho0: object = None

    def __post_init__(self):
        nu, lam, th, tau, f = self.nu, self.lambda1, self.theta, self.tau, self.f_inf
        s = 2 * th - 1
        self.rho0 = f**2 / (lam * nu**2 * s)
        self.K1 = self.u_l2sq + 3 * self.rho0
        self.C1 = (2 * self.K1**2 * (2 * th**2 - 2 * th + 1)) ** mpmath.mpf(0.25)
        self.Q = self.C1**4 * (1 - th) ** 4 * th**3 / (nu**3 * s**3) - nu / (2 * th)
        aQ = abs(self.Q)
        p = 4 * th**2 - 6 * th + 3
        self.K2 = (mpmath.mpf(1) / 2 + aQ / nu) * self.u_l2sq + tau * nu / (8 * th) * p * self.u_h1sq
        self.K3 = (4 * th / (nu * s) + aQ / nu**2) * f**2 / lam
        self.K4 = mpmath.mpf(1) / 2 + aQ / nu
        self.C2 = th * (1 + 2 * th) * mpmath.sqrt(self.K1) / mpmath.sqrt(2)
        self.C3 = nu * th**2 + nu / 2 * th**2 - self.eps1 - nu * th * (2 - th) * self.delta1 / 2
        self.C4 = (self.C2**2 / self.eps1 - nu * (1 - th) ** 2 + nu - nu / 2 * th**2
                   + nu * th * (2 - th) / (2 * self.delta1))
        if not self.C3 > 0:
            raise DomainError(f"C3={self.C3} is not positive for eps1={self.eps1}, delta1={self.delta1}")
        if not self.C4 > 0:
            raise DomainError(f"C4={self.C4} is not positive for eps1={self.eps1}, delta1={self.delta1}")
        self.C5 = 108 * self.K1 * 16 * th / (nu**4 * s)
        self.C6 = 3 * self.C5 * self.K2 + 2 * self.C5**2 * self.K2**2
        self.C7 = 3 * self.C5 * self.K3 + 4 * self.C5**2 * self.K2 * self.K3
        self.C8 = 2 * self.C5**2 * self.K3**2

    @property
    def g(self):
        # the recurring factor 108 K1 / nu^3
        return 108 * self.K1 / self.nu**3

    def K5(self, x, f, t):
        """Finite-horizon bound on ||grad u^n||^2 at time t, starting from ||grad u||=x."""
        x, f, t = mpmath.mpf(x), mpmath.mpf(f), mpmath.mpf(t)
        growth = LogReal(self.C6 + self.C7 * t + self.C8 * t * t)
        return LogReal.of(x * x + t * 18 / (5 * self.nu) * f * f) * growth

    def log_K5(self, x, f, t):
        return log_of(self.K5(x, f, t))

    def kappa2(self):
        lam, nu = self.lambda1, self.nu
        denom = 15 * self.g * (2 / (nu * self.C3 * lam) + 2 / (lam * nu**2)) * self.f_inf**2
        return LogReal(mpmath.inf) if denom == 0 else 1 / LogReal.of(denom)

    def kappa3(self, x, f, t):
        return 1 / (LogReal.of(15 * self.g * (1 + self.C4 / self.C3)) * self.K5(x, f, t))

    def kappa4(self, x, f, t):
        c = 15 * mpmath.mpf(108) ** 2 / self.nu**7 * self.K1**2 / self.lambda1
        return 1 / (LogReal.of(c) * self.K5(x, f, t) ** 2)

    def bound_hypothesis(self, h1sq):
        """Left side of the one-step smallness hypothesis at ||grad u^n||^2 = h1sq."""
        nu, lam = self.nu, self.lambda1
        return self.tau * self.g * (
            (2 / (nu * self.C3 * lam) + 2 / (nu**2 * lam)) * self.f_inf**2
            + (1 + self.C4 / self.C3) * h1sq
            + 108 / (nu**4 * lam) * self.K1 * h1sq**2
        )


def default_auxiliaries(nu, theta):
    """eps1 = nu theta^2 / 2, delta1 = theta / (2 (2 - theta))."""
    return nu * theta**2 / 2, theta / (2 * (2 - theta))


# ---------------------------------------------------------------------------
# full ledger


@dataclass
class BoundLedger:
    inputs: dict
    variant: str
    finite: FiniteTimeConstants
    kappa1: object
    kappa2: object
    kappa3: object
    kappa4: object
    rho0: object
    T0: object
    C9: object
    C10: object
    C11: object
    a1: object
    a2: object
    a3: object
    a4: object
    rho1_sq: object
    rho1_sq_printed: object
    K6: object
    K7: object
    restart: FiniteTimeConstants
    tau_terms: dict
    N0: int
    Nr: int
    provenance: dict = field(default_factory=dict)

    # convenient pass-throughs
    def __getattr__(self, name):
        fin = self.__dict__.get("finite")
        if fin is not None and name in ("K1", "K2", "K3", "K4", "C1", "C2", "C3", "C4", "C5",
                                        "C6", "C7", "C8", "Q", "eps1", "delta1"):
            return getattr(fin, name)
        raise AttributeError(name)

    @property
    def rho1(self):
        return mpmath.sqrt(self.rho1_sq)

    def K5(self, x, f, t):
        return self.finite.K5(x, f, t)

    def entries(self):
        """Ordered (name, value) list of every scalar in the ledger."""
        fin = self.finite
        names = ["K1", "K2", "K3", "K4", "C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "Q",
                 "eps1", "delta1"]
        out = [(n, getattr(fin, n)) for n in names]
        u = self.inputs
        out += [
            ("K5_at_T", fin.K5(u["u0_h1"], u["f_inf"], u["T"])),
            ("K5_at_T0_plus_r", fin.K5(u["u0_h1"], u["f_inf"], self.T0 + u["r"])),
            ("K6", self.K6), ("K7", self.K7),
            ("C9", self.C9), ("C10", self.C10), ("C11", self.C11),
            ("kappa1", self.kappa1), ("kappa2", self.kappa2),
            ("kappa3", self.kappa3), ("kappa4", self.kappa4),
            ("rho0", self.rho0), ("rho1", self.rho1), ("rho1_sq", self.rho1_sq),
            ("rho1_sq_printed", self.rho1_sq_printed), ("T0", self.T0),
            ("a1", self.a1), ("a2", self.a2), ("a3", self.a3), ("a4", self.a4),
            ("N0", self.N0), ("Nr", self.Nr),
        ]
        out += [("tau_" + k, v) for k, v in self.tau_terms.items()]
        out.append(("admissible_tau", admissible_tau(self)))
        return out

    def to_dict(self):
        return {
            "variant": self.variant,
            "inputs": {k: as_json_number(v) for k, v in self.inputs.items()},
            "values": {k: as_json_number(v) for k, v in self.entries()},
            "log_values": {k: log_json(v) for k, v in self.entries()
                           if not isinstance(v, int) and v >= 0},
            "provenance": dict(self.provenance),
        }


_PROVENANCE_COMMON = {
    "T0": "clamped to 0 when ||u0||^2 <= rho0",
    "K5": "frozen C6..C8 from the initial data; monotone in (x, f, t)",
    "theta_constants": "a, b use the sqrt(2 theta - 1) prefactor (printed form fails the identities)",
}


def ledger(nu, lambda1, theta, tau, u0_l2, u0_h1, f_inf, T, r,
           eps1=None, delta1=None, variant="derived"):
    """Evaluate every bound constant for the given data.

    ``variant`` selects how the long-time window constants are built:
    "derived" scales C9, C10, C11 consistently with replacing K1 by 4 rho0,
    "paper" uses them as printed with the undefined Q4 read as K3.
    """
    variant = _variant(variant)
    for name, v in (("nu", nu), ("lambda1", lambda1), ("tau", tau), ("r", r)):
        if not v > 0:
            raise DomainError(f"{name} must be positive")
    for name, v in (("u0_l2", u0_l2), ("u0_h1", u0_h1), ("f_inf", f_inf), ("T", T)):
        if v < 0:
            raise DomainError(f"{name} must be nonnegative")
    if not 0.5 < theta < 1.0:
        raise DomainError(f"theta={theta} outside (1/2, 1)")
    if eps1 is None or delta1 is None:
        e, d = default_auxiliaries(nu, theta)
        eps1 = e if eps1 is None else eps1
        delta1 = d if delta1 is None else delta1

    M = mpmath.mpf
    nu_, lam, th, tau_, f, r_ = M(nu), M(lambda1), M(theta), M(tau), M(f_inf), M(r)
    s = 2 * th - 1
    p = 4 * th**2 - 6 * th + 3
    fin = FiniteTimeConstants(nu_, lam, th, tau_, f, M(u0_l2) ** 2, M(u0_h1) ** 2, M(eps1), M(delta1))

    # monotonicity of K5 by sampling
    rng = random.Random(12345)
    for _ in range(8):
        x, ff, t = rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(0, 5)
        base = fin.K5(x, ff, t)
        for dx, df, dt in ((0.1, 0, 0), (0, 0.1, 0), (0, 0, 0.1)):
            if fin.K5(x + dx, ff + df, t + dt) < base:
                raise AssertionError("K5 is not monotone")

    kappa1 = 1 / (lam * nu_)
    rho0 = fin.rho0
    u0sq = M(u0_l2) ** 2
    if rho0 == 0:
        T0 = M(0) if u0sq == 0 else mpmath.inf
    elif u0sq <= rho0:
        T0 = M(0)
    else:
        T0 = 15 / (lam * nu_ * s) * mpmath.log(u0sq / rho0)

    k1fac = 108 / nu_**3
    hfac = 16 * th / (nu_ * s)
    if variant == "paper":
        C9 = 4 * fin.K4 * k1fac * hfac
        C10 = fin.K3 * k1fac * hfac
        C11 = k1fac * 2 / s * p
        tauK5_rho = M(1) / 15
        tauK5 = nu_**3 / (15 * 108 * rho0) if rho0 > 0 else mpmath.inf
    else:
        C9 = 16 * fin.K4 * k1fac * hfac
        C10 = 4 * fin.K3 * k1fac * hfac
        C11 = 4 * k1fac * 2 / s * p
        # tau <= kappa3(.., T0 + r) gives tau * 108/nu^3 * K5 <= 1/(15 K1 (1 + C4/C3))
        den = 15 * 108 * fin.K1 * (1 + fin.C4 / fin.C3)
        tauK5 = nu_**3 / den if den > 0 else mpmath.inf
        tauK5_rho = rho0 * 108 / nu_**3 * tauK5 if rho0 > 0 else M(0)

    # window sum of tau * 108 K1' / nu^3 * ||grad u||^2, K1' = 4 rho0
    c11_term = (C11 / k1fac) * tauK5_rho
    a4 = C9 * rho0**2 + C10 * rho0 * r_ + c11_term
    if variant == "paper":
        a1 = (2 * C9 * rho0**2 + 2 * C10 * rho0 * r_ + 2 * c11_term
              + 8 * C9**2 * rho0**4 + 8 * C10**2 * rho0**2 * r_**2 + 4 * c11_term**2)
    else:
        a1 = 2 * a4 + 2 * a4**2
    a2 = r_ * 18 / (5 * nu_) * f**2
    a3 = 4 * fin.K4 * hfac * rho0 + hfac * fin.K3 * r_ + 2 / s * p * tauK5
    rho1_sq = (5 * a3 / (2 * r_) + a2) * mpmath.exp(a1) * mpmath.exp(a4)

    if rho0 > 0:
        first = (160 * th * rho0 * fin.K4 / (nu_ * r_ * s) + 40 * th * fin.K3 / (nu_ * s)
                 + nu_**3 * p / (324 * s * r_ * rho0) + r_ * 18 / (5 * nu_) * f**2)
    else:
        first = mpmath.inf
    e1 = (2 * C9 * rho0**2 + 2 * C10 * rho0 * r_ + 4 / (15 * s) * p
          + 8 * C9**2 * rho0**4 + 8 * C10**2 * rho0**2 * r_**2 + 16 / (15**2 * s**2) * p**2)
    e2 = C9 * rho0**2 + C10 * rho0 * r_ + 2 / (15 * s) * p
    rho1_sq_printed = first * mpmath.exp(e1) * mpmath.exp(e2)

    # restart data for the uniform-in-time bound
    if variant == "paper":
        restart = fin
    else:
        m = min(fin.K1, 4 * rho0)
        restart = FiniteTimeConstants(nu_, lam, th, tau_, f, m, rho1_sq, M(eps1), M(delta1))
    rho1 = mpmath.sqrt(rho1_sq)
    K6 = restart.K5(rho1, f, r_)
    K7 = max(fin.K5(M(u0_h1), f, T0 + r_), K6)

    tau_terms = {
        "kappa1": LogReal.of(kappa1),
        "kappa2": fin.kappa2(),
        "kappa3_T0r": fin.kappa3(M(u0_h1), f, T0 + r_),
        "kappa4_T0r": fin.kappa4(M(u0_h1), f, T0 + r_),
        "kappa3_rho1_r": restart.kappa3(rho1, f, r_),
        "kappa4_rho1_r": restart.kappa4(rho1, f, r_),
    }
    N0 = int(mpmath.floor(T0 / tau_)) if mpmath.isfinite(T0) else -1
    Nr = int(mpmath.floor(r_ / tau_))

    prov = dict(_PROVENANCE_COMMON)
    if variant == "paper":
        prov.update({
            "C9": "as printed",
            "C10": "as printed with undefined Q4 read as K3",
            "C11": "as printed",
            "a1..a4": "as printed, tau K5 bounded via tau 108 rho0 K5 / nu^3 <= 1/15",
            "K6": "K5(rho1, f, r) with constants frozen at the initial data",
        })
    else:
        prov.update({
            "C9": "4x printed value (K1 replaced by 4 rho0 in the window sum)",
            "C10": "Q4 = 4 K3",
            "C11": "4x printed value",
            "a1": "2 a4 + 2 a4^2 (square of the alpha window sum)",
            "a3,a4": "tau K5 bounded through kappa3 at T0 + r",
            "K6": "K5 rebuilt from restart data ||u||^2 <= min(K1, 4 rho0), ||grad u||^2 <= rho1^2",
        })

    inputs = dict(nu=nu, lambda1=lambda1, theta=theta, tau=tau, u0_l2=u0_l2, u0_h1=u0_h1,
                  f_inf=f_inf, T=T, r=r, eps1=eps1, delta1=delta1)
    return BoundLedger(
        inputs=inputs, variant=variant, finite=fin,
        kappa1=kappa1, kappa2=tau_terms["kappa2"],
        kappa3=fin.kappa3(M(u0_h1), f, M(T)), kappa4=fin.kappa4(M(u0_h1), f, M(T)),
        rho0=rho0, T0=T0, C9=C9, C10=C10, C11=C11,
        a1=a1, a2=a2, a3=a3, a4=a4, rho1_sq=rho1_sq, rho1_sq_printed=rho1_sq_printed,
        K6=K6, K7=K7, restart=restart, tau_terms=tau_terms, N0=N0, Nr=Nr, provenance=prov,
    )


def admissible_tau(led):
    """Smallest of the six step-size thresholds of the uniform-in-time theorem.

    Returned as a LogReal: it is routinely far below the smallest double.
    """
    return min(led.tau_terms.values())
