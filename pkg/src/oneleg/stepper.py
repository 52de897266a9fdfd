"""
One-leg theta time stepping for the projected Navier-Stokes system.

Each step solves a backward-Euler substep of length theta*tau for the
blended state w = u^{n+theta},

    (w - u^n)/(theta tau) + nu A w + P B(w, w) = f(t_n + theta tau),

then extrapolates u^{n+1} = w/theta - (1/theta - 1) u^n.
"""

import io
import json
import math
import os
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .spectral_field import (
    TorusGrid,
    VelocityField,
    _hermitian,
    _project,
    field_from_function,
    h1_coeffs,
    inner_coeffs,
    l2_coeffs,
    _sq,
    _weights,
    nonlinear_coeffs,
    norm_triple,
    self_advection_coeffs,
)


class NonConvergence(RuntimeError):
    def __init__(self, iterations, residual, step=None):
        self.iterations = iterations
        self.residual = residual
        self.step = step
        where = "" if step is None else f" at step {step}"
        super().__init__(f"implicit substep did not converge{where}: "
                         f"{iterations} iterations, relative residual {residual:.3e}")


# ---------------------------------------------------------------------------
# forcing

@dataclass(frozen=True)
class ForcingSpec:
    """f(x, t) = g(t) F(x), F = P sum_m 2 Re(a_m exp(i k_m.x)).

    modes: tuple of ((k1, k2), (a1, a2)) with integer lattice k and complex a.
    profile: "constant" (g = 1) or "sinusoidal" (g = sin(frequency t + phase)).
    amplitude: if given, F is rescaled so that ||F|| equals it.
    """

    modes: tuple = ()
    profile: str = "constant"
    frequency: float = 0.0
    phase: float = 0.0
    amplitude: float = None

    def __post_init__(self):
        if self.profile not in ("constant", "sinusoidal"):
            raise ValueError(f"unknown forcing profile {self.profile!r}")
        modes = tuple((tuple(int(k) for k in kk), tuple(complex(a) for a in aa))
                      for kk, aa in self.modes)
        object.__setattr__(self, "modes", modes)

    def spatial(self, grid):
        if not self.modes:
            return VelocityField.zeros(grid)
        s = grid.wavenumber_scale

        def fn(x, y):
            ux = np.zeros_like(x)
            uy = np.zeros_like(x)
            for (k1, k2), (a1, a2) in self.modes:
                e = np.exp(1j * s * (k1 * x + k2 * y))
                ux = ux + 2.0 * (a1 * e).real
                uy = uy + 2.0 * (a2 * e).real
            return ux, uy

        F = field_from_function(grid, fn)
        if self.amplitude is not None:
            norm = l2_coeffs(grid, F.coeffs)
            F = VelocityField(grid, F.coeffs * (self.amplitude / norm if norm > 0 else 0.0))
        return F

    def profile_value(self, t):
        if self.profile == "constant":
            return 1.0
        return math.sin(self.frequency * t + self.phase)

    def profile_sup(self):
        if self.profile == "constant":
            return 1.0
        if self.frequency != 0.0:
            return 1.0
        return abs(math.sin(self.phase))

    def sup_norm(self, grid):
        """sup over t >= 0 of ||f(t)||, exact for the two profiles."""
        return l2_coeffs(grid, self.spatial(grid).coeffs) * self.profile_sup()

    def to_dict(self):
        return {
            "modes": [[list(k), [[a.real, a.imag] for a in aa]] for k, aa in self.modes],
            "profile": self.profile,
            "frequency": self.frequency,
            "phase": self.phase,
            "amplitude": self.amplitude,
        }

    @classmethod
    def from_dict(cls, d):
        modes = tuple((tuple(k), tuple(complex(re, im) for re, im in aa)) for k, aa in d.get("modes", []))
        return cls(modes=modes, profile=d.get("profile", "constant"),
                   frequency=float(d.get("frequency", 0.0)), phase=float(d.get("phase", 0.0)),
                   amplitude=d.get("amplitude"))


# ---------------------------------------------------------------------------
# configuration and records

@dataclass
class RunConfig:
    nu: float
    theta: float
    tau: float
    steps: int
    grid: TorusGrid
    forcing: ForcingSpec
    u0: VelocityField
    picard_tol: float = 1e-12
    picard_max_iter: int = 200
    newton_enabled: bool = True
    snapshot_stride: int = 0
    initial: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        # theta = 1/2 is admitted for order studies; certificates gate on (1/2, 1)
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError(f"theta={self.theta} outside [1/2, 1]")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps must be a positive integer")
        if self.u0.grid != self.grid:
            raise ValueError("initial field lives on a different grid")
        if not (self.picard_tol > 0 and self.picard_max_iter >= 1):
            raise ValueError("bad solver tolerances")

    def echo(self):
        """JSON-ready description; enough to rebuild the bound ledger."""
        c = self.u0.coeffs
        return {
            "nu": self.nu, "theta": self.theta, "tau": self.tau, "steps": int(self.steps),
            "grid": self.grid.describe(),
            "lambda1": self.grid.lambda1,
            "forcing": self.forcing.to_dict(),
            "f_inf": self.forcing.sup_norm(self.grid),
            "u0_l2": l2_coeffs(self.grid, c),
            "u0_h1": h1_coeffs(self.grid, c),
            "initial": dict(self.initial),
            "picard_tol": self.picard_tol, "picard_max_iter": self.picard_max_iter,
            "newton_enabled": self.newton_enabled,
            "snapshot_stride": self.snapshot_stride,
        }


@dataclass
class StepRecord:
    n: int
    t: float
    l2_n: float
    h1_n: float
    l2_mid: float
    h1_mid: float
    lap_mid: float
    l2_np1: float
    h1_np1: float
    d_mid: float          # ||u^{n+theta} - u^n||
    d_step: float         # ||u^{n+1} - u^n||
    h1_step: float        # ||grad(u^{n+1} - u^n)||
    inner_np1_n: float    # (u^{n+1}, u^n)
    p_mid: float          # (u^{n+theta} - u^n, u^n)
    p_step: float         # (u^{n+1} - u^n, u^n)
    f_mid: float          # ||f^{n+theta}||
    f_dot_mid: float      # (f^{n+theta}, u^{n+theta})
    b_mid: float          # b(u^{n+theta}, u^{n+theta}, u^{n+theta})
    iterations: int
    solver_residual: float
    newton: int
    residual_scale: float
    one_leg_residual: float
    reconstruction_error: float
    divergence: float


COLUMNS = [f.name for f in fields(StepRecord)]
_INT_COLUMNS = {"n", "iterations", "newton"}


class SchemaError(ValueError):
    pass


@dataclass
class TrajectoryLog:
    config: dict
    records: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def column(self, name):
        dtype = int if name in _INT_COLUMNS else float
        return np.array([getattr(r, name) for r in self.records], dtype=dtype)

    def columns(self):
        return {c: self.column(c) for c in COLUMNS}


# ---------------------------------------------------------------------------
# the implicit substep

def _solve(grid, un, fmid, nu, theta, tau, tol, max_iter, newton_enabled):
    """Return (w, N(w), iterations, relative residual, used_newton)."""
    ht = theta * tau
    diag = 1.0 / ht + nu * grid.k2
    rhs = fmid + un / ht
    scale = l2_coeffs(grid, fmid) + l2_coeffs(grid, un) / ht
    if scale == 0.0:
        return np.zeros_like(un), np.zeros_like(un), 0, 0.0, False, 0.0

    w = un.copy()
    prev = math.inf
    for it in range(1, max_iter + 1):
        N = self_advection_coeffs(grid, w)
        defect = diag * w + N - rhs
        res = l2_coeffs(grid, defect) / scale
        if res <= tol:
            return w, N, it, res, False, scale
        if it > 2 and res > prev:
            if newton_enabled:
                return _newton(grid, w, un, fmid, nu, theta, tau, tol, max_iter, scale)
            raise NonConvergence(it, res)
        prev = res
        w = (w - defect / diag) * grid.mask
    if newton_enabled:
        return _newton(grid, w, un, fmid, nu, theta, tau, tol, max_iter, scale)
    raise NonConvergence(max_iter, res)


def _pack(grid, c):
    m = grid.mask
    return np.concatenate([c[0][m].real, c[0][m].imag, c[1][m].real, c[1][m].imag])


def _unpack(grid, v):
    m = grid.mask
    k = int(m.sum())
    c = np.zeros(grid.shape, dtype=complex)
    c[0][m] = v[0:k] + 1j * v[k:2 * k]
    c[1][m] = v[2 * k:3 * k] + 1j * v[3 * k:4 * k]
    return c


def _newton(grid, w, un, fmid, nu, theta, tau, tol, max_iter, scale):
    # inexact Newton: GMRES only to a residual-dependent accuracy, then backtrack
    ht = theta * tau
    diag = 1.0 / ht + nu * grid.k2
    rhs = fmid + un / ht
    size = 4 * int(grid.mask.sum())
    dvec = np.tile(diag[grid.mask], 4)
    M = LinearOperator((size, size), matvec=lambda v: v / dvec, dtype=float)

    def defect_of(wc):
        N = self_advection_coeffs(grid, wc)
        d = diag * wc + N - rhs
        return N, d, l2_coeffs(grid, d) / scale

    N, defect, res = defect_of(w)
    for it in range(1, max_iter + 1):
        if res <= tol:
            return w, N, it, res, True, scale
        wc = w

        def jac(v, wc=wc):
            d = _project(grid, _hermitian(grid, _unpack(grid, v)))
            out = diag * d + nonlinear_coeffs(grid, wc, d) + nonlinear_coeffs(grid, d, wc)
            return _pack(grid, out)

        J = LinearOperator((size, size), matvec=jac, dtype=float)
        delta, _ = gmres(J, -_pack(grid, defect), rtol=min(1e-4, max(res, 1e-12)), atol=0.0,
                         restart=60, maxiter=20, M=M)
        step = _unpack(grid, delta)
        lam = 1.0
        for _ in range(30):
            trial = _project(grid, _hermitian(grid, w + lam * step))
            tN, td, tres = defect_of(trial)
            if tres < res:
                break
            lam *= 0.5
        else:
            raise NonConvergence(it, res)
        w, N, defect, res = trial, tN, td, tres
    if res <= tol:
        return w, N, max_iter, res, True, scale
    raise NonConvergence(max_iter, res)


def be_substep(u_n, f_mid, cfg):
    """u^{n+theta} from the implicit substep; raises NonConvergence."""
    w, *_ = _solve(cfg.grid, u_n.coeffs, f_mid.coeffs, cfg.nu, cfg.theta, cfg.tau,
                   cfg.picard_tol, cfg.picard_max_iter, cfg.newton_enabled)
    return VelocityField(cfg.grid, w)


def substep_residual(w, u_n, f_mid, cfg):
    """Relative residual of the implicit substep equation at w."""
    g = cfg.grid
    ht = cfg.theta * cfg.tau
    d = (w.coeffs - u_n.coeffs) / ht + cfg.nu * g.k2 * w.coeffs \
        + nonlinear_coeffs(g, w.coeffs, w.coeffs) - f_mid.coeffs
    scale = l2_coeffs(g, f_mid.coeffs) + l2_coeffs(g, u_n.coeffs) / ht
    return l2_coeffs(g, d) / scale if scale > 0 else l2_coeffs(g, d)


def extrapolate(u_mid, u_n, theta):
    if u_mid.grid != u_n.grid:
        raise ValueError("fields live on different grids")
    return VelocityField(u_mid.grid, u_mid.coeffs / theta - (1.0 / theta - 1.0) * u_n.coeffs)


def _one_leg_defect(grid, un, unp1, fmid, nu, theta, tau):
    mid = theta * unp1 + (1.0 - theta) * un
    d = (unp1 - un) / tau + nu * grid.k2 * mid + self_advection_coeffs(grid, mid) - fmid
    return l2_coeffs(grid, d)


def one_leg_residual(u_n, u_np1, f_mid, cfg):
    """H-norm of the one-leg equation defect, with u^{n+theta} rebuilt by blending."""
    return _one_leg_defect(cfg.grid, u_n.coeffs, u_np1.coeffs, f_mid.coeffs,
                           cfg.nu, cfg.theta, cfg.tau)


# ---------------------------------------------------------------------------
# driver

def run(cfg, on_step=None):
    """Integrate cfg.steps steps and return the full TrajectoryLog."""
    g = cfg.grid
    nu, th, tau = cfg.nu, cfg.theta, cfg.tau
    F = cfg.forcing.spatial(g).coeffs
    u = cfg.u0.coeffs.copy()
    log = TrajectoryLog(config=cfg.echo())
    stride = int(cfg.snapshot_stride)
    if stride > 0:
        log.snapshots[0] = VelocityField(g, u)
    l2_n, h1_n = l2_coeffs(g, u), h1_coeffs(g, u)
    div_w = _weights(g, 0)
    for n in range(int(cfg.steps)):
        t_mid = n * tau + th * tau
        fmid = cfg.forcing.profile_value(t_mid) * F
        try:
            w, N, its, res, newt, scale = _solve(g, u, fmid, nu, th, tau, cfg.picard_tol,
                                                 cfg.picard_max_iter, cfg.newton_enabled)
        except NonConvergence as exc:
            exc.step = n
            raise
        unp1 = w / th - (1.0 / th - 1.0) * u
        dstep = unp1 - u
        rec_err = l2_coeffs(g, th * unp1 + (1.0 - th) * u - w)
        l2_np1, h1_np1, _ = norm_triple(g, unp1)
        mid_norms = norm_triple(g, w)
        rec = StepRecord(
            n=n, t=n * tau,
            l2_n=l2_n, h1_n=h1_n,
            l2_mid=mid_norms[0], h1_mid=mid_norms[1], lap_mid=mid_norms[2],
            l2_np1=l2_np1, h1_np1=h1_np1,
            d_mid=l2_coeffs(g, w - u), d_step=l2_coeffs(g, dstep), h1_step=h1_coeffs(g, dstep),
            inner_np1_n=inner_coeffs(g, unp1, u),
            p_mid=inner_coeffs(g, w - u, u), p_step=inner_coeffs(g, dstep, u),
            f_mid=l2_coeffs(g, fmid), f_dot_mid=inner_coeffs(g, fmid, w),
            b_mid=inner_coeffs(g, N, w),
            iterations=its, solver_residual=res, newton=int(newt), residual_scale=scale,
            one_leg_residual=_one_leg_defect(g, u, unp1, fmid, nu, th, tau),
            reconstruction_error=rec_err,
            divergence=math.sqrt(float(div_w @ _sq((g.kx * unp1[0] + g.ky * unp1[1])[None]))),
        )
        log.records.append(rec)
        if on_step is not None:
            on_step(rec)
        u = unp1
        l2_n, h1_n = l2_np1, h1_np1
        if stride > 0 and (n + 1) % stride == 0:
            log.snapshots[n + 1] = VelocityField(g, u)
    log.final = VelocityField(g, u)
    return log


# ---------------------------------------------------------------------------
# CSV trajectory format
#
# line 1: "# " + JSON config echo (sorted keys)
# line 2: comma-separated column names in COLUMNS order
# then one row per step; floats written with repr() so they round-trip exactly.

def log_to_csv(log):
    buf = io.StringIO()
    buf.write("# " + json.dumps(log.config, sort_keys=True) + "\n")
    buf.write(",".join(COLUMNS) + "\n")
    for r in log.records:
        buf.write(",".join(repr(getattr(r, c)) for c in COLUMNS) + "\n")
    return buf.getvalue()


def write_log(log, path):
    atomic_write(path, log_to_csv(log).encode())


def read_log(path):
    with open(path, "r") as fh:
        text = fh.read()
    return parse_log(text)


def parse_log(text):
    lines = text.splitlines()
    if len(lines) < 2 or not lines[0].startswith("# "):
        raise SchemaError("missing config header line")
    try:
        config = json.loads(lines[0][2:])
    except json.JSONDecodeError as exc:
        raise SchemaError(f"bad config header: {exc}") from None
    if lines[1].split(",") != COLUMNS:
        raise SchemaError("column header does not match the trajectory schema")
    log = TrajectoryLog(config=config)
    for i, line in enumerate(lines[2:]):
        parts = line.split(",")
        if len(parts) != len(COLUMNS):
            raise SchemaError(f"row {i}: expected {len(COLUMNS)} fields, got {len(parts)}")
        try:
            vals = {c: (int(p) if c in _INT_COLUMNS else float(p)) for c, p in zip(COLUMNS, parts)}
        except ValueError as exc:
            raise SchemaError(f"row {i}: {exc}") from None
        if vals["n"] != i:
            raise SchemaError(f"row {i}: step index {vals['n']} out of sequence")
        log.records.append(StepRecord(**vals))
    return log


def atomic_write(path, data):
    """Write bytes to path through a temporary file and rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    tmp = os.path.join(d, "." + os.path.basename(path) + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
