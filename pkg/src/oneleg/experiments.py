"""
Multi-run studies: time-step convergence order and constant sweeps over
(theta, tau, nu, forcing amplitude) grids.
"""

import copy
import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import make_forcing, make_grid, make_initial, make_run_config
from .constants import (
    DomainError,
    admissible_tau,
    half_theta_obstruction,
    ledger,
    log_of,
    theta_constants,
)
from .spectral_field import h1_coeffs, l2_coeffs
from .stepper import run


def _final_state(cfg, theta, tau, T, seed=None):
    c = copy.deepcopy(cfg)
    steps = int(round(T / tau))
    if not math.isclose(steps * tau, T, rel_tol=1e-12):
        raise ValueError(f"T={T} is not a multiple of tau={tau}")
    c["run"].update(theta=theta, tau=tau, steps=steps, snapshot_stride=0)
    log = run(make_run_config(c, seed))
    return log.final


def slope(taus, errors):
    """Least-squares slope of log(error) against log(tau)."""
    x = np.log(np.asarray(taus, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def convergence_study(cfg, thetas=None, taus=None, T=None, reference_factor=None, seed=None):
    """L2 error at time T against a reference run with tau_min / reference_factor."""
    cc = cfg["convergence"]
    thetas = cc["thetas"] if thetas is None else thetas
    taus = sorted(cc["taus"] if taus is None else taus, reverse=True)
    T = float(cc["T"] if T is None else T)
    factor = int(cc["reference_factor"] if reference_factor is None else reference_factor)
    if cc.get("initial_decay") is not None:
        cfg = copy.deepcopy(cfg)
        cfg["initial"]["decay"] = float(cc["initial_decay"])
    out = {"T": T, "taus": list(taus), "reference_factor": factor,
           "initial_decay": cfg["initial"]["decay"], "results": []}
    for th in thetas:
        ref = _final_state(cfg, th, taus[-1] / factor, T, seed)
        g = ref.grid
        errs = []
        for tau in taus:
            u = _final_state(cfg, th, tau, T, seed)
            errs.append(l2_coeffs(g, u.coeffs - ref.coeffs))
        out["results"].append({
            "theta": th, "errors": errs, "slope": slope(taus, errs),
            "pairwise_rates": [math.log(errs[i] / errs[i + 1]) / math.log(taus[i] / taus[i + 1])
                               for i in range(len(taus) - 1)],
            "reference_l2": l2_coeffs(g, ref.coeffs),
        })
    return out


def convergence_csv(study):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "tau", "l2_error"])
    for r in study["results"]:
        for tau, e in zip(study["taus"], r["errors"]):
            w.writerow([repr(r["theta"]), repr(tau), repr(e)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# constant sweeps

SWEEP_COLUMNS = ["theta", "tau", "nu", "f_inf", "u0_l2", "u0_h1", "lambda1_nu_tau",
                 "alpha", "epsilon", "a", "b", "obstruction", "kappa1", "ln_kappa2",
                 "ln_kappa3", "ln_kappa4", "ln_admissible_tau", "admissible_tau", "tau_admissible",
                 "ln_K7", "T0", "status"]


def data_norms(cfg, seed=None):
    """(||u0||, ||grad u0||, ||f||_inf), with [constants] entries taking precedence."""
    c = cfg["constants"]
    grid = make_grid(cfg)
    u0, _ = make_initial(cfg, grid, seed)
    f = make_forcing(cfg)
    l2 = c["u0_l2"] if c["u0_l2"] is not None else l2_coeffs(grid, u0.coeffs)
    h1 = c["u0_h1"] if c["u0_h1"] is not None else h1_coeffs(grid, u0.coeffs)
    fi = c["f_inf"] if c["f_inf"] is not None else f.sup_norm(grid)
    return float(l2), float(h1), float(fi), grid.lambda1


def sweep_point(args):
    theta, tau, nu, famp, u0_l2, u0_h1, f_unit, lam, T, r, variant = args
    f_inf = f_unit * famp
    row = dict(theta=theta, tau=tau, nu=nu, f_inf=f_inf, u0_l2=u0_l2, u0_h1=u0_h1,
               lambda1_nu_tau=lam * nu * tau)
    status = []
    try:
        row["obstruction"] = half_theta_obstruction(theta, lam * nu * tau)
    except DomainError as exc:
        row["obstruction"] = ""
        status.append(str(exc))
    try:
        tc = theta_constants(theta, lam, nu, tau, variant)
        row.update(alpha=tc.alpha, epsilon=tc.epsilon, a=tc.a, b=tc.b)
    except DomainError as exc:
        status.append(str(exc))
    try:
        rr = 4.0 / (lam * nu) if r is None else r
        led = ledger(nu, lam, theta, tau, u0_l2, u0_h1, f_inf, T, rr, variant=variant)
        adm = admissible_tau(led)
        row.update(
            kappa1=float(led.kappa1), ln_kappa2=log_of(led.kappa2),
            ln_kappa3=log_of(led.kappa3), ln_kappa4=log_of(led.kappa4),
            ln_admissible_tau=log_of(adm), admissible_tau=adm.decimal(17),
            tau_admissible=bool(math.log(tau) <= log_of(adm)),
            ln_K7=log_of(led.K7), T0=float(led.T0),
        )
    except DomainError as exc:
        status.append(str(exc))
    row["status"] = "ok" if not status else "; ".join(status)
    return row


def sweep(cfg, seed=None, threads=1):
    """One row per grid point; DomainError rows are marked and the sweep continues."""
    s = cfg["sweep"]
    u0_l2, u0_h1, f_inf, lam = data_norms(cfg, seed)
    # scale the forcing norm by the requested amplitude relative to the configured one
    base_amp = cfg["forcing"]["amplitude"]
    f_unit = f_inf / base_amp if base_amp else f_inf
    c = cfg["constants"]
    T = float(c["T"])
    r = c["r"]
    variant = cfg["certify"]["variant"]
    for name in ("theta", "tau", "nu", "forcing_amplitude"):
        if not s[name]:
            raise ValueError(f"sweep axis {name} is empty")
    pts = [(th, tau, nu, fa, u0_l2, u0_h1, f_unit, lam, T, r, variant)
           for th, tau, nu, fa in itertools.product(s["theta"], s["tau"], s["nu"],
                                                     s["forcing_amplitude"])]
    if threads > 1 and len(pts) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(sweep_point, pts))
    else:
        rows = [sweep_point(p) for p in pts]
    return rows


def sweep_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow([_cell(row.get(k, "")) for k in SWEEP_COLUMNS])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)
