"""
Experiment configuration: TOML files, environment overrides, and the
translation into a RunConfig.

A configuration is a dict of sections.  Every key can be overridden from the
environment as ONELEG_<SECTION>_<KEY>, e.g. ONELEG_RUN_TAU=0.05; the value is
parsed as a TOML literal, falling back to a plain string.
"""

import os
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .spectral_field import TorusGrid, VelocityField, random_divfree_field, taylor_green
from .stepper import ForcingSpec, RunConfig

ENV_PREFIX = "ONELEG_"

DEFAULTS = {
    "run": {
        "nu": 1.0, "theta": 0.75, "tau": 0.01, "steps": 100, "resolution": 32,
        "domain_length": None, "picard_tol": 1e-12, "picard_max_iter": 200,
        "newton": True, "snapshot_stride": 0,
    },
    "initial": {"kind": "random", "amplitude": 1.0, "decay": 2.0, "seed": 0},
    "forcing": {
        "profile": "constant", "frequency": 0.0, "phase": 0.0, "amplitude": 1.0,
        # rows of k1, k2, re a1, im a1, re a2, im a2
        "modes": [[1, 2, 2.0, 0.0, -1.0, 0.0]],
    },
    "certify": {"T": None, "r": None, "variant": "derived", "eps1": None, "delta1": None,
                "trajectory": None},
    "constants": {"u0_l2": None, "u0_h1": None, "f_inf": None, "T": 1.0, "r": None},
    "sweep": {"theta": [0.75], "tau": [0.01], "nu": [1.0], "forcing_amplitude": [1.0]},
    # smooth initial data keeps theta = 1/2 (not L-stable) in its asymptotic regime
    "convergence": {"thetas": [0.75, 0.5], "taus": [0.1, 0.05, 0.025, 0.0125], "T": 1.0,
                    "reference_factor": 64, "initial_decay": 4.0},
}


class ConfigError(ValueError):
    pass


def _merge(base, over):
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in base.items()}
    for sec, vals in over.items():
        if sec not in out:
            raise ConfigError(f"unknown section [{sec}]")
        if not isinstance(vals, dict):
            raise ConfigError(f"[{sec}] must be a table")
        for k, v in vals.items():
            if k not in out[sec]:
                raise ConfigError(f"unknown key {sec}.{k}")
            out[sec][k] = v
    return out


def _parse_literal(text):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def env_overrides(environ=None):
    environ = os.environ if environ is None else environ
    over = {}
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        sec, _, key = rest.partition("_")
        if sec not in DEFAULTS or key not in DEFAULTS[sec]:
            raise ConfigError(f"environment override {name} names no config key")
        over.setdefault(sec, {})[key] = _parse_literal(raw)
    return over


def load_config(path=None, environ=None, text=None):
    """Defaults, then the TOML file (or text), then environment overrides."""
    cfg = _merge(DEFAULTS, {})
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        cfg = _merge(cfg, data)
    if text is not None:
        try:
            cfg = _merge(cfg, tomllib.loads(text))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(str(exc)) from None
    return _merge(cfg, env_overrides(environ))


def make_grid(cfg):
    run = cfg["run"]
    n = run["resolution"]
    if not isinstance(n, int) or n < 4 or n % 2:
        raise ConfigError("run.resolution must be an even integer >= 4")
    L = run["domain_length"]
    return TorusGrid(n) if L is None else TorusGrid(n, float(L))


def make_forcing(cfg):
    fc = cfg["forcing"]
    modes = []
    for row in fc["modes"]:
        if len(row) != 6:
            raise ConfigError("forcing.modes rows are [k1, k2, re1, im1, re2, im2]")
        k1, k2, r1, i1, r2, i2 = row
        modes.append(((int(k1), int(k2)), (complex(r1, i1), complex(r2, i2))))
    amp = fc["amplitude"]
    try:
        return ForcingSpec(modes=tuple(modes), profile=fc["profile"],
                           frequency=float(fc["frequency"]), phase=float(fc["phase"]),
                           amplitude=None if amp is None else float(amp))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def make_initial(cfg, grid, seed=None):
    ic = cfg["initial"]
    kind = ic["kind"]
    amp = float(ic["amplitude"])
    s = int(ic["seed"] if seed is None else seed)
    if kind == "zero" or amp == 0:
        u = VelocityField.zeros(grid)
    elif kind == "taylor_green":
        u = taylor_green(grid, amp)
    elif kind == "random":
        u = random_divfree_field(grid, s, amplitude=amp, decay=float(ic["decay"]))
    else:
        raise ConfigError(f"unknown initial.kind {kind!r}")
    return u, {"kind": kind, "amplitude": amp, "decay": float(ic["decay"]), "seed": s}


def make_run_config(cfg, seed=None):
    grid = make_grid(cfg)
    u0, echo = make_initial(cfg, grid, seed)
    r = cfg["run"]
    try:
        return RunConfig(nu=float(r["nu"]), theta=float(r["theta"]), tau=float(r["tau"]),
                         steps=int(r["steps"]), grid=grid, forcing=make_forcing(cfg), u0=u0,
                         picard_tol=float(r["picard_tol"]),
                         picard_max_iter=int(r["picard_max_iter"]),
                         newton_enabled=bool(r["newton"]),
                         snapshot_stride=int(r["snapshot_stride"]), initial=echo)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
