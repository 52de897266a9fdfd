"""
Command line interface.

    oneleg run          integrate and write trajectory.csv (+ snapshots)
    oneleg certify      certificate report for a trajectory
    oneleg constants    bound ledger as JSON and a text table
    oneleg sweep        ledger over a (theta, tau, nu, amplitude) grid, CSV
    oneleg convergence  time-step order study

Exit codes: 0 success, 1 certificate violation under met hypotheses,
2 configuration or schema error, 3 nonlinear solver failure.
"""

import argparse
import json
import os
import sys

from . import certify as cert
from .config import ConfigError, load_config, make_run_config
from .constants import DomainError, as_json_number, ledger
from .experiments import convergence_csv, convergence_study, data_norms, sweep, sweep_csv
from .spectral_field import save_snapshot
from .stepper import NonConvergence, SchemaError, atomic_write, log_to_csv, read_log, run

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _dump(obj):
    return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode()


def _out(args, name):
    return os.path.join(args.out, name)


def cmd_run(args, cfg):
    rc = make_run_config(cfg, args.seed)
    try:
        log = run(rc)
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for n, u in sorted(log.snapshots.items()):
        save_snapshot(_out(args, f"snapshots/u_{n:07d}.bin"), u, {"n": n, "t": n * rc.tau})
    atomic_write(_out(args, "trajectory.csv"), log_to_csv(log).encode())
    print(f"wrote {len(log)} steps to {_out(args, 'trajectory.csv')}")
    return EXIT_OK


def cmd_certify(args, cfg):
    path = args.trajectory or cfg["certify"]["trajectory"] or _out(args, "trajectory.csv")
    try:
        log = read_log(path)
    except (OSError, SchemaError, KeyError, ValueError) as exc:
        print(f"error: cannot read trajectory {path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    c = cfg["certify"]
    variant = args.variant or c["variant"]
    try:
        led = cert.ledger_for_log(log, T=c["T"], r=c["r"], variant=variant,
                                  eps1=c["eps1"], delta1=c["delta1"])
    except (DomainError, ValueError, KeyError) as exc:
        print(f"note: bound ledger unavailable ({exc})", file=sys.stderr)
        led = None
    rep = cert.full_report(log, led=led, variant=variant)
    atomic_write(_out(args, "report.json"), rep.to_json().encode())
    atomic_write(_out(args, "report.txt"), (rep.summary() + "\n").encode())
    print(rep.summary())
    return EXIT_OK if rep.ok else EXIT_VIOLATION


def _ledger_from_cfg(cfg, args):
    r = cfg["run"]
    c = cfg["constants"]
    u0_l2, u0_h1, f_inf, lam = data_norms(cfg, args.seed)
    nu = float(r["nu"])
    rr = c["r"] if c["r"] is not None else 4.0 / (lam * nu)
    variant = args.variant or cfg["certify"]["variant"]
    return ledger(nu, lam, float(r["theta"]), float(r["tau"]), u0_l2, u0_h1, f_inf,
                  float(c["T"]), float(rr), eps1=cfg["certify"]["eps1"],
                  delta1=cfg["certify"]["delta1"], variant=variant)


def ledger_table(led):
    rows = [(k, as_json_number(v)) for k, v in led.entries()]
    w = max(len(k) for k, _ in rows)
    lines = [f"{k:<{w}}  {v}" for k, v in rows]
    return "\n".join(lines) + "\n"


def cmd_constants(args, cfg):
    try:
        led = _ledger_from_cfg(cfg, args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    atomic_write(_out(args, "ledger.json"), _dump(led.to_dict()))
    table = ledger_table(led)
    atomic_write(_out(args, "ledger.txt"), table.encode())
    sys.stdout.write(table)
    return EXIT_OK


def cmd_sweep(args, cfg):
    rows = sweep(cfg, args.seed, threads=args.threads)
    atomic_write(_out(args, "sweep.csv"), sweep_csv(rows).encode())
    bad = sum(r["status"] != "ok" for r in rows)
    print(f"wrote {len(rows)} rows ({bad} marked) to {_out(args, 'sweep.csv')}")
    return EXIT_OK


def cmd_convergence(args, cfg):
    try:
        study = convergence_study(cfg, seed=args.seed)
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    atomic_write(_out(args, "convergence.csv"), convergence_csv(study).encode())
    atomic_write(_out(args, "convergence.json"), _dump(study))
    for r in study["results"]:
        print(f"theta={r['theta']}: slope {r['slope']:.4f}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "certify": cmd_certify,
    "constants": cmd_constants,
    "sweep": cmd_sweep,
    "convergence": cmd_convergence,
}


def build_parser():
    p = argparse.ArgumentParser(prog="oneleg", description=__doc__.split("\n\n")[0].strip())
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="TOML configuration file")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--seed", type=int, default=None, help="seed for the random initial field")
        s.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
        s.add_argument("--variant", choices=("paper", "derived"), default=None,
                       help="constants variant for ledgers and certificates")
        if name == "certify":
            s.add_argument("--trajectory", help="trajectory CSV (default: OUT/trajectory.csv)")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.variant:
            cfg["certify"]["variant"] = args.variant
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
