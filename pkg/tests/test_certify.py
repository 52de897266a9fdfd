import dataclasses
import json
import math
import os
import sys
from pathlib import Path

import numpy as np
import pytest

from oneleg import certify as cert
from oneleg.config import load_config, make_run_config
from oneleg.constants import admissible_tau, log_of
from oneleg.spectral_field import TorusGrid
from oneleg.stepper import ForcingSpec, RunConfig, StepRecord, TrajectoryLog, parse_log, log_to_csv, run
from oneleg.spectral_field import taylor_green

from conftest import make_cfg

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = Path(__file__).parent / "fixtures" / "golden_report.json"
GOLDEN_STEPS = 200


def zero_log(N=20, f_inf=0.0, theta=0.75, tau=0.1, nu=1.0):
    """Synthetic all-zero trajectory with chosen header data."""
    cols = [f.name for f in dataclasses.fields(StepRecord)]
    recs = []
    for n in range(N):
        v = {c: 0.0 for c in cols}
        v.update(n=n, t=n * tau, iterations=0, newton=0)
        recs.append(StepRecord(**v))
    cfg = dict(nu=nu, theta=theta, tau=tau, steps=N, lambda1=1.0, f_inf=f_inf,
               u0_l2=0.0, u0_h1=0.0, picard_tol=1e-12)
    return TrajectoryLog(config=cfg, records=recs)


@pytest.fixture(scope="module")
def forced_log():
    return run(make_cfg(TorusGrid(32), theta=0.75, tau=0.05, steps=300, nu=1.0))


@pytest.fixture(scope="module")
def forced_report(forced_log):
    return cert.full_report(forced_log)


# --- individual checks on closed-form inputs ---------------------------------------

def test_energy0_zero_trajectory():
    r = cert.check_energy0(zero_log())
    assert r.status == "pass" and r.min_margin == 0.0


def test_energy0_zero_trajectory_with_forcing():
    th, tau = 0.75, 0.1
    r = cert.check_energy0(zero_log(f_inf=1.0, theta=th, tau=tau))
    assert r.status == "pass"
    assert r.min_margin == pytest.approx(th * tau / (1.0 * 1.0), rel=1e-15)


def test_identity_zero_trajectory():
    r = cert.check_energy1_identity(zero_log())
    assert r.extra["max_residual"] == 0.0 and r.status == "pass"


def test_identity_backward_euler(grid):
    log = run(make_cfg(grid, theta=1.0, tau=0.05, steps=50, nu=1.0))
    r = cert.check_energy1_identity(log)
    assert r.extra["constants"] == pytest.approx({"alpha": 1.0, "epsilon": 0.05, "a": 1.0, "b": 1.0})
    assert r.extra["max_residual"] <= 1e-12
    assert r.status == "pass"


def test_identity_theta_06(grid):
    log = run(make_cfg(grid, theta=0.6, tau=0.05, steps=300, nu=1.0))
    r = cert.check_energy1_identity(log)
    assert r.status == "pass" and r.extra["max_residual"] <= 1e-10
    # the printed prefactor does not satisfy the equality
    assert r.extra["paper_variant_max_residual"] > 1e-6


def test_h_decay_taylor_green(grid):
    nu, th, tau, N = 1.0, 0.75, 0.05, 400
    log = run(RunConfig(nu=nu, theta=th, tau=tau, steps=N, grid=grid, forcing=ForcingSpec(),
                        u0=taylor_green(grid)))
    led = cert.ledger_for_log(log)
    env, uni, absorb = cert.check_h_decay(log, led)
    assert env.status == "pass" and uni.status == "pass"
    # closed form: ||u^n||^2 = ||u0||^2 r^{2n}, and the envelope rate is far slower
    r = (1 - 2 * nu * tau * (1 - th)) / (1 + 2 * nu * tau * th)
    usq = log.column("l2_n") ** 2
    assert np.allclose(usq, 2 * math.pi ** 2 * r ** (2 * np.arange(N)), rtol=1e-11)
    # no forcing: the absorbing time is infinite unless u0 = 0
    assert absorb.status == "not-applicable" or absorb.steps_checked == 0


def test_energy_budget_decay_run(grid):
    log = run(make_cfg(grid, f_amp=0.0, tau=0.05, steps=200, nu=1.0))
    d = cert._Data(log)
    budget = d.u0_l2 ** 2 - (d.usq[-1] + math.fsum(d.nu * d.tau * d.h1_mid ** 2))
    assert budget >= 0
    r = next(c for c in cert.check_l2h1_sums(log, None) if c.id == "dissipation_sum")
    assert r.status == "pass"


def test_small_data_one_step_v(grid):
    # ||u0|| = ||f|| = 0.01: the smallness hypothesis holds at every step
    log = run(make_cfg(grid, theta=0.75, tau=0.1, steps=200, nu=1.0, u_amp=0.01, f_amp=0.01))
    led = cert.ledger_for_log(log)
    checks = {c.id: c for c in cert.check_v_recursion(log, led)}
    assert checks["one_step_v"].extra["steps_with_hypothesis"] == 200
    assert checks["one_step_v"].status == "pass"
    assert checks["discriminant"].status == "pass"
    assert checks["quadratic"].status == "pass"
    assert checks["gradient_energy"].status == "pass"


def test_linear_mode_gradient_energy(grid):
    # nonlinearity vanishes: the inequality is a linear decay statement
    nu, th, tau = 1.0, 0.75, 0.05
    log = run(RunConfig(nu=nu, theta=th, tau=tau, steps=100, grid=grid, forcing=ForcingSpec(),
                        u0=taylor_green(grid)))
    r = cert.check_v_recursion(log, None)[0]
    assert r.status == "pass"
    rr = (1 - 2 * nu * tau * (1 - th)) / (1 + 2 * nu * tau * th)
    # ||grad u||^2 = 2 ||u||^2 on this mode
    g = log.column("h1_n") ** 2
    assert np.allclose(g[1:] / g[:-1], rr ** 2, rtol=1e-12)


def test_violation_is_caught(forced_log):
    bad = TrajectoryLog(config=dict(forced_log.config), records=list(forced_log.records))
    r = bad.records[17]
    bad.records[17] = dataclasses.replace(r, l2_np1=r.l2_np1 * 1.5)
    res = {c.id: c for c in cert.check_l2h1_sums(bad, None)}
    assert res["energy_step"].status == "fail"
    assert res["energy_step"].first_violation == 17
    rep = cert.full_report(bad)
    assert not rep.ok


def test_errors_are_aggregated(forced_log, monkeypatch):
    def boom(*a):
        raise RuntimeError("synthetic")
    monkeypatch.setattr(cert, "check_h_decay", boom)
    rep = cert.full_report(forced_log)
    e = rep.check("h_decay")
    assert e.status == "error" and "synthetic" in e.extra["error"]
    assert rep.check("energy_identity").status == "pass"
    assert not rep.ok


# --- full reports ------------------------------------------------------------------------

def test_zero_run_all_pass():
    log = run(make_run_config(load_config(ROOT / "configs" / "zero.toml")))
    rep = cert.full_report(log)
    assert rep.ok
    for c in rep.checks:
        assert c.status in ("pass", "not-applicable"), (c.id, c.status)
    assert rep.verdicts["H_stability"] == "certified"


def test_forced_run_report(forced_report):
    assert forced_report.ok
    for cid in ("energy_substep", "energy_identity", "energy_step", "gradient_step",
                "gradient_energy", "h_envelope", "h_absorbing", "dissipation_window_100"):
        assert forced_report.check(cid).status == "pass", cid


def test_gating_when_tau_exceeds_admissible(forced_log, forced_report):
    led = cert.ledger_for_log(forced_log)
    assert log_of(admissible_tau(led)) < math.log(forced_log.config["tau"])
    for cid in ("v_global_K7", "v_global_K6", "v_finite_horizon"):
        c = forced_report.check(cid)
        assert c.status == "hypothesis-unmet" and c.hypothesis_met is False
        assert c.extra["tau_admissible"] is False
    assert forced_report.verdicts["V_stability"].startswith("not certified")
    assert forced_report.verdicts["empirically_bounded"] is True


def test_shadow_variant_reported(forced_report):
    c = forced_report.check("v_global_K7")
    assert "paper_variant" in c.extra
    assert set(forced_report.metadata["ledgers"]) == {"derived", "paper"}


def test_report_metadata(forced_report):
    m = forced_report.metadata
    assert "index_convention" in m and m["deviations"]
    d = json.loads(forced_report.to_json())
    assert d["schema_version"] == cert.SCHEMA_VERSION
    assert len(d["checks"]) == len(forced_report.checks)
    json.dumps(d, allow_nan=False)


def test_recertify_stored_log_is_bit_identical(forced_log, forced_report):
    back = parse_log(log_to_csv(forced_log))
    assert cert.full_report(back).to_json() == forced_report.to_json()


def test_no_ledger_path(forced_log):
    rep = cert.full_report(forced_log, T=1.0, r=-1.0)
    assert rep.check("bound_ledger").status == "not-applicable"
    assert rep.check("energy_identity").status == "pass"


# --- golden fixture ------------------------------------------------------------------------

def golden_report():
    cfg = load_config(ROOT / "configs" / "benchmark.toml", environ={})
    cfg["run"]["steps"] = GOLDEN_STEPS
    return cert.full_report(run(make_run_config(cfg)))


def _strip(d):
    d = json.loads(json.dumps(d))
    d["metadata"].pop("environment", None)
    return d


def _compare(a, b, path=""):
    if isinstance(a, dict):
        assert isinstance(b, dict) and set(a) == set(b), path
        for k in a:
            _compare(a[k], b[k], f"{path}.{k}")
    elif isinstance(a, list):
        assert isinstance(b, list) and len(a) == len(b), path
        for i, (x, y) in enumerate(zip(a, b)):
            _compare(x, y, f"{path}[{i}]")
    elif isinstance(a, float) and isinstance(b, float):
        assert b == pytest.approx(a, rel=1e-9, abs=1e-13), path
    else:
        assert a == b, path


def test_golden_report():
    assert GOLDEN.exists(), "golden fixture missing; regenerate with python tests/test_certify.py"
    frozen = json.loads(GOLDEN.read_text())
    _compare(_strip(frozen), _strip(golden_report().to_dict()))


if __name__ == "__main__":
    # regenerate the frozen fixture (only when the check set changes on purpose)
    if "--regen" in sys.argv:
        GOLDEN.parent.mkdir(exist_ok=True)
        GOLDEN.write_text(golden_report().to_json())
        print("wrote", GOLDEN)
