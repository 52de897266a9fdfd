"""
Certifying a small-data trajectory
==================================

Run the small-data configuration, check every energy inequality on the
logged norms and print the report.  With this data the step-size threshold
of the uniform gradient bound exceeds tau, so the global bound is checked
with its hypotheses met.
"""

from pathlib import Path

from oneleg import certify
from oneleg.config import load_config, make_run_config
from oneleg.constants import admissible_tau
from oneleg.stepper import run

cfg = load_config(Path(__file__).resolve().parent.parent / "configs" / "small_data.toml")
log = run(make_run_config(cfg))
report = certify.full_report(log)

led = certify.ledger_for_log(log)
print("tau", log.config["tau"], "admissible tau", admissible_tau(led).decimal(6))
print(report.summary())
