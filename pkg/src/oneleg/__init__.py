"""One-leg theta time stepping for 2D Navier-Stokes on the torus, with
machine-checked energy and stability certificates."""

from .certify import CertificateReport, full_report
from .constants import (
    BoundLedger,
    DomainError,
    LogReal,
    ThetaConstants,
    admissible_tau,
    check_identities,
    half_theta_obstruction,
    ledger,
    theta_constants,
)
from .gronwall import SequenceBundle, dgl_bound, dugl_bound, verify_hypotheses
from .spectral_field import (
    TorusGrid,
    VelocityField,
    leray_project,
    nonlinear_term,
    norms,
    random_divfree_field,
    stokes_apply,
    taylor_green,
    trilinear_b,
)
from .stepper import (
    ForcingSpec,
    NonConvergence,
    RunConfig,
    StepRecord,
    TrajectoryLog,
    be_substep,
    extrapolate,
    one_leg_residual,
    run,
)

__version__ = "0.1.0"
