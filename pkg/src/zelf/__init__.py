"""Reduced-order (ZeLF) model of inertial particle focusing in curved
rectangular ducts: force fields, dynamics, equilibria, bifurcations."""

__version__ = "0.1.0"

from .forcefield import (  # noqa: E402
    RECT_1X2,
    RECT_2X1,
    CrossSection,
    DomainError,
    cross_section,
    drag,
    drag_jacobian,
    lift,
    lift_jacobian,
)
from .dynamics import (  # noqa: E402
    ModelParams,
    ModelValidityWarning,
    PhysicalParams,
    StiffnessError,
    TerminalReason,
    Trajectory,
    UnsupportedAspectRatio,
    integrate,
    nondimensionalize,
    rhs,
    rhs_jacobian,
)
from .equilibria import Equilibrium, EquilibriumSet, Kind, eigensystem, find_equilibria  # noqa: E402
from .continuation import (  # noqa: E402
    BifurcationEvent,
    Branch,
    EventKind,
    LimitCycle,
    SweepResult,
    find_limit_cycle,
    refine_event,
    sweep,
)
from .analytics import (  # noqa: E402
    LimitReport,
    drag_center_eigenvalues,
    drag_invariant,
    lift_limit_report,
    local_ellipse,
)
