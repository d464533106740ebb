"""Numerical toolkit for 3-d m-quasi Einstein metrics whose Ricci operator has a double eigenvalue.

The public surface re-exports the pieces most scripts need; submodules hold
the full API.
"""

from .builders import (
    EinsteinMetric,
    LCFProfiles,
    build_einstein_block,
    build_lcf_space,
    build_space,
    einstein_residual,
    shoot_lcf,
)
from .classifier import (
    Case1,
    Case2,
    CaseI3,
    CaseII3,
    ClassificationResult,
    classify,
    completeness_witness,
    incompleteness_certificate,
    incompleteness_witness,
    thresholds,
)
from .errors import *  # noqa: F401,F403
from .fields import AxisField, ConstantField, CoordinateField, ScalarField
from .geometry import CoordChart, DiagonalMetric, curvature, fd_cross_check, ricci_eigenstructure
from .ode import (
    EtaProfile,
    KobayashiP,
    LCFSystem,
    PotentialW,
    RadialP,
    TauProfile,
    closed_form_profile,
    integrate,
)
from .presets import PRESETS, preset_space
from .verifier import QESpace, codazzi_check, mu_scan, qe_residual, verify_space

__version__ = "0.1.0"
