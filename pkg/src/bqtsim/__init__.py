"""Simulator and exhaustive verifier for bidirectional (controlled) teleportation."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .layout import ConfigError, ProtocolConfig, RegisterLayout, build_layout
from .oracle import (
    EquivalenceResult,
    VerificationReport,
    equivalent_up_to_relabeling,
    schmidt_product_check,
    verify_all_branches,
)
from .protocol import BranchReport, CorrectionPlan, ProtocolFailure, build_channel, run
from .statevec import Basis, MeasurementRecord, StateVector

__all__ = [
    "BACKEND",
    "Basis",
    "BranchReport",
    "ConfigError",
    "CorrectionPlan",
    "EquivalenceResult",
    "MeasurementRecord",
    "ProtocolConfig",
    "ProtocolFailure",
    "RegisterLayout",
    "StateVector",
    "VerificationReport",
    "build_channel",
    "build_layout",
    "equivalent_up_to_relabeling",
    "run",
    "schmidt_product_check",
    "verify_all_branches",
]
