"""Discontinuous-Galerkin fracture of torsion-free Kirchhoff beams."""

import os as _os

# Thread caps must be in place before numpy loads its BLAS.
_threads = _os.environ.get("BEAMFRAC_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"

from .errors import (
    BeamFracError,
    ConfigError,
    DomainError,
    SolverError,
    UnsupportedScenarioError,
)
from .scenarios import ScenarioConfig, build_scenario

__all__ = [
    "BeamFracError",
    "ConfigError",
    "DomainError",
    "ScenarioConfig",
    "SolverError",
    "UnsupportedScenarioError",
    "build_scenario",
]
