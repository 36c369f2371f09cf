"""Discontinuous Galerkin solver for the 1D1V two-species Vlasov-Ampere system."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0+unknown"

from .config import RunConfig, apply_overrides, config_from_dict, load_config, loads_config
from .driver import Simulation, build_state
from .errors import BlowUpError, ConfigError, SolverError, VadgError
from .field import ElectricField, NodalField, SpeciesGrid, State, compute_moments
from .physics import PRESETS, Domain, PlasmaParams

__all__ = [
    "__version__",
    "RunConfig",
    "apply_overrides",
    "config_from_dict",
    "load_config",
    "loads_config",
    "Simulation",
    "build_state",
    "BlowUpError",
    "ConfigError",
    "SolverError",
    "VadgError",
    "ElectricField",
    "NodalField",
    "SpeciesGrid",
    "State",
    "compute_moments",
    "PRESETS",
    "Domain",
    "PlasmaParams",
]
