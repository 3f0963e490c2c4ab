"""rydcav: optical response of a cold Rydberg-atom ensemble in a cavity.

Linear intracavity EIT spectra, mean-field Rydberg-blockade nonlinearity,
semi-classical bubble dynamics with dark-state decay, and least-squares
spectroscopy fitting.
"""

from ._version import __version__
from .bubble import (
    BubbleOperators,
    BubbleState,
    TimeSeries,
    build_operators,
    evolve,
    rhs,
    steady_transmission_bubble,
)
from .errors import ConfigError, IntegrationError, SingularParameterError, SolverError
from .fitting import FitProblem, FitResult, XiEstimate, fit, fit_xi_series
from .interactions import (
    InteractionSummary,
    atoms_per_bubble,
    blockade_volume,
    c6_d,
    c6_s,
    kappa,
)
from .linear import Spectrum, scan_linear, transmission_linear
from .meanfield import (
    MeanFieldSolution,
    NonlinearSpectrum,
    scan_meanfield,
    solve_self_consistent,
    steady_residual,
    transmission_meanfield,
)
from .params import (
    CavityParams,
    ComplexDetuning,
    DriveParams,
    EnsembleParams,
    PhysicalParams,
    RydbergLevel,
    ScanSpec,
    cloud_volume_gaussian,
    linewidth_from_geometry,
    load_config,
    params_from_dict,
    params_to_dict,
    to_angular,
    validate,
)

__all__ = [
    "__version__",
    "BubbleOperators", "BubbleState", "TimeSeries", "build_operators",
    "evolve", "rhs", "steady_transmission_bubble",
    "ConfigError", "IntegrationError", "SingularParameterError", "SolverError",
    "FitProblem", "FitResult", "XiEstimate", "fit", "fit_xi_series",
    "InteractionSummary", "atoms_per_bubble", "blockade_volume", "c6_d",
    "c6_s", "kappa",
    "Spectrum", "scan_linear", "transmission_linear",
    "MeanFieldSolution", "NonlinearSpectrum", "scan_meanfield",
    "solve_self_consistent", "steady_residual", "transmission_meanfield",
    "CavityParams", "ComplexDetuning", "DriveParams", "EnsembleParams",
    "PhysicalParams", "RydbergLevel", "ScanSpec", "cloud_volume_gaussian",
    "linewidth_from_geometry", "load_config", "params_from_dict",
    "params_to_dict", "to_angular", "validate",
]
