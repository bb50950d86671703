"""Structured-grid simulator and certification toolkit for a two-phase
viscoelastoplastic fluid.

The package couples a Cahn-Hilliard phase field to momentum transport and an
objective (corotational) stress evolution with a rate-independent plastic
dissipation potential, discretized implicitly on a MAC-staggered grid. Every
accepted time step carries a discrete energy-dissipation certificate, and a
verifier evaluates the relative-energy (dissipative solution) inequality
against smooth test triples, including the vanishing stress-diffusion limit.
"""

from .grid import (
    Grid,
    ScalarField,
    VectorField,
    SymTraceFreeTensorField,
    AntisymTensorField,
    save_fields,
    load_fields,
)
from .materials import MaterialParams, PlasticParams
from .state import State
from .errors import (
    VepflowError,
    ConfigError,
    NewtonNonConvergence,
    StressNonConvergence,
    OuterNonConvergence,
)

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "SymTraceFreeTensorField",
    "AntisymTensorField",
    "save_fields",
    "load_fields",
    "MaterialParams",
    "PlasticParams",
    "State",
    "VepflowError",
    "ConfigError",
    "NewtonNonConvergence",
    "StressNonConvergence",
    "OuterNonConvergence",
    "__version__",
]
