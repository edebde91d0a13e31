"""Mean field particle simulation with non-asymptotic concentration certificates.

Subpackages and modules
-----------------------
measure    finite-state measures, functions, kernels, Dobrushin coefficient
models     Feynman-Kac, Gaussian mean field and McKean gas models
particles  the N-particle chain and its local error / fluctuation fields
convex     Legendre-Fenchel inverses behind the certificates
bounds     certificate calculators and model parameters
verify     replicated Monte Carlo checks
cli        the ``mfconc`` command line tool
"""
__version__ = "0.1.0"

from .errors import DegenerateRate, DimensionMismatch, InvalidMeasure, ModelError, OracleUnavailable
from .measure import (
    BoundedFunction,
    FiniteKernel,
    ParticleCloud,
    ProbabilityVector,
    boltzmann_gibbs,
    compose,
    dobrushin,
    integrate,
)

__all__ = [
    "__version__",
    "BoundedFunction",
    "DegenerateRate",
    "DimensionMismatch",
    "FiniteKernel",
    "InvalidMeasure",
    "ModelError",
    "OracleUnavailable",
    "ParticleCloud",
    "ProbabilityVector",
    "boltzmann_gibbs",
    "compose",
    "dobrushin",
    "integrate",
]
