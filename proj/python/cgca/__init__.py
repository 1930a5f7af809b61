"""Correlation-guided cluster annealing for Ising spin glasses and Max-Cut.

Thin layer over the compiled ``_cgca`` extension. Correlation matrices are
numpy arrays; spin configurations are lists of +1/-1.
"""

from ._cgca import *  # noqa: F401,F403
from ._cgca import Error, InvalidParameter, SizeLimit, ConfigError  # noqa: F401

__version__ = "0.1.0"
