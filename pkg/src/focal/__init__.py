"""Continual active learning over multi-view feature datasets.

The engine grows one Gaussian mixture per category from labeled feature
vectors, trains a linear head each increment with pseudo-rehearsal instead
of stored data, and spends its label budget on the objects whose predictions
look least certain across viewpoints.
"""

__version__ = "0.1.0"

from .errors import DataError, FocalError, InteractiveAbort, UsageError

__all__ = [
    "__version__",
    "FocalError",
    "DataError",
    "UsageError",
    "InteractiveAbort",
]
