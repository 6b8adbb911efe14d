"""Rough-fuzzy modular MLP: discretize, derive rough-set rules, encode, evolve, extract."""
from ._accel import backend

__version__ = "0.1.0"
__all__ = ["backend", "__version__"]
