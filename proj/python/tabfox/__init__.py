"""Tabular classification pipeline with FOX hyperparameter tuning and
exact Shapley explanations, backed by a C++ core."""

from tabfox._core import *  # noqa: F401,F403
from tabfox import _core as core  # noqa: F401

__version__ = "0.1.0"
