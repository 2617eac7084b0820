"""Compound-return estimators on Markov reward processes."""

from ._core import *  # noqa: F401,F403
from ._core import MrpError, NonConvexSpec, SpecError  # noqa: F401

__all__ = [name for name in dir() if not name.startswith("_")]
