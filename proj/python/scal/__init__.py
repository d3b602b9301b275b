"""Span-constrained planning and optimistic learning for average-reward MDPs."""

from ._core import *  # noqa: F401,F403
from ._core import CSV_HEADER, ConfigError, NonConvergence, NumericalFailure  # noqa: F401
