"""Exception types shared across the workbench."""

from __future__ import annotations


class TwoPhotonError(Exception):
    """Base class for all workbench errors."""


class ConfigError(TwoPhotonError, ValueError):
    """Invalid parameters, configuration files or engine/source combinations."""


class PreconditionError(TwoPhotonError, ValueError):
    """A runtime or statistical precondition of an operation is not met."""


class InsufficientSpanError(PreconditionError):
    """Samples do not bracket a fringe minimum next to the envelope maximum."""
