"""Exception hierarchy.

``InputError`` doubles as a ``ValueError`` so plain callers can catch either.
"""

from __future__ import annotations


class GeoTrajError(Exception):
    """Base class for all errors raised by geotraj."""


class InputError(GeoTrajError, ValueError):
    """Invalid argument or violated precondition."""


class InsufficientDataError(InputError):
    """Not enough observations to fit the requested model."""


class AnnotationError(InputError):
    """Malformed annotation document."""


class ConfigError(GeoTrajError):
    """Unknown or invalid configuration value."""
