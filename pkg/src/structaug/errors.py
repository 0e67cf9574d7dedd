"""Exception hierarchy for the package."""

from __future__ import annotations


class StructAugError(Exception):
    """Base class for all errors raised by this package."""


class StructureError(StructAugError):
    """A table document violates a structural invariant."""


class AnnotationError(StructAugError):
    """Annotation bytes could not be parsed or do not describe a valid table."""


class ConfigError(StructAugError):
    """A configuration value is out of range or inconsistent."""


class ReplayError(StructAugError):
    """A recorded operation path cannot be re-applied to its root document."""


class EmptyDistributionError(StructAugError):
    """All sampling weights vanished; the caller should fall back to the
    unaugmented table."""


class CanvasMismatchError(StructAugError):
    """Two segment sets or documents do not share canvas dimensions."""
