"""Shared exception hierarchy for the yada package."""


class YadaError(Exception):
    """Base class for every error raised by this package."""
