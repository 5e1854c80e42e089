"""Shared exception root for the funlib package."""


class FunlibError(Exception):
    """Base class for all errors raised by funlib modules."""
