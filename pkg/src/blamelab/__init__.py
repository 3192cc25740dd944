"""Type error localization as token classification."""

__version__ = "0.1.0"
