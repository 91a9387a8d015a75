"""Functional simulator and analysis toolkit for an ultra-wide vector tile."""

__version__ = "0.1.0"
