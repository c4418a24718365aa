"""Subordinated stable processes with Levy-copula-dependent time changes."""

__version__ = "0.1.0"
