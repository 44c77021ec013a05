"""Macro-management benchmark pipeline and sequence-model baselines."""

__version__ = "0.1.0"
