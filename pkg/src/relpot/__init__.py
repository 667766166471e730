"""Kernels, simulation and two-sided estimate checks for relativistic stable processes."""

__version__ = "0.1.0"
