"""Simulation and analysis of time-multiplexed extended EPR (1-D CV cluster) states."""

__version__ = "0.1.0"
