"""Bilayer omni-surface multi-user MIMO simulator.

Core library for channel synthesis, two-timescale fixed-rank channel
estimation, WMMSE coordinate-descent beamforming, and seeded Monte Carlo
sweeps, plus a FastAPI service and a thin CLI client around them.
"""

__version__ = "0.1.0"
