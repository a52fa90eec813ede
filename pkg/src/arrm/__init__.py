"""Anticipatory radio resource management for mobile video streaming.

Library layout:

- ``lp``         bounded-variable linear programs and a revised simplex solver
- ``channel``    link budget, 3GPP path loss, per-PRB rates, prediction error
- ``scenario``   two-cell topology, Poisson arrivals, mobility, gain traces
- ``planning``   the stall-free and stall-aware LP formulations and baseline
- ``simulator``  rolling-horizon episode engine and trace recording
- ``metrics``    spectral efficiency, stalling, Monte-Carlo aggregation
- ``experiments``/``cli``  reproducible experiment drivers and entry point
"""

__version__ = "0.1.0"
