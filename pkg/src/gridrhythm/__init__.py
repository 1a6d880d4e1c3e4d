"""Rhythmic control of automated vehicles on one-way grid networks.

The package splits into:

- ``network``: one-way grid construction, shortest paths, detour ratios
- ``rhythm``: pre-scheduled virtual platoons and conflict-freedom checks
- ``lp``: bounded-variable revised simplex with warm restarts
- ``routing``: per-interval demand-to-platoon assignment programs
- ``integrality``: integrality diagnostics for the routing polytopes
- ``speedcurve``: speed profiles for streets with irregular block lengths
- ``simulation``: rolling-horizon traffic simulator for the controller
- ``benchmarks``: max-pressure and first-come-first-served baselines
- ``cli``: experiment runner, plot-data exporter, acceptance checks
"""

__version__ = "0.1.0"
