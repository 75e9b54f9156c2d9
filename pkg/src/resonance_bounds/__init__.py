"""Numerical companion to resonance counting bounds for Schroedinger operators in odd dimensions.

Submodules: potentials, grids, kernels, birman_schwinger, determinant, counting,
oracles, bounds, presets, cli.  Nothing heavy is imported here so that the CLI can
size thread pools before numpy loads.
"""

__version__ = "0.1.0"
