"""Planar-microcavity single-photon-emitting-diode simulator.

Submodules:
    multilayer  transfer-matrix optics of planar stacks and Bragg mirrors
    dipole      dipole emission in layered media, angular patterns, efficiency
    designer    cavity parameter sweeps and top-mirror optimization
    qd          kinetic Monte Carlo quantum-dot photon source
    hbt         detection chain, correlation histograms, peak-area analysis
    presets     bundled JSON run configurations
    cli         command-line front end
"""

from .errors import InvalidInput, NumericalFailure, UnsupportedInput

__all__ = ["InvalidInput", "NumericalFailure", "UnsupportedInput"]
__version__ = "0.1.0"
