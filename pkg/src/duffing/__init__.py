"""Open quantum dynamics of a mesoscopic driven Duffing oscillator.

A library and CLI that time-evolves the oscillator's density matrix in the
frame rotating at the drive frequency, with a spectrally filtered (beyond
rotating-wave) dissipator for an Ohmic bath, and the classical
slow-amplitude analysis needed to interpret the results: bifurcation
diagram, quantum-shifted critical drive, attractor initial states, Wigner
snapshots, and attractor-escape rates with their scaling in drive
distance.
"""

__version__ = "0.1.0"

from .params import SystemParams, DerivedParams, derived_quantities  # noqa: F401
from .fock import DensityMatrix, coherent_state  # noqa: F401
from .spectra import RotatingFrameSystem, rwa_hamiltonian  # noqa: F401
from .bath import DissipatorSet, build_dissipator  # noqa: F401
from .propagate import EvolutionRecord, evolve, build_system  # noqa: F401
from .classical import (  # noqa: F401
    stationary_roots,
    critical_forces,
    quantum_shifted_bifurcation,
    attractor_coherent_amplitudes,
)
# the wigner evaluator lives in duffing.wigner (kept a module attribute so
# `from duffing import wigner` yields the module, not the function)
from .wigner import WignerGrid, attractor_decomposition  # noqa: F401
from .analysis import RateFitResult, ScalingFitResult, tunneling_rate, scaling_fit  # noqa: F401
