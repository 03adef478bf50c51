"""Exception types shared across the package.

Two families matter for the CLI exit-code contract: configuration errors
(exit 1) and physics guards that abort a run which would otherwise produce
silently wrong numbers (exit 2).
"""


class ConfigError(ValueError):
    """Bad or unknown configuration input."""


class ParameterError(ConfigError):
    """Parameter set violates a model invariant."""


class PhysicsGuard(RuntimeError):
    """Base class for runtime aborts of a physically invalid computation."""


class TruncationOverflow(PhysicsGuard):
    """State support reached the top of the truncated Fock basis."""


class TraceDrift(PhysicsGuard):
    """Trace of the density matrix drifted beyond tolerance during evolution."""


class DegenerateTracking(PhysicsGuard):
    """Adiabatic eigenstate tracking hit an unresolvable (near-)degeneracy."""


class NoBistability(PhysicsGuard):
    """Detuning outside the bistable window; critical drives undefined."""


class InsufficientDecay(PhysicsGuard):
    """Occupation decayed too little within the simulated time to fit a rate."""


class GridTooSmall(PhysicsGuard):
    """Phase-space grid does not contain the state's support."""
