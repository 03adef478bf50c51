"""Operators and states in the truncated Fock basis.

Operators are plain complex ndarrays of shape (dim, dim); the ladder
convention is a|n> = sqrt(n)|n-1>, i.e. a[n-1, n] = sqrt(n).  Everything
combined in one expression must share the same dim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TruncationOverflow
from .params import SystemParams, derived_quantities

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-6


def annihilation(dim: int) -> np.ndarray:
    if dim < 2:
        raise ValueError("dim must be >= 2")
    a = np.zeros((dim, dim), dtype=complex)
    n = np.arange(1, dim)
    a[n - 1, n] = np.sqrt(n)
    return a


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).conj().T


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def position(dim: int, p: SystemParams) -> np.ndarray:
    """x = x_zpf (a + a^dag); Hermitian and tridiagonal."""
    a = annihilation(dim)
    return derived_quantities(p).x_zpf * (a + a.conj().T)


def momentum(dim: int, p: SystemParams) -> np.ndarray:
    """p = i sqrt(aleph/2) (a^dag - a), the conjugate of :func:`position`."""
    a = annihilation(dim)
    return 1j * math.sqrt(p.aleph / 2.0) * (a.conj().T - a)


def coherent_ket(alpha: complex, dim: int) -> np.ndarray:
    """Normalized coherent-state amplitudes exp(-|a|^2/2) a^n / sqrt(n!).

    Amplitudes are built in the log domain so large |alpha| cannot
    overflow the factorial, then renormalized after truncation.  Raises
    :class:`TruncationOverflow` when the lost tail exceeds 1e-6.
    """
    if abs(alpha) ** 2 >= dim / 4.0:
        raise TruncationOverflow(
            f"|alpha|^2={abs(alpha)**2:.2f} too large for dim={dim} (need < dim/4)"
        )
    n = np.arange(dim)
    if alpha == 0:
        ket = np.zeros(dim, dtype=complex)
        ket[0] = 1.0
        return ket
    log_mag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * _log_factorial(dim)
    ket = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    norm_sq = float(np.sum(np.abs(ket) ** 2))
    deficit = 1.0 - norm_sq
    if deficit > 1e-6:
        raise TruncationOverflow(
            f"coherent state |alpha|={abs(alpha):.3f} loses {deficit:.2e} "
            f"probability beyond dim={dim}"
        )
    return ket / math.sqrt(norm_sq)


def _log_factorial(dim: int) -> np.ndarray:
    out = np.zeros(dim)
    np.cumsum(np.log(np.arange(1, dim)), out=out[1:])
    return out


@dataclass
class DensityMatrix:
    """Hermitian, unit-trace state in the truncated Fock basis.

    Validity is checked at construction: hermiticity to 1e-10, trace to
    1e-8, and a soft positivity bound (eigenvalues >= -1e-6) that tolerates
    the small negativity a non-completely-positive generator can produce.
    """

    matrix: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        self.matrix = m
        if self.check:
            self.validate()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self) -> None:
        asym = float(np.abs(self.matrix - self.matrix.conj().T).max())
        if asym > HERMITICITY_TOL:
            raise ValueError(f"not Hermitian: max asymmetry {asym:.2e}")
        tr = complex(np.trace(self.matrix))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr:.10f} != 1")
        evals = np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))
        if evals.min() < -POSITIVITY_TOL:
            raise ValueError(f"negative eigenvalue {evals.min():.2e}")

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.trace(op @ self.matrix))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()


def coherent_state(alpha: complex, dim: int) -> DensityMatrix:
    """Pure coherent state |alpha><alpha| (renormalized after truncation)."""
    ket = coherent_ket(alpha, dim)
    return DensityMatrix(np.outer(ket, ket.conj()))


def fock_state(n: int, dim: int) -> DensityMatrix:
    ket = np.zeros(dim, dtype=complex)
    ket[n] = 1.0
    return DensityMatrix(np.outer(ket, ket.conj()))
