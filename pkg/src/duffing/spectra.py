"""Lab-frame and rotating-frame Hamiltonians and their spectra.

The rotating-frame Hamiltonian (after dropping terms oscillating at twice
the drive frequency) is

    H_rot = delta (n + 1/2) - (3 gamma_tilde / 2 aleph) (n + 1/2)^2 + F0 x,

in units of hbar*Omega.  Undriven it is diagonal in the Fock basis with a
spectrum that rises to a maximum near the resonant index n* and falls
again, so eigenvalue order and Fock order are *different* things.  Driven
eigenstates are labelled by adiabatic continuation from F0 = 0: the stored
eigenvector columns are ordered by that label, not by energy, and the
label of column k is fock_map[k].

The lab-frame Hamiltonian is exposed only to validate the perturbative
level formula; all dynamics run through :class:`RotatingFrameSystem`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import fock
from .classical import drive_unit
from .errors import DegenerateTracking
from .params import SystemParams, derived_quantities

OVERLAP_AMBIGUITY = 1e-3
_MAX_REFINE_DEPTH = 24


@dataclass
class RotatingFrameSystem:
    """Diagonalized rotating-frame Hamiltonian with adiabatic labels."""

    h_rwa: np.ndarray          # dense (dim, dim), includes the F0*x drive
    eigenvalues: np.ndarray    # indexed by adiabatic Fock label
    eigenvectors: np.ndarray   # column k = eigenstate with label k
    fock_map: np.ndarray       # Fock label of each stored column
    f0: float                  # drive in Hamiltonian units
    f0_ratio: float            # same drive as a fraction of F_c

    @property
    def dim(self) -> int:
        return self.h_rwa.shape[0]

    def energy_order(self) -> np.ndarray:
        """Labels sorted by ascending eigenvalue (the energy-ranked view)."""
        return np.argsort(self.eigenvalues, kind="stable")


def lab_hamiltonian(p: SystemParams) -> np.ndarray:
    """Undriven lab-frame Hamiltonian n + 1/2 - gamma_tilde*aleph*x^4."""
    dim = p.n_trunc
    x = fock.position(dim, p)
    x2 = x @ x
    h = np.diag(np.arange(dim) + 0.5).astype(complex)
    h -= p.gamma_tilde * p.aleph * (x2 @ x2)
    return h


def perturbative_lab_levels(p: SystemParams, n_max: int) -> np.ndarray:
    """First-order quartic-shifted levels E_n for n = 0..n_max.

    E_n = n + 1/2 - 3*gamma_tilde*(2n^2 + 2n + 1)/(4*aleph); adjacent
    spacings decrease as (1 - 3*gamma_tilde*n/aleph).  Only meaningful
    below the bound-state estimate, which is enforced.
    """
    d = derived_quantities(p)
    if n_max >= d.n_bound:
        raise ValueError(f"n_max={n_max} not below the bound-state count {d.n_bound}")
    n = np.arange(n_max + 1, dtype=float)
    return n + 0.5 - 3.0 * p.gamma_tilde * (2 * n ** 2 + 2 * n + 1) / (4.0 * p.aleph)


def rotating_levels_closed_form(p: SystemParams, dim: int | None = None) -> np.ndarray:
    """Undriven rotating-frame levels delta(n+1/2) - (3gt/2aleph)(n+1/2)^2."""
    dim = dim or p.n_trunc
    h = np.arange(dim) + 0.5
    return p.delta * h - (1.5 * p.gamma_tilde / p.aleph) * h ** 2


def _h_rot(p: SystemParams, f0: float) -> np.ndarray:
    dim = p.n_trunc
    h = np.diag(rotating_levels_closed_form(p)).astype(complex)
    if f0 != 0.0:
        h = h + f0 * fock.position(dim, p)
    return h


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    phases = lead / np.abs(lead)
    return vecs / phases[None, :]


def _track_interval(p, prev_vecs, f_lo, f_hi, depth):
    """Continue labels from eigenbasis at f_lo to the one at f_hi.

    Maximal-overlap matching; when the best and runner-up overlaps for a
    label come within OVERLAP_AMBIGUITY of each other the interval is
    bisected and tracked in two hops, so the hard error only fires on a
    genuine degeneracy that refinement cannot split.
    """
    evals, u = np.linalg.eigh(_h_rot(p, f_hi))
    ov = np.abs(prev_vecs.conj().T @ u)
    _, cols = linear_sum_assignment(-ov * ov)
    ambiguous = False
    for label in range(ov.shape[0]):
        row = ov[label]
        best = row[cols[label]]
        runner = np.max(np.delete(row, cols[label]))
        if best - runner < OVERLAP_AMBIGUITY:
            ambiguous = True
            break
    if ambiguous:
        if depth <= 0:
            raise DegenerateTracking(
                f"adiabatic tracking ambiguous between F0={f_lo:.6g} and "
                f"{f_hi:.6g}: overlap gap below {OVERLAP_AMBIGUITY}"
            )
        f_mid = 0.5 * (f_lo + f_hi)
        mid_vecs, _ = _track_interval(p, prev_vecs, f_lo, f_mid, depth - 1)
        return _track_interval(p, mid_vecs, f_mid, f_hi, depth - 1)
    return _fix_phases(u[:, cols]), evals[cols]


def rwa_hamiltonian(p: SystemParams, f0_ratio: float | None = None,
                    ramp_steps: int = 100) -> RotatingFrameSystem:
    """Build and diagonalize the driven rotating-frame Hamiltonian.

    The drive is given as a fraction of the classical critical force F_c
    (default: the configured drive_ratio).  Eigenstates are labelled by
    ramping the drive from zero in ``ramp_steps`` linear increments with
    maximal-overlap tracking at each hop.
    """
    if f0_ratio is None:
        f0_ratio = p.drive_ratio
    if f0_ratio < 0:
        raise ValueError("drive ratio must be non-negative")
    dim = p.n_trunc
    f0 = 0.0 if f0_ratio == 0.0 else f0_ratio * drive_unit(p)
    h = _h_rot(p, f0)
    if f0 == 0.0:
        # diagonal already; the closed-form levels are exact
        return RotatingFrameSystem(
            h_rwa=h,
            eigenvalues=rotating_levels_closed_form(p),
            eigenvectors=np.eye(dim, dtype=complex),
            fock_map=np.arange(dim),
            f0=0.0,
            f0_ratio=0.0,
        )
    vecs = np.eye(dim, dtype=complex)
    vals = rotating_levels_closed_form(p)
    grid = np.linspace(0.0, f0, ramp_steps + 1)
    for f_lo, f_hi in zip(grid[:-1], grid[1:]):
        vecs, vals = _track_interval(p, vecs, f_lo, f_hi, _MAX_REFINE_DEPTH)
    return RotatingFrameSystem(
        h_rwa=h,
        eigenvalues=vals,
        eigenvectors=vecs,
        fock_map=np.arange(dim),
        f0=f0,
        f0_ratio=f0_ratio,
    )
