"""Slow-amplitude analysis: stationary solutions, stability, critical drives.

The rotating-frame amplitude x(tau) (complex, dimensionless) obeys

    2i dx/dtau = [(Delta - i)/Q + (3/4)|x|^2] x - f,

with Delta = -2*Q*delta the scaled detuning and f the scaled drive.  The
stationary condition turns |x|^2 = r into a real cubic

    (9/16) r^3 + (3 Delta / 2Q) r^2 + ((Delta^2 + 1)/Q^2) r - f^2 = 0,

which has one or three positive roots; the outer two are stable, the
middle one is a saddle.  Quantum corrections enter through the shifted
detuning Delta_shifted = -2*Q*(delta - 3*gamma_tilde/aleph): evaluating
the same cubic there predicts where the small-amplitude branch actually
folds away in the full quantum simulation.

Scaled drive f converts to the Hamiltonian force F0 (the coefficient of x
in the rotating-frame Hamiltonian) through F0 = sqrt(m^3 Omega^6 / 16 gamma) f
= aleph*sqrt(1/(16*gamma_tilde)) f in our units, and the rotating-frame
amplitude maps to a coherent-state label via alpha = conj(x)*sqrt(aleph/(8*gamma_tilde)).
Both factors are pinned by requiring the coherent-state fixed point of the
operator equation of motion to coincide with the cubic's roots (see tests).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoBistability
from .params import SystemParams, derived_quantities

DELTA_CRIT = -math.sqrt(3.0)


@dataclass(frozen=True)
class AmplitudeState:
    """One stationary solution of the slow-amplitude equation."""

    x_tilde: complex
    branch: str        # lower | middle | upper
    stable: bool

    @property
    def r(self) -> float:
        return abs(self.x_tilde) ** 2


@dataclass(frozen=True)
class CriticalForces:
    """Fold drives of the stationary cubic (in scaled-f units).

    f_b is the upper critical drive (lower branch folds away), f_bbar the
    lower one (upper branch folds away); f_cusp is the common value both
    approach as Delta -> -sqrt(3), quoted in the conventional cusp-normalized
    form 2^(5/2)/(3^(5/4) |Delta|^(3/2)).
    """

    f_b: float
    f_bbar: float
    f_cusp: float


@dataclass
class BifurcationDiagram:
    drive_ratios: np.ndarray          # F0/F_c grid
    roots: np.ndarray                 # (n, 3) of r values, NaN where absent
    stable: np.ndarray                # (n, 3) bool
    f_b: float
    f_bbar: float
    big_delta: float


def _cubic_coeffs(big_delta: float, q: float, f: float) -> tuple:
    return (9.0 / 16.0,
            1.5 * big_delta / q,
            (big_delta ** 2 + 1.0) / q ** 2,
            -f * f)


def stationary_roots(f: float, big_delta: float, q: float) -> list[AmplitudeState]:
    """Solve the stationary cubic and label each root's branch and stability.

    Stability comes from the eigenvalues of the 2x2 Jacobian of the
    amplitude flow linearized about the root (negative real parts =>
    stable), not from branch position, so the labels stay honest even at
    parameters where the usual lower/middle/upper intuition degenerates.
    """
    if f < 0 or q <= 0:
        raise ValueError("need f >= 0 and q > 0")
    a3, a2, a1, a0 = _cubic_coeffs(big_delta, q, f)
    raw = np.roots([a3, a2, a1, a0])
    rs = []
    for z in raw:
        if abs(z.imag) < 1e-8 * max(1.0, abs(z.real)) and z.real > -1e-14:
            r = max(z.real, 0.0)
            # one Newton polish; np.roots is already ~1e-14 but the
            # residual contract below is 1e-10 in absolute terms
            for _ in range(2):
                g = ((a3 * r + a2) * r + a1) * r + a0
                dg = (3 * a3 * r + 2 * a2) * r + a1
                if dg != 0:
                    r -= g / dg
            rs.append(max(r, 0.0))
    rs = sorted(rs)
    # collapse numerically duplicated roots (possible right at a fold)
    dedup: list[float] = []
    for r in rs:
        if not dedup or abs(r - dedup[-1]) > 1e-9 * max(1.0, r):
            dedup.append(r)
    names = ["lower", "middle", "upper"] if len(dedup) == 3 else None
    out = []
    for i, r in enumerate(dedup):
        x = f / complex(big_delta / q + 0.75 * r, -1.0 / q)
        stable = _is_stable(x, big_delta, q)
        if names:
            branch = names[i]
        else:
            branch = _single_branch_label(f, big_delta, q, r)
        out.append(AmplitudeState(x_tilde=x, branch=branch, stable=stable))
    return out


def _single_branch_label(f: float, big_delta: float, q: float, r: float) -> str:
    if big_delta >= DELTA_CRIT:
        return "lower"
    crit = critical_forces(big_delta, q)
    if f <= crit.f_bbar:
        return "lower"
    if f >= crit.f_b:
        return "upper"
    return "lower" if r < 2.0 * abs(big_delta) / (3.0 * q) else "upper"


def amplitude_velocity(x: complex, f: float, big_delta: float, q: float) -> complex:
    """Right-hand side dx/dtau of the slow-amplitude equation."""
    return -0.5j * ((complex(big_delta, -1.0) / q + 0.75 * abs(x) ** 2) * x - f)


def _jacobian(x0: complex, big_delta: float, q: float) -> np.ndarray:
    r = abs(x0) ** 2
    a = -0.5j * (complex(big_delta, -1.0) / q + 1.5 * r)
    b = -0.375j * x0 * x0
    return np.array([[a.real + b.real, b.imag - a.imag],
                     [a.imag + b.imag, a.real - b.real]])


def _is_stable(x0: complex, big_delta: float, q: float) -> bool:
    ev = np.linalg.eigvals(_jacobian(x0, big_delta, q))
    return bool(np.max(ev.real) < 0)


def critical_forces(big_delta: float, q: float) -> CriticalForces:
    """Closed-form fold drives of the stationary cubic.

    Substituting r = (4|Delta|/3Q) rho reduces the fold condition to
    3 rho^2 - 4 rho + 1 + 1/Delta^2 = 0, giving

        f_{B,Bbar}^2 = (8 |Delta|^3 / 81 Q^3) [1 + 3 x^2 +- (1 - x^2)^{3/2}],
        x = sqrt(3)/|Delta|,

    exact for every Q.  The two drives coalesce at Delta = -sqrt(3); for
    Delta above that there is no bistable window and we refuse.
    """
    if q <= 0:
        raise ValueError("q must be positive")
    ratio = big_delta / DELTA_CRIT
    if ratio < 1.0:
        raise NoBistability(
            f"Delta={big_delta:.4f} is above the cusp Delta_c={DELTA_CRIT:.4f}"
        )
    x2 = min(3.0 / big_delta ** 2, 1.0)
    s3 = (1.0 - x2) ** 1.5
    pref = (2.0 ** 1.5 / 9.0) * (abs(big_delta) / q) ** 1.5
    f_cusp = 2.0 ** 2.5 / (3.0 ** 1.25 * abs(big_delta) ** 1.5)
    return CriticalForces(
        f_b=pref * math.sqrt(1.0 + 3.0 * x2 + s3),
        f_bbar=pref * math.sqrt(1.0 + 3.0 * x2 - s3),
        f_cusp=f_cusp,
    )


def fold_drives_by_bisection(big_delta: float, q: float) -> tuple[float, float]:
    """Locate both folds by bisecting the cubic's discriminant sign in f.

    Independent of :func:`critical_forces`: only the root count of the
    stationary cubic is interrogated.  Returns (f_b, f_bbar).
    """
    if big_delta >= DELTA_CRIT:
        raise NoBistability("no fold for Delta above the cusp")

    def disc(f: float) -> float:
        a, b, c, d = _cubic_coeffs(big_delta, q, f)
        return (18 * a * b * c * d - 4 * b ** 3 * d + b ** 2 * c ** 2
                - 4 * a * c ** 3 - 27 * a ** 2 * d ** 2)

    r_hi = 8.0 * abs(big_delta) / (3.0 * q)
    a3, a2, a1, _ = _cubic_coeffs(big_delta, q, 0.0)
    f_hi = math.sqrt(((a3 * r_hi + a2) * r_hi + a1) * r_hi) * 1.5
    fs = np.linspace(0.0, f_hi, 4097)
    signs = np.sign([disc(f) for f in fs])
    brackets = [(fs[i], fs[i + 1]) for i in range(len(fs) - 1)
                if signs[i] != signs[i + 1] and signs[i] != 0]
    if len(brackets) != 2:
        raise NoBistability(f"expected two folds, found {len(brackets)} sign changes")
    out = []
    for lo, hi in brackets:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if disc(lo) * disc(mid) <= 0:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-15 * max(1.0, hi):
                break
        out.append(0.5 * (lo + hi))
    f_bbar, f_b = sorted(out)
    return f_b, f_bbar


def force_conversion(p: SystemParams) -> float:
    """Factor turning scaled drive f into the Hamiltonian force F0.

    F0 = sqrt(m^3 Omega^6 / 16 gamma) f = aleph * sqrt(1/(16*gamma_tilde)) f.
    """
    if p.gamma_tilde <= 0:
        raise NoBistability("harmonic oscillator has no critical drive")
    return p.aleph * math.sqrt(1.0 / (16.0 * p.gamma_tilde))


def drive_unit(p: SystemParams) -> float:
    """F_c: the unshifted upper critical force in Hamiltonian units.

    This is the drive unit every F0/F_c ratio in the package refers to.
    """
    d = derived_quantities(p)
    return force_conversion(p) * critical_forces(d.big_delta, d.q).f_b


def slow_drive(p: SystemParams, f0_ratio: float) -> float:
    """Scaled drive f corresponding to F0 = f0_ratio * F_c."""
    d = derived_quantities(p)
    return f0_ratio * critical_forces(d.big_delta, d.q).f_b


def quantum_shifted_bifurcation(p: SystemParams) -> float:
    """Upper critical drive at the shifted detuning, as a fraction of F_c."""
    d = derived_quantities(p)
    if p.gamma_tilde == 0:
        return 1.0
    f_b = critical_forces(d.big_delta, d.q).f_b
    f_b_shifted = critical_forces(d.big_delta_shifted, d.q).f_b
    return f_b_shifted / f_b


def amplitude_to_coherent(x_tilde: complex, p: SystemParams) -> complex:
    """Map a slow amplitude to the coherent-state label of the same motion.

    The conjugation reflects the opposite rotation senses of the amplitude
    ansatz (x ~ Re[x_tilde e^{+i nu t}]) and the rotating frame of the
    quantum picture (a -> a e^{-i nu t}).
    """
    return x_tilde.conjugate() * math.sqrt(p.aleph / (8.0 * p.gamma_tilde))


def coherent_to_amplitude(alpha: complex, p: SystemParams) -> complex:
    return alpha.conjugate() * math.sqrt(8.0 * p.gamma_tilde / p.aleph)


def attractor_coherent_amplitudes(p: SystemParams, f0_ratio: float):
    """Coherent-state labels (alpha_sas, alpha_las) of the stable attractors.

    Stationary solutions are taken at the *shifted* detuning: those are the
    fixed points the quantum evolution actually relaxes to.  Outside the
    bistable window the missing slot is None.
    """
    d = derived_quantities(p)
    if p.gamma_tilde == 0:
        return 0j, None
    f = slow_drive(p, f0_ratio)
    if f == 0.0:
        return 0j, None
    sols = stationary_roots(f, d.big_delta_shifted, d.q)
    stable = [s for s in sols if s.stable]
    alphas = {s.branch: amplitude_to_coherent(s.x_tilde, p) for s in stable}
    if len(stable) >= 2:
        return alphas.get("lower"), alphas.get("upper")
    only = stable[0]
    if only.branch == "upper":
        return None, alphas["upper"]
    return alphas.get(only.branch), None


def bifurcation_diagram(p: SystemParams, drive_ratios: np.ndarray,
                        shifted: bool = False) -> BifurcationDiagram:
    """Stationary |x|^2 branches over a grid of F0/F_c."""
    d = derived_quantities(p)
    big_delta = d.big_delta_shifted if shifted else d.big_delta
    crit = critical_forces(big_delta, d.q)
    f_unit = critical_forces(d.big_delta, d.q).f_b
    ratios = np.asarray(drive_ratios, dtype=float)
    roots = np.full((len(ratios), 3), np.nan)
    stable = np.zeros((len(ratios), 3), dtype=bool)
    cols = {"lower": 0, "middle": 1, "upper": 2}
    for i, ratio in enumerate(ratios):
        for sol in stationary_roots(ratio * f_unit, big_delta, d.q):
            j = cols[sol.branch]
            roots[i, j] = sol.r
            stable[i, j] = sol.stable
    return BifurcationDiagram(
        drive_ratios=ratios, roots=roots, stable=stable,
        f_b=crit.f_b, f_bbar=crit.f_bbar, big_delta=big_delta,
    )
