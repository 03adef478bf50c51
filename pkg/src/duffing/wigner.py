"""Wigner function on a rectangular phase-space grid.

Quadratures are the natural ones, X = (a + a^dag)/sqrt(2) and
P = i(a^dag - a)/sqrt(2), so the vacuum is W = exp(-X^2 - P^2)/pi with
peak 1/pi and a coherent state |alpha> sits at (sqrt(2) Re alpha,
sqrt(2) Im alpha) with unit-variance Gaussian lobes.  The grid sum
normalizes to Tr rho and the pointwise lower bound is -1/pi.

Evaluation expands rho in Fock dyads and sums the harmonic-oscillator
kernels

    W_{n+k,n}(X, P) = (-1)^n / pi * e^{-i k theta} * l_{n,k}(2 r^2),
    l_{n,k}(y) = sqrt(n!/(n+k)!) y^{k/2} e^{-y/2} L_n^k(y),

with r, theta polar coordinates of (X, P).  The normalized radial
functions l are generated by upward recurrence with log-domain prefactors,
which stays bounded where naive factorials and Laguerre values overflow
(around n = 85).  A slow direct-integral route over position
wavefunctions is provided as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import GridTooSmall
from .fock import DensityMatrix

BOUNDARY_FRACTION = 1e-6


@dataclass
class WignerGrid:
    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray        # real, shape (len(p_axis), len(x_axis))
    cell_area: float
    max_imag: float = 0.0     # leftover imaginary part of the kernel sum

    def total_mass(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def value_at(self, x: float, pp: float) -> float:
        i = int(np.argmin(np.abs(self.p_axis - pp)))
        j = int(np.argmin(np.abs(self.x_axis - x)))
        return float(self.values[i, j])


def coherent_center(alpha: complex) -> tuple[float, float]:
    """Phase-space center of |alpha> in the grid's quadratures."""
    return math.sqrt(2.0) * alpha.real, math.sqrt(2.0) * alpha.imag


def wigner(rho: DensityMatrix | np.ndarray, extent: float = 8.0,
           points: int = 201, x_axis: np.ndarray | None = None,
           p_axis: np.ndarray | None = None,
           check_boundary: bool = True) -> WignerGrid:
    """Evaluate the Wigner function of rho on a uniform grid.

    Default grid: points x points over [-extent, extent]^2, sized so the
    large-amplitude attractor at the standard parameters keeps a 4-sigma
    margin.  Raises :class:`GridTooSmall` when the boundary still carries
    more than 1e-6 of the peak magnitude, which means mass was cut off.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    dim = m.shape[0]
    xs = np.linspace(-extent, extent, points) if x_axis is None else np.asarray(x_axis, float)
    ps = np.linspace(-extent, extent, points) if p_axis is None else np.asarray(p_axis, float)
    xg = xs[None, :]
    pg = ps[:, None]
    r2 = xg * xg + pg * pg
    y = 2.0 * r2
    r = np.sqrt(r2)
    with np.errstate(invalid="ignore", divide="ignore"):
        e_down = np.where(r > 0, (xg - 1j * pg) / np.where(r > 0, r, 1.0), 1.0)

    out = np.zeros(y.shape, dtype=complex)
    half_y = 0.5 * y
    log_y = np.log(np.where(y > 0, y, 1.0))
    phase_k = np.ones_like(out)
    sign = 1.0 - 2.0 * (np.arange(dim) % 2)         # (-1)^n
    for k in range(dim):
        if k == 0:
            l_prev = np.exp(-half_y)
        else:
            with np.errstate(under="ignore"):
                l_prev = np.exp(-half_y + 0.5 * k * log_y - 0.5 * gammaln(k + 1.0))
            l_prev[y == 0] = 0.0
            phase_k = phase_k * e_down
        l_pprev = None
        for n in range(dim - k):
            if n == 0:
                ln = l_prev
            elif n == 1:
                ln = (k + 1.0 - y) / math.sqrt(k + 1.0) * l_prev
                l_pprev, l_prev = l_prev, ln
            else:
                ln = ((2 * n - 1 + k - y) * l_prev
                      - math.sqrt((n - 1) * (n - 1 + k)) * l_pprev) \
                    / math.sqrt(n * (n + k))
                l_pprev, l_prev = l_prev, ln
            c_low = sign[n] * m[n + k, n]
            if k == 0:
                if c_low != 0:
                    out += c_low * ln
            else:
                c_up = sign[n] * m[n, n + k]
                if c_low != 0 or c_up != 0:
                    out += (c_low * phase_k + c_up * np.conj(phase_k)) * ln
    out /= math.pi
    values = out.real
    max_imag = float(np.abs(out.imag).max())
    grid = WignerGrid(
        x_axis=xs, p_axis=ps, values=values,
        cell_area=float((xs[1] - xs[0]) * (ps[1] - ps[0])),
        max_imag=max_imag,
    )
    if check_boundary:
        peak = float(np.abs(values).max())
        edge = max(np.abs(values[0, :]).max(), np.abs(values[-1, :]).max(),
                   np.abs(values[:, 0]).max(), np.abs(values[:, -1]).max())
        if peak > 0 and edge > BOUNDARY_FRACTION * peak:
            raise GridTooSmall(
                f"boundary |W| = {edge:.2e} exceeds {BOUNDARY_FRACTION:.0e} "
                f"of the peak {peak:.2e}; enlarge the grid"
            )
    return grid


def hermite_functions(dim: int, x: np.ndarray) -> np.ndarray:
    """Harmonic-oscillator wavefunctions psi_n(x), shape (dim, len(x))."""
    x = np.asarray(x, dtype=float)
    psi = np.zeros((dim, len(x)))
    psi[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if dim > 1:
        psi[1] = math.sqrt(2.0) * x * psi[0]
    for n in range(2, dim):
        psi[n] = (math.sqrt(2.0 / n) * x * psi[n - 1]
                  - math.sqrt((n - 1.0) / n) * psi[n - 2])
    return psi


def position_density(rho: DensityMatrix | np.ndarray, x: np.ndarray) -> np.ndarray:
    """Diagonal <x|rho|x> from the wavefunction expansion (real part)."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    psi = hermite_functions(m.shape[0], x)
    return np.real(np.einsum("mx,mn,nx->x", psi, m, psi))


def wigner_direct_integral(rho: DensityMatrix | np.ndarray, x_axis: np.ndarray,
                           p_axis: np.ndarray, u_extent: float = 10.0,
                           u_points: int = 2001) -> np.ndarray:
    """Oracle route: W(X,P) = (1/pi) \\int du <X+u|rho|X-u> e^{-2iPu}.

    Quadrature over a truncated u interval with the trapezoid rule; slow,
    meant for coarse grids in tests.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    dim = m.shape[0]
    u = np.linspace(-u_extent, u_extent, u_points)
    phase = np.exp(-2j * np.outer(p_axis, u))
    out = np.zeros((len(p_axis), len(x_axis)))
    for j, x0 in enumerate(x_axis):
        psi_plus = hermite_functions(dim, x0 + u)
        psi_minus = hermite_functions(dim, x0 - u)
        f = np.einsum("mu,mn,nu->u", psi_plus, m, psi_minus)
        out[:, j] = np.real(np.trapezoid(phase * f[None, :], u, axis=1)) / math.pi
    return out


def attractor_decomposition(w: WignerGrid, w_s: WignerGrid) -> tuple[float, float]:
    """Split a late-time Wigner field into reference-lobe weight and rest.

    Least-squares projection of w onto the reference lobe w_s gives the
    occupation of that attractor; the integrated remainder is the weight
    of everything else.  With unit-mass, disjoint lobes this reduces to
    the exact mixture weights.
    """
    if w.values.shape != w_s.values.shape or not np.allclose(w.x_axis, w_s.x_axis) \
            or not np.allclose(w.p_axis, w_s.p_axis):
        raise ValueError("decomposition requires identical grids")
    denom = float(np.sum(w_s.values ** 2))
    if denom == 0:
        raise ValueError("reference Wigner field is identically zero")
    p_s = float(np.sum(w.values * w_s.values) / denom)
    p_l = float(np.sum(w.values - p_s * w_s.values) * w.cell_area)
    return p_s, p_l
