"""Dimensionless parameter set and units convention.

Units are fixed once and for all here: hbar = 1, Omega = 1 (the bare
oscillator frequency), and the oscillator mass is numerically equal to
``aleph`` = m*Omega/hbar.  Energies are then measured in hbar*Omega, times
in 1/Omega, and the position operator is a pure number with zero-point
spread x_zpf = sqrt(1/(2*aleph)).  ``aleph`` is the single knob that moves
the model between the mesoscopic (small) and classical (large) regimes.

All other modules take a :class:`SystemParams` and derive what they need;
derived quantities are never stored, only recomputed, so a parameter set
cannot get out of sync with itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError, ParameterError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SystemParams:
    """All tunable physical and numerical parameters (dimensionless).

    Attributes
    ----------
    aleph : m*Omega/hbar, the quantum-size parameter.
    gamma_tilde : quartic anharmonicity gamma/(m*Omega^2); 0 is the
        harmonic limit.
    delta : drive detuning 1 - nu/Omega (positive, below resonance).
    kappa : friction coefficient kappa/Omega; quality factor Q = 1/kappa.
    beta_omega : hbar*Omega/(k_B T).  The bath enters only through the
        Bose occupation, so any value with n_bar << 1 is the cold regime.
    omega_cutoff : high-frequency cutoff omega_c/Omega of the Ohmic bath.
    drive_ratio : drive strength F0 as a fraction of the classical upper
        critical force F_c.
    n_trunc : number of Fock states kept.
    dt : integrator step in units of 1/Omega.
    t_final : total evolution time in drive periods (units of 2*pi/Omega).
    """

    aleph: float = 12.0
    gamma_tilde: float = 1.0 / 24.0
    delta: float = 0.065
    kappa: float = 0.01
    beta_omega: float = 14.4
    omega_cutoff: float = 10.0
    drive_ratio: float = 0.7
    n_trunc: int = 60
    dt: float = TWO_PI / 200.0
    t_final: float = 160.0

    def __post_init__(self):
        if self.aleph <= 0:
            raise ParameterError("aleph must be positive")
        if self.gamma_tilde < 0:
            raise ParameterError("gamma_tilde must be non-negative")
        if not 0.0 < self.delta < 1.0:
            raise ParameterError("delta must lie in (0, 1)")
        if self.kappa < 0:
            raise ParameterError("kappa must be non-negative")
        if self.beta_omega <= 0:
            raise ParameterError("beta_omega must be positive")
        if self.omega_cutoff <= 0:
            raise ParameterError("omega_cutoff must be positive")
        if self.drive_ratio < 0:
            raise ParameterError("drive_ratio must be non-negative")
        n_min = 2 * math.ceil(1.5 * self.aleph)
        if self.n_trunc < n_min:
            raise ParameterError(
                f"n_trunc={self.n_trunc} too small: need at least {n_min} "
                f"(twice the bound-state count at aleph={self.aleph})"
            )
        if self.dt <= 0 or self.t_final <= 0:
            raise ParameterError("dt and t_final must be positive")
        if self.gamma_tilde > 0:
            n_bound = self.aleph / (16.0 * self.gamma_tilde)
            if n_bound < 4:
                raise ParameterError(
                    f"bound-state estimate N_b={n_bound:.2f} < 4: outside the "
                    "mesoscopic regime this model targets"
                )

    def replace(self, **kw) -> "SystemParams":
        d = self.as_dict()
        d.update(kw)
        return SystemParams(**d)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class DerivedParams:
    """Quantities recomputed from :class:`SystemParams` on demand."""

    q: float                 # quality factor 1/kappa
    big_delta: float         # scaled detuning -2*Q*delta
    big_delta_shifted: float  # -2*Q*(delta - 3*gamma_tilde/aleph)
    n_star: float            # resonant Fock index aleph*delta/(3*gamma_tilde)
    n_bound: float           # bound-state estimate aleph/(16*gamma_tilde)
    n_thermal: float         # Bose occupation at the oscillator frequency
    x_zpf: float             # sqrt(1/(2*aleph))
    nu: float                # drive frequency 1 - delta


def derived_quantities(p: SystemParams) -> DerivedParams:
    """Compute the standard derived parameter set.

    Rejects parameter sets whose resonant level n* would not fit in the
    lower half of the truncated basis: the large-amplitude attractor lives
    around n*, and a truncation that cannot hold it produces garbage
    rather than an error downstream.
    """
    q = 1.0 / p.kappa if p.kappa > 0 else math.inf
    big_delta = -2.0 * q * p.delta if p.kappa > 0 else -math.inf
    shift = p.delta - 3.0 * p.gamma_tilde / p.aleph
    big_delta_shifted = -2.0 * q * shift if p.kappa > 0 else -math.inf
    if p.gamma_tilde > 0:
        n_star = p.aleph * p.delta / (3.0 * p.gamma_tilde)
        n_bound = p.aleph / (16.0 * p.gamma_tilde)
        if n_star >= p.n_trunc / 2:
            raise ParameterError(
                f"resonant level n*={n_star:.2f} needs n_trunc > {2 * n_star:.0f}"
            )
    else:
        n_star = math.inf
        n_bound = math.inf
    n_thermal = 1.0 / math.expm1(p.beta_omega) if p.beta_omega < 700 else 0.0
    return DerivedParams(
        q=q,
        big_delta=big_delta,
        big_delta_shifted=big_delta_shifted,
        n_star=n_star,
        n_bound=n_bound,
        n_thermal=n_thermal,
        x_zpf=math.sqrt(0.5 / p.aleph),
        nu=1.0 - p.delta,
    )


_INT_KEYS = {"n_trunc"}


def parse_config(path: str | Path) -> SystemParams:
    """Read a flat ``key = value`` config file (UTF-8, '#' comments).

    Every :class:`SystemParams` field is a valid key; anything else is a
    hard error so that typos cannot silently fall back to defaults.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    known = {f.name for f in fields(SystemParams)}
    values: dict = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = int(val) if key in _INT_KEYS else float(val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    try:
        return SystemParams(**values)
    except ParameterError:
        raise
    except TypeError as exc:  # pragma: no cover - guarded by key check above
        raise ConfigError(str(exc)) from exc


def write_config(p: SystemParams, path: str | Path) -> None:
    """Write a config file that :func:`parse_config` reads back exactly."""
    lines = [f"{k} = {v!r}" for k, v in p.as_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
