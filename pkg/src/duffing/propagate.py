"""Time evolution of the rotating-frame density matrix.

Fixed-step classical RK4 with 200 steps per drive period by default; the
oscillating e^{+-2 i nu t} phases set the fastest time scale and a fixed
step resolves them with large margin (the step-halving check in the test
suite guards this).  "Steady state" throughout the package is protocol
defined: read the observables at t_final drive periods, no null-space
solves, because near the bifurcation true relaxation is slower than any
practical integration window.

Times are reported in drive periods (units of 2*pi/Omega).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from . import classical, fock
from ._kernels import rk4_run
from .bath import DissipatorSet, build_dissipator, lindblad_dissipator_set
from .errors import TraceDrift, TruncationOverflow
from .params import TWO_PI, SystemParams, derived_quantities
from .spectra import RotatingFrameSystem, rwa_hamiltonian

TRACE_TOL = 1e-6
WATCHDOG_TOL = 1e-5


@dataclass
class RecordingSchedule:
    """What to record during an evolution.

    stride_periods sets the observable sampling interval; snapshot_periods
    lists times (in periods) at which full density matrices are kept.
    """

    stride_periods: float = 1.0
    snapshot_periods: tuple = ()


@dataclass
class EvolutionRecord:
    times: np.ndarray                 # drive periods, strictly increasing
    x_bar: np.ndarray                 # complex Tr[x rho]; report the real part
    p_s: np.ndarray                   # overlap with the SAS reference state
    trace_drift: np.ndarray           # |Tr rho - 1|
    snapshots: list = field(default_factory=list)   # (t_periods, DensityMatrix)
    final_state: fock.DensityMatrix | None = None

    @property
    def x_bar_re(self) -> np.ndarray:
        return self.x_bar.real

    @property
    def x_bar_im(self) -> np.ndarray:
        return self.x_bar.imag


def _sas_reference_ket(p: SystemParams, f0_ratio: float, dim: int) -> np.ndarray:
    """Coherent ket of the shifted small-amplitude attractor (vacuum if none)."""
    if p.gamma_tilde == 0 or f0_ratio == 0:
        return fock.coherent_ket(0j, dim)
    alpha_sas, _ = classical.attractor_coherent_amplitudes(p, f0_ratio)
    if alpha_sas is None:
        return fock.coherent_ket(0j, dim)
    return fock.coherent_ket(alpha_sas, dim)


def evolve(rho0: fock.DensityMatrix, sys: RotatingFrameSystem,
           diss: DissipatorSet, p: SystemParams,
           schedule: RecordingSchedule | None = None,
           sas_reference: np.ndarray | None = None) -> EvolutionRecord:
    """Integrate the full generator and record observables.

    Guards fire as hard errors rather than warnings: trace drift beyond
    1e-6 and occupation of the top two Fock levels beyond 1e-5 both mean
    the numbers downstream would be silently wrong.
    """
    schedule = schedule or RecordingSchedule()
    dim = rho0.dim
    if sys.dim != dim or diss.a_minus.shape[0] != dim:
        raise ValueError("dimension mismatch between state, system and dissipator")
    if diss.include_counter_rotating:
        if not (np.array_equal(diss.adag_minus, diss.adag_plus)
                and np.array_equal(diss.a_plus, diss.a_minus)):
            raise ValueError("fast path expects companion operators equal to "
                             "the static ones (as build_dissipator makes them)")
    d = derived_quantities(p)
    astack = np.ascontiguousarray(np.vstack([diss.a_minus, diss.adag_plus]))
    s = np.sqrt(np.arange(1.0, dim))
    hdiag = np.real(np.diag(sys.h_rwa)).copy()
    drive_coef = sys.f0 * d.x_zpf

    steps_per_record = max(1, round(schedule.stride_periods * TWO_PI / p.dt))
    total_steps = round(p.t_final * TWO_PI / p.dt)
    n_records = max(1, math.ceil(total_steps / steps_per_record))

    if sas_reference is None:
        sas_reference = _sas_reference_ket(p, sys.f0_ratio, dim)
    ref = np.asarray(sas_reference, dtype=complex)

    record_steps = {min(total_steps, k * steps_per_record)
                    for k in range(1, n_records + 1)}
    record_steps.add(total_steps)
    snap_steps = {min(total_steps, round(t * TWO_PI / p.dt))
                  for t in schedule.snapshot_periods}
    events = sorted(record_steps | snap_steps)

    rho = np.ascontiguousarray(rho0.matrix.astype(np.complex128))
    times = [0.0]
    x_bar = [_x_expect(rho, s, d.x_zpf)]
    p_s = [float(np.real(ref.conj() @ rho @ ref))]
    drift = [abs(float(np.real(np.trace(rho))) - 1.0)]
    snapshots = []
    if 0 in snap_steps:
        snapshots.append((0.0, fock.DensityMatrix(rho.copy(), check=False)))

    step = 0
    for ev in events:
        if ev <= step:
            continue
        rk4_run(rho, astack, s, hdiag, drive_coef, diss.prefactor,
                2.0 * diss.nu, step * p.dt, p.dt, ev - step,
                diss.include_counter_rotating)
        step = ev
        t_per = step * p.dt / TWO_PI
        if step in snap_steps:
            snapshots.append((t_per, fock.DensityMatrix(rho.copy(), check=False)))
        if step in record_steps:
            times.append(t_per)
            x_bar.append(_x_expect(rho, s, d.x_zpf))
            p_s.append(float(np.real(ref.conj() @ rho @ ref)))
            tr_err = abs(float(np.real(np.trace(rho))) - 1.0)
            drift.append(tr_err)
            if not tr_err <= TRACE_TOL:   # also catches NaN from a blowup
                raise TraceDrift(
                    f"|Tr rho - 1| = {tr_err:.2e} at t = {t_per:.1f} periods")
            top2 = float(np.real(rho[-1, -1] + rho[-2, -2]))
            if top2 > WATCHDOG_TOL:
                raise TruncationOverflow(
                    f"top-two Fock occupation {top2:.2e} at t = {t_per:.1f} "
                    f"periods; increase n_trunc"
                )

    # no eigenvalue check here: the filtered generator is not completely
    # positive and evolved states legitimately carry ~1e-5 negativity
    final = fock.DensityMatrix(rho.copy(), check=False)
    return EvolutionRecord(
        times=np.array(times),
        x_bar=np.array(x_bar),
        p_s=np.array(p_s),
        trace_drift=np.array(drift),
        snapshots=snapshots,
        final_state=final,
    )


def _x_expect(rho: np.ndarray, s: np.ndarray, x_zpf: float) -> complex:
    sub = np.diag(rho, -1)
    sup = np.diag(rho, 1)
    return complex(x_zpf * (np.dot(s, sub) + np.dot(s, sup)))


def build_system(p: SystemParams, f0_ratio: float | None = None,
                 counter_rotating: bool = True, lindblad: bool = False,
                 ramp_steps: int = 100):
    """Convenience: rotating-frame system plus matching dissipator."""
    sys = rwa_hamiltonian(p, f0_ratio, ramp_steps=ramp_steps)
    if lindblad:
        diss = lindblad_dissipator_set(p)
    else:
        diss = build_dissipator(sys, p, include_counter_rotating=counter_rotating)
    return sys, diss


def initial_state(p: SystemParams, f0_ratio: float, init: str) -> fock.DensityMatrix:
    """Coherent state at the requested attractor.

    init is 'sas', 'las' or 'vacuum'.  Where the requested attractor does
    not exist at this drive, the closest physical choice is used: vacuum
    for a missing SAS (any small state relaxes to the surviving branch),
    and the single surviving branch for a missing LAS.
    """
    if init == "vacuum":
        return fock.coherent_state(0j, p.n_trunc)
    alpha_sas, alpha_las = classical.attractor_coherent_amplitudes(p, f0_ratio)
    if init == "sas":
        return fock.coherent_state(alpha_sas if alpha_sas is not None else 0j,
                                   p.n_trunc)
    if init == "las":
        alpha = alpha_las if alpha_las is not None else alpha_sas
        return fock.coherent_state(alpha if alpha is not None else 0j, p.n_trunc)
    raise ValueError(f"unknown initial state {init!r}")


def _sweep_point(args):
    (p_dict, ratio, init, counter_rotating, lindblad) = args
    p = SystemParams(**p_dict)
    sys, diss = build_system(p, ratio, counter_rotating, lindblad)
    rho0 = initial_state(p, ratio, init)
    rec = evolve(rho0, sys, diss, p)
    return (ratio, rec.x_bar[-1], rec.p_s[-1], rec.trace_drift[-1])


def hysteresis_sweep(p: SystemParams, drive_grid, init: str,
                     threads: int = 1, counter_rotating: bool = True,
                     lindblad: bool = False):
    """Steady-state amplitude versus drive from one family of initial states.

    Returns (ratios, x_bar_steady, p_s_final, trace_drift_final) arrays in
    grid order.  Points are independent and run on a process pool when
    threads > 1.
    """
    ratios = list(np.asarray(drive_grid, dtype=float))
    if any(r < 0 for r in ratios):
        raise ValueError("drive ratios must be non-negative")
    jobs = [(p.as_dict(), r, init, counter_rotating, lindblad) for r in ratios]
    if threads > 1 and len(jobs) > 1:
        _single_thread_blas()
        ctx = get_context("spawn")
        with ctx.Pool(processes=threads) as pool:
            rows = pool.map(_sweep_point, jobs)
    else:
        rows = [_sweep_point(j) for j in jobs]
    out_r = np.array([r[0] for r in rows])
    out_x = np.array([r[1] for r in rows])
    out_ps = np.array([r[2] for r in rows])
    out_tr = np.array([r[3] for r in rows])
    return out_r, out_x, out_ps, out_tr


def _single_thread_blas():
    # keep BLAS single-threaded inside pool workers; the pool is the
    # parallel axis.  Must be in the environment before the spawned
    # interpreter imports numpy, so the parent sets it pre-fork.
    os.environ.setdefault("OMP_NUM_THREADS", "1")
    os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
