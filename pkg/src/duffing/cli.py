"""Command-line front end.

Every subcommand loads one flat config file (defaults for absent keys),
runs, and writes plotter-agnostic CSV plus a JSON sidecar and a rendered
PNG into --out.  A manifest JSON accompanies every run with the exact
config snapshot, options, output list, wall clock and code version, so any
output file can be regenerated bit-identically.

Exit codes: 0 success, 1 configuration problems, 2 physics guards
(truncation overflow, no bistable window, unresolvable decay, ...).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

# the dense kernels run on 60x60 blocks where BLAS threading only adds
# overhead; parallelism lives at the process level (--threads).  Must be
# set before numpy initializes its BLAS.
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")

import numpy as np  # noqa: E402

from . import __version__, analysis, bath, classical, fock, plotting, propagate, spectra, wigner as wig
from .errors import ConfigError, PhysicsGuard
from .params import SystemParams, derived_quantities, parse_config

log = logging.getLogger("duffing")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_grid(spec: str) -> np.ndarray:
    try:
        start, stop, count = spec.split(":")
        return np.linspace(float(start), float(stop), int(count))
    except ValueError as exc:
        raise ConfigError(f"bad grid spec {spec!r}, expected start:stop:count") from exc


class Run:
    """Output directory, manifest bookkeeping and shared options for one run."""

    def __init__(self, args):
        self.args = args
        self.t0 = time.time()
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.params = parse_config(args.config) if args.config else SystemParams()
        self.counter_rotating = not args.no_counter_rotating
        self.lindblad = args.lindblad
        self.threads = args.threads
        self.figures = not args.no_figures
        self.outputs: list[str] = []

    def path(self, name: str) -> Path:
        p = self.out / name
        self.outputs.append(str(p))
        return p

    def fig_path(self, name: str):
        return self.path(name) if self.figures else None

    def write_manifest(self, subcommand: str, extra: dict | None = None) -> None:
        manifest = {
            "subcommand": subcommand,
            "version": __version__,
            "config": self.params.as_dict(),
            "options": {
                "counter_rotating": self.counter_rotating,
                "lindblad": self.lindblad,
                "threads": self.threads,
            },
            "outputs": sorted(self.outputs),
            "wall_clock_s": round(time.time() - self.t0, 3),
        }
        if extra:
            manifest.update(extra)
        (self.out / f"{subcommand}_manifest.json").write_text(
            json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def cmd_spectrum(run: Run, args) -> str:
    p = run.params
    d = derived_quantities(p)
    n_max = min(int(d.n_bound) - 1, p.n_trunc - 1)
    e_lab = spectra.perturbative_lab_levels(p, n_max)
    sys_rot = spectra.rwa_hamiltonian(p, args.drive_ratio)
    e_rot = sys_rot.eigenvalues[:n_max + 1]
    n = np.arange(n_max + 1)
    _write_csv(run.path("spectrum.csv"), ["n", "E_lab", "E_rot"],
               zip(n, e_lab, e_rot))
    if run.figures:
        plotting.spectrum_figure(n, e_lab, e_rot, run.fig_path("spectrum.png"))
    run.write_manifest("spectrum", {"drive_ratio": args.drive_ratio})
    return f"levels 0..{n_max}: rotating-frame maximum at n={int(np.argmax(e_rot))}"


def cmd_bifurcation(run: Run, args) -> str:
    p = run.params
    grid = _parse_grid(args.grid)
    diag_c = classical.bifurcation_diagram(p, grid, shifted=False)
    diag_s = classical.bifurcation_diagram(p, grid, shifted=True)
    header = ["F0_over_Fc", "r_lower", "r_middle", "r_upper",
              "stable_lower", "stable_middle", "stable_upper"]
    for name, diag in (("bifurcation_classical.csv", diag_c),
                       ("bifurcation_shifted.csv", diag_s)):
        _write_csv(run.path(name), header,
                   ([r, *diag.roots[i], *diag.stable[i]]
                    for i, r in enumerate(diag.drive_ratios)))
    shifted_ratio = classical.quantum_shifted_bifurcation(p)
    summary = {
        "f_B": diag_c.f_b,
        "f_Bbar": diag_c.f_bbar,
        "f_B_shifted": diag_s.f_b,
        "f_Bbar_shifted": diag_s.f_bbar,
        "F_B_shifted_over_Fc": shifted_ratio,
        "force_conversion": classical.force_conversion(p),
        "F_c": classical.drive_unit(p),
    }
    run.path("bifurcation.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    if run.figures:
        plotting.bifurcation_figure(diag_c, diag_s, shifted_ratio,
                                    run.fig_path("bifurcation.png"))
    run.write_manifest("bifurcation")
    return f"shifted bifurcation at {shifted_ratio:.4f} F_c"


def _evolved_record(run: Run, ratio: float, init: str,
                    snapshot_periods=()) -> propagate.EvolutionRecord:
    p = run.params
    sys_rot, diss = propagate.build_system(
        p, ratio, counter_rotating=run.counter_rotating, lindblad=run.lindblad)
    rho0 = propagate.initial_state(p, ratio, init)
    sched = propagate.RecordingSchedule(snapshot_periods=tuple(snapshot_periods))
    return propagate.evolve(rho0, sys_rot, diss, p, sched)


def cmd_evolve(run: Run, args) -> str:
    rec = _evolved_record(run, run.params.drive_ratio, args.init)
    _write_csv(run.path("evolve.csv"),
               ["t_periods", "x_bar_re", "x_bar_im", "p_s", "trace_drift"],
               zip(rec.times, rec.x_bar_re, rec.x_bar_im, rec.p_s,
                   rec.trace_drift))
    if run.figures:
        plotting.evolution_figure(rec, run.fig_path("evolve.png"))
    run.write_manifest("evolve", {"init": args.init})
    return (f"{rec.times[-1]:.0f} periods from {args.init}: "
            f"x_bar={rec.x_bar_re[-1]:+.4f}, P_S={rec.p_s[-1]:.4f}")


def cmd_sweep(run: Run, args) -> str:
    p = run.params
    grid = _parse_grid(args.grid)
    inits = ["sas", "las"] if args.init == "both" else [args.init]
    branches = {}
    rows = []
    for init in inits:
        ratios, xb, ps, tr = propagate.hysteresis_sweep(
            p, grid, init, threads=run.threads,
            counter_rotating=run.counter_rotating, lindblad=run.lindblad)
        branches[init] = (ratios, xb.real)
        for i in range(len(ratios)):
            rows.append([ratios[i], init, p.t_final, xb[i].real, xb[i].imag,
                         ps[i], tr[i]])
    _write_csv(run.path("sweep.csv"),
               ["F0_over_Fc", "init", "t_periods", "x_bar_re", "x_bar_im",
                "p_s", "trace_drift"], rows)
    shifted_ratio = classical.quantum_shifted_bifurcation(p)
    if run.figures:
        plotting.hysteresis_figure(branches, shifted_ratio,
                                   run.fig_path("sweep.png"))
    run.write_manifest("sweep", {"grid": args.grid, "init": args.init,
                                 "shifted_ratio": shifted_ratio})
    return f"{len(rows)} points over {args.grid} ({', '.join(inits)})"


def cmd_wigner(run: Run, args) -> str:
    p = run.params
    ratio = p.drive_ratio
    centers = []
    alpha_sas, alpha_las = classical.attractor_coherent_amplitudes(p, ratio)
    if args.source == "evolved":
        rec = _evolved_record(run, ratio, "sas", snapshot_periods=(args.time,))
        state = rec.snapshots[-1][1]
        title = f"evolved state at t={args.time:g} periods"
    else:
        d = derived_quantities(p)
        big_delta = d.big_delta_shifted if args.source == "coherent-shifted" else d.big_delta
        sols = classical.stationary_roots(classical.slow_drive(p, ratio),
                                          big_delta, d.q)
        lower = [s for s in sols if s.stable][0]
        alpha = classical.amplitude_to_coherent(lower.x_tilde, p)
        state = fock.coherent_state(alpha, p.n_trunc)
        title = f"{args.source} coherent state"
    for alpha in (alpha_sas, alpha_las):
        if alpha is not None:
            centers.append(wig.coherent_center(alpha))
    grid = wig.wigner(state, extent=args.extent, points=args.points)
    xg, pg = np.meshgrid(grid.x_axis, grid.p_axis)
    _write_csv(run.path("wigner.csv"), ["x", "p", "W"],
               zip(xg.ravel(), pg.ravel(), grid.values.ravel()))
    sidecar = {
        "source": args.source,
        "time_periods": args.time if args.source == "evolved" else None,
        "extent": args.extent,
        "points": args.points,
        "cell_area": grid.cell_area,
        "total_mass": grid.total_mass(),
        "min_value": float(grid.values.min()),
        "max_value": float(grid.values.max()),
        "sas_center": list(centers[0]) if centers else None,
        "las_center": list(centers[1]) if len(centers) > 1 else None,
    }
    if args.source == "evolved" and alpha_sas is not None:
        ref = wig.wigner(fock.coherent_state(alpha_sas, p.n_trunc),
                         extent=args.extent, points=args.points)
        p_s_w, p_l_w = wig.attractor_decomposition(grid, ref)
        sidecar["decomposition"] = {"P_S": p_s_w, "P_L": p_l_w}
    run.path("wigner.json").write_text(
        json.dumps(sidecar, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    if run.figures:
        plotting.wigner_figure(grid, run.fig_path("wigner.png"),
                               centers=centers, title=title)
    run.write_manifest("wigner", {"source": args.source})
    return (f"{title}: mass={grid.total_mass():.4f}, "
            f"min W={grid.values.min():.4f}")


def cmd_rate(run: Run, args) -> str:
    rec = _evolved_record(run, run.params.drive_ratio, "sas")
    fit = analysis.tunneling_rate(rec)
    _write_csv(run.path("rate.csv"),
               ["t_periods", "x_bar_re", "x_bar_im", "p_s", "trace_drift"],
               zip(rec.times, rec.x_bar_re, rec.x_bar_im, rec.p_s,
                   rec.trace_drift))
    summary = {
        "drive_ratio": run.params.drive_ratio,
        "gamma_t_per_period": fit.gamma_t,
        "r_squared": fit.r_squared,
        "window_periods": list(fit.window),
        "accepted": fit.accepted,
    }
    run.path("rate.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    if run.figures:
        plotting.rate_figure(fit, rec, run.fig_path("rate.png"))
    run.write_manifest("rate")
    return (f"Gamma_t = {fit.gamma_t:.4e}/period "
            f"(r^2 = {fit.r_squared:.5f}) at {run.params.drive_ratio} F_c")


def cmd_scaling(run: Run, args) -> str:
    p = run.params
    grid = _parse_grid(args.grid)
    result = analysis.scaling_fit(
        p, grid, threads=run.threads,
        counter_rotating=run.counter_rotating, lindblad=run.lindblad,
        max_doublings=args.max_doublings)
    _write_csv(run.path("scaling.csv"),
               ["F0_over_Fc", "eta", "gamma_t", "r_squared"],
               zip(result.drive_ratios, result.etas, result.rates,
                   result.r_squareds))
    summary = {
        "alpha": result.alpha,
        "alpha_stderr": result.alpha_stderr,
        "alpha_action": result.alpha_action,
        "alpha_action_stderr": result.alpha_action_stderr,
        "c0": result.c0,
        "c1": result.c1,
        "shifted_bifurcation_ratio": result.shifted_ratio,
        "runs_test_p": result.runs_test_p,
    }
    run.path("scaling.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    if run.figures:
        plotting.scaling_figure(result, run.fig_path("scaling.png"))
    run.write_manifest("scaling", {"grid": args.grid})
    return (f"alpha = {result.alpha:.3f} +- {result.alpha_stderr:.3f} "
            f"(action reading {result.alpha_action:.3f}), "
            f"runs-test p = {result.runs_test_p:.3f}")


def cmd_selftest(run: Run, args) -> str:
    checks = _selftest_checks(run.params)
    failures = 0
    for name, fn in checks:
        try:
            detail = fn()
            print(f"PASS {name}" + (f" ({detail})" if detail else ""))
        except Exception as exc:  # noqa: BLE001 - report, don't crash the suite
            failures += 1
            print(f"FAIL {name}: {exc}")
    run.write_manifest("selftest", {"checks": len(checks), "failures": failures})
    if failures:
        raise ConfigError(f"{failures} of {len(checks)} self-test checks failed")
    return f"{len(checks)} checks passed"


def _selftest_checks(p: SystemParams):
    import math

    def derived():
        d = derived_quantities(p)
        assert abs(d.n_star - p.aleph * p.delta / (3 * p.gamma_tilde)) < 1e-12
        assert abs(d.big_delta + 2 * d.q * p.delta) < 1e-12
        return f"n*={d.n_star:.3f}, Delta={d.big_delta:.3f}"

    def ladder():
        a = fock.annihilation(16)
        comm = a @ a.conj().T - a.conj().T @ a
        err = np.abs(comm - np.eye(16))
        assert err[:-1, :-1].max() < 1e-12
        return None

    def coherent():
        rho = fock.coherent_state(1.5 + 0.5j, 40)
        n_op = np.diag(np.arange(40.0))
        mean = np.real(np.trace(n_op @ rho.matrix))
        assert abs(mean - abs(1.5 + 0.5j) ** 2) < 1e-9
        assert abs(rho.purity() - 1) < 1e-9
        return None

    def rotating_spectrum():
        sys_rot = spectra.rwa_hamiltonian(p, 0.0)
        closed = spectra.rotating_levels_closed_form(p)
        assert np.abs(sys_rot.eigenvalues - closed).max() < 1e-14
        return f"peak at n={int(np.argmax(closed))}"

    def detailed_balance():
        w = 0.5
        lhs = bath.correlation_spectrum(-w, p)
        rhs = math.exp(-p.beta_omega * w) * bath.correlation_spectrum(w, p)
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)
        return None

    def harmonic_limit():
        ph = p.replace(gamma_tilde=0.0, drive_ratio=0.0, omega_cutoff=1e8,
                       n_trunc=max(36, 2 * math.ceil(1.5 * p.aleph)))
        sys_rot, diss = propagate.build_system(ph, 0.0, counter_rotating=False)
        lind = bath.lindblad_dissipator_set(ph)
        rng = np.random.default_rng(7)
        m = rng.standard_normal((ph.n_trunc,) * 2) + 1j * rng.standard_normal((ph.n_trunc,) * 2)
        rho = m + m.conj().T
        rho = rho / np.trace(rho).real
        d1 = bath.apply_dissipator(diss, rho, 0.0)
        d2 = bath.apply_dissipator(lind, rho, 0.0)
        scale = np.abs(d2).max()
        assert np.abs(d1 - d2).max() < 1e-6 * scale
        return None

    def folds():
        cf = classical.critical_forces(-13.0, 100.0)
        fb, fbbar = classical.fold_drives_by_bisection(-13.0, 100.0)
        assert abs(cf.f_b - fb) < 1e-4 * fb
        assert abs(cf.f_bbar - fbbar) < 1e-4 * fbbar
        return f"f_B={fb:.6f}"

    def shifted_point():
        ratio = classical.quantum_shifted_bifurcation(p)
        assert 0.5 < ratio < 1.0
        return f"{ratio:.4f} F_c"

    def wigner_values():
        vac = wig.wigner(fock.fock_state(0, 24), extent=6, points=101)
        assert abs(vac.value_at(0, 0) - 1 / math.pi) < 1e-6
        one = wig.wigner(fock.fock_state(1, 24), extent=6, points=101)
        assert abs(one.value_at(0, 0) + 1 / math.pi) < 1e-6
        return None

    def rate_fit():
        t = np.arange(0.0, 200.0)
        rec = propagate.EvolutionRecord(
            times=t, x_bar=np.zeros_like(t, dtype=complex),
            p_s=np.exp(-0.01 * t), trace_drift=np.zeros_like(t))
        fit = analysis.tunneling_rate(rec)
        assert abs(fit.gamma_t - 0.01) < 1e-12
        assert fit.r_squared > 0.999999
        return None

    def propagation():
        ph = p.replace(n_trunc=max(36, 2 * math.ceil(1.5 * p.aleph)), t_final=2.0)
        sys_rot, diss = propagate.build_system(ph, ph.drive_ratio)
        rho0 = propagate.initial_state(ph, ph.drive_ratio, "sas")
        rec = propagate.evolve(rho0, sys_rot, diss, ph)
        assert rec.trace_drift.max() < 1e-10
        final = rec.final_state.matrix
        assert np.abs(final - final.conj().T).max() < 1e-12
        ev_min = float(np.linalg.eigvalsh(final).min())
        assert ev_min > -1e-4  # known non-CP transient scale
        # cross-check the fused kernel against the dense reference path
        ref = rho0.matrix.copy()
        dt = ph.dt
        nsteps = round(2 * np.pi / dt)
        for i in range(nsteps * 2):
            ref = _rk4_reference(sys_rot, diss, ref, i * dt, dt)
        assert np.abs(ref - final).max() < 1e-10
        return None

    return [
        ("derived-quantities", derived),
        ("ladder-commutator", ladder),
        ("coherent-state-moments", coherent),
        ("rotating-spectrum-closed-form", rotating_spectrum),
        ("detailed-balance", detailed_balance),
        ("harmonic-limit-dissipator", harmonic_limit),
        ("critical-forces-vs-bisection", folds),
        ("shifted-bifurcation", shifted_point),
        ("wigner-reference-values", wigner_values),
        ("exponential-rate-fit", rate_fit),
        ("propagation-structure", propagation),
    ]


def _rk4_reference(sys_rot, diss, rho, t, dt):
    def f(r, tt):
        return bath.apply_generator(sys_rot, diss, r, tt)

    k1 = f(rho, t)
    k2 = f(rho + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = f(rho + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = f(rho + dt * k3, t + dt)
    return rho + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duffing",
        description="Driven Duffing oscillator: rotating-frame open quantum "
                    "dynamics, bifurcation analysis and escape-rate scaling.")
    parser.add_argument("--config", help="flat key = value parameter file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker processes for independent sweep points")
    parser.add_argument("--no-counter-rotating", action="store_true",
                        help="drop the e^{+-2i nu t} dissipator terms")
    parser.add_argument("--lindblad", action="store_true",
                        help="use the damped-oscillator generator instead of "
                             "the filtered one")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("spectrum", help="lab and rotating-frame level ladders")
    sp.add_argument("--drive-ratio", type=float, default=0.0,
                    help="drive (in F_c) for the rotating-frame levels")
    sp.set_defaults(fn=cmd_spectrum)

    bp = sub.add_parser("bifurcation", help="stationary branches and critical drives")
    bp.add_argument("--grid", default="0.0:1.2:241", help="F0/F_c grid start:stop:count")
    bp.set_defaults(fn=cmd_bifurcation)

    ep = sub.add_parser("evolve", help="single time evolution at the configured drive")
    ep.add_argument("--init", choices=("sas", "las", "vacuum"), default="sas")
    ep.set_defaults(fn=cmd_evolve)

    wp = sub.add_parser("sweep", help="steady-state amplitude vs drive (hysteresis)")
    wp.add_argument("--grid", default="0.5:1.1:21")
    wp.add_argument("--init", choices=("sas", "las", "both"), default="both")
    wp.set_defaults(fn=cmd_sweep)

    gp = sub.add_parser("wigner", help="phase-space snapshot")
    gp.add_argument("--source", default="evolved",
                    choices=("evolved", "coherent-shifted", "coherent-classical"))
    gp.add_argument("--time", type=float, default=None,
                    help="snapshot time in periods (default t_final)")
    gp.add_argument("--extent", type=float, default=8.0)
    gp.add_argument("--points", type=int, default=201)
    gp.set_defaults(fn=cmd_wigner)

    rp = sub.add_parser("rate", help="escape rate at the configured drive")
    rp.set_defaults(fn=cmd_rate)

    cp = sub.add_parser("scaling", help="escape-rate scaling over a drive grid")
    cp.add_argument("--grid", default="0.70:0.765:8")
    cp.add_argument("--max-doublings", type=int, default=3,
                    help="t_final doublings allowed when decay is unresolved")
    cp.set_defaults(fn=cmd_scaling)

    tp = sub.add_parser("selftest", help="run the built-in property checks")
    tp.set_defaults(fn=cmd_selftest)
    return parser


def main(argv=None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("DUFFING_LOG_LEVEL", "error").lower())
    if level is None:
        print("DUFFING_LOG_LEVEL must be one of error, info, debug",
              file=sys.stderr)
        return 1
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "time", None) is None and args.subcommand == "wigner":
        pass  # resolved after config load
    try:
        run = Run(args)
        if args.subcommand == "wigner" and args.time is None:
            args.time = run.params.t_final
        summary = args.fn(run, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PhysicsGuard as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 2
    print(f"{args.subcommand}: {summary}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
