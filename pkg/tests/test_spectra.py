import numpy as np
import pytest

from duffing.fock import position
from duffing.params import SystemParams, derived_quantities
from duffing.spectra import (
    lab_hamiltonian,
    perturbative_lab_levels,
    rotating_levels_closed_form,
    rwa_hamiltonian,
)


def test_lab_harmonic_limit():
    p = SystemParams(gamma_tilde=0.0)
    h = lab_hamiltonian(p)
    evals = np.linalg.eigvalsh(h)
    assert np.abs(evals - (np.arange(p.n_trunc) + 0.5)).max() < 1e-12


def test_lab_ground_state_vs_perturbation_theory():
    p = SystemParams()
    evals = np.linalg.eigvalsh(lab_hamiltonian(p))
    e0_pert = perturbative_lab_levels(p, 0)[0]
    assert abs(evals[0] - e0_pert) < 1e-3


def test_lab_ground_state_position_symmetric():
    p = SystemParams()
    _, vecs = np.linalg.eigh(lab_hamiltonian(p))
    g = vecs[:, 0]
    assert abs(g.conj() @ position(p.n_trunc, p) @ g) < 1e-10


def test_perturbative_levels_and_spacing():
    p = SystemParams()
    levels = perturbative_lab_levels(p, 4)
    # E_0 = 1/2 - 3 gt/(4 aleph)
    assert levels[0] == pytest.approx(0.5 - 3 * (1 / 24) / 48)
    # spacing E_1 - E_0 = 1 - 3 gt/aleph = 0.98958...
    assert levels[1] - levels[0] == pytest.approx(0.98958, abs=5e-6)
    spacings = np.diff(levels)
    n = np.arange(1, 5)
    assert spacings == pytest.approx(1 - 3 * p.gamma_tilde * n / p.aleph)


def test_perturbative_levels_harmonic():
    p = SystemParams(gamma_tilde=0.0)
    levels = perturbative_lab_levels(p, 6)
    assert levels == pytest.approx(np.arange(7) + 0.5)


def test_perturbative_levels_bound_guard():
    with pytest.raises(ValueError):
        perturbative_lab_levels(SystemParams(), 18)


def test_undriven_rotating_spectrum_exact():
    p = SystemParams()
    sys_rot = rwa_hamiltonian(p, 0.0)
    closed = rotating_levels_closed_form(p)
    assert np.abs(sys_rot.eigenvalues - closed).max() == 0
    assert np.array_equal(sys_rot.eigenvectors, np.eye(p.n_trunc))
    assert np.array_equal(sys_rot.fock_map, np.arange(p.n_trunc))
    # E_0 = 0.065*0.5 - (1/192)*0.25
    assert sys_rot.eigenvalues[0] == pytest.approx(0.031198, abs=5e-7)


def test_undriven_spectrum_peaks_near_resonant_level():
    p = SystemParams()
    d = derived_quantities(p)
    levels = rotating_levels_closed_form(p)[:18]
    assert int(np.argmax(levels)) == round(d.n_star - 0.5)  # == 6


def test_driven_system_hermitian_and_unitary():
    p = SystemParams()
    sys_rot = rwa_hamiltonian(p, 0.7)
    h = sys_rot.h_rwa
    assert np.abs(h - h.conj().T).max() < 1e-12
    u = sys_rot.eigenvectors
    assert np.abs(u.conj().T @ u - np.eye(p.n_trunc)).max() < 1e-10
    # eigen-decomposition actually reproduces H
    rebuilt = u @ np.diag(sys_rot.eigenvalues) @ u.conj().T
    assert np.abs(rebuilt - h).max() < 1e-10


def test_adiabatic_labels_stable_under_ramp_refinement():
    p = SystemParams()
    a = rwa_hamiltonian(p, 0.7, ramp_steps=100)
    b = rwa_hamiltonian(p, 0.7, ramp_steps=200)
    overlaps = np.abs(np.sum(a.eigenvectors.conj() * b.eigenvectors, axis=0))
    assert overlaps.min() > 1 - 1e-9
    assert np.abs(a.eigenvalues - b.eigenvalues).max() < 1e-12


def test_adiabatic_labels_differ_from_energy_order():
    # the rotating-frame spectrum is non-monotonic in the Fock label, so
    # the adiabatic ordering must not silently degrade to an energy sort
    p = SystemParams()
    sys_rot = rwa_hamiltonian(p, 0.7)
    assert not np.array_equal(sys_rot.energy_order(), np.arange(p.n_trunc))
    # ground Fock label stays a low-lying, mostly-vacuum state
    w0 = np.abs(sys_rot.eigenvectors[:, 0]) ** 2
    assert w0[:6].sum() > 0.9


def test_drive_enters_hamiltonian_linearly():
    p = SystemParams()
    sys_rot = rwa_hamiltonian(p, 0.5)
    diff = sys_rot.h_rwa - rwa_hamiltonian(p, 0.0).h_rwa
    x = position(p.n_trunc, p)
    ratio = diff[0, 1] / x[0, 1]
    assert np.abs(diff - ratio * x).max() < 1e-12
    assert ratio.real == pytest.approx(sys_rot.f0)
