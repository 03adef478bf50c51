import math

import numpy as np
import pytest

from duffing.errors import TruncationOverflow
from duffing.fock import (
    DensityMatrix,
    annihilation,
    coherent_ket,
    coherent_state,
    creation,
    fock_state,
    momentum,
    number,
    position,
)
from duffing.params import SystemParams


def test_annihilation_dim2():
    a = annihilation(2)
    assert np.array_equal(a, np.array([[0, 1], [0, 0]], dtype=complex))


def test_annihilation_dim3_entries():
    a = annihilation(3)
    assert a[0, 1] == 1.0
    assert a[1, 2] == pytest.approx(math.sqrt(2))
    assert np.count_nonzero(a) == 2


def test_number_operator_eigenvalue():
    dim = 12
    n_op = creation(dim) @ annihilation(dim)
    ket = np.zeros(dim)
    ket[5] = 1.0
    assert np.real(ket @ n_op @ ket) == pytest.approx(5.0)


def test_ladder_commutator_except_corner():
    dim = 20
    a = annihilation(dim)
    comm = a @ a.conj().T - a.conj().T @ a
    expect = np.eye(dim)
    # the truncation defect lives only in the (dim-1, dim-1) corner
    assert np.abs(comm - expect)[:-1, :-1].max() < 1e-14
    assert comm[-1, -1] == pytest.approx(-(dim - 1))


def test_position_offdiagonal_value():
    p = SystemParams()
    x = position(2, p)
    assert x[0, 1] == pytest.approx(math.sqrt(1.0 / 24.0))
    assert np.abs(x - x.conj().T).max() == 0


def test_position_vacuum_expectation_zero():
    p = SystemParams()
    x = position(8, p)
    ket = np.zeros(8)
    ket[0] = 1.0
    assert abs(ket @ x @ ket) == 0


def test_position_coherent_expectation_brute_force():
    # oracle: direct double sum over Fock amplitudes
    p = SystemParams()
    dim = 40
    alpha = 1.3 - 0.7j
    ket = coherent_ket(alpha, dim)
    x_zpf = math.sqrt(1.0 / (2 * p.aleph))
    brute = 0.0
    for n in range(dim - 1):
        brute += 2 * np.real(np.conj(ket[n]) * ket[n + 1]) * x_zpf * math.sqrt(n + 1)
    x = position(dim, p)
    assert np.real(ket.conj() @ x @ ket) == pytest.approx(brute, abs=1e-12)
    assert brute == pytest.approx(2 * x_zpf * alpha.real, abs=1e-9)


def test_xp_commutator_on_low_states():
    p = SystemParams()
    dim = 30
    x = position(dim, p)
    pi = momentum(dim, p)
    comm = x @ pi - pi @ x
    for alpha in (0.0, 0.8, 1.5j):
        ket = coherent_ket(alpha, dim)
        assert complex(ket.conj() @ comm @ ket) == pytest.approx(1j, abs=1e-9)


def test_coherent_alpha_zero_is_ground_state():
    rho = coherent_state(0j, 10)
    expect = np.zeros((10, 10))
    expect[0, 0] = 1.0
    assert np.abs(rho.matrix - expect).max() == 0


def test_coherent_mean_occupation():
    rho = coherent_state(2.0, 60)
    n_op = number(60)
    assert np.real(np.trace(n_op @ rho.matrix)) == pytest.approx(4.0, abs=1e-9)


def test_coherent_purity():
    rho = coherent_state(2.0, 60)
    assert rho.purity() == pytest.approx(1.0, abs=1e-9)


def test_coherent_phase_convention():
    # <x> tracks Re(alpha), <p> tracks Im(alpha)
    p = SystemParams()
    dim = 50
    alpha = 1.0 + 1.0j
    ket = coherent_ket(alpha, dim)
    xv = np.real(ket.conj() @ position(dim, p) @ ket)
    pv = np.real(ket.conj() @ momentum(dim, p) @ ket)
    assert xv == pytest.approx(2 * math.sqrt(1 / (2 * p.aleph)) * alpha.real, abs=1e-9)
    assert pv == pytest.approx(2 * math.sqrt(p.aleph / 2) * alpha.imag, abs=1e-9)


def test_coherent_hard_precondition():
    with pytest.raises(TruncationOverflow):
        coherent_ket(4.0, 60)   # |alpha|^2 = 16 >= 15


def test_coherent_tail_deficit_guard():
    # |alpha|^2 just under dim/4 but the Poisson tail above dim-1 exceeds 1e-6
    with pytest.raises(TruncationOverflow, match="loses"):
        coherent_ket(1.99, 16)


def test_density_matrix_validation():
    good = fock_state(1, 6)
    assert good.dim == 6
    with pytest.raises(ValueError, match="Hermitian"):
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = 1.0
        m[0, 1] = 1e-3
        DensityMatrix(m)
    with pytest.raises(ValueError, match="trace"):
        DensityMatrix(np.eye(4, dtype=complex))
    with pytest.raises(ValueError, match="negative eigenvalue"):
        m = np.diag([1.2, -0.2, 0.0, 0.0]).astype(complex)
        DensityMatrix(m)
