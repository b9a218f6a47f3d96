import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmpemba import models
from qmpemba.observables import (
    DensityMatrix,
    dephase_charge_sectors,
    eigenvalues_hermitian,
    entanglement_asymmetry,
    entropy_deficit,
    maximally_mixed,
    pauli_coefficient,
    trace_distance_to_mixed,
    von_neumann_entropy,
    witnesses,
)
from qmpemba.statevector import BlochAngles, expect_pauli, new_product_state, random_state, reduced_density_matrix
from qmpemba.validation import dense_witness_deviation, jacobi_eigenvalues

LN2 = math.log(2)


def random_density(l, rng, rank=None):
    dim = 1 << l
    k = rank or dim
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def qubit(bx=0.0, by=0.0, bz=0.0):
    return 0.5 * np.array([[1 + bz, bx - 1j * by], [bx + 1j * by, 1 - bz]])


def plus_state_rdm(l):
    v = np.full(1 << l, 2 ** (-l / 2), dtype=complex)
    return np.outer(v, v.conj())


# --- eigensolver --------------------------------------------------------------


def test_eigenvalues_of_mixed_and_diagonal():
    np.testing.assert_allclose(eigenvalues_hermitian(maximally_mixed(3)), np.full(8, 1 / 8), atol=1e-15)
    p = np.array([0.4, 0.1, 0.3, 0.2])
    np.testing.assert_allclose(eigenvalues_hermitian(np.diag(p)), np.sort(p), atol=1e-15)


def test_eigen_residuals_and_two_by_two_roots(rng):
    h = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = h + h.conj().T
    evals = eigenvalues_hermitian(h)
    w, v = np.linalg.eigh(h)
    assert np.max(np.linalg.norm(h @ v - v * evals, axis=0)) < 1e-10
    np.testing.assert_allclose(evals, jacobi_eigenvalues(h), atol=1e-10)
    block = h[:2, :2]
    tr, det = np.trace(block).real, np.linalg.det(block).real
    disc = math.sqrt(tr * tr - 4 * det)
    np.testing.assert_allclose(eigenvalues_hermitian(block), [(tr - disc) / 2, (tr + disc) / 2], atol=1e-12)


def test_eigenvalues_trace_one(rng):
    for l in range(1, 7):
        assert abs(np.sum(eigenvalues_hermitian(random_density(l, rng))) - 1) < 1e-10


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        eigenvalues_hermitian(np.array([[0.5, 0.1], [0.0, 0.5]]))


def test_negative_eigenvalue_beyond_tolerance_rejected():
    with pytest.raises(ValueError):
        von_neumann_entropy(np.diag([1.001, -0.001]))
    # roundoff-size negativity is clipped
    assert von_neumann_entropy(np.diag([1 + 1e-12, -1e-12])) == pytest.approx(0.0, abs=1e-10)


def test_density_matrix_type():
    dm = DensityMatrix(maximally_mixed(2))
    assert dm.l == 2
    dm.validate()
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(3) / 3)
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(2)).validate()


# --- witnesses ----------------------------------------------------------------


@pytest.mark.parametrize("l", [1, 2, 3, 6])
def test_fixed_point_vanishes(l):
    w = witnesses(DensityMatrix(maximally_mixed(l)))
    assert abs(w.D_A) < 1e-12 and abs(w.dS_A) < 1e-12 and abs(w.asym) < 1e-12


@pytest.mark.parametrize("l", [1, 2, 4])
def test_pure_state_extremes(l, rng):
    rho = random_density(l, rng, rank=1)
    assert trace_distance_to_mixed(rho) == pytest.approx(1 - 2**-l, abs=1e-12)
    assert entropy_deficit(rho) == pytest.approx(l * LN2, abs=1e-10)


def test_trace_distance_example():
    assert trace_distance_to_mixed(np.diag([0.7, 0.3])) == pytest.approx(0.2, abs=1e-15)


def test_entropy_deficit_binary_example():
    assert entropy_deficit(np.diag([0.9, 0.1])) == pytest.approx(0.368064, abs=1e-6)
    assert entropy_deficit(np.diag([0.9, 0.1])) == pytest.approx(LN2 + 0.9 * math.log(0.9) + 0.1 * math.log(0.1))


def test_dephasing_examples(rng):
    d = np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex)
    np.testing.assert_array_equal(dephase_charge_sectors(d), d)
    np.testing.assert_allclose(dephase_charge_sectors(qubit(bx=1.0)), np.eye(2) / 2, atol=1e-15)
    rho = random_density(3, rng)
    once = dephase_charge_sectors(rho)
    np.testing.assert_allclose(dephase_charge_sectors(once), once, atol=0)
    assert np.trace(once) == pytest.approx(np.trace(rho), abs=1e-15)
    np.testing.assert_allclose(once, once.conj().T, atol=1e-15)
    # weight 1 patterns 001, 010, 100 stay coupled
    assert once[1, 2] == rho[1, 2] and once[1, 3] == 0


def test_asymmetry_examples():
    assert entanglement_asymmetry(np.diag([0.5, 0.2, 0.2, 0.1])) == pytest.approx(0.0, abs=1e-14)
    assert entanglement_asymmetry(plus_state_rdm(2)) == pytest.approx(1.5 * LN2, abs=1e-10)
    assert entanglement_asymmetry(plus_state_rdm(2)) == pytest.approx(1.039721, abs=1e-6)
    assert entanglement_asymmetry(qubit(bx=0.6)) == pytest.approx(0.192745, abs=1e-6)


@pytest.mark.parametrize("l", [1, 2, 3, 4, 5, 6])
def test_plus_state_asymmetry_is_binomial_entropy(l):
    p = np.array([math.comb(l, k) for k in range(l + 1)]) / 2**l
    shannon = -np.sum(p * np.log(p))
    w = witnesses(plus_state_rdm(l))
    assert w.asym == pytest.approx(shannon, abs=1e-10)
    assert w.D_A == pytest.approx(1 - 2**-l, abs=1e-12)
    assert w.dS_A == pytest.approx(l * LN2, abs=1e-10)


def test_witnesses_agree_with_single_functions(rng):
    rho = random_density(4, rng)
    w = witnesses(rho)
    assert w.D_A == trace_distance_to_mixed(rho)
    assert w.dS_A == pytest.approx(entropy_deficit(rho), abs=1e-14)
    assert w.asym == pytest.approx(entanglement_asymmetry(rho), abs=1e-14)


def test_asymmetry_nonnegative_on_many_random_matrices(rng):
    worst = 0.0
    for k in range(1000):
        l = 1 + k % 4
        rho = random_density(l, rng, rank=1 + k % (1 << l))
        a = entanglement_asymmetry(rho)
        worst = min(worst, a)
        assert von_neumann_entropy(dephase_charge_sectors(rho)) >= von_neumann_entropy(rho) - 1e-10
    assert worst >= -1e-10


def test_asymmetry_zero_iff_commutes(rng):
    blocks = [np.array([[0.1]]), random_density(1, rng) * 0.6, np.array([[0.3]])]
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = blocks[0][0, 0]
    rho[np.ix_([1, 2], [1, 2])] = blocks[1]
    rho[3, 3] = blocks[2][0, 0]
    assert entanglement_asymmetry(rho) == pytest.approx(0.0, abs=1e-10)
    rho[0, 3] = rho[3, 0] = 0.05
    assert entanglement_asymmetry(rho) > 1e-4


def test_target_state_commutes_with_subsystem_charge():
    for l in range(1, 7):
        q = np.diag([l - 2 * bin(a).count("1") for a in range(1 << l)]).astype(float)
        lam = maximally_mixed(l)
        assert np.max(np.abs(q @ lam - lam @ q)) == 0.0


def test_witness_ranges(rng):
    for l in (1, 3, 5):
        for _ in range(20):
            w = witnesses(random_density(l, rng, rank=int(rng.integers(1, 1 << l))))
            assert -1e-12 <= w.D_A <= 1 - 2**-l + 1e-12
            assert -1e-10 <= w.dS_A <= l * LN2 + 1e-10
            assert w.asym >= -1e-10


# --- Pauli coefficients -------------------------------------------------------


def test_pauli_coefficient_examples(rng):
    rho = random_density(3, rng)
    assert pauli_coefficient(rho, {}) == pytest.approx(1.0, abs=1e-14)
    for string in ({0: "X"}, {1: "Y", 2: "Z"}, {0: "Y", 1: "Y"}):
        assert pauli_coefficient(maximally_mixed(3), string) == pytest.approx(0.0, abs=1e-15)
    assert pauli_coefficient(qubit(0.3, -0.4, 0.5), {0: "Y"}) == pytest.approx(-0.4, abs=1e-15)


def test_pauli_coefficient_matches_statevector(rng):
    th = rng.uniform(0, math.pi, 6)
    ph = rng.uniform(0, 2 * math.pi, 6)
    s = new_product_state(BlochAngles(th, ph))
    rho = reduced_density_matrix(s, 0, 3)
    assert pauli_coefficient(rho, {0: "Z", 2: "Z"}) == pytest.approx(math.cos(th[0]) * math.cos(th[2]), abs=1e-13)
    s = random_state(6, rng)
    models.floquet_step(s)
    rho = reduced_density_matrix(s, 0, 3)
    for string in ({0: "X", 1: "X"}, {1: "Y", 2: "Y"}, {0: "Z", 1: "X", 2: "Y"}):
        assert pauli_coefficient(rho, string) == pytest.approx(expect_pauli(s, string), abs=1e-13)


def test_pauli_coefficient_rejects_outside_site():
    with pytest.raises(IndexError):
        pauli_coefficient(maximally_mixed(2), {2: "Z"})


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_pauli_expansion_reconstructs_rho(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(2, rng)
    ops = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]),
           "Z": np.diag([1, -1])}
    recon = np.zeros((4, 4), dtype=complex)
    for a in "IXYZ":
        for b in "IXYZ":
            string = {k: v for k, v in ((0, a), (1, b)) if v != "I"}
            recon += pauli_coefficient(rho, string) * np.kron(ops[b], ops[a]) / 4
    np.testing.assert_allclose(recon, rho, atol=1e-12)


# --- references ---------------------------------------------------------------


def test_dense_reference_along_trajectory():
    assert dense_witness_deviation(6, 2, 100, seed=5) < 1e-10


def test_rdm_recomputation_is_stable(rng):
    s = random_state(10, rng)
    a = witnesses(reduced_density_matrix(s, 0, 4))
    b = witnesses(DensityMatrix(reduced_density_matrix(s.copy(), 0, 4)))
    assert a == b
