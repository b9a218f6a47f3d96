"""Floquet and mixed-field Ising steppers, conserved quantities, dense oracles.

Time units: one Floquet period is one time unit; MFI time is ``steps * dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
import scipy.linalg

from .statevector import (
    QuantumState,
    apply_hopping,
    apply_single_qubit,
    apply_zz_layer,
    hamming_weights,
    index_array,
    expect_pauli,
)

ORACLE_MAX_SITES = 8
# next-nearest bonds (i, i+2) degenerate to a single site below N=4
FLOQUET_MIN_SITES = 4


@dataclass(frozen=True)
class FloquetParams:
    alpha: float = 2.0
    beta: float = 0.25
    gamma: float = 1.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ValueError(f"FloquetParams.{name} must be finite, got {value}")


@dataclass(frozen=True)
class MFIParams:
    J: float = 1.0
    h_x: float = (5.0 + math.sqrt(5.0)) / 8.0
    h_z: float = (1.0 + math.sqrt(5.0)) / 4.0
    dt: float = 0.05

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ValueError(f"MFIParams.{name} must be finite, got {value}")
        # dt == 0 is allowed as the identity step; runs require dt > 0
        if self.dt < 0:
            raise ValueError(f"MFIParams.dt must be non-negative, got {self.dt}")


def nn_bonds(n: int) -> list[tuple[int, int]]:
    return [(i, (i + 1) % n) for i in range(n)]


def nnn_bonds(n: int) -> list[tuple[int, int]]:
    return [(i, (i + 2) % n) for i in range(n)]


def hopping_bonds(n: int, parity: int) -> list[tuple[int, int]]:
    return [(i, (i + 1) % n) for i in range(parity, n, 2)]


def floquet_step(state: QuantumState, p: FloquetParams = FloquetParams()) -> None:
    """Advance one period of the U(1)-symmetric brickwork circuit in place.

    Layers act in the order alpha (nearest-neighbour ZZ), odd hopping, even
    hopping, gamma (next-nearest ZZ).
    """
    n = state.n_sites
    if n % 2 or n < FLOQUET_MIN_SITES:
        raise ValueError(f"Floquet circuit requires even N >= {FLOQUET_MIN_SITES}, got {n}")
    apply_zz_layer(state, nn_bonds(n), p.alpha)
    for i, j in hopping_bonds(n, 1):
        apply_hopping(state, i, j, p.beta)
    for i, j in hopping_bonds(n, 0):
        apply_hopping(state, i, j, p.beta)
    apply_zz_layer(state, nnn_bonds(n), p.gamma)


def field_gate(p: MFIParams, tau: float) -> np.ndarray:
    """Exact ``exp(-i*tau*(h_x X + h_z Z))`` by the axis-angle formula."""
    h = math.hypot(p.h_x, p.h_z)
    if h == 0.0:
        return np.eye(2, dtype=np.complex128)
    c, s = math.cos(h * tau), math.sin(h * tau)
    nx, nz = p.h_x / h, p.h_z / h
    return np.array(
        [[c - 1j * nz * s, -1j * nx * s], [-1j * nx * s, c + 1j * nz * s]],
        dtype=np.complex128,
    )


def _field_layer(state: QuantumState, u: np.ndarray) -> None:
    for i in range(state.n_sites):
        apply_single_qubit(state, i, u)


def mfi_trotter_step(state: QuantumState, p: MFIParams = MFIParams()) -> None:
    """One symmetric second-order step: half field, full ZZ, half field."""
    mfi_evolve(state, p, 1)


def mfi_evolve(state: QuantumState, p: MFIParams, n_steps: int) -> None:
    """``n_steps`` symmetric Trotter steps with adjacent half field layers fused.

    The state is left at a symmetric-step boundary, so observables taken
    afterwards are sampled correctly.
    """
    if n_steps <= 0:
        return
    half = field_gate(p, p.dt / 2)
    full = field_gate(p, p.dt)
    bonds = nn_bonds(state.n_sites)
    _field_layer(state, half)
    for k in range(n_steps):
        apply_zz_layer(state, bonds, -p.J * p.dt)
        _field_layer(state, full if k < n_steps - 1 else half)


def mfi_energy(state: QuantumState, p: MFIParams = MFIParams()) -> float:
    n = state.n_sites
    e = 0.0
    for i in range(n):
        e += p.J * expect_pauli(state, {i: "Z", (i + 1) % n: "Z"})
        e += p.h_x * expect_pauli(state, {i: "X"})
        e += p.h_z * expect_pauli(state, {i: "Z"})
    return e


def mfi_apply_hamiltonian(state: QuantumState, p: MFIParams = MFIParams()) -> np.ndarray:
    """Return ``H_MFI |psi>`` as a new amplitude array."""
    n = state.n_sites
    idx = index_array(n)
    psi = state.amplitudes
    z = [1 - 2 * ((idx >> i) & 1) for i in range(n)]
    diag = np.zeros(idx.size)
    for i in range(n):
        diag += p.J * z[i] * z[(i + 1) % n] + p.h_z * z[i]
    out = diag * psi
    for i in range(n):
        out += p.h_x * psi[idx ^ (1 << i)]
    return out


def mfi_energy_moments(state: QuantumState, p: MFIParams = MFIParams()) -> tuple[float, float]:
    """``(<H>, <H^2>)`` for the MFI Hamiltonian."""
    hpsi = mfi_apply_hamiltonian(state, p)
    e1 = float(np.vdot(state.amplitudes, hpsi).real)
    e2 = float(np.vdot(hpsi, hpsi).real)
    return e1, e2


def sector_probabilities(state: QuantumState) -> np.ndarray:
    """Probability of each Hamming weight ``w = 0..N``."""
    w = hamming_weights(state.n_sites)
    prob = np.abs(state.amplitudes) ** 2
    return np.bincount(w, weights=prob, minlength=state.n_sites + 1)


def total_magnetization(state: QuantumState) -> tuple[float, float]:
    """``(<Q>, <Q^2>)`` for ``Q = sum_i Z_i`` from sector probabilities."""
    n = state.n_sites
    p = sector_probabilities(state)
    q = n - 2.0 * np.arange(n + 1)
    return float(p @ q), float(p @ q**2)


# ---------------------------------------------------------------------------
# dense oracles (tests and validation only)


def _pauli_dense(n: int, ops: dict[int, np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for site in range(n):
        # site 0 is least significant: it goes rightmost in the kron chain
        out = np.kron(ops.get(site, np.eye(2)), out)
    return out


_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def dense_floquet_layers(n: int, p: FloquetParams) -> list[np.ndarray]:
    """Generators ``H_alpha, H_beta^odd, H_beta^even, H_gamma`` as dense matrices."""
    dim = 1 << n
    h_a = np.zeros((dim, dim), dtype=np.complex128)
    h_g = np.zeros_like(h_a)
    h_o = np.zeros_like(h_a)
    h_e = np.zeros_like(h_a)
    for i, j in nn_bonds(n):
        h_a -= p.alpha * _pauli_dense(n, {i: _Z, j: _Z})
    for i, j in nnn_bonds(n):
        h_g -= p.gamma * _pauli_dense(n, {i: _Z, j: _Z})
    for parity, h in ((1, h_o), (0, h_e)):
        for i, j in hopping_bonds(n, parity):
            h -= p.beta * (_pauli_dense(n, {i: _X, j: _X}) + _pauli_dense(n, {i: _Y, j: _Y}))
    return [h_a, h_o, h_e, h_g]


def dense_mfi_hamiltonian(n: int, p: MFIParams) -> np.ndarray:
    dim = 1 << n
    h = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(n):
        h += p.J * _pauli_dense(n, {i: _Z, (i + 1) % n: _Z})
        h += p.h_x * _pauli_dense(n, {i: _X})
        h += p.h_z * _pauli_dense(n, {i: _Z})
    return h


def dense_step_oracle(
    state: QuantumState, model: str, params, n_steps: int = 1
) -> QuantumState:
    """Apply ``n_steps`` of the exact dense propagator to a copy of ``state``.

    Floquet: the product of exact layer exponentials.  MFI: ``exp(-i H dt)``
    from a Hermitian eigendecomposition.
    """
    n = state.n_sites
    if n > ORACLE_MAX_SITES:
        raise ValueError(f"dense oracle limited to N <= {ORACLE_MAX_SITES}, got {n}")
    if model == "floquet":
        if n < FLOQUET_MIN_SITES:
            raise ValueError(f"Floquet circuit requires N >= {FLOQUET_MIN_SITES}, got {n}")
        u = np.eye(1 << n, dtype=np.complex128)
        for h in dense_floquet_layers(n, params):
            u = scipy.linalg.expm(-1j * h) @ u
    elif model == "mfi":
        evals, evecs = np.linalg.eigh(dense_mfi_hamiltonian(n, params))
        u = (evecs * np.exp(-1j * evals * params.dt)) @ evecs.conj().T
    else:
        raise ValueError(f"unknown model {model!r}")
    u_n = np.linalg.matrix_power(u, n_steps)
    return QuantumState(n, u_n @ state.amplitudes)
