"""Reduced-state spectra and distance witnesses to the infinite-temperature state.

Entropies are in nats.  Eigenvalues in ``[-1e-10, 0)`` are treated as
roundoff and clipped to zero; anything more negative is an error.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Union

import numpy as np

from .statevector import pauli_masks

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class DensityMatrix:
    """A ``2**l x 2**l`` reduced density matrix."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.complex128)
        dim = entries.shape[0]
        if entries.ndim != 2 or entries.shape != (dim, dim) or dim & (dim - 1):
            raise ValueError(f"density matrix must be 2**l square, got {entries.shape}")
        object.__setattr__(self, "entries", entries)

    @property
    def l(self) -> int:
        return int(self.entries.shape[0]).bit_length() - 1

    def validate(self) -> None:
        m = self.entries
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian within 1e-12")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {np.trace(m).real!r} is not 1")


MatrixLike = Union[DensityMatrix, np.ndarray]


def _matrix(dm: MatrixLike) -> np.ndarray:
    return dm.entries if isinstance(dm, DensityMatrix) else np.asarray(dm, dtype=np.complex128)


def _subsystem_size(m: np.ndarray) -> int:
    return int(m.shape[0]).bit_length() - 1


def eigenvalues_hermitian(dm: MatrixLike) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix (LAPACK ``heevd`` via numpy)."""
    m = _matrix(dm)
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
        raise ValueError("matrix is not Hermitian within tolerance")
    return np.linalg.eigvalsh(m)


def _clip_spectrum(evals: np.ndarray) -> np.ndarray:
    if evals.size and evals.min() < -PSD_TOL:
        raise ValueError(f"eigenvalue {evals.min():.3g} below -1e-10: not a density matrix")
    return np.clip(evals, 0.0, None)


def _entropy_of_spectrum(evals: np.ndarray) -> float:
    p = _clip_spectrum(evals)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(dm: MatrixLike) -> float:
    return _entropy_of_spectrum(eigenvalues_hermitian(dm))


def trace_distance_to_mixed(dm: MatrixLike) -> float:
    m = _matrix(dm)
    evals = eigenvalues_hermitian(m)
    return float(0.5 * np.sum(np.abs(evals - 1.0 / m.shape[0])))


def entropy_deficit(dm: MatrixLike) -> float:
    m = _matrix(dm)
    return _subsystem_size(m) * np.log(2.0) - von_neumann_entropy(m)


@lru_cache(maxsize=None)
def _weight_blocks(l: int) -> tuple[np.ndarray, ...]:
    w = np.array([bin(a).count("1") for a in range(1 << l)])
    return tuple(np.flatnonzero(w == k) for k in range(l + 1))


def _weights(l: int) -> np.ndarray:
    return np.array([bin(a).count("1") for a in range(1 << l)])


def dephase_charge_sectors(dm: MatrixLike) -> np.ndarray:
    """Pinching onto the eigenspaces of ``Q_A = sum_{j in A} Z_j``.

    Coherences between patterns of different Hamming weight are removed.
    """
    m = _matrix(dm)
    w = _weights(_subsystem_size(m))
    return np.where(w[:, None] == w[None, :], m, 0.0)


def entanglement_asymmetry(dm: MatrixLike) -> float:
    """``S(pinched rho) - S(rho)``, the relative entropy to the pinched state.

    The pinched entropy is accumulated block by block over charge sectors.
    """
    m = _matrix(dm)
    s_sym = 0.0
    for block in _weight_blocks(_subsystem_size(m)):
        sub = m[np.ix_(block, block)]
        s_sym += _entropy_of_spectrum(eigenvalues_hermitian(sub))
    return s_sym - von_neumann_entropy(m)


def _parity(values: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values)
    v = values.copy()
    while np.any(v):
        out ^= v & 1
        v >>= 1
    return out


def pauli_coefficient(dm: MatrixLike, string: Mapping[int, str]) -> float:
    """``Tr(rho P)`` for a Pauli string on subsystem-local sites ``0..l-1``."""
    m = _matrix(dm)
    l = _subsystem_size(m)
    for site in string:
        if not 0 <= site < l:
            raise IndexError(f"site {site} not in subsystem of length {l}")
    xmask, zmask, ny = pauli_masks(string)
    b = np.arange(1 << l)
    signs = 1 - 2 * _parity(b & zmask)
    # Tr(rho P) = sum_b rho[b, b ^ x] * i**ny * (-1)**|b & z|
    value = (1j ** ny) * np.sum(m[b, b ^ xmask] * signs)
    return float(value.real)


def maximally_mixed(l: int) -> np.ndarray:
    return np.eye(1 << l, dtype=np.complex128) / (1 << l)


@dataclass(frozen=True)
class Witnesses:
    D_A: float
    dS_A: float
    asym: float


def witnesses(dm: MatrixLike) -> Witnesses:
    """All three witnesses from one spectral decomposition of ``rho_A``."""
    m = _matrix(dm)
    l = _subsystem_size(m)
    evals = eigenvalues_hermitian(m)
    d_a = float(0.5 * np.sum(np.abs(evals - 1.0 / m.shape[0])))
    s = _entropy_of_spectrum(evals)
    s_sym = 0.0
    for block in _weight_blocks(l):
        s_sym += _entropy_of_spectrum(eigenvalues_hermitian(m[np.ix_(block, block)]))
    return Witnesses(D_A=d_a, dS_A=l * np.log(2.0) - s, asym=s_sym - s)
