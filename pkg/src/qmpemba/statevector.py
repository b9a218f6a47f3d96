"""Pure states of periodic spin-1/2 chains and in-place gate kernels.

Bit convention: site ``i`` is bit ``i`` of the amplitude index, bit value 0 is
``|0>`` with Z = +1 and bit value 1 is ``|1>`` with Z = -1.  The total
magnetization of a basis state with Hamming weight ``w`` is ``N - 2w``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from ._backend import kernels

MAX_SUBSYSTEM = 6
UNITARY_TOL = 1e-12


@dataclass(frozen=True)
class BlochAngles:
    """Per-site polar and azimuthal angles of a product state."""

    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).ravel()
        phi = np.asarray(self.phi, dtype=float).ravel()
        if theta.shape != phi.shape:
            raise ValueError(
                f"theta and phi lengths differ ({theta.size} vs {phi.size})"
            )
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    def __len__(self):
        return self.theta.size


class QuantumState:
    """A normalized pure state of ``n_sites`` spins stored as 2**N amplitudes.

    Gate functions in this module mutate ``amplitudes`` in place.
    """

    __slots__ = ("n_sites", "amplitudes")

    def __init__(self, n_sites: int, amplitudes: np.ndarray):
        n_sites = int(n_sites)
        if n_sites < 2 or n_sites % 2:
            raise ValueError(f"n_sites must be even and >= 2, got {n_sites}")
        amplitudes = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (1 << n_sites,):
            raise ValueError(
                f"expected {1 << n_sites} amplitudes for N={n_sites}, "
                f"got shape {amplitudes.shape}"
            )
        self.n_sites = n_sites
        self.amplitudes = amplitudes

    def copy(self) -> "QuantumState":
        return QuantumState(self.n_sites, self.amplitudes.copy())

    def norm_error(self) -> float:
        """Return ``|<psi|psi> - 1|``."""
        return abs(float(np.vdot(self.amplitudes, self.amplitudes).real) - 1.0)

    def __repr__(self):
        return f"QuantumState(n_sites={self.n_sites})"


def _check_site(state: QuantumState, *sites: int) -> None:
    for s in sites:
        if not 0 <= s < state.n_sites:
            raise IndexError(f"site {s} out of range for N={state.n_sites}")


def _check_pair(state: QuantumState, i: int, j: int) -> None:
    _check_site(state, i, j)
    if i == j:
        raise ValueError(f"two-site gate needs distinct sites, got ({i}, {j})")


def new_product_state(angles: BlochAngles, n_sites: int | None = None) -> QuantumState:
    """Build ``prod_i (cos(theta_i/2)|0> + e^{i phi_i} sin(theta_i/2)|1>)``.

    The amplitude array is assembled by successive Kronecker products with
    site 0 as the least significant bit.
    """
    n = len(angles)
    if n_sites is not None and n != n_sites:
        raise ValueError(f"got {n} angle pairs for N={n_sites}")
    psi = np.ones(1, dtype=np.complex128)
    for th, ph in zip(angles.theta, angles.phi):
        site = np.array([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)])
        # new site becomes the next most significant bit
        psi = np.kron(site, psi)
    return QuantumState(n, psi)


def basis_state(n_sites: int, index: int = 0) -> QuantumState:
    psi = np.zeros(1 << n_sites, dtype=np.complex128)
    psi[index] = 1.0
    return QuantumState(n_sites, psi)


def random_state(n_sites: int, rng: np.random.Generator) -> QuantumState:
    """Haar-like random state from i.i.d. complex Gaussians."""
    dim = 1 << n_sites
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    psi /= np.linalg.norm(psi)
    return QuantumState(n_sites, psi)


def apply_zz_phase(state: QuantumState, i: int, j: int, angle: float) -> None:
    """Multiply each amplitude by ``exp(+i*angle*z_i*z_j)``."""
    _check_pair(state, i, j)
    kernels.zz_phase(state.amplitudes, state.n_sites, i, j, float(angle))


def apply_zz_layer(state: QuantumState, bonds: Sequence[tuple[int, int]], angle: float) -> None:
    """``exp(+i*angle*sum_(i,j) Z_i Z_j)`` over a set of commuting bonds."""
    for i, j in bonds:
        _check_pair(state, i, j)
    bi = np.ascontiguousarray([b[0] for b in bonds], dtype=np.int64)
    bj = np.ascontiguousarray([b[1] for b in bonds], dtype=np.int64)
    kernels.zz_layer(state.amplitudes, state.n_sites, bi, bj, float(angle))


def apply_hopping(state: QuantumState, i: int, j: int, beta: float) -> None:
    """Apply ``exp(+i*beta*(X_i X_j + Y_i Y_j))``.

    Only the ``|01>, |10>`` pair on (i, j) is mixed, by
    ``[[cos 2b, i sin 2b], [i sin 2b, cos 2b]]``; Hamming weight is conserved.
    """
    _check_pair(state, i, j)
    kernels.hopping(state.amplitudes, state.n_sites, i, j, float(beta))


def apply_single_qubit(state: QuantumState, i: int, u: np.ndarray) -> None:
    _check_site(state, i)
    u = np.ascontiguousarray(u, dtype=np.complex128)
    if u.shape != (2, 2):
        raise ValueError(f"single-qubit gate must be 2x2, got {u.shape}")
    if np.max(np.abs(u.conj().T @ u - np.eye(2))) > UNITARY_TOL:
        raise ValueError("single-qubit gate is not unitary within 1e-12")
    kernels.single_qubit(state.amplitudes, state.n_sites, i, u)


@lru_cache(maxsize=None)
def index_array(n_sites: int) -> np.ndarray:
    a = np.arange(1 << n_sites, dtype=np.int64)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def hamming_weights(n_sites: int) -> np.ndarray:
    idx = index_array(n_sites)
    w = np.zeros(idx.size, dtype=np.int64)
    for b in range(n_sites):
        w += (idx >> b) & 1
    w.setflags(write=False)
    return w


def pauli_masks(string: Mapping[int, str]) -> tuple[int, int, int]:
    """Return (flip mask, Z-sign mask, number of Y factors) for a Pauli string.

    ``P|b> = i**ny * (-1)**popcount(b & zmask) |b ^ xmask>``  where Y counts
    towards both masks since ``Y = i X Z``.
    """
    xmask = zmask = 0
    ny = 0
    for site, op in string.items():
        op = op.upper()
        if op == "X":
            xmask |= 1 << site
        elif op == "Y":
            xmask |= 1 << site
            zmask |= 1 << site
            ny += 1
        elif op == "Z":
            zmask |= 1 << site
        elif op != "I":
            raise ValueError(f"unknown Pauli operator {op!r} on site {site}")
    return xmask, zmask, ny


def _parity(values: np.ndarray) -> np.ndarray:
    v = values.copy()
    out = np.zeros(v.shape, dtype=np.int64)
    while np.any(v):
        out ^= v & 1
        v >>= 1
    return out


def expect_pauli(state: QuantumState, string: Mapping[int, str]) -> float:
    """``<psi|P|psi>`` for a Pauli string given as ``{site: 'X'|'Y'|'Z'}``."""
    if not string:
        raise ValueError("Pauli string must be nonempty")
    _check_site(state, *string.keys())
    xmask, zmask, ny = pauli_masks(string)
    idx = index_array(state.n_sites)
    psi = state.amplitudes
    # Y = i X Z: apply Z signs first, then the flip
    signs = 1 - 2 * _parity(idx & zmask)
    value = (1j ** ny) * np.vdot(psi[idx ^ xmask], signs * psi)
    return float(value.real)


def _window_sites(n_sites: int, start: int, length: int) -> list[int]:
    return [(start + k) % n_sites for k in range(length)]


def reduced_density_matrix(state: QuantumState, start: int = 0, l: int = 1) -> np.ndarray:
    """Reduced state of the contiguous window ``start .. start+l-1`` (mod N).

    Row/column index ``a`` of the result encodes the window bits with site
    ``start + k`` as bit ``k``.
    """
    n = state.n_sites
    if not 1 <= l <= min(MAX_SUBSYSTEM, n - 1):
        raise ValueError(f"subsystem length l={l} outside [1, {min(MAX_SUBSYSTEM, n - 1)}]")
    _check_site(state, start)
    if start == 0:
        m = state.amplitudes.reshape(1 << (n - l), 1 << l)
    else:
        # rotate so that `start` becomes bit 0, keeping periodic order
        sites = _window_sites(n, start, n)
        t = state.amplitudes.reshape((2,) * n)
        axes = [n - 1 - s for s in reversed(sites)]
        m = np.ascontiguousarray(t.transpose(axes)).reshape(1 << (n - l), 1 << l)
    rho = m.T @ m.conj()
    return 0.5 * (rho + rho.conj().T)


def dense_state_density(state: QuantumState) -> np.ndarray:
    return np.outer(state.amplitudes, state.amplitudes.conj())
