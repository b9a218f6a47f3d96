# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: statevector gate kernels and the lattice Langevin step.

Every function here has a pure-numpy twin in ``_pycore`` with the same
signature; ``qmpemba._backend`` picks one at import time.
"""

import numpy as np

from libc.math cimport cos, sin

ctypedef double complex cplx


cdef inline Py_ssize_t _insert_zero(Py_ssize_t m, int pos) nogil:
    cdef Py_ssize_t low = m & ((<Py_ssize_t>1 << pos) - 1)
    return ((m >> pos) << (pos + 1)) | low


def zz_phase(cplx[::1] psi, int n, int i, int j, double angle):
    """Multiply each amplitude by exp(i*angle*z_i*z_j)."""
    cdef Py_ssize_t k, dim = psi.shape[0]
    cdef cplx same = cos(angle) + 1j * sin(angle)
    cdef cplx diff = cos(angle) - 1j * sin(angle)
    with nogil:
        for k in range(dim):
            if ((k >> i) ^ (k >> j)) & 1:
                psi[k] = psi[k] * diff
            else:
                psi[k] = psi[k] * same


def zz_layer(cplx[::1] psi, int n, long[::1] bond_i, long[::1] bond_j, double angle):
    """Apply exp(i*angle*sum_b z_{i_b} z_{j_b}) in a single sweep.

    All bonds are diagonal and commute, so the phase only depends on the
    number of anti-aligned bonds; it is looked up from a table.
    """
    cdef Py_ssize_t k, b, dim = psi.shape[0]
    cdef Py_ssize_t nb = bond_i.shape[0]
    cdef int anti
    table_arr = np.exp(1j * angle * (nb - 2.0 * np.arange(nb + 1)))
    cdef cplx[::1] table = table_arr
    with nogil:
        for k in range(dim):
            anti = 0
            for b in range(nb):
                anti += ((k >> bond_i[b]) ^ (k >> bond_j[b])) & 1
            psi[k] = psi[k] * table[anti]


def hopping(cplx[::1] psi, int n, int i, int j, double beta):
    """Apply exp(i*beta*(X_i X_j + Y_i Y_j)) on the (01, 10) pairs."""
    cdef Py_ssize_t m, k0, k01, k10, half = psi.shape[0] >> 2
    cdef int lo = i if i < j else j
    cdef int hi = j if i < j else i
    cdef double c = cos(2.0 * beta)
    cdef cplx s = 1j * sin(2.0 * beta)
    cdef cplx a, b
    with nogil:
        for m in range(half):
            k0 = _insert_zero(_insert_zero(m, lo), hi)
            k01 = k0 | (<Py_ssize_t>1 << j)
            k10 = k0 | (<Py_ssize_t>1 << i)
            a = psi[k01]
            b = psi[k10]
            psi[k01] = c * a + s * b
            psi[k10] = s * a + c * b


def single_qubit(cplx[::1] psi, int n, int i, cplx[:, :] u):
    """Apply the 2x2 matrix ``u`` to bit ``i``."""
    cdef Py_ssize_t m, k0, k1, half = psi.shape[0] >> 1
    cdef cplx u00 = u[0, 0], u01 = u[0, 1], u10 = u[1, 0], u11 = u[1, 1]
    cdef cplx a, b
    with nogil:
        for m in range(half):
            k0 = _insert_zero(m, i)
            k1 = k0 | (<Py_ssize_t>1 << i)
            a = psi[k0]
            b = psi[k1]
            psi[k0] = u00 * a + u01 * b
            psi[k1] = u10 * a + u11 * b


def hydro_euler_step(double[:, ::1] field, double[:, ::1] bond_noise, double coupling):
    """One conserving Euler-Maruyama update per row, in place.

    ``bond_noise[r, i]`` lives on the bond (i, i+1); site i receives
    ``bond_noise[r, i] - bond_noise[r, i-1]``.  The operation order matches
    the numpy twin so both produce identical floating-point results.
    """
    cdef Py_ssize_t r, i, rows = field.shape[0], L = field.shape[1]
    cdef double first, prev, cur, nxt, lap
    with nogil:
        for r in range(rows):
            first = field[r, 0]
            prev = field[r, L - 1]
            for i in range(L):
                cur = field[r, i]
                nxt = field[r, i + 1] if i < L - 1 else first
                lap = (nxt - 2.0 * cur) + prev
                if i == 0:
                    field[r, i] = (cur + coupling * lap) + (bond_noise[r, 0] - bond_noise[r, L - 1])
                else:
                    field[r, i] = (cur + coupling * lap) + (bond_noise[r, i] - bond_noise[r, i - 1])
                prev = cur
