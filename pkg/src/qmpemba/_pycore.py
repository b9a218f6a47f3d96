"""Pure-numpy fallback for the compiled kernels in ``_core.pyx``.

Amplitude arrays are viewed as rank-N tensors of shape (2,)*N so every gate
touches strided views in place; bit i of the index is tensor axis N-1-i.
"""

import numpy as np


def _slice(n, fixed):
    index = [slice(None)] * n
    for bit, value in fixed.items():
        # a length-1 slice keeps the result a view even when every axis is fixed
        index[n - 1 - bit] = slice(value, value + 1)
    return tuple(index)


def zz_phase(psi, n, i, j, angle):
    t = psi.reshape((2,) * n)
    same = np.exp(1j * angle)
    diff = np.exp(-1j * angle)
    t[_slice(n, {i: 0, j: 0})] *= same
    t[_slice(n, {i: 1, j: 1})] *= same
    t[_slice(n, {i: 0, j: 1})] *= diff
    t[_slice(n, {i: 1, j: 0})] *= diff


def zz_layer(psi, n, bond_i, bond_j, angle):
    for i, j in zip(bond_i, bond_j):
        zz_phase(psi, n, int(i), int(j), angle)


def hopping(psi, n, i, j, beta):
    t = psi.reshape((2,) * n)
    a = t[_slice(n, {i: 0, j: 1})]
    b = t[_slice(n, {i: 1, j: 0})]
    c = np.cos(2.0 * beta)
    s = 1j * np.sin(2.0 * beta)
    old = a.copy()
    a *= c
    a += s * b
    b *= c
    b += s * old


def single_qubit(psi, n, i, u):
    t = psi.reshape((2,) * n)
    a = t[_slice(n, {i: 0})]
    b = t[_slice(n, {i: 1})]
    old = a.copy()
    a *= u[0, 0]
    a += u[0, 1] * b
    b *= u[1, 1]
    b += u[1, 0] * old


def hydro_euler_step(field, bond_noise, coupling):
    lap = (np.roll(field, -1, axis=1) - 2.0 * field) + np.roll(field, 1, axis=1)
    field += coupling * lap
    # matches the compiled loop: (cur + coupling*lap) + (eta_i - eta_{i-1})
    field += bond_noise - np.roll(bond_noise, 1, axis=1)
