import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmpemba import _backend, _pycore

_core = pytest.importorskip("qmpemba._core", reason="compiled extension not built")


def state(n, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return psi / np.linalg.norm(psi)


def test_compiled_backend_selected():
    assert _backend.BACKEND == "cython"


pair = st.integers(2, 9).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda x: x[1] != x[2])
)


@settings(max_examples=60, deadline=None)
@given(nij=pair, angle=st.floats(-7, 7), seed=st.integers(0, 2**31))
def test_two_site_kernels_agree(nij, angle, seed):
    n, i, j = nij
    for name in ("zz_phase", "hopping"):
        a = state(n, seed)
        b = a.copy()
        getattr(_core, name)(a, n, i, j, angle)
        getattr(_pycore, name)(b, n, i, j, angle)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 9), angle=st.floats(-7, 7), seed=st.integers(0, 2**31))
def test_zz_layer_agrees(n, angle, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 2 * n))
    bi = rng.integers(0, n, k)
    bj = (bi + rng.integers(1, n, k)) % n
    a = state(n, seed)
    b = a.copy()
    _core.zz_layer(a, n, bi.astype(np.int64), bj.astype(np.int64), angle)
    _pycore.zz_layer(b, n, bi, bj, angle)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 9), seed=st.integers(0, 2**31))
def test_single_qubit_agrees(n, seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    i = int(rng.integers(n))
    a = state(n, seed)
    b = a.copy()
    _core.single_qubit(a, n, i, np.ascontiguousarray(q))
    _pycore.single_qubit(b, n, i, q)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(rows=st.integers(1, 5), half_l=st.integers(2, 64), c=st.floats(0, 0.25), seed=st.integers(0, 2**31))
def test_hydro_step_bitwise_equal(rows, half_l, c, seed):
    rng = np.random.default_rng(seed)
    f0 = rng.normal(size=(rows, 2 * half_l))
    eta = rng.normal(size=f0.shape)
    a, b = f0.copy(), f0.copy()
    _core.hydro_euler_step(a, eta, c)
    _pycore.hydro_euler_step(b, eta, c)
    np.testing.assert_array_equal(a, b)
