"""Compiled and numpy kernels must agree to rounding."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpl import kernels

cython = pytest.importorskip("qpl._ckernels")
BACKENDS = [kernels.get_backend("numpy"), kernels.get_backend("cython")]


def _block(rng, n, m):
    return np.ascontiguousarray(rng.standard_normal((1 << n, m)) + 1j * rng.standard_normal((1 << n, m)))


def _unitary(rng, d):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    return np.ascontiguousarray(q)


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "numpy")
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 6), m=st.integers(1, 5), data=st.data())
def test_apply_2q_agrees(n, m, data):
    q0, q1 = data.draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
    rng = np.random.default_rng(n * 100 + m + 10 * q0 + q1)
    psi, u = _block(rng, n, m), _unitary(rng, 4)
    outs = []
    for k in BACKENDS:
        p = psi.copy()
        k.apply_2q(p, u, q0, q1)
        outs.append(p)
    np.testing.assert_allclose(outs[0], outs[1], atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 6), m=st.integers(1, 4), data=st.data())
def test_apply_1q_agrees(n, m, data):
    q = data.draw(st.integers(0, n - 1))
    rng = np.random.default_rng(7 * n + m + q)
    psi, u = _block(rng, n, m), _unitary(rng, 2)
    a, b = psi.copy(), psi.copy()
    BACKENDS[0].apply_1q(a, u, q)
    BACKENDS[1].apply_1q(b, u, q)
    np.testing.assert_allclose(a, b, atol=1e-13)


@pytest.mark.parametrize("q0,q1", [(0, 1), (3, 1), (2, 4), (4, 0)])
def test_adjoint_2q_agrees(rng, q0, q1):
    psi, lam, u = _block(rng, 5, 3), _block(rng, 5, 3), _unitary(rng, 4)
    res = []
    for k in BACKENDS:
        p, l, env = psi.copy(), lam.copy(), np.zeros((4, 4), dtype=complex)
        k.adjoint_2q(p, l, u, q0, q1, env)
        res.append((p, l, env))
    for a, b in zip(*res):
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_adjoint_2q_semantics(rng):
    """psi and lam are pulled back by U^dagger; env sums conj(lam) x psi_before."""
    psi, lam, u = _block(rng, 4, 2), _block(rng, 4, 2), _unitary(rng, 4)
    for k in BACKENDS:
        p, l, env = psi.copy(), lam.copy(), np.zeros((4, 4), dtype=complex)
        k.adjoint_2q(p, l, u, 1, 2, env)
        back = psi.copy()
        k.apply_2q(back, np.ascontiguousarray(u.conj().T), 1, 2)
        np.testing.assert_allclose(p, back, atol=1e-13)
        t_l = np.moveaxis(lam.reshape(2, 2, 2, 2, 2), (1, 2), (0, 1)).reshape(4, -1)
        t_p = np.moveaxis(back.reshape(2, 2, 2, 2, 2), (1, 2), (0, 1)).reshape(4, -1)
        np.testing.assert_allclose(env, t_l.conj() @ t_p.T, atol=1e-12)


def test_apply_2q_rejects_bad_targets(rng):
    psi, u = _block(rng, 3, 1), _unitary(rng, 4)
    for k in BACKENDS:
        with pytest.raises(ValueError):
            k.apply_2q(psi, u, 1, 1)
        with pytest.raises(ValueError):
            k.apply_2q(psi, u, 0, 3)
