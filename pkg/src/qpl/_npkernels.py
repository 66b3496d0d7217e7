"""Pure-numpy versions of the gate kernels in ``_ckernels.pyx``.

Same signatures and in-place semantics; used when the compiled extension is
unavailable or when ``QPL_BACKEND=numpy`` is set.
"""
import numpy as np


def _nbits(rows):
    n = rows.bit_length() - 1
    if 1 << n != rows:
        raise ValueError("row count must be a power of two")
    return n


def _split(psi, qubits):
    """View ``psi`` as a tensor with one length-2 axis per target qubit."""
    rows, m = psi.shape
    n = _nbits(rows)
    if any(not 0 <= q < n for q in qubits) or len(set(qubits)) != len(qubits):
        raise ValueError("invalid targets")
    shape = [2] * n + [m]
    return psi.reshape(shape), n


def apply_1q(psi, u, q):
    t, n = _split(psi, (q,))
    moved = np.moveaxis(t, q, 0)
    moved[...] = np.tensordot(u, moved, axes=([1], [0]))


def apply_2q(psi, u, q0, q1):
    t, n = _split(psi, (q0, q1))
    moved = np.moveaxis(t, (q0, q1), (0, 1))
    moved[...] = np.tensordot(np.asarray(u).reshape(2, 2, 2, 2), moved, axes=([2, 3], [0, 1]))


def apply_kq(psi, u, qubits):
    """Dense ``2**k x 2**k`` gate on ``qubits`` (no compiled counterpart)."""
    k = len(qubits)
    t, n = _split(psi, tuple(qubits))
    moved = np.moveaxis(t, tuple(qubits), tuple(range(k)))
    moved[...] = np.tensordot(
        np.asarray(u).reshape([2] * (2 * k)), moved, axes=(list(range(k, 2 * k)), list(range(k)))
    )


def adjoint_2q(psi, lam, u, q0, q1, env):
    if lam.shape != psi.shape:
        raise ValueError("psi and lam shapes differ")
    udag = np.ascontiguousarray(np.asarray(u).conj().T)
    apply_2q(psi, udag, q0, q1)
    tp, _ = _split(psi, (q0, q1))
    tl, _ = _split(lam, (q0, q1))
    a = np.moveaxis(tl, (q0, q1), (0, 1)).reshape(4, -1)
    b = np.moveaxis(tp, (q0, q1), (0, 1)).reshape(4, -1)
    env += a.conj() @ b.T
    apply_2q(lam, udag, q0, q1)
