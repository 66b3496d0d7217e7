# cython: language_level=3
"""Compiled gate kernels over row-major amplitude blocks.

Every kernel works on a C-contiguous complex128 array ``psi`` of shape
``(2**n, m)``.  The row index carries the qubits (qubit 0 is the most
significant bit); the ``m`` columns are independent vectors that share the
gate, e.g. the Schmidt columns of a window state or a whole batch of them.
All kernels modify their inputs in place and release the GIL.

Complex arithmetic is spelled out on interleaved (re, im) doubles; the
C99 complex path is several times slower here.
"""

ctypedef double complex cplx


cdef inline Py_ssize_t _insert_zero(Py_ssize_t x, int bit) noexcept nogil:
    cdef Py_ssize_t low = x & ((<Py_ssize_t>1 << bit) - 1)
    return ((x >> bit) << (bit + 1)) | low


cdef int _nbits(Py_ssize_t rows) except -1:
    cdef int n = 0
    while (<Py_ssize_t>1 << n) < rows:
        n += 1
    if (<Py_ssize_t>1 << n) != rows:
        raise ValueError("row count must be a power of two")
    return n


cdef int _check_pair(int n, int q0, int q1) except -1:
    if not (0 <= q0 < n and 0 <= q1 < n) or q0 == q1:
        raise ValueError("invalid targets")
    return 0


def apply_1q(cplx[:, ::1] psi, const cplx[:, ::1] u, int q):
    cdef Py_ssize_t rows = psi.shape[0], m = psi.shape[1]
    cdef int n = _nbits(rows)
    if not 0 <= q < n:
        raise ValueError("target out of range")
    if rows == 0 or m == 0:
        return
    cdef int bit = n - 1 - q
    cdef Py_ssize_t step = <Py_ssize_t>1 << bit
    cdef double gr[4]
    cdef double gi[4]
    cdef int k
    for k in range(4):
        gr[k] = u[k // 2, k % 2].real
        gi[k] = u[k // 2, k % 2].imag
    cdef double* base = <double*>&psi[0, 0]
    cdef double* p0
    cdef double* p1
    cdef Py_ssize_t r, c, i0
    cdef double ar0, ai0, ar1, ai1
    with nogil:
        for r in range(rows >> 1):
            i0 = _insert_zero(r, bit)
            p0 = base + 2 * m * i0
            p1 = base + 2 * m * (i0 | step)
            for c in range(m):
                ar0 = p0[2 * c]; ai0 = p0[2 * c + 1]
                ar1 = p1[2 * c]; ai1 = p1[2 * c + 1]
                p0[2 * c] = gr[0] * ar0 - gi[0] * ai0 + gr[1] * ar1 - gi[1] * ai1
                p0[2 * c + 1] = gr[0] * ai0 + gi[0] * ar0 + gr[1] * ai1 + gi[1] * ar1
                p1[2 * c] = gr[2] * ar0 - gi[2] * ai0 + gr[3] * ar1 - gi[3] * ai1
                p1[2 * c + 1] = gr[2] * ai0 + gi[2] * ar0 + gr[3] * ai1 + gi[3] * ar1


cdef inline void _mat4(const double* gr, const double* gi,
                       const double* ar, const double* ai,
                       double* xr, double* xi) noexcept nogil:
    cdef int i, k
    for i in range(4):
        k = 4 * i
        xr[i] = (gr[k] * ar[0] - gi[k] * ai[0] + gr[k + 1] * ar[1] - gi[k + 1] * ai[1]
                 + gr[k + 2] * ar[2] - gi[k + 2] * ai[2] + gr[k + 3] * ar[3] - gi[k + 3] * ai[3])
        xi[i] = (gr[k] * ai[0] + gi[k] * ar[0] + gr[k + 1] * ai[1] + gi[k + 1] * ar[1]
                 + gr[k + 2] * ai[2] + gi[k + 2] * ar[2] + gr[k + 3] * ai[3] + gi[k + 3] * ar[3])


def apply_2q(cplx[:, ::1] psi, const cplx[:, ::1] u, int q0, int q1):
    cdef Py_ssize_t rows = psi.shape[0], m = psi.shape[1]
    cdef int n = _nbits(rows)
    _check_pair(n, q0, q1)
    if m == 0:
        return
    cdef int b0 = n - 1 - q0, b1 = n - 1 - q1
    cdef int lo = b0 if b0 < b1 else b1
    cdef int hi = b1 if b0 < b1 else b0
    cdef Py_ssize_t s0 = <Py_ssize_t>1 << b0, s1 = <Py_ssize_t>1 << b1
    cdef double gr[16]
    cdef double gi[16]
    cdef int k
    for k in range(16):
        gr[k] = u[k // 4, k % 4].real
        gi[k] = u[k // 4, k % 4].imag
    cdef double* base = <double*>&psi[0, 0]
    cdef double* p[4]
    cdef Py_ssize_t r, c, i00
    cdef double ar[4]
    cdef double ai[4]
    cdef double xr[4]
    cdef double xi[4]
    with nogil:
        for r in range(rows >> 2):
            i00 = _insert_zero(_insert_zero(r, lo), hi)
            p[0] = base + 2 * m * i00
            p[1] = base + 2 * m * (i00 | s1)
            p[2] = base + 2 * m * (i00 | s0)
            p[3] = base + 2 * m * (i00 | s0 | s1)
            for c in range(m):
                for k in range(4):
                    ar[k] = p[k][2 * c]
                    ai[k] = p[k][2 * c + 1]
                _mat4(gr, gi, ar, ai, xr, xi)
                for k in range(4):
                    p[k][2 * c] = xr[k]
                    p[k][2 * c + 1] = xi[k]


def adjoint_2q(cplx[:, ::1] psi, cplx[:, ::1] lam, const cplx[:, ::1] u,
               int q0, int q1, cplx[:, ::1] env):
    """One reverse step of adjoint differentiation through a two-qubit gate.

    On entry ``psi`` holds the state after the gate and ``lam`` the adjoint
    after the gate.  On exit both have been pulled back through ``u``
    (multiplied by ``u^dagger``) and ``env[i, j]`` has accumulated
    ``sum conj(lam_after[i, ...]) * psi_before[j, ...]``.
    """
    cdef Py_ssize_t rows = psi.shape[0], m = psi.shape[1]
    if lam.shape[0] != rows or lam.shape[1] != m:
        raise ValueError("psi and lam shapes differ")
    cdef int n = _nbits(rows)
    _check_pair(n, q0, q1)
    if m == 0:
        return
    cdef int b0 = n - 1 - q0, b1 = n - 1 - q1
    cdef int lo = b0 if b0 < b1 else b1
    cdef int hi = b1 if b0 < b1 else b0
    cdef Py_ssize_t s0 = <Py_ssize_t>1 << b0, s1 = <Py_ssize_t>1 << b1
    # h = u^dagger, row-major
    cdef double hr[16]
    cdef double hi_[16]
    cdef double er[16]
    cdef double ei[16]
    cdef int i, j, k
    for i in range(4):
        for j in range(4):
            hr[4 * i + j] = u[j, i].real
            hi_[4 * i + j] = -u[j, i].imag
            er[4 * i + j] = 0.0
            ei[4 * i + j] = 0.0
    cdef double* pbase = <double*>&psi[0, 0]
    cdef double* lbase = <double*>&lam[0, 0]
    cdef double* pp[4]
    cdef double* lp[4]
    cdef Py_ssize_t r, c, i00, off[4]
    cdef double ar[4]
    cdef double ai[4]
    cdef double br[4]
    cdef double bi[4]
    cdef double pr[4]
    cdef double pim[4]
    cdef double lr[4]
    cdef double lim[4]
    cdef double sr, si
    with nogil:
        for r in range(rows >> 2):
            i00 = _insert_zero(_insert_zero(r, lo), hi)
            off[0] = 2 * m * i00
            off[1] = 2 * m * (i00 | s1)
            off[2] = 2 * m * (i00 | s0)
            off[3] = 2 * m * (i00 | s0 | s1)
            for k in range(4):
                pp[k] = pbase + off[k]
                lp[k] = lbase + off[k]
            # three passes per row quad so each inner loop vectorizes
            for c in range(m):
                for k in range(4):
                    ar[k] = pp[k][2 * c]
                    ai[k] = pp[k][2 * c + 1]
                _mat4(hr, hi_, ar, ai, pr, pim)
                for k in range(4):
                    pp[k][2 * c] = pr[k]
                    pp[k][2 * c + 1] = pim[k]
            for i in range(4):
                for j in range(4):
                    sr = 0.0
                    si = 0.0
                    for c in range(m):
                        sr = sr + lp[i][2 * c] * pp[j][2 * c] + lp[i][2 * c + 1] * pp[j][2 * c + 1]
                        si = si + lp[i][2 * c] * pp[j][2 * c + 1] - lp[i][2 * c + 1] * pp[j][2 * c]
                    er[4 * i + j] += sr
                    ei[4 * i + j] += si
            for c in range(m):
                for k in range(4):
                    br[k] = lp[k][2 * c]
                    bi[k] = lp[k][2 * c + 1]
                _mat4(hr, hi_, br, bi, lr, lim)
                for k in range(4):
                    lp[k][2 * c] = lr[k]
                    lp[k][2 * c + 1] = lim[k]
    for i in range(4):
        for j in range(4):
            env[i, j] = env[i, j] + (er[4 * i + j] + 1j * ei[4 * i + j])
