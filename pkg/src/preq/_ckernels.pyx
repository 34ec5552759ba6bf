# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_pykernels``."""
import numpy as np
cimport cython


cdef inline void _matvec(const double complex[:, ::1] A, const double complex[::1] x,
                         double complex[::1] y) noexcept nogil:
    cdef Py_ssize_t i, j, d = A.shape[0]
    cdef double complex acc
    for i in range(d):
        acc = 0
        for j in range(d):
            acc = acc + A[i, j] * x[j]
        y[i] = acc


def iterate_affine(P, q, x0, Py_ssize_t steps):
    cdef const double complex[:, ::1] Pv = np.ascontiguousarray(P, dtype=np.complex128)
    cdef const double complex[::1] qv = np.ascontiguousarray(q, dtype=np.complex128)
    cdef Py_ssize_t d = Pv.shape[0], k, i
    out_arr = np.empty((steps + 1, d), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    out_arr[0] = x0
    with nogil:
        for k in range(steps):
            _matvec(Pv, out[k], out[k + 1])
            for i in range(d):
                out[k + 1, i] = out[k + 1, i] + qv[i]
    return out_arr


def rk4_affine(L, c, x0, double dt, Py_ssize_t steps):
    cdef const double complex[:, ::1] Lv = np.ascontiguousarray(L, dtype=np.complex128)
    cdef const double complex[::1] cv = np.ascontiguousarray(c, dtype=np.complex128)
    cdef Py_ssize_t d = Lv.shape[0], k, i
    out_arr = np.empty((steps + 1, d), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef double complex[:, ::1] ks = np.empty((4, d), dtype=np.complex128)
    cdef double complex[::1] tmp = np.empty(d, dtype=np.complex128)
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0
    out_arr[0] = x0
    with nogil:
        for k in range(steps):
            _matvec(Lv, out[k], ks[0])
            for i in range(d):
                ks[0, i] = ks[0, i] + cv[i]
                tmp[i] = out[k, i] + h2 * ks[0, i]
            _matvec(Lv, tmp, ks[1])
            for i in range(d):
                ks[1, i] = ks[1, i] + cv[i]
                tmp[i] = out[k, i] + h2 * ks[1, i]
            _matvec(Lv, tmp, ks[2])
            for i in range(d):
                ks[2, i] = ks[2, i] + cv[i]
                tmp[i] = out[k, i] + dt * ks[2, i]
            _matvec(Lv, tmp, ks[3])
            for i in range(d):
                ks[3, i] = ks[3, i] + cv[i]
                out[k + 1, i] = out[k, i] + h6 * (
                    ks[0, i] + 2.0 * ks[1, i] + 2.0 * ks[2, i] + ks[3, i])
    return out_arr


cdef inline void _normalized_rhs(const double complex[:, ::1] L, const double complex[::1] x,
                                 double complex[::1] y, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, d = L.shape[0]
    cdef double complex tr = 0
    _matvec(L, x, y)
    for i in range(n):
        tr = tr + y[i * (n + 1)]
    for i in range(d):
        y[i] = y[i] - x[i] * tr


def rk4_normalized(L, x0, double dt, Py_ssize_t steps, Py_ssize_t n):
    cdef const double complex[:, ::1] Lv = np.ascontiguousarray(L, dtype=np.complex128)
    cdef Py_ssize_t d = Lv.shape[0], k, i
    out_arr = np.empty((steps + 1, d), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef double complex[:, ::1] ks = np.empty((4, d), dtype=np.complex128)
    cdef double complex[::1] tmp = np.empty(d, dtype=np.complex128)
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0
    out_arr[0] = x0
    with nogil:
        for k in range(steps):
            _normalized_rhs(Lv, out[k], ks[0], n)
            for i in range(d):
                tmp[i] = out[k, i] + h2 * ks[0, i]
            _normalized_rhs(Lv, tmp, ks[1], n)
            for i in range(d):
                tmp[i] = out[k, i] + h2 * ks[1, i]
            _normalized_rhs(Lv, tmp, ks[2], n)
            for i in range(d):
                tmp[i] = out[k, i] + dt * ks[2, i]
            _normalized_rhs(Lv, tmp, ks[3], n)
            for i in range(d):
                out[k + 1, i] = out[k, i] + h6 * (
                    ks[0, i] + 2.0 * ks[1, i] + 2.0 * ks[2, i] + ks[3, i])
    return out_arr


def em_block(phi, F, S, z, moments, record):
    # complex arrays are handled as interleaved (re, im) doubles
    cdef double[:, ::1] ph = phi.view(np.float64)
    cdef const double[:, :, ::1] Fv = np.ascontiguousarray(F, dtype=np.complex128).view(np.float64)
    cdef const double[:, ::1] Sv = np.ascontiguousarray(S, dtype=np.complex128).view(np.float64)
    cdef const double[:, :, ::1] zv = np.ascontiguousarray(z, dtype=np.complex128).view(np.float64)
    cdef double[:, :, ::1] mom = moments.view(np.float64)
    cdef Py_ssize_t m = ph.shape[0], n = ph.shape[1] // 2, nsteps = Fv.shape[0]
    cdef Py_ssize_t s, p, i, j
    cdef bint keep = record is not None
    cdef double[:, :, ::1] rec
    if keep:
        rec = record.view(np.float64)
    cdef double[::1] new = np.empty(2 * n, dtype=np.float64)
    cdef double[:, ::1] acc_m = np.empty((n, 2 * n), dtype=np.float64)
    cdef double ar, ai, fr, fi, xr, xi
    with nogil:
        for s in range(nsteps):
            acc_m[:, :] = 0
            for p in range(m):
                for i in range(n):
                    ar = 0
                    ai = 0
                    for j in range(n):
                        fr = Fv[s, i, 2 * j]
                        fi = Fv[s, i, 2 * j + 1]
                        xr = ph[p, 2 * j]
                        xi = ph[p, 2 * j + 1]
                        ar = ar + fr * xr - fi * xi
                        ai = ai + fr * xi + fi * xr
                        fr = Sv[i, 2 * j]
                        fi = Sv[i, 2 * j + 1]
                        xr = zv[s, p, 2 * j]
                        xi = zv[s, p, 2 * j + 1]
                        ar = ar + fr * xr - fi * xi
                        ai = ai + fr * xi + fi * xr
                    new[2 * i] = ar
                    new[2 * i + 1] = ai
                for i in range(n):
                    ph[p, 2 * i] = new[2 * i]
                    ph[p, 2 * i + 1] = new[2 * i + 1]
                    # new_i * conj(new_j)
                    for j in range(n):
                        acc_m[i, 2 * j] += new[2 * i] * new[2 * j] + new[2 * i + 1] * new[2 * j + 1]
                        acc_m[i, 2 * j + 1] += new[2 * i + 1] * new[2 * j] - new[2 * i] * new[2 * j + 1]
                if keep:
                    for i in range(2 * n):
                        rec[s, p, i] = new[i]
            for i in range(n):
                for j in range(2 * n):
                    mom[s, i, j] += acc_m[i, j]
    return None
