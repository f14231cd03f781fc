# cython: language_level=3
"""Compiled kernels; arithmetic order mirrors ``_pure`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

NAME = "cython"

ctypedef struct Pair:
    double v
    int y


cdef int _cmp_pair(const void* a, const void* b) noexcept nogil:
    cdef double va = (<Pair*>a).v
    cdef double vb = (<Pair*>b).v
    if va < vb:
        return -1
    if va > vb:
        return 1
    return 0


def interval_features(X, starts, ends):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const cnp.int64_t[::1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef const cnp.int64_t[::1] en = np.ascontiguousarray(ends, dtype=np.int64)
    cdef Py_ssize_t n_rows = x.shape[0]
    cdef Py_ssize_t k = st.shape[0]
    out_arr = np.empty((n_rows, 3 * k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, c, s, m
    cdef double shift, acc, mean, tbar, ss, sxy, d, sxx
    with nogil:
        for j in range(k):
            s = st[j]
            m = en[j] - s
            tbar = (m - 1) / 2.0
            sxx = (<double>(m * (m * m - 1))) / 12.0
            for i in range(n_rows):
                shift = x[i, s]
                acc = 0.0
                for c in range(m):
                    acc = acc + (x[i, s + c] - shift)
                mean = shift + acc / m
                if m > 1:
                    ss = 0.0
                    sxy = 0.0
                    for c in range(m):
                        d = x[i, s + c] - mean
                        ss = ss + d * d
                        sxy = sxy + (c - tbar) * d
                    out[i, 3 * j + 1] = sqrt(ss / (m - 1))
                    out[i, 3 * j + 2] = sxy / sxx
                else:
                    out[i, 3 * j + 1] = 0.0
                    out[i, 3 * j + 2] = 0.0
                out[i, 3 * j] = mean
    return out_arr


def best_split(X, is_xm, rows, double w_xm, double w_cbn, Py_ssize_t min_leaf):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const cnp.uint8_t[::1] y = np.ascontiguousarray(is_xm, dtype=np.uint8)
    cdef const cnp.intp_t[::1] r = np.ascontiguousarray(rows, dtype=np.intp)
    cdef Py_ssize_t m = r.shape[0]
    cdef Py_ssize_t n_feat = x.shape[1]
    cdef Py_ssize_t best_f = -1
    cdef double best_thr = 0.0
    cdef double best_score = -INFINITY
    if m < 2:
        return best_f, best_thr, best_score
    cdef Pair* buf = <Pair*>malloc(m * sizeof(Pair))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t f, i, nl, nr
    cdef long nx_total = 0, nx_l, nc_l, nx_r, nc_r
    cdef double wxl, wcl, wxr, wcr, score, a, b, thr
    try:
        with nogil:
            for i in range(m):
                nx_total += y[r[i]]
            for f in range(n_feat):
                for i in range(m):
                    buf[i].v = x[r[i], f]
                    buf[i].y = y[r[i]]
                qsort(buf, m, sizeof(Pair), _cmp_pair)
                nx_l = 0
                for i in range(m - 1):
                    nx_l += buf[i].y
                    nl = i + 1
                    nr = m - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    if not (buf[i].v < buf[i + 1].v):
                        continue
                    nc_l = nl - nx_l
                    nx_r = nx_total - nx_l
                    nc_r = nr - nx_r
                    wxl = w_xm * <double>nx_l
                    wcl = w_cbn * <double>nc_l
                    wxr = w_xm * <double>nx_r
                    wcr = w_cbn * <double>nc_r
                    score = (wxl * wxl + wcl * wcl) / (wxl + wcl) + (wxr * wxr + wcr * wcr) / (wxr + wcr)
                    if score > best_score:
                        a = buf[i].v
                        b = buf[i + 1].v
                        thr = (a + b) / 2.0
                        if thr == b:
                            thr = a
                        best_f = f
                        best_thr = thr
                        best_score = score
    finally:
        free(buf)
    return best_f, best_thr, best_score
