# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled evaluation kernel for the sine field (value + derivatives).

Mirrors kernels.pycore.eval_orders for activation="sine". Matrices here are
small (widths <= a few hundred), so hand-rolled loops beat the per-call
overhead of vectorized dispatch, which matters at control rates where the
field is queried once per tick.
"""

import numpy as np

from libc.math cimport cos, sin


def eval_orders(list weights, list biases, object w_out, object b_out,
                double omega0, object tau, int order):
    cdef const double[::1] tau_v = np.ascontiguousarray(tau, dtype=np.float64)
    cdef const double[:, ::1] wo = np.ascontiguousarray(w_out, dtype=np.float64)
    cdef const double[::1] bo = np.ascontiguousarray(b_out, dtype=np.float64)
    cdef Py_ssize_t K = tau_v.shape[0]
    cdef Py_ssize_t D = wo.shape[0]
    cdef Py_ssize_t L = len(weights)

    cdef double[:, ::1] h = np.empty((K, 1))
    cdef double[:, ::1] hd = np.ones((K, 1))
    cdef double[:, ::1] hdd = np.zeros((K, 1))
    cdef double[:, ::1] hddd = np.zeros((K, 1))
    cdef Py_ssize_t k, i, j, l
    for k in range(K):
        h[k, 0] = tau_v[k]

    cdef const double[:, ::1] W
    cdef const double[::1] b
    cdef double[:, ::1] nh, nhd, nhdd, nhddd
    cdef Py_ssize_t n_in, n_out
    cdef double z, s, p, q, u, su, cu, ud, udd, uddd

    for l in range(L):
        W = np.ascontiguousarray(weights[l], dtype=np.float64)
        b = np.ascontiguousarray(biases[l], dtype=np.float64)
        n_out = W.shape[0]
        n_in = W.shape[1]
        nh = np.empty((K, n_out))
        nhd = np.empty((K, n_out)) if order >= 1 else h
        nhdd = np.empty((K, n_out)) if order >= 2 else h
        nhddd = np.empty((K, n_out)) if order >= 3 else h
        with nogil:
            for k in range(K):
                for i in range(n_out):
                    z = b[i]
                    s = 0.0
                    p = 0.0
                    q = 0.0
                    for j in range(n_in):
                        z += W[i, j] * h[k, j]
                    u = omega0 * z
                    su = sin(u)
                    cu = cos(u)
                    nh[k, i] = su
                    if order >= 1:
                        for j in range(n_in):
                            s += W[i, j] * hd[k, j]
                        ud = omega0 * s
                        nhd[k, i] = cu * ud
                        if order >= 2:
                            for j in range(n_in):
                                p += W[i, j] * hdd[k, j]
                            udd = omega0 * p
                            nhdd[k, i] = -su * ud * ud + cu * udd
                            if order >= 3:
                                for j in range(n_in):
                                    q += W[i, j] * hddd[k, j]
                                uddd = omega0 * q
                                nhddd[k, i] = (-cu * ud * ud * ud
                                               - 3.0 * su * ud * udd
                                               + cu * uddd)
        h = nh
        if order >= 1:
            hd = nhd
        if order >= 2:
            hdd = nhdd
        if order >= 3:
            hddd = nhddd

    pos = np.empty((K, D))
    cdef double[:, ::1] pos_v = pos
    cdef Py_ssize_t n_last = h.shape[1]
    out = [pos]
    vel = acc = jerk = None
    cdef double[:, ::1] vel_v = h
    cdef double[:, ::1] acc_v = h
    cdef double[:, ::1] jerk_v = h
    if order >= 1:
        vel = np.empty((K, D))
        vel_v = vel
        out.append(vel)
    if order >= 2:
        acc = np.empty((K, D))
        acc_v = acc
        out.append(acc)
    if order >= 3:
        jerk = np.empty((K, D))
        jerk_v = jerk
        out.append(jerk)

    with nogil:
        for k in range(K):
            for i in range(D):
                z = bo[i]
                s = 0.0
                p = 0.0
                q = 0.0
                for j in range(n_last):
                    z += wo[i, j] * h[k, j]
                pos_v[k, i] = z
                if order >= 1:
                    for j in range(n_last):
                        s += wo[i, j] * hd[k, j]
                    vel_v[k, i] = s
                if order >= 2:
                    for j in range(n_last):
                        p += wo[i, j] * hdd[k, j]
                    acc_v[k, i] = p
                if order >= 3:
                    for j in range(n_last):
                        q += wo[i, j] * hddd[k, j]
                    jerk_v[k, i] = q
    return out
