# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled per-sample update loops.

Semantics match ``_pykernels`` exactly; see that module for the contract.
"""
from libc.math cimport fabs, isfinite

import numpy as np


cdef int _PEN_NONE = 0
cdef int _PEN_L1 = 1
cdef int _PEN_L2 = 2
cdef int _PA_UNCLIPPED = 0
cdef int _PA_CLIPPED = 1
cdef int _PA_SOFT = 2

PENALTY_NONE = _PEN_NONE
PENALTY_L1 = _PEN_L1
PENALTY_L2 = _PEN_L2

PA_UNCLIPPED = _PA_UNCLIPPED
PA_CLIPPED = _PA_CLIPPED
PA_SOFT = _PA_SOFT


cdef inline int _all_finite(double[::1] w) noexcept nogil:
    cdef Py_ssize_t j
    for j in range(w.shape[0]):
        if not isfinite(w[j]):
            return 0
    return 1


def gd_pass(double[:, ::1] xb, double[::1] y, double[::1] w,
            double eta, double lam, int penalty):
    cdef Py_ssize_t n = xb.shape[0]
    cdef Py_ssize_t d = xb.shape[1]
    cdef Py_ssize_t i, j
    cdef double pred, err, grad, s
    if penalty not in (_PEN_NONE, _PEN_L1, _PEN_L2):
        raise ValueError(f"unknown penalty code {penalty}")
    with nogil:
        if lam == 0.0 or penalty == _PEN_NONE:
            for i in range(n):
                pred = 0.0
                for j in range(d):
                    pred += xb[i, j] * w[j]
                err = pred - y[i]
                for j in range(d):
                    w[j] -= eta * (err * xb[i, j])
        elif penalty == _PEN_L2:
            for i in range(n):
                pred = 0.0
                for j in range(d):
                    pred += xb[i, j] * w[j]
                err = pred - y[i]
                w[0] -= eta * (err * xb[i, 0])
                for j in range(1, d):
                    grad = err * xb[i, j] + lam * w[j]
                    w[j] -= eta * grad
        else:
            for i in range(n):
                pred = 0.0
                for j in range(d):
                    pred += xb[i, j] * w[j]
                err = pred - y[i]
                w[0] -= eta * (err * xb[i, 0])
                for j in range(1, d):
                    if w[j] > 0.0:
                        s = 1.0
                    elif w[j] < 0.0:
                        s = -1.0
                    else:
                        s = 0.0
                    grad = err * xb[i, j] + lam * s
                    w[j] -= eta * grad
    return 0 if _all_finite(w) else 1


def pa_pass(double[:, ::1] xb, double[::1] y, double[::1] w,
            double c, double eps, int variant):
    cdef Py_ssize_t n = xb.shape[0]
    cdef Py_ssize_t d = xb.shape[1]
    cdef Py_ssize_t i, j
    cdef double pred, err, loss, sq, tau
    if variant not in (_PA_UNCLIPPED, _PA_CLIPPED, _PA_SOFT):
        raise ValueError(f"unknown passive-aggressive variant {variant}")
    with nogil:
        for i in range(n):
            pred = 0.0
            for j in range(d):
                pred += xb[i, j] * w[j]
            err = y[i] - pred
            loss = fabs(err) - eps
            if loss <= 0.0:
                continue
            sq = 0.0
            for j in range(d):
                sq += xb[i, j] * xb[i, j]
            if variant == _PA_UNCLIPPED:
                tau = loss / sq
            elif variant == _PA_CLIPPED:
                tau = loss / sq
                if c < tau:
                    tau = c
            else:
                tau = loss / (sq + 1.0 / (2.0 * c))
            if err < 0.0:
                tau = -tau
            for j in range(d):
                w[j] += tau * xb[i, j]
    return 0 if _all_finite(w) else 1


def rls_pass(double[:, ::1] xb, double[::1] y, double[::1] w,
             double[:, ::1] p, double lam):
    cdef Py_ssize_t n = xb.shape[0]
    cdef Py_ssize_t d = xb.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double denom, err, asym, max_asym = 0.0
    cdef double[::1] pv = np.empty(d)
    cdef double[::1] gain = np.empty(d)
    cdef int finite = 1
    with nogil:
        for i in range(n):
            for j in range(d):
                pv[j] = 0.0
                for k in range(d):
                    pv[j] += p[j, k] * xb[i, k]
            denom = lam
            for j in range(d):
                denom += xb[i, j] * pv[j]
            err = y[i]
            for j in range(d):
                err -= xb[i, j] * w[j]
            for j in range(d):
                gain[j] = pv[j] / denom
                w[j] += gain[j] * err
            for j in range(d):
                for k in range(d):
                    p[j, k] = (p[j, k] - gain[j] * pv[k]) / lam
            for j in range(d):
                for k in range(j + 1, d):
                    asym = fabs(p[j, k] - p[k, j])
                    if asym > max_asym:
                        max_asym = asym
            for j in range(d):
                for k in range(j + 1, d):
                    p[j, k] = (p[j, k] + p[k, j]) * 0.5
                    p[k, j] = p[j, k]
        for j in range(d):
            if not isfinite(w[j]):
                finite = 0
            for k in range(d):
                if not isfinite(p[j, k]):
                    finite = 0
    return (0 if finite else 1), max_asym
