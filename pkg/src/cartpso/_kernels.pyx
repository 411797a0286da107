# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: RBF Gram matrix, SMO dual solver, CART split scan.

Each function mirrors the pure-Python version in ``_kernels_py`` and must
return the same values up to floating-point reassociation.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs

cnp.import_array()

cdef double TAU = 1e-12
cdef double INF = float("inf")


def rbf_gram(const double[:, ::1] X, const double[:, ::1] Z, double sigma):
    cdef Py_ssize_t n = X.shape[0], m = Z.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, k, j0
    cdef double s, t, scale = 1.0 / (2.0 * sigma * sigma)
    cdef bint same = (&X[0, 0] == &Z[0, 0]) and n == m if n > 0 and m > 0 else False
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] K = out
    for i in range(n):
        j0 = i if same else 0
        for j in range(j0, m):
            s = 0.0
            for k in range(d):
                t = X[i, k] - Z[j, k]
                s += t * t
            K[i, j] = exp(-s * scale)
            if same:
                K[j, i] = K[i, j]
    return out


def smo_solve(const double[:, ::1] K, const double[::1] y, double C, double eps, long max_iter):
    """Solve the soft-margin dual on a precomputed Gram matrix.

    Returns ``(alpha, b, n_iter, converged)``.
    """
    cdef Py_ssize_t n = K.shape[0]
    cdef Py_ssize_t t, i, j
    cdef long it = 0
    cdef bint converged = False
    cdef double gmax, gmin, v, b_, a_, obj, best_obj
    cdef double Kii, Kjj, Kij, quad, delta, diff, total, old_ai, old_aj, dai, daj
    cdef double yi, yj
    alpha_arr = np.zeros(n, dtype=np.float64)
    grad_arr = -np.ones(n, dtype=np.float64)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] G = grad_arr

    while it < max_iter:
        # working set selection, second-order (maximal gain) rule
        gmax = -INF
        i = -1
        for t in range(n):
            if y[t] > 0:
                if alpha[t] < C:
                    v = -G[t]
                    if v > gmax or i < 0:
                        gmax = v
                        i = t
            else:
                if alpha[t] > 0:
                    v = G[t]
                    if v > gmax or i < 0:
                        gmax = v
                        i = t
        gmin = INF
        j = -1
        best_obj = INF
        if i >= 0:
            Kii = K[i, i]
            for t in range(n):
                if y[t] > 0:
                    if alpha[t] > 0:
                        v = -G[t]
                    else:
                        continue
                else:
                    if alpha[t] < C:
                        v = G[t]
                    else:
                        continue
                if v < gmin:
                    gmin = v
                b_ = gmax - v
                if b_ > 0:
                    a_ = Kii + K[t, t] - 2.0 * K[i, t]
                    if a_ <= 0:
                        a_ = TAU
                    obj = -(b_ * b_) / a_
                    if obj < best_obj:
                        best_obj = obj
                        j = t
        if i < 0 or j < 0 or gmax - gmin < eps:
            converged = True
            break
        it += 1

        yi = y[i]
        yj = y[j]
        Kii = K[i, i]
        Kjj = K[j, j]
        Kij = K[i, j]
        old_ai = alpha[i]
        old_aj = alpha[j]
        quad = Kii + Kjj - 2.0 * Kij
        if quad <= 0:
            quad = TAU
        if yi != yj:
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0
                    alpha[j] = total
        dai = alpha[i] - old_ai
        daj = alpha[j] - old_aj
        for t in range(n):
            G[t] += y[t] * (yi * K[t, i] * dai + yj * K[t, j] * daj)

    return alpha_arr, _bias(alpha, G, y, C), it, converged


cdef double _bias(double[::1] alpha, double[::1] G, const double[::1] y, double C):
    cdef Py_ssize_t t, n = alpha.shape[0]
    cdef double ub = INF, lb = -INF, s = 0.0, yG
    cdef long nfree = 0
    for t in range(n):
        yG = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        else:
            nfree += 1
            s += yG
    if nfree > 0:
        return -(s / nfree)
    return -((ub + lb) / 2.0)


def split_scan(const double[::1] values, const long[::1] labels, long n_classes):
    """Best threshold for pre-sorted ``values``.

    Returns ``(gain, threshold, position)``; ``position`` is -1 when the
    values are all equal.  Ties keep the smallest threshold.
    """
    cdef Py_ssize_t n = values.shape[0], t, k
    cdef double total = n, nl, nr, sl, sr, parent, g, best = -INF, thr = 0.0, c
    cdef Py_ssize_t pos = -1
    left_arr = np.zeros(n_classes, dtype=np.float64)
    right_arr = np.zeros(n_classes, dtype=np.float64)
    cdef double[::1] left = left_arr
    cdef double[::1] right = right_arr
    for t in range(n):
        right[labels[t]] += 1.0
    parent = 1.0
    for k in range(n_classes):
        c = right[k] / total
        parent -= c * c
    for t in range(n - 1):
        left[labels[t]] += 1.0
        right[labels[t]] -= 1.0
        if values[t + 1] == values[t]:
            continue
        nl = t + 1
        nr = total - nl
        sl = 0.0
        sr = 0.0
        for k in range(n_classes):
            sl += left[k] * left[k]
            sr += right[k] * right[k]
        # weighted child impurity: nl/n*(1-sl/nl^2) + nr/n*(1-sr/nr^2)
        g = parent - (1.0 - (sl / nl + sr / nr) / total)
        if g > best + 1e-12:
            best = g
            pos = t
            thr = values[t] / 2.0 + values[t + 1] / 2.0
    if pos < 0:
        return 0.0, 0.0, -1
    return best, thr, pos
