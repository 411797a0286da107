"""Pure-Python/NumPy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform


def pdist_square(X):
    return squareform(pdist(X, "sqeuclidean"))

TAU = 1e-12


def rbf_gram(X, Z, sigma):
    d2 = pdist_square(X) if X is Z else cdist(X, Z, "sqeuclidean")
    return np.exp(-d2 * (1.0 / (2.0 * sigma * sigma)))


def smo_solve(K, y, C, eps, max_iter):
    """Solve the soft-margin dual on a precomputed Gram matrix.

    Returns ``(alpha, b, n_iter, converged)``.
    """
    n = K.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    diagK = np.diag(K).copy()
    pos = y > 0
    it = 0
    converged = False
    while it < max_iter:
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        score = -y * G
        if not up.any():
            converged = True
            break
        up_scores = np.where(up, score, -np.inf)
        i = int(np.argmax(up_scores))
        gmax = up_scores[i]
        if not low.any():
            converged = True
            break
        gmin = score[low].min()
        b_ = gmax - score
        cand = low & (b_ > 0)
        if not cand.any() or gmax - gmin < eps:
            converged = True
            break
        a_ = diagK[i] + diagK - 2.0 * K[i]
        a_ = np.where(a_ <= 0, TAU, a_)
        obj = np.where(cand, -(b_ * b_) / a_, np.inf)
        j = int(np.argmin(obj))
        it += 1

        yi, yj = y[i], y[j]
        old_ai, old_aj = alpha[i], alpha[j]
        ai, aj = old_ai, old_aj
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = TAU
        if yi != yj:
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        G += y * (yi * K[:, i] * (ai - old_ai) + yj * K[:, j] * (aj - old_aj))
    return alpha, _bias(alpha, G, y, C), it, converged


def _bias(alpha, G, y, C):
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return -float(yG[free].mean())
    at_upper = alpha >= C
    ub_mask = (at_upper & (y < 0)) | (~at_upper & (alpha <= 0) & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (~at_upper & (alpha <= 0) & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return -float((ub + lb) / 2.0)


def split_scan(values, labels, n_classes):
    """Best threshold for pre-sorted ``values``; see the compiled version."""
    n = len(values)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), labels] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    right = onehot.sum(axis=0) - left
    total = float(n)
    p = right[0] + onehot[0]
    parent = 1.0 - float(((p / total) ** 2).sum())
    nl = np.arange(1, n, dtype=float)
    nr = total - nl
    gains = parent - (1.0 - ((left**2).sum(1) / nl + (right**2).sum(1) / nr) / total)
    valid = values[1:] != values[:-1]
    if not valid.any():
        return 0.0, 0.0, -1
    best = -np.inf
    pos = -1
    for t in np.flatnonzero(valid):
        if gains[t] > best + 1e-12:
            best = gains[t]
            pos = int(t)
    thr = values[pos] / 2.0 + values[pos + 1] / 2.0
    return float(best), float(thr), pos
