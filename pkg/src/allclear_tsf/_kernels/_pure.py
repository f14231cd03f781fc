"""Numpy implementations of the hot kernels.

Every reduction runs sequentially along the time axis (vectorised over
instances only) so that results are bit-identical to the compiled kernels.
"""
import math

import numpy as np

NAME = "numpy"


def interval_features(X, starts, ends):
    """Mean, sample std and OLS slope of every row of ``X`` over each interval.

    Parameters
    ----------
    X : ndarray of shape (n_instances, series_length)
    starts, ends : 1d integer arrays
        Half-open interval bounds.

    Returns
    -------
    ndarray of shape (n_instances, 3 * len(starts))
        Columns laid out as ``[mean_0, std_0, slope_0, mean_1, ...]``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n_rows = X.shape[0]
    if n_rows == 1:
        return _single_row(X[0].tolist(), starts, ends)
    out = np.empty((n_rows, 3 * len(starts)), dtype=np.float64)
    for j, (s, e) in enumerate(zip(starts, ends)):
        s = int(s)
        m = int(e) - s
        shift = X[:, s]
        acc = np.zeros(n_rows)
        for c in range(m):
            acc = acc + (X[:, s + c] - shift)
        mean = shift + acc / m
        if m > 1:
            tbar = (m - 1) / 2.0
            ss = np.zeros(n_rows)
            sxy = np.zeros(n_rows)
            for c in range(m):
                d = X[:, s + c] - mean
                ss = ss + d * d
                sxy = sxy + (c - tbar) * d
            std = np.sqrt(ss / (m - 1))
            slope = sxy / (float(m * (m * m - 1)) / 12.0)
        else:
            std = np.zeros(n_rows)
            slope = np.zeros(n_rows)
        out[:, 3 * j] = mean
        out[:, 3 * j + 1] = std
        out[:, 3 * j + 2] = slope
    return out


def _single_row(x, starts, ends):
    # same operation order as the vectorised path, on Python floats
    out = []
    for s, e in zip(starts, ends):
        s = int(s)
        m = int(e) - s
        seg = x[s:s + m]
        shift = seg[0]
        acc = 0.0
        for v in seg:
            acc = acc + (v - shift)
        mean = shift + acc / m
        std = slope = 0.0
        if m > 1:
            tbar = (m - 1) / 2.0
            ss = sxy = 0.0
            for c, v in enumerate(seg):
                d = v - mean
                ss = ss + d * d
                sxy = sxy + (c - tbar) * d
            std = math.sqrt(ss / (m - 1))
            slope = sxy / (float(m * (m * m - 1)) / 12.0)
        out += (mean, std, slope)
    return np.array(out, dtype=np.float64)[None, :]


def best_split(X, is_xm, rows, w_xm, w_cbn, min_leaf):
    """Best class-weighted Gini split of ``X[rows]``.

    Returns ``(feature, threshold, score)``; ``feature`` is -1 when no
    admissible split exists. ``score`` is the weighted Gini gain proxy
    ``sum_child (wx^2 + wc^2) / w``, larger is better.
    """
    Xn = X[rows]
    y = is_xm[rows].astype(np.int64)
    m = len(rows)
    best_f, best_thr, best_score = -1, 0.0, -np.inf
    if m < 2:
        return best_f, best_thr, best_score
    n_left = np.arange(1, m, dtype=np.int64)
    n_right = m - n_left
    size_ok = (n_left >= min_leaf) & (n_right >= min_leaf)
    nx_total = int(y.sum())
    for f in range(Xn.shape[1]):
        order = np.argsort(Xn[:, f], kind="stable")
        v = Xn[order, f]
        nx_l = np.cumsum(y[order])[:-1]
        valid = size_ok & (v[:-1] < v[1:])
        if not valid.any():
            continue
        nc_l = n_left - nx_l
        nx_r = nx_total - nx_l
        nc_r = n_right - nx_r
        wxl = w_xm * nx_l.astype(np.float64)
        wcl = w_cbn * nc_l.astype(np.float64)
        wxr = w_xm * nx_r.astype(np.float64)
        wcr = w_cbn * nc_r.astype(np.float64)
        score = (wxl * wxl + wcl * wcl) / (wxl + wcl) + (wxr * wxr + wcr * wcr) / (wxr + wcr)
        score = np.where(valid, score, -np.inf)
        i = int(np.argmax(score))
        if score[i] > best_score:
            a, b = float(v[i]), float(v[i + 1])
            thr = (a + b) / 2.0
            if thr == b:
                thr = a
            best_f, best_thr, best_score = f, thr, float(score[i])
    return best_f, best_thr, best_score
