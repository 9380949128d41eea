"""Naive reference implementations (plain double loops) used to cross-check
the vectorized estimators.  Kept deliberately slow and independent."""

import numpy as np


def epan(v):
    return 0.75 * (1.0 - v * v) if abs(v) <= 1.0 else 0.0


def product_epan(diffs):
    out = 1.0
    for v in diffs:
        out *= epan(v)
    return out


def local_linear_weights(n, t, b):
    times = [(i + 1) / n for i in range(n)]
    k = [epan((times[j] - t) / b) for j in range(n)]
    s0 = sum(k)
    s1 = sum((t - times[j]) * k[j] for j in range(n))
    s2 = sum((t - times[j]) ** 2 * k[j] for j in range(n))
    det = s2 * s0 - s1 * s1
    return [k[j] * (s2 - (t - times[j]) * s1) / det for j in range(n)]


def restricted_indices(x, times, box, t_interval):
    out = []
    for i in range(len(times)):
        if not (t_interval[0] <= times[i] <= t_interval[1]):
            continue
        if all(box[c][0] <= x[i, c] <= box[c][1] for c in range(x.shape[1])):
            out.append(i)
    return out


def fit_time_varying(x, y, box, t_interval, b, h):
    """Model I by double loops: fitted values on the restricted set and RSS."""
    n, d = x.shape
    times = [(i + 1) / n for i in range(n)]
    idx = restricted_indices(x, np.asarray(times), box, t_interval)
    fitted = []
    for i in idx:
        w = local_linear_weights(n, times[i], b)
        fhat = that = 0.0
        for j in range(n):
            ks = product_epan([(x[i, c] - x[j, c]) / h for c in range(d)]) / h**d
            fhat += ks * w[j]
            that += y[j] * ks * w[j]
        fitted.append(that / fhat)
    rss = sum((y[i] - f) ** 2 for i, f in zip(idx, fitted))
    return np.asarray(fitted), rss, idx


def fit_time_constant(x, y, box, t_interval, h):
    """Model II by double loops."""
    n, d = x.shape
    times = np.arange(1, n + 1) / n
    idx = restricted_indices(x, times, box, t_interval)
    fitted = []
    for i in idx:
        num = den = 0.0
        for j in range(n):
            ks = product_epan([(x[i, c] - x[j, c]) / h for c in range(d)])
            num += y[j] * ks
            den += ks
        fitted.append(num / den)
    rss = sum((y[i] - f) ** 2 for i, f in zip(idx, fitted))
    return np.asarray(fitted), rss, idx


def coefficients_at(x, y, t, b, intercept, ridge=1e-10):
    """Model III coefficients at one time by looped weighted least squares."""
    n, d = x.shape
    times = [(i + 1) / n for i in range(n)]
    cols = d + (1 if intercept else 0)
    gram = np.zeros((cols, cols))
    rhs = np.zeros(cols)
    for j in range(n):
        kb = epan((times[j] - t) / b) / b
        row = np.concatenate([[1.0], x[j]]) if intercept else x[j]
        gram += kb * np.outer(row, row)
        rhs += kb * row * y[j]
    gram = gram + ridge * (np.trace(gram) / cols) * np.eye(cols)
    return np.linalg.solve(gram, rhs)


def linear_coefficients(x, y, intercept, ridge=1e-10):
    """Model IV by explicit normal equations (2x2 inverse when possible)."""
    n, d = x.shape
    design = np.column_stack([np.ones(n), x]) if intercept else x
    cols = design.shape[1]
    gram = np.zeros((cols, cols))
    rhs = np.zeros(cols)
    for j in range(n):
        gram += np.outer(design[j], design[j]) / n
        rhs += design[j] * y[j] / n
    gram = gram + ridge * (np.trace(gram) / cols) * np.eye(cols)
    if cols == 2:
        det = gram[0, 0] * gram[1, 1] - gram[0, 1] * gram[1, 0]
        inv = np.array([[gram[1, 1], -gram[0, 1]], [-gram[1, 0], gram[0, 0]]]) / det
        return inv @ rhs
    return np.linalg.solve(gram, rhs)
