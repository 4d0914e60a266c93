"""Independent numerical oracles used by the test suite.

The symmetric eigenvalue oracle is a Householder tridiagonalization followed
by implicit Wilkinson-shift QR with deflation — a deliberately different
algorithm from the package's cyclic-Jacobi solver, sharing no code with it.
"""

import numpy as np


def householder_tridiagonal(a):
    """Reduce a symmetric matrix to tridiagonal form; returns (diag, offdiag)."""
    n = a.shape[0]
    t = a.copy()
    for k in range(n - 2):
        x = t[k + 1 :, k].copy()
        alpha = -np.sign(x[0]) * np.linalg.norm(x) if x[0] != 0 else -np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)
        t[k + 1 :, k:] -= 2.0 * np.outer(v, v @ t[k + 1 :, k:])
        t[:, k + 1 :] -= 2.0 * np.outer(t[:, k + 1 :] @ v, v)
    return np.diag(t).copy(), np.diag(t, 1).copy()


def _givens(x, z):
    r = np.hypot(x, z)
    if r == 0.0:
        return 1.0, 0.0
    return x / r, -z / r


def qr_eigenvalues(a, tol=1e-13, max_iter=10000):
    """All eigenvalues of a symmetric matrix, ascending, via shifted QR."""
    d, e = householder_tridiagonal(np.asarray(a, dtype=float))
    d = d.copy()
    e = e.copy()
    n = d.size
    if n == 0:
        return d
    hi = n - 1
    for _ in range(max_iter):
        while hi > 0 and abs(e[hi - 1]) <= tol * (abs(d[hi - 1]) + abs(d[hi])):
            hi -= 1
        if hi == 0:
            break
        lo = hi
        while lo > 0 and abs(e[lo - 1]) > tol * (abs(d[lo - 1]) + abs(d[lo])):
            lo -= 1
        # Wilkinson shift from the trailing 2x2 of the active block
        delta = (d[hi - 1] - d[hi]) / 2.0
        sign = 1.0 if delta >= 0 else -1.0
        mu = d[hi] - sign * e[hi - 1] ** 2 / (abs(delta) + np.hypot(delta, e[hi - 1]))
        x = d[lo] - mu
        z = e[lo]
        for k in range(lo, hi):
            c, s = _givens(x, z)
            if k > lo:
                e[k - 1] = np.hypot(x, z)
            dk, dk1, ek = d[k], d[k + 1], e[k]
            d[k] = c * c * dk - 2 * c * s * ek + s * s * dk1
            d[k + 1] = s * s * dk + 2 * c * s * ek + c * c * dk1
            e[k] = c * s * (dk - dk1) + (c * c - s * s) * ek
            if k < hi - 1:
                x = e[k]
                z = -s * e[k + 1]
                e[k + 1] = c * e[k + 1]
    return np.sort(d)


def central_difference_gradient(objective, x, h=1e-6):
    """Gradient of ``objective(x) -> (value, grad)`` by central differences
    on the value alone."""
    g = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xp[i] += h
        xm = x.copy()
        xm[i] -= h
        g[i] = (objective(xp)[0] - objective(xm)[0]) / (2 * h)
    return g
