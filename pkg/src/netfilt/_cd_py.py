"""Pure-Python coordinate descent, the fallback for the compiled ``_cd`` kernel.

Objective ``||y - X b||^2 + mu ||b||_1`` (no 1/(2n) factor). Each coordinate
update is ``b_j <- S(2 X_j' r_j, mu) / (2 X_j' X_j)`` with ``r_j`` the partial
residual and ``S`` soft-thresholding. After every full sweep, sweeps over the
nonzero coordinates repeat until no coordinate moves its own gradient by more
than ``tol``; the exact KKT residual is then recomputed from scratch and the
loop stops once it is at most ``tol``.
"""
import numpy as np


def _soft(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def _residual_and_kkt(X, y, beta, col_sq, mu):
    r = y - X @ beta
    g = -2.0 * (X.T @ r)
    viol = np.where(beta == 0.0, np.maximum(np.abs(g) - mu, 0.0), np.abs(g + mu * np.sign(beta)))
    viol[col_sq == 0.0] = 0.0
    return r, float(viol.max()) if len(viol) else 0.0


def _sweep(X, beta, r, col_sq, mu, active_only):
    worst = 0.0
    for j in range(X.shape[1]):
        if col_sq[j] == 0.0:
            beta[j] = 0.0
            continue
        if active_only and beta[j] == 0.0:
            continue
        xj = X[:, j]
        rho = float(xj @ r) + col_sq[j] * beta[j]
        new = _soft(2.0 * rho, mu) / (2.0 * col_sq[j])
        delta = new - beta[j]
        if delta != 0.0:
            r -= delta * xj
            beta[j] = new
            worst = max(worst, 2.0 * abs(delta) * col_sq[j])
    return worst


def coordinate_descent(X, y, mu, beta, tol=1e-7, max_iter=10000):
    """Solve in place, warm-started from ``beta``.

    Returns ``(sweeps, converged, kkt_residual)``.
    """
    X = np.asfortranarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if beta.shape[0] != X.shape[1] or y.shape[0] != X.shape[0]:
        raise ValueError("dimension mismatch")
    col_sq = np.einsum("ij,ij->j", X, X)
    sweeps = 0
    r, kkt = _residual_and_kkt(X, y, beta, col_sq, mu)
    while kkt > tol and sweeps < max_iter:
        _sweep(X, beta, r, col_sq, mu, False)
        sweeps += 1
        inner = 0
        while sweeps < max_iter and inner < 1000:
            if _sweep(X, beta, r, col_sq, mu, True) <= tol:
                break
            sweeps += 1
            inner += 1
        r, kkt = _residual_and_kkt(X, y, beta, col_sq, mu)
    return sweeps, kkt <= tol, kkt
