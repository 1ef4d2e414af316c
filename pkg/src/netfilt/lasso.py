"""Row-wise Lasso estimation of the interaction matrix.

Each row of ``B`` is estimated by regressing unit ``i`` on all other units,
minimising ``||y_i - sum_j beta_ij y_j||^2 + mu ||beta||_1`` (no 1/(2n)
factor; every ``mu`` in this module is in those units). ``mu`` is chosen per
row by k-fold cross-validation.

The coordinate-descent kernel is compiled with Cython when available. Set
``NETFILT_PURE_PYTHON=1`` to force the pure-Python kernel.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _cd_py
from ._rng import as_generator

KERNELS = {"python": _cd_py.coordinate_descent}
try:
    from . import _cd

    KERNELS["cython"] = _cd.coordinate_descent
except ImportError:  # extension not built
    pass

if os.environ.get("NETFILT_PURE_PYTHON") or "cython" not in KERNELS:
    BACKEND = "python"
else:
    BACKEND = "cython"

_TIE_TOL = 1e-12


@dataclass
class LassoSolution:
    coefficients: np.ndarray
    mu: float
    objective: float
    iterations: int
    converged: bool
    kkt_residual: float = 0.0


@dataclass
class LassoEstimate:
    """Estimated ``B`` with per-row regularisation and CV diagnostics."""

    B_hat: np.ndarray
    mu_per_row: np.ndarray
    converged: np.ndarray
    n_samples: int
    mu_grid: np.ndarray | None = None
    cv_curves: list = field(default_factory=list)  # per row: array of (mu, cv_error)

    @property
    def p(self) -> int:
        return self.B_hat.shape[0]


def lasso_objective(X, y, beta, mu) -> float:
    r = y - X @ beta
    return float(r @ r + mu * np.abs(beta).sum())


def kkt_residual(X, y, beta, mu) -> float:
    """Worst violation of the optimality conditions at ``beta``."""
    g = -2.0 * (X.T @ (y - X @ beta))
    viol = np.where(beta == 0.0, np.maximum(np.abs(g) - mu, 0.0), np.abs(g + mu * np.sign(beta)))
    viol[np.einsum("ij,ij->j", X, X) == 0.0] = 0.0
    return float(viol.max()) if len(viol) else 0.0


def _support_solve(X, y, mu, beta):
    """Exact minimiser for the current support and signs, or None.

    With support ``A`` and signs ``s`` fixed, optimality reads
    ``X_A' X_A b_A = X_A' y - mu s / 2``; the candidate is kept only if its
    signs agree with ``s``.
    """
    out = _support_step(X, y, mu, beta)
    return out[0] if out is not None and out[1] else None


def _support_step(X, y, mu, beta):
    """One feature-sign step: ``(new_beta, exact)`` or None.

    If the support solution keeps the signs of ``beta`` it is returned with
    ``exact=True``. Otherwise ``beta`` moves toward it until the first
    coefficient reaches zero; the objective equals the sign-restricted
    quadratic along that segment, so it decreases.
    """
    active = np.flatnonzero(beta)
    if active.size == 0 or active.size > X.shape[0]:
        return None
    XA = X[:, active]
    s = np.sign(beta[active])
    try:
        bA = np.linalg.solve(XA.T @ XA, XA.T @ y - 0.5 * mu * s)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(bA)):
        return None
    out = np.zeros_like(beta)
    flipped = np.sign(bA) != s
    if not flipped.any():
        out[active] = bA
        return out, True
    cur = beta[active]
    t = cur[flipped] / (cur[flipped] - bA[flipped])
    k = int(np.argmin(t))
    out[active] = cur + t[k] * (bA - cur)
    out[active[np.flatnonzero(flipped)[k]]] = 0.0
    return out, False


def _polish(X, y, mu, beta):
    """Support reduction followed by feature-sign steps; never raises the objective."""
    cand = _reduce_support(X, beta)
    for _ in range(beta.size + 1):
        step = _support_step(X, y, mu, cand)
        if step is None:
            break
        cand = step[0]
        if step[1]:
            break
    return cand


def _reduce_support(X, beta, rank_tol=1e-10):
    """Shrink a rank-deficient support without raising the objective.

    Along a null direction ``v`` of ``X_A`` the fit is unchanged and the
    penalty is linear while no sign flips, so stepping the way that does not
    increase ``s'v`` until a coefficient hits zero is free. Repeats until
    ``X_A`` has full column rank.
    """
    beta = beta.copy()
    while True:
        active = np.flatnonzero(beta)
        if active.size == 0:
            return beta
        sv, Vt = np.linalg.svd(X[:, active], full_matrices=True)[1:]
        rank = int(np.sum(sv > rank_tol * sv[0])) if sv.size else 0
        if rank == active.size:
            return beta
        v = Vt[-1]
        s = np.sign(beta[active])
        if s @ v > 0:
            v = -v
        shrinking = v * s < 0
        if not shrinking.any():
            v, shrinking = -v, -v * s < 0
        ratios = np.abs(beta[active][shrinking] / v[shrinking])
        k = int(np.argmin(ratios))
        beta[active] += ratios[k] * v
        beta[active[np.flatnonzero(shrinking)[k]]] = 0.0


def lasso_solve(X, y, mu, tol=1e-7, max_iter=10000, beta0=None, backend=None,
                polish_every=50) -> LassoSolution:
    """Minimise ``||y - X beta||^2 + mu ||beta||_1`` by cyclic coordinate descent.

    Stops when the KKT residual is at most ``tol``. If ``max_iter`` sweeps
    pass first, the last iterate is returned with ``converged=False``.
    Columns with zero norm keep a zero coefficient.

    Every ``polish_every`` sweeps the iterate is polished: the support is
    reduced to full column rank, then feature-sign steps move toward the
    exact solution on the support. The result is kept if it does not raise
    the objective; ``polish_every=0`` gives plain coordinate descent.
    """
    X = np.asfortranarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("X and y must be finite")
    beta = np.zeros(X.shape[1]) if beta0 is None else np.array(beta0, dtype=np.float64)
    kernel = KERNELS[backend or BACKEND]
    chunk = polish_every if polish_every > 0 else max_iter
    total = 0
    while True:
        sweeps, converged, kkt = kernel(X, y, float(mu), beta, tol, min(chunk, max_iter - total))
        total += sweeps
        if converged or total >= max_iter:
            break
        if np.count_nonzero(beta):
            cand = _polish(X, y, mu, beta)
            if lasso_objective(X, y, cand, mu) <= lasso_objective(X, y, beta, mu):
                beta[:] = cand
    return LassoSolution(beta, float(mu), lasso_objective(X, y, beta, mu), total, converged, kkt)


def lasso_path(X, y, mu_grid, tol=1e-7, max_iter=10000, backend=None):
    """Solutions along ``mu_grid`` (any order), warm-started from large to small ``mu``.

    Returns a list of :class:`LassoSolution` in the order of ``mu_grid``.
    """
    mu_grid = np.asarray(mu_grid, dtype=float)
    order = np.argsort(-mu_grid, kind="stable")
    X = np.asfortranarray(X, dtype=np.float64)
    out = [None] * len(mu_grid)
    beta = np.zeros(X.shape[1])
    for idx in order:
        sol = lasso_solve(X, y, mu_grid[idx], tol, max_iter, beta0=beta, backend=backend)
        beta = sol.coefficients
        out[idx] = sol
    return out


def mu_max(X, y) -> float:
    """Smallest ``mu`` with an all-zero solution."""
    return float(2.0 * np.max(np.abs(np.asarray(X).T @ np.asarray(y))))


def default_mu_grid(training, n_points=50, ratio=1e-4, predictors=None) -> np.ndarray:
    """Log grid from the largest per-row ``mu_max`` down to ``ratio`` times it.

    ``predictors`` is a rescaled copy of ``training`` when columns are standardised.
    """
    Y = np.asarray(training, dtype=float)
    Z = Y if predictors is None else np.asarray(predictors, dtype=float)
    C = Z.T @ Y
    np.fill_diagonal(C, 0.0)
    top = 2.0 * np.abs(C).max()
    if top == 0:
        top = 1.0
    return np.geomspace(top, top * ratio, n_points)


def make_folds(n: int, k: int, rng=None) -> np.ndarray:
    """Fold label for each sample, from a seeded shuffle."""
    if k < 2 or n < k:
        raise ValueError(f"need 2 <= k <= n (k={k}, n={n})")
    perm = as_generator(rng).permutation(n)
    labels = np.empty(n, dtype=np.int64)
    labels[perm] = np.arange(n) % k
    return labels


def cv_curve(X, y, mu_grid, folds, tol=1e-7, max_iter=10000, backend=None) -> np.ndarray:
    """Held-out squared error (pooled over folds, divided by n) for every grid value.

    Fold fits use ``mu * n_train / n`` so that the penalty per training sample
    matches the full-data fit at ``mu``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    mu_grid = np.asarray(mu_grid, dtype=float)
    n = len(y)
    sse = np.zeros(len(mu_grid))
    for f in np.unique(folds):
        test = folds == f
        train = ~test
        scale = train.sum() / n
        sols = lasso_path(X[train], y[train], mu_grid * scale, tol, max_iter, backend)
        for g, sol in enumerate(sols):
            resid = y[test] - X[test] @ sol.coefficients
            sse[g] += resid @ resid
    return sse / n


def pick_mu(mu_grid, errors) -> float:
    """Grid value with the least CV error; exact ties go to the smallest ``mu``."""
    mu_grid = np.asarray(mu_grid, dtype=float)
    errors = np.asarray(errors, dtype=float)
    best = errors.min()
    ok = errors <= best + _TIE_TOL * max(1.0, abs(best))
    return float(mu_grid[ok].min())


def cross_validate_mu(X, y, mu_grid, k=5, rng=None, tol=1e-7, max_iter=10000, backend=None) -> float:
    """k-fold CV choice of ``mu`` from ``mu_grid``."""
    mu_grid = np.asarray(mu_grid, dtype=float)
    if mu_grid.size == 0:
        raise ValueError("empty mu grid")
    folds = make_folds(len(y), k, rng)
    return pick_mu(mu_grid, cv_curve(X, y, mu_grid, folds, tol, max_iter, backend))


def _fit_row_at(X, y, mu_grid, mu, tol, max_iter, backend):
    # walk the grid down to mu so the final solve is warm-started
    path = [m for m in sorted(set(mu_grid.tolist()), reverse=True) if m > mu] + [mu]
    sols = lasso_path(X, y, path, tol, max_iter, backend)
    return sols[-1]


def estimate_B(training, mu_grid=None, k=5, rng=None, *, mode="per_row", standardize=False,
               threads=1, tol=1e-7, max_iter=10000, backend=None) -> LassoEstimate:
    """Estimate ``B`` row by row.

    Parameters
    ----------
    training : ndarray of shape (n, p)
    mu_grid : array, optional
        Defaults to :func:`default_mu_grid` on the (possibly standardised) data.
    k : int
        CV folds. One fold assignment is drawn from ``rng`` and shared by all rows.
    mode : {"per_row", "global"}
        ``global`` sums the CV curves over rows and uses one ``mu`` everywhere.
    standardize : bool
        Scale predictors to unit standard deviation before fitting; the
        coefficients are mapped back to the original scale.
    threads : int
        Rows are independent; results do not depend on the thread count.
    """
    Y = np.asarray(training, dtype=float)
    n, p = Y.shape
    if mode not in ("per_row", "global"):
        raise ValueError(f"unknown mode {mode!r}")
    scale = np.ones(p)
    if standardize:
        scale = Y.std(axis=0)
        scale[scale == 0] = 1.0
    Z = Y / scale
    grid = default_mu_grid(Y, predictors=Z) if mu_grid is None else np.asarray(mu_grid, dtype=float)
    folds = make_folds(n, k, rng)

    def design(i):
        others = np.r_[0:i, i + 1:p]
        return others, np.asfortranarray(Z[:, others]), Y[:, i]

    def curve(i):
        _, X, y = design(i)
        return cv_curve(X, y, grid, folds, tol, max_iter, backend)

    def fit(i, mu):
        others, X, y = design(i)
        return others, _fit_row_at(X, y, grid, mu, tol, max_iter, backend)

    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        curves = list(pool.map(curve, range(p)))
        if mode == "global":
            mus = [pick_mu(grid, np.sum(curves, axis=0))] * p
        else:
            mus = [pick_mu(grid, c) for c in curves]
        fits = list(pool.map(fit, range(p), mus))

    B_hat = np.zeros((p, p))
    converged = np.zeros(p, dtype=bool)
    for i, (others, sol) in enumerate(fits):
        B_hat[i, others] = sol.coefficients / scale[others]
        converged[i] = sol.converged
    return LassoEstimate(B_hat, np.array(mus), converged, n, grid,
                         [np.column_stack([grid, c]) for c in curves])


# -- JSON ---------------------------------------------------------------------

def estimate_to_dict(est: LassoEstimate) -> dict:
    ii, jj = np.nonzero(est.B_hat)
    return {
        "p": est.p,
        "sigma2": None,
        "edges": [[int(i), int(j), float(est.B_hat[i, j])] for i, j in zip(ii, jj)],
        "n": est.n_samples,
        "mu": [float(m) for m in est.mu_per_row],
        "converged": [bool(c) for c in est.converged],
    }


def estimate_from_dict(d: dict) -> LassoEstimate:
    p = int(d["p"])
    B = np.zeros((p, p))
    for i, j, v in d["edges"]:
        if i == j:
            raise ValueError("estimate has a diagonal entry")
        B[i, j] = float(v)
    return LassoEstimate(B, np.array(d["mu"], dtype=float), np.array(d["converged"], dtype=bool),
                         int(d["n"]))


def save_estimate(est: LassoEstimate, path) -> None:
    Path(path).write_text(json.dumps(estimate_to_dict(est), indent=1))


def load_estimate(path) -> LassoEstimate:
    return estimate_from_dict(json.loads(Path(path).read_text()))
