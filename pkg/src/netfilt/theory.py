"""Closed-form feasibility conditions and error-bound scales.

Covers the eigenvalue-ratio condition on the covariance, the sparsity
function ``rho``, the degree-sequence condition for the normalised-adjacency
model, the ``lambda_max((I-B)^{-1})`` bound, the noise-norm envelopes
``zeta_n^{+/-}``, and a brute-force restricted isometry constant.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .graph import Graph, degrees


class DomainError(ValueError):
    pass


@dataclass
class ConditionReport:
    """Outcome of one ``lhs <= rhs`` (or ``lhs < rhs`` when ``strict``) comparison."""

    name: str
    lhs: float
    rhs: float
    satisfied: bool
    inputs: dict = field(default_factory=dict)
    strict: bool = False
    applicable: bool = True
    note: str = ""

    @classmethod
    def compare(cls, name, lhs, rhs, inputs=None, strict=False, note=""):
        ok = lhs < rhs if strict else lhs <= rhs
        return cls(name, float(lhs), float(rhs), bool(ok), dict(inputs or {}), strict, True, note)

    @classmethod
    def inapplicable(cls, name, note, inputs=None, lhs=math.nan, rhs=math.nan):
        return cls(name, float(lhs), float(rhs), False, dict(inputs or {}), False, False, note)


# -- sparsity function ----------------------------------------------------------

def entropy(r: float) -> float:
    """Natural-log binary entropy on the open interval (0, 1)."""
    if not 0 < r < 1:
        raise DomainError(f"entropy needs 0 < r < 1, got {r}")
    return -r * math.log(r) - (1 - r) * math.log1p(-r)


def f_func(r: float, n: float, p: float) -> float:
    if n <= 0 or p <= 0:
        raise DomainError("n and p must be positive")
    return math.sqrt(p / n) * (math.sqrt(r) + math.sqrt(2.0 * entropy(r)))


def rho(r: float, n: float, p: float) -> float:
    """``(1 + f(4r))^2 + 2 (1 + f(5r))^2 - 3``; defined for ``0 < r < 1/5``."""
    if not 0 < 5 * r < 1:
        raise DomainError(f"rho needs 0 < 5r < 1, got r={r}")
    return (1 + f_func(4 * r, n, p)) ** 2 + 2 * (1 + f_func(5 * r, n, p)) ** 2 - 3


def sparsity_limit(n: float, p: float) -> float:
    """The ``r`` at which ``rho(r) = 1``; smaller ``r`` satisfy ``rho(r) < 1``."""
    lo, hi = 1e-300, 0.2 * (1 - 1e-12)
    if rho(hi, n, p) <= 1:
        return hi
    return optimize.brentq(lambda r: rho(r, n, p) - 1.0, lo, hi, xtol=1e-300, rtol=1e-13)


def rho_condition(S: int, n: int, p: int) -> ConditionReport:
    r = S / (p - 1)
    inputs = {"S": S, "n": n, "p": p, "r": r}
    try:
        val = rho(r, n, p)
    except DomainError as exc:
        return ConditionReport.inapplicable("rho", str(exc), inputs)
    return ConditionReport.compare("rho", val, 1.0, inputs, strict=True)


# -- eigenvalue-ratio condition -------------------------------------------------

def eigenvalue_ratio_bound(S: int, n: int) -> float:
    """``((1 + sqrt(S/n)) / (1 - sqrt(S/n)))^2`` for ``0 < S < n``."""
    if not 0 < S < n:
        raise DomainError(f"bound needs 0 < S < n (S={S}, n={n})")
    t = math.sqrt(S / n)
    return ((1 + t) / (1 - t)) ** 2


def eigenvalue_ratio(B) -> float:
    """``lambda_max(Sigma) / lambda_min(Sigma)``, equal to the condition number of ``I - B``."""
    B = np.asarray(B, dtype=float)
    ev = np.linalg.eigvalsh(np.eye(len(B)) - B)
    if ev[0] <= 0:
        from .model import NotPositiveDefinite

        raise NotPositiveDefinite(ev[0])
    return float(ev[-1] / ev[0])


def check_condition3(m, n: int) -> ConditionReport:
    """Compare the covariance eigenvalue ratio with its bound at ``S`` = max row support.

    ``m`` is a :class:`~netfilt.model.PrecisionModel` or a bare ``B``.
    """
    B = getattr(m, "B", m)
    B = np.asarray(B, dtype=float)
    ratio = eigenvalue_ratio(B)
    S = int((B != 0).sum(axis=1).max()) if B.size else 0
    inputs = {"S": S, "n": n, "p": len(B)}
    if S == 0:
        return ConditionReport.compare("eigenvalue_ratio", ratio, 1.0, inputs)
    if S >= n:
        return ConditionReport.inapplicable("eigenvalue_ratio", "S >= n: bound undefined", inputs, lhs=ratio)
    return ConditionReport.compare("eigenvalue_ratio", ratio, eigenvalue_ratio_bound(S, n), inputs)


# -- normalised-adjacency model -------------------------------------------------

def eta1(g: Graph) -> float:
    """Average over vertices of ``(sum_{j~i} 1/d_j) / d_i``; isolated vertices contribute 0."""
    d = degrees(g).degrees.astype(float)
    if np.any(d == 0):
        warnings.warn("isolated vertices excluded from eta1", stacklevel=2)
    inv = np.zeros_like(d)
    inv[d > 0] = 1.0 / d[d > 0]
    inner = g.adjacency() @ inv
    return float(np.sum(inner * inv) / g.p)


def eta2(d_max: int, n: int, p: int) -> float:
    x = math.sqrt(d_max / n)
    return ((1 + x) / (1 - x) / math.sqrt(2.0)) ** (4.0 / p)


def theorem2_lhs(q: float, e1: float, variant: str = "printed") -> float:
    """Left side of the degree-sequence condition.

    ``printed``: ``1/(1+q)^2 + (q/(1+q))^2 eta1``.
    ``corrected``: ``(1-q)`` in place of ``(1+q)``, which is what the
    determinant lower bound for a diagonally dominant matrix gives.
    """
    if variant == "printed":
        s = 1 + q
    elif variant == "corrected":
        s = 1 - q
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return 1.0 / s**2 + (q / s) ** 2 * e1


def theorem2_check(g: Graph, q: float, n: int, variant: str = "printed") -> ConditionReport:
    ds = degrees(g)
    inputs = {"q": q, "n": n, "p": g.p, "d_max": ds.d_max, "variant": variant}
    if not 0 < q < 1:
        return ConditionReport.inapplicable("theorem2", "q outside (0, 1): no diagonal dominance", inputs)
    if not 0 < ds.d_max < n:
        return ConditionReport.inapplicable("theorem2", "needs 0 < d_max < n", inputs)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        e1 = eta1(g)
    note = "isolated vertices excluded from eta1" if caught else ""
    e2 = eta2(ds.d_max, n, g.p)
    inputs.update(eta1=e1, eta2=e2)
    return ConditionReport.compare("theorem2", theorem2_lhs(q, e1, variant), e2, inputs, note=note)


def lemma1_bound(d_max: int, n: int, q: float) -> float:
    """Upper bound on ``lambda_max((I-B)^{-1})`` for the normalised-adjacency model."""
    if not 0 < d_max < n:
        raise DomainError(f"needs 0 < d_max < n (d_max={d_max}, n={n})")
    if q < 0:
        raise DomainError("q must be nonnegative")
    sd = math.sqrt(d_max)
    x = math.sqrt(d_max / n)
    return sd / (q + sd) * ((1 + x) / (1 - x)) ** 2


def q_sweep(g: Graph, q_values, n: int) -> list[dict]:
    """Eigenvalue ratio of the normalised-adjacency model across ``q``.

    Rows where ``I - B`` is not positive definite carry ``ratio = inf``.
    """
    from .model import normalized_adjacency

    nu = np.linalg.eigvalsh(normalized_adjacency(g))
    S = degrees(g).d_max
    bound = eigenvalue_ratio_bound(S, n) if 0 < S < n else math.nan
    rows = []
    for q in q_values:
        lo, hi = 1 + q * nu[0], 1 + q * nu[-1]
        ratio = hi / lo if lo > 0 else math.inf
        rows.append({
            "q": float(q),
            "ratio": float(ratio),
            "bound": bound,
            "cond3_satisfied": bool(ratio <= bound),
            "theorem2_printed": theorem2_check(g, q, n, "printed").satisfied,
            "theorem2_corrected": theorem2_check(g, q, n, "corrected").satisfied,
        })
    return rows


# -- noise envelopes and the estimation-error scale ------------------------------

def zeta(n: int, sign: str) -> float:
    """``n (1 +/- 4 sqrt(log2(n) / n))``; ``zeta^-`` may be negative for small n."""
    if n < 2:
        raise DomainError("n must be at least 2")
    c = 4.0 * math.sqrt(math.log2(n) / n)
    if sign in ("+", "plus"):
        return n * (1 + c)
    if sign in ("-", "minus"):
        return n * (1 - c)
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


class MuBound(NamedTuple):
    value: float  # upper bound on mu^2
    vacuous: bool  # True when no mu > 0 qualifies


def mu_admissible_range(sigma2: float, S: int, n: int, C0: float) -> MuBound:
    """``C0 sigma2 zeta_n^- / S``, the admissible ceiling for ``mu^2``."""
    if S < 1:
        raise DomainError("S must be at least 1")
    if C0 <= 0:
        raise DomainError("C0 must be positive")
    v = C0 * sigma2 * zeta(n, "-") / S
    return MuBound(v, v <= 0)


def error_bound_scale(r: float, n: int, p: int, sigma2: float) -> float:
    """``sigma2 zeta_n^+ / (1 - rho(r))^2``: the row-error scale up to a model constant."""
    val = rho(r, n, p)
    if val >= 1:
        raise DomainError(f"rho(r) = {val:.4g} >= 1: sparsity condition violated")
    return sigma2 * zeta(n, "+") / (1.0 - val) ** 2


# -- restricted isometry ---------------------------------------------------------

RIC_BUDGET = 10**6


def _ric_svd(X, S):
    worst = 0.0
    for T in combinations(range(X.shape[1]), S):
        sv = np.linalg.svd(X[:, T], compute_uv=False)
        worst = max(worst, sv[0] - 1.0, 1.0 - sv[-1])
    return worst


def _ric_gram(X, S):
    G = X.T @ X
    worst = 0.0
    for T in combinations(range(X.shape[1]), S):
        ev = np.linalg.eigvalsh(G[np.ix_(T, T)])
        lo = math.sqrt(max(ev[0], 0.0))
        hi = math.sqrt(max(ev[-1], 0.0))
        worst = max(worst, hi - 1.0, 1.0 - lo)
    return worst


def restricted_isometry_constant(X, S: int, method: str = "svd") -> float:
    """Brute-force ``delta_S``: worst singular-value deviation from 1 over all ``|T| = S``.

    Subsets smaller than ``S`` need not be visited: their singular values are
    interlaced by those of any superset. ``method="gram"`` uses eigenvalues of
    ``X_T' X_T`` instead of an SVD of ``X_T``.
    """
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    if not 1 <= S <= d:
        raise DomainError(f"needs 1 <= S <= d (S={S}, d={d})")
    if math.comb(d, S) > RIC_BUDGET:
        raise DomainError(f"C({d}, {S}) subsets exceed the budget of {RIC_BUDGET}")
    if method == "svd":
        return _ric_svd(X, S)
    if method == "gram":
        return _ric_gram(X, S)
    raise ValueError(f"unknown method {method!r}")


def lemma2_check(X, S: int) -> ConditionReport:
    """``delta_4S + 2 delta_5S < 1`` by brute force."""
    X = np.asarray(X, dtype=float)
    inputs = {"S": S, "n": X.shape[0], "d": X.shape[1]}
    if 5 * S > X.shape[1]:
        return ConditionReport.inapplicable("lemma2", "5S exceeds the number of columns", inputs)
    d4 = restricted_isometry_constant(X, 4 * S)
    d5 = restricted_isometry_constant(X, 5 * S)
    inputs.update(delta_4S=d4, delta_5S=d5)
    return ConditionReport.compare("lemma2", d4 + 2 * d5, 1.0, inputs, strict=True)
