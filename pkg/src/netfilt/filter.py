"""Network filtering of test data and argmax detection of the perturbed unit."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .lasso import LassoEstimate
from .model import PrecisionModel
from .theory import zeta

METHODS = ("ideal", "estimated", "direct")


@dataclass(frozen=True)
class FilterOutput:
    """Filtered vector and the detection read off it.

    ``ranking`` lists unit indices by decreasing ``|phi_hat|`` (stable, so
    equal magnitudes keep index order); ``detected_index`` is its head.
    """

    phi_hat: np.ndarray
    method: str
    detected_index: int
    detected_value: float
    ranking: np.ndarray

    def to_dict(self, include_vector: bool = False) -> dict:
        d = {
            "method": self.method,
            "detected_index": self.detected_index,
            "detected_value": self.detected_value,
        }
        if include_vector:
            d["phi_hat"] = [float(v) for v in self.phi_hat]
        return d

    def to_json(self, include_vector: bool = False) -> str:
        return json.dumps(self.to_dict(include_vector))


def detect(phi_hat, method: str) -> FilterOutput:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    phi_hat = np.asarray(phi_hat, dtype=float)
    ranking = np.argsort(-np.abs(phi_hat), kind="stable")
    top = int(ranking[0])
    return FilterOutput(phi_hat, method, top, float(phi_hat[top]), ranking)


def _check(p, y_test):
    y = np.asarray(y_test, dtype=float)
    if y.shape != (p,):
        raise ValueError(f"test vector must have length {p}, got shape {y.shape}")
    return y


def filter_ideal(m: PrecisionModel, y_test) -> FilterOutput:
    """``(I - B) y`` with the true interaction matrix."""
    y = _check(m.p, y_test)
    return detect(y - m.B @ y, "ideal")


def filter_estimated(b_hat: LassoEstimate | np.ndarray, y_test) -> FilterOutput:
    """``(I - B_hat) y``; accepts a :class:`LassoEstimate` or a bare matrix."""
    B_hat = b_hat.B_hat if isinstance(b_hat, LassoEstimate) else np.asarray(b_hat, dtype=float)
    y = _check(B_hat.shape[0], y_test)
    return detect(y - B_hat @ y, "estimated")


def detect_direct(y_test) -> FilterOutput:
    """Detection on the raw test vector."""
    return detect(np.asarray(y_test, dtype=float), "direct")


@dataclass(frozen=True)
class Theorem3Diagnostics:
    """Conditional law of the filtered vector given ``B_hat``.

    ``cond_bias`` is ``Delta (I-B)^{-1} phi`` and ``cond_var_diag`` the diagonal
    of ``(I-B) sigma2 + [Delta (I-B)^{-1} Delta' + 2 Delta] sigma2`` with
    ``Delta = B - B_hat``. ``cond_cov`` is the exact conditional covariance
    ``(I-B_hat) Sigma (I-B_hat)'``, which agrees with that expression on the
    diagonal and differs off it when ``B_hat`` is not symmetric.
    The bound fields carry the unknown estimation constant as ``C``.
    """

    cond_bias: np.ndarray
    cond_var_diag: np.ndarray
    cond_cov: np.ndarray
    bias_bound: float
    var_bound: float
    lambda_max_cov: float
    C: float


def theorem3_diagnostics(m: PrecisionModel, b_hat: LassoEstimate | np.ndarray, phi,
                         n: int | None = None, C: float = 1.0) -> Theorem3Diagnostics:
    if isinstance(b_hat, LassoEstimate):
        B_hat = b_hat.B_hat
        n = b_hat.n_samples if n is None else n
    else:
        B_hat = np.asarray(b_hat, dtype=float)
    if B_hat.shape != m.B.shape:
        raise ValueError("model and estimate differ in dimension")
    if n is None:
        raise ValueError("training sample size n is required for the bounds")
    phi = _check(m.p, phi)
    I = np.eye(m.p)
    K = np.linalg.inv(I - m.B)  # (I - B)^{-1}
    K = 0.5 * (K + K.T)
    delta = m.B - B_hat
    s2 = m.sigma2
    bias = delta @ K @ phi
    var_diag = np.diag((I - m.B) * s2 + (delta @ K @ delta.T + 2 * delta) * s2).copy()
    cov = (I - B_hat) @ (K * s2) @ (I - B_hat).T
    lam = float(np.linalg.eigvalsh(K)[-1])
    est = C * s2 * zeta(n, "+")
    bias_bound = float(np.linalg.norm(phi) * np.sqrt(est) * lam)
    var_bound = float(s2 * (1.0 + est * lam))
    return Theorem3Diagnostics(bias, var_diag, 0.5 * (cov + cov.T), bias_bound, var_bound, lam, C)
