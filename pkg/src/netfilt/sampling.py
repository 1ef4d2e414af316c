"""Training and test draws from the conditional Gaussian model."""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from ._rng import as_generator
from .model import PrecisionModel, cholesky


def _factor(m: PrecisionModel, factor=None) -> np.ndarray:
    # callers drawing repeatedly from one model pass the factor in
    return cholesky(m).sigma if factor is None else factor


def sample_training(m: PrecisionModel, n: int, rng=None, factor=None) -> np.ndarray:
    """``n`` i.i.d. rows from ``N(0, (I - B)^{-1} sigma2)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = as_generator(rng)
    z = rng.standard_normal((n, m.p))
    return z @ _factor(m, factor).T


def perturbed_mean(m: PrecisionModel, phi) -> np.ndarray:
    """Mean of the perturbed test law, ``(I - B)^{-1} phi``."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (m.p,):
        raise ValueError(f"phi must have length {m.p}, got shape {phi.shape}")
    return np.linalg.solve(np.eye(m.p) - m.B, phi)


def sample_test(m: PrecisionModel, phi, rng=None, factor=None) -> np.ndarray:
    """One test vector from ``N((I - B)^{-1} phi, (I - B)^{-1} sigma2)``."""
    rng = as_generator(rng)
    mean = perturbed_mean(m, phi)
    return mean + _factor(m, factor) @ rng.standard_normal(m.p)


def sample_test_batch(m: PrecisionModel, phi, n_test: int, rng=None, factor=None) -> np.ndarray:
    rng = as_generator(rng)
    mean = perturbed_mean(m, phi)
    return mean + rng.standard_normal((n_test, m.p)) @ _factor(m, factor).T


def make_single_unit_phi(p: int, target: int, snr: float) -> np.ndarray:
    if not 0 <= target < p:
        raise IndexError(f"target {target} out of range for p={p}")
    phi = np.zeros(p)
    phi[target] = snr
    return phi


def format_matrix_csv(Y) -> str:
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    buf = io.StringIO()
    buf.write(",".join(f"y{j + 1}" for j in range(Y.shape[1])) + "\n")
    for row in Y:
        buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return buf.getvalue()


def parse_matrix_csv(text: str) -> np.ndarray:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], [r for r in rows[1:] if r]
    if any(h != f"y{j + 1}" for j, h in enumerate(header)):
        raise ValueError("header must be y1,...,yp")
    return np.array([[float(v) for v in r] for r in body]).reshape(len(body), len(header))


def write_matrix_csv(Y, path) -> None:
    Path(path).write_text(format_matrix_csv(Y))


def read_matrix_csv(path) -> np.ndarray:
    return parse_matrix_csv(Path(path).read_text())
