"""Precision models ``Omega = (I - B) / sigma2`` built on a concentration graph."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._rng import as_generator
from .graph import Graph, degrees

PD_TOL = 1e-8


class ModelError(ValueError):
    pass


class NotPositiveDefinite(ModelError):
    def __init__(self, lam_min):
        super().__init__(f"I - B is not positive definite (lambda_min = {lam_min:.6g})")
        self.lam_min = lam_min


@dataclass(frozen=True, eq=False)
class PrecisionModel:
    """Conditional Gaussian model on ``graph``.

    ``B`` is symmetric with zero diagonal and ``B[i, j] != 0`` only on edges.
    ``params`` records how the model was built (q, rescale factor, ...).
    """

    B: np.ndarray
    sigma2: float = 1.0
    graph: Graph | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        B = np.array(self.B, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ModelError("B must be square")
        if np.any(np.diag(B) != 0):
            raise ModelError("diagonal of B must be exactly zero")
        if not np.allclose(B, B.T, rtol=0, atol=1e-14):
            raise ModelError("B must be symmetric")
        if not self.sigma2 > 0:
            raise ModelError("sigma2 must be positive")
        B.setflags(write=False)
        object.__setattr__(self, "B", B)
        lam = lambda_min(B)
        if lam <= PD_TOL:
            raise NotPositiveDefinite(lam)

    @property
    def p(self) -> int:
        return self.B.shape[0]

    @property
    def precision(self) -> np.ndarray:
        return (np.eye(self.p) - self.B) / self.sigma2


@dataclass(frozen=True)
class CovarianceFactor:
    sigma: np.ndarray  # lower triangular, sigma @ sigma.T == covariance


def lambda_min(B) -> float:
    """Smallest eigenvalue of ``I - B``."""
    return float(np.linalg.eigvalsh(np.eye(len(B)) - B)[0])


def normalized_adjacency(g: Graph) -> np.ndarray:
    """``D^{-1/2} A D^{-1/2}``, with zero rows/columns at isolated vertices."""
    d = degrees(g).degrees.astype(float)
    s = np.zeros_like(d)
    s[d > 0] = 1.0 / np.sqrt(d[d > 0])
    N = s[:, None] * g.adjacency() * s[None, :]
    return 0.5 * (N + N.T)


def build_simple(g: Graph, q: float, sigma2: float = 1.0, *, strict: bool = False,
                 enforce_pd: bool = False, pd_floor: float = 0.01) -> PrecisionModel:
    """Fixed-weight model ``I - B = I + q D^{-1/2} A D^{-1/2}``.

    Isolated vertices get a zero row and column in ``B`` unless ``strict``.

    With ``enforce_pd`` the effective ``q`` is shrunk, only when needed, to
    ``(1 - pd_floor) / |lambda_min(N)|`` so that ``lambda_min(I - B) >= pd_floor``;
    the value actually used is recorded as ``params['q_effective']``.
    Otherwise an indefinite ``I - B`` raises :class:`NotPositiveDefinite`.
    """
    if not q > 0:
        raise ModelError("q must be positive")
    if strict and np.any(degrees(g).degrees == 0):
        raise ModelError("graph has isolated vertices")
    N = normalized_adjacency(g)
    q_eff = float(q)
    if enforce_pd and g.n_edges:
        nmin = float(np.linalg.eigvalsh(N)[0])
        if 1.0 + q * nmin < pd_floor:
            q_eff = (1.0 - pd_floor) / -nmin
    B = -q_eff * N
    return PrecisionModel(B, sigma2, g, {"kind": "simple", "q": float(q), "q_effective": q_eff})


def build_weighted(g: Graph, a: float, b: float, sigma2: float = 1.0, rng=None,
                   pd_floor: float = 0.05) -> PrecisionModel:
    """Beta(a, b) edge weights, rescaled so ``lambda_min(I - B) >= pd_floor``.

    Raw weights ``W`` are rescaled by
    ``s = min(1, 0.95 (1 - pd_floor) / max(|lambda_min(W)|, lambda_max(W)))``
    and ``B = -s W``.
    """
    if g.n_edges == 0:
        raise ModelError("weighted model needs at least one edge")
    if not (a > 0 and b > 0):
        raise ModelError("Beta parameters must be positive")
    rng = as_generator(rng)
    w = rng.beta(a, b, size=g.n_edges)
    W = np.zeros((g.p, g.p))
    i, j = g.edges[:, 0], g.edges[:, 1]
    W[i, j] = w
    W[j, i] = w
    ev = np.linalg.eigvalsh(W)
    radius = max(abs(ev[0]), ev[-1])
    s = min(1.0, 0.95 * (1.0 - pd_floor) / radius) if radius > 0 else 1.0
    B = -s * W
    if lambda_min(B) < pd_floor:  # cannot happen by construction
        raise ModelError("rescaling failed to reach the PD floor")
    return PrecisionModel(B, sigma2, g, {"kind": "beta", "a": float(a), "b": float(b), "rescale": float(s)})


def covariance(m: PrecisionModel) -> np.ndarray:
    S = np.linalg.inv(np.eye(m.p) - m.B) * m.sigma2
    return 0.5 * (S + S.T)


def cholesky(m: PrecisionModel) -> CovarianceFactor:
    try:
        L = np.linalg.cholesky(covariance(m))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(lambda_min(m.B)) from exc
    return CovarianceFactor(L)


def condition3_support(B) -> int:
    """Largest number of nonzeros in any row of ``B``."""
    B = np.asarray(B)
    return int((B != 0).sum(axis=1).max()) if B.size else 0


# -- JSON ---------------------------------------------------------------------

def model_to_dict(m: PrecisionModel) -> dict:
    iu, ju = np.nonzero(np.triu(m.B, 1))
    return {
        "p": m.p,
        "sigma2": m.sigma2,
        "edges": [[int(i), int(j), float(m.B[i, j])] for i, j in zip(iu, ju)],
        "params": m.params,
    }


def model_from_dict(d: dict) -> PrecisionModel:
    p = int(d["p"])
    B = np.zeros((p, p))
    pairs = []
    for i, j, v in d["edges"]:
        B[i, j] = B[j, i] = float(v)
        pairs.append((i, j))
    g = Graph(p, np.array(pairs, dtype=np.int64).reshape(-1, 2))
    return PrecisionModel(B, float(d["sigma2"]), g, dict(d.get("params", {})))


def save_model(m: PrecisionModel, path) -> None:
    # json writes floats with repr, which round-trips every bit
    Path(path).write_text(json.dumps(model_to_dict(m), indent=1))


def load_model(path) -> PrecisionModel:
    return model_from_dict(json.loads(Path(path).read_text()))

