"""Random concentration graphs: Erdos-Renyi, Barabasi-Albert and geometric.

All generators return an immutable :class:`Graph` on vertices ``0..p-1``.
Edges are stored once as ``(i, j)`` with ``i < j``, sorted lexicographically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate, optimize

from ._rng import as_generator

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph.

    Attributes
    ----------
    p : int
        Number of vertices.
    edges : ndarray of shape (m, 2)
        Unique pairs ``i < j``, lexicographically sorted.
    positions : ndarray of shape (p, 2), optional
        Vertex coordinates in the unit square (geometric graphs only).
    """

    p: int
    edges: np.ndarray
    positions: np.ndarray | None = None

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.p < 1:
            raise GraphError(f"p must be positive, got {self.p}")
        if len(e):
            if np.any(e < 0) or np.any(e >= self.p):
                raise GraphError("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise GraphError("self-loops are not allowed")
            e = np.sort(e, axis=1)
            e = np.unique(e, axis=0)
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)
        if self.positions is not None:
            pos = np.array(self.positions, dtype=float).reshape(self.p, 2)
            pos.setflags(write=False)
            object.__setattr__(self, "positions", pos)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def edge_set(self) -> frozenset:
        return frozenset(map(tuple, self.edges.tolist()))

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.p, self.p))
        if self.n_edges:
            A[self.edges[:, 0], self.edges[:, 1]] = 1.0
            A[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return A

    def neighbors(self, i: int) -> np.ndarray:
        e = self.edges
        return np.sort(np.concatenate([e[e[:, 0] == i, 1], e[e[:, 1] == i, 0]]))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.p, self.edges.tobytes()))

    def __repr__(self):
        return f"Graph(p={self.p}, n_edges={self.n_edges})"


@dataclass(frozen=True)
class DegreeSequence:
    degrees: np.ndarray

    @property
    def d_max(self) -> int:
        return int(self.degrees.max()) if len(self.degrees) else 0

    @property
    def d_bar(self) -> float:
        return float(self.degrees.mean()) if len(self.degrees) else 0.0


def degrees(g: Graph) -> DegreeSequence:
    d = np.bincount(g.edges.ravel(), minlength=g.p).astype(np.int64)
    return DegreeSequence(d)


def _pairs_from_mask(p, mask):
    iu, ju = np.triu_indices(p, k=1)
    return np.column_stack([iu[mask], ju[mask]])


def gen_er(p: int, d_bar: float, rng=None) -> Graph:
    """Erdos-Renyi graph with edge probability ``d_bar / (p - 1)``."""
    if p < 2:
        raise GraphError("p must be at least 2")
    if not 0 <= d_bar <= p - 1:
        raise GraphError(f"d_bar must lie in [0, p-1], got {d_bar}")
    rng = as_generator(rng)
    prob = d_bar / (p - 1)
    u = rng.random(p * (p - 1) // 2)
    return Graph(p, _pairs_from_mask(p, u < prob))


def gen_ba(p: int, m: int, rng=None) -> Graph:
    """Barabasi-Albert preferential attachment.

    Growth starts from a clique on ``m + 1`` vertices. Every later vertex
    attaches ``m`` distinct edges, each target drawn with probability
    proportional to its current degree; duplicate targets are redrawn.
    """
    if m < 1:
        raise GraphError("m must be at least 1")
    if m >= p:
        raise GraphError(f"m must be smaller than p (m={m}, p={p})")
    rng = as_generator(rng)
    edges = [(i, j) for i in range(m + 1) for j in range(i + 1, m + 1)]
    # each vertex appears once per incident edge, so a uniform pick is degree-proportional
    ends = [v for e in edges for v in e]
    for v in range(m + 1, p):
        targets: list[int] = []
        while len(targets) < m:
            t = ends[int(rng.integers(len(ends)))]
            if t not in targets:
                targets.append(t)
        for t in targets:
            edges.append((t, v))
            ends.extend((t, v))
    return Graph(p, np.array(edges, dtype=np.int64))


def geometric_kernel(w, p: int, scale: float = 1.0):
    """Edge probability ``phi(scale * w * sqrt(p))`` with ``phi`` the standard normal density."""
    x = scale * np.asarray(w, dtype=float) * math.sqrt(p)
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def distance_density(w):
    """Density of the distance between two independent uniform points in the unit square."""
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    lo = (w >= 0) & (w <= 1)
    out[lo] = 2 * w[lo] * (math.pi - 4 * w[lo] + w[lo] ** 2)
    hi = (w > 1) & (w <= math.sqrt(2))
    u = w[hi]
    g = math.pi / 2 - 2 * np.arccos(1 / u) - 1 + 2 * np.sqrt(u * u - 1) - u * u / 2
    out[hi] = 4 * u * g
    return out


def expected_geometric_degree(p: int, scale: float = 1.0) -> float:
    """Expected average degree of :func:`gen_geometric`, ``(p-1) E[kernel(W)]``.

    One-dimensional quadrature against :func:`distance_density`; the range is
    cut where the kernel underflows.
    """
    cut = min(math.sqrt(2), 40.0 / (scale * math.sqrt(p)))

    def integrand(w):
        return float(geometric_kernel(w, p, scale) * distance_density(np.array([w]))[0])

    total = 0.0
    for a, b in ((0.0, min(1.0, cut)), (1.0, cut)):
        if b > a:
            total += integrate.quad(integrand, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)[0]
    return total * (p - 1)


@lru_cache(maxsize=64)
def geometric_scale_for_degree(p: int, d_bar: float) -> float:
    """Bandwidth multiplier that makes the expected average degree equal ``d_bar``."""
    cap = expected_geometric_degree(p, 1e-6)
    if not 0 < d_bar < cap:
        raise GraphError(f"d_bar={d_bar} unreachable for p={p} (max {cap:.3f})")
    return optimize.brentq(lambda s: expected_geometric_degree(p, s) - d_bar, 1e-6, 1e3, xtol=1e-12)


def gen_geometric(p: int, rng=None, d_bar: float | None = None) -> Graph:
    """Random geometric graph on the unit square.

    Points are uniform in ``[0, 1]^2`` and ``{i, j}`` is an edge with
    probability ``phi(w_ij * sqrt(p))``. With ``d_bar`` given, the distance is
    first multiplied by a constant chosen so the expected average degree is
    ``d_bar``; ``d_bar=None`` uses the kernel unscaled.
    """
    if p < 2:
        raise GraphError("p must be at least 2")
    rng = as_generator(rng)
    scale = 1.0 if d_bar is None else geometric_scale_for_degree(p, float(d_bar))
    pos = rng.random((p, 2))
    iu, ju = np.triu_indices(p, k=1)
    w = np.hypot(*(pos[iu] - pos[ju]).T)
    u = rng.random(len(iu))
    return Graph(p, _pairs_from_mask(p, u < geometric_kernel(w, p, scale)), positions=pos)


def generate(topology: str, p: int, d_bar: float, rng=None) -> Graph:
    """Dispatch on topology name; BA uses ``m = round(d_bar / 2)``."""
    if topology == "er":
        return gen_er(p, d_bar, rng)
    if topology == "ba":
        return gen_ba(p, max(1, int(round(d_bar / 2))), rng)
    if topology == "geometric":
        return gen_geometric(p, rng, d_bar=d_bar)
    raise GraphError(f"unknown topology {topology!r}")


# -- edge-list files ----------------------------------------------------------

def format_edge_list(g: Graph) -> str:
    lines = [f"# p={g.p}"]
    lines += [f"{i} {j}" for i, j in g.edges.tolist()]
    if g.positions is not None:
        lines += [f"# pos {i} {x!r} {y!r}" for i, (x, y) in enumerate(g.positions.tolist())]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    p = None
    edges = []
    pos = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("p="):
                p = int(body[2:])
            elif body.startswith("pos "):
                _, i, x, y = body.split()
                pos[int(i)] = (float(x), float(y))
            continue
        i, j = line.split()
        edges.append((int(i), int(j)))
    if p is None:
        raise GraphError("missing '# p=<int>' header")
    positions = None
    if pos:
        if sorted(pos) != list(range(p)):
            raise GraphError("position lines must cover every vertex")
        positions = np.array([pos[i] for i in range(p)])
    return Graph(p, np.array(edges, dtype=np.int64).reshape(-1, 2), positions)


def write_edge_list(g: Graph, path) -> None:
    Path(path).write_text(format_edge_list(g))


def read_edge_list(path) -> Graph:
    return parse_edge_list(Path(path).read_text())
