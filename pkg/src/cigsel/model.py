"""Model vocabulary: graphs, autocovariance sequences, sampled spectral densities.

Also the spectral functionals built on them (partial coherence, eigenvalue
band, ACF moment, graph extraction from the inverse SDM).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import AliasingError, ConditioningError, InvalidInputError

#: Matrices with smallest eigenvalue below this are treated as singular.
MIN_INVERTIBLE_EIGENVALUE = 1e-9
#: Relative edge tolerance: fraction of the largest inverse-SDM diagonal entry.
EDGE_RELATIVE_TOL = 1e-8
_SYM_RTOL = 1e-12

Edge = tuple[int, int]


def _canonical_edges(p: int, edges: Iterable[Iterable[int]]) -> tuple[Edge, ...]:
    out = set()
    for e in edges:
        r, s = (int(v) for v in e)
        if r == s:
            raise InvalidInputError(f"self-loop ({r}, {s}) not allowed")
        if not (0 <= r < p and 0 <= s < p):
            raise InvalidInputError(f"edge ({r}, {s}) out of range for p={p}")
        out.add((min(r, s), max(r, s)))
    return tuple(sorted(out))


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``0..p-1``.

    Edges are stored once each as ``(min, max)`` and kept sorted, so two
    graphs with the same edge set compare equal.
    """

    p: int
    edges: tuple[Edge, ...] = ()

    def __post_init__(self) -> None:
        if int(self.p) < 1:
            raise InvalidInputError(f"node count must be positive, got {self.p}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "edges", _canonical_edges(self.p, self.edges))

    @property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    def neighbors(self, r: int) -> tuple[int, ...]:
        return tuple(sorted({b for a, b in self.edges if a == r} | {a for a, b in self.edges if b == r}))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.p, dtype=int)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    @property
    def d_max(self) -> int:
        return int(self.degrees().max())

    def permuted(self, perm: Iterable[int]) -> "Graph":
        """Relabel node ``r`` as ``perm[r]``."""
        perm = list(perm)
        return Graph(self.p, [(perm[a], perm[b]) for a, b in self.edges])

    def to_json(self) -> dict:
        return {"p": self.p, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, obj: dict) -> "Graph":
        return cls(int(obj["p"]), [tuple(e) for e in obj.get("edges", [])])


@dataclass(frozen=True)
class GraphComparison:
    equal: bool
    symmetric_difference: int


def graph_equal(a: Graph, b: Graph) -> GraphComparison:
    if a.p != b.p:
        raise InvalidInputError(f"dimension mismatch: {a.p} vs {b.p}")
    diff = len(a.edge_set ^ b.edge_set)
    return GraphComparison(diff == 0, diff)


@dataclass(frozen=True, eq=False)
class Acf:
    """Finite-support, real, lag-symmetric matrix autocovariance.

    ``lags[m]`` holds ``R[m]`` for ``m = 0..support``; ``R[-m] = R[m]``.
    """

    lags: np.ndarray

    def __post_init__(self) -> None:
        lags = np.array(self.lags, dtype=float)
        if lags.ndim != 3 or lags.shape[1] != lags.shape[2] or lags.shape[0] < 1:
            raise InvalidInputError(f"ACF lags must have shape (S+1, p, p), got {lags.shape}")
        if not np.all(np.isfinite(lags)):
            raise InvalidInputError("ACF has non-finite entries")
        scale = max(np.abs(lags).max(), 1.0)
        if np.abs(lags - lags.transpose(0, 2, 1)).max() > 1e-12 * scale:
            raise InvalidInputError("ACF must satisfy R[-m] = R[m] (each lag matrix symmetric)")
        # Trailing all-zero lags do not count towards the support.
        nz = [m for m in range(lags.shape[0]) if np.any(lags[m] != 0.0)]
        last = nz[-1] if nz else 0
        lags = lags[: last + 1]
        lags.setflags(write=False)
        object.__setattr__(self, "lags", lags)

    @property
    def p(self) -> int:
        return self.lags.shape[1]

    @property
    def support(self) -> int:
        return self.lags.shape[0] - 1

    def at(self, m: int) -> np.ndarray:
        m = abs(int(m))
        if m > self.support:
            return np.zeros((self.p, self.p))
        return self.lags[m]

    def scaled(self, c: float) -> "Acf":
        return Acf(self.lags * c)


@dataclass(frozen=True, eq=False)
class SdmGrid:
    """Spectral density matrix sampled at ``theta_k = k / F``, ``k = 0..F-1``."""

    mats: np.ndarray

    def __post_init__(self) -> None:
        mats = np.array(self.mats, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise InvalidInputError(f"SDM grid must have shape (F, p, p), got {mats.shape}")
        mats.setflags(write=False)
        object.__setattr__(self, "mats", mats)

    @property
    def F(self) -> int:
        return self.mats.shape[0]

    @property
    def p(self) -> int:
        return self.mats.shape[1]

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.F) / self.F

    def scaled(self, c: float) -> "SdmGrid":
        return SdmGrid(self.mats * c)

    def check_symmetric(self) -> None:
        scale = max(np.abs(self.mats).max(), np.finfo(float).tiny)
        if np.abs(self.mats - self.mats.transpose(0, 2, 1)).max() > _SYM_RTOL * scale:
            raise InvalidInputError("SDM grid matrices are not symmetric")

    def inverse(self) -> np.ndarray:
        """Per-frequency inverse, shape ``(F, p, p)``."""
        self.check_symmetric()
        lam_min = np.linalg.eigvalsh(self.mats).min()
        if lam_min <= MIN_INVERTIBLE_EIGENVALUE:
            raise ConditioningError(f"SDM grid matrix near singular (min eigenvalue {lam_min:.3g})")
        inv = np.linalg.inv(self.mats)
        return 0.5 * (inv + inv.transpose(0, 2, 1))


def sdm_from_acf(acf: Acf, F: int) -> SdmGrid:
    """Evaluate the finite Fourier sum of ``acf`` on the uniform ``F``-point grid.

    Raises AliasingError when ``F < 2 * support + 1``.
    """
    F = int(F)
    if F < 2 * acf.support + 1:
        raise AliasingError(f"grid size F={F} aliases an ACF of support {acf.support}")
    theta = np.arange(F) / F
    mats = np.broadcast_to(acf.lags[0], (F, acf.p, acf.p)).copy()
    for m in range(1, acf.support + 1):
        mats += 2.0 * np.cos(2 * np.pi * theta * m)[:, None, None] * acf.lags[m]
    return SdmGrid(mats)


def default_edge_tol(inv: np.ndarray) -> float:
    return EDGE_RELATIVE_TOL * float(np.abs(np.diagonal(inv, axis1=1, axis2=2)).max())


def cig_from_inverse_sdm(sdm: SdmGrid, tol: float | None = None) -> Graph:
    """Edges where the inverse SDM is nonzero at some grid frequency.

    ``tol=None`` uses ``1e-8`` times the largest inverse diagonal entry.
    """
    inv = sdm.inverse()
    if tol is None:
        tol = default_edge_tol(inv)
    if tol < 0:
        raise InvalidInputError("tolerance must be nonnegative")
    peak = np.abs(inv).max(axis=0)
    rows, cols = np.nonzero(np.triu(peak > tol, k=1))
    return Graph(sdm.p, list(zip(rows.tolist(), cols.tolist())))


@dataclass(frozen=True)
class CoherenceResult:
    """Per-edge partial spectral coherence.

    ``minimum`` is None when the graph has no edges; there is no meaningful
    minimum over an empty set.
    """

    per_edge: dict[Edge, float] = field(default_factory=dict)
    minimum: float | None = None

    @property
    def has_edges(self) -> bool:
        return self.minimum is not None


def partial_coherence(sdm: SdmGrid, graph: Graph) -> CoherenceResult:
    """Grid-averaged partial spectral coherence for each edge of ``graph``.

    For an edge ``(r, s)`` this is the square root of the frequency average of
    ``K_rs^2 / (K_rr K_ss)`` with ``K = S^{-1}``; the uniform-grid average is
    exact whenever the integrand is a trigonometric polynomial of degree < F.
    """
    if graph.p != sdm.p:
        raise InvalidInputError(f"graph has p={graph.p}, SDM has p={sdm.p}")
    inv = sdm.inverse()
    if not graph.edges:
        return CoherenceResult({}, None)
    diag = np.diagonal(inv, axis1=1, axis2=2)
    per_edge = {}
    for r, s in graph.edges:
        ratio = inv[:, r, s] ** 2 / (diag[:, r] * diag[:, s])
        per_edge[(r, s)] = math.sqrt(float(ratio.mean()))
    return CoherenceResult(per_edge, min(per_edge.values()))


def acf_moment(acf: Acf) -> float:
    """Sum over all lags of ``|m|`` times the largest absolute entry of ``R[m]``."""
    return float(sum(2 * m * np.abs(acf.lags[m]).max() for m in range(1, acf.support + 1)))


@dataclass(frozen=True)
class EigenBand:
    lam_min: float
    lam_max: float
    within: bool


def eigen_band(sdm: SdmGrid, A: float = 1.0, B: float = math.inf, rtol: float = 1e-12) -> EigenBand:
    """Global eigenvalue range of the grid and whether it lies in ``[A, B]``.

    ``rtol`` absorbs eigensolver rounding at the band edges.
    """
    sdm.check_symmetric()
    lam = np.linalg.eigvalsh(sdm.mats)
    lo, hi = float(lam.min()), float(lam.max())
    return EigenBand(lo, hi, lo >= A * (1 - rtol) and hi <= B * (1 + rtol))


@dataclass(frozen=True)
class ClassParams:
    """Parameters of the process class: dimension, degree bound, coherence floor, band."""

    p: int
    d_max: int
    rho_min: float
    B: float
    A: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.rho_min < 1.0:
            raise InvalidInputError(f"rho_min must lie in (0, 1), got {self.rho_min}")
        if self.A != 1.0:
            raise InvalidInputError("spectral floor A is fixed at 1")
        if self.B < self.A:
            raise InvalidInputError(f"B={self.B} below the floor A=1")
        if self.d_max < 0 or self.p < 1:
            raise InvalidInputError("p must be positive and d_max nonnegative")


@dataclass(frozen=True, eq=False)
class SampleBlock:
    """Observations ``x[1..N+1]`` as a ``p x (N+1)`` array; time runs along columns."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] < 2:
            raise InvalidInputError(f"sample block must be p x (N+1) with N >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("sample block has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1] - 1
