"""Spectral neighborhood selector for graphs of maximum degree one.

Pipeline: mirror-extend the ``N + 1`` observations to length ``2N``, take a
unitary DFT per component, form pairwise inner products of the spectral rows,
keep each node's strongest partner if it clears the threshold, then join the
per-node choices with the OR rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import InternalInvariantError, InvalidInputError, OracleSizeError
from .model import Graph, SampleBlock, sdm_from_acf
from .process import ORACLE_MAX_DIM, ProcessSpec, acf_of_spec, check_finite_support

_IMAG_RTOL = 1e-9
_PARSEVAL_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class ExtendedBlock:
    values: np.ndarray

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1] // 2


@dataclass(frozen=True, eq=False)
class SpectrumBlock:
    """Real ``p x 2N`` DFT of an extended block."""

    values: np.ndarray

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]


def mirror_index(N: int) -> np.ndarray:
    """0-based source column in ``x`` for each of the ``2N`` extended columns."""
    n = np.arange(2 * N)
    return np.where(n <= N, n, 2 * N - n)


def mirror_extend(X: SampleBlock) -> ExtendedBlock:
    """``(x[1], ..., x[N+1], x[N], ..., x[2])`` as a ``p x 2N`` block."""
    N = X.N
    if N < 1:
        raise InvalidInputError("need at least two observations")
    return ExtendedBlock(X.values[:, mirror_index(N)])


def dft_rows(xt: ExtendedBlock) -> SpectrumBlock:
    """Unitary DFT of each row; the imaginary part vanishes by mirror symmetry and is dropped."""
    L = xt.values.shape[1]
    spec = scipy.fft.fft(xt.values, axis=1) / np.sqrt(L)
    row_norm = np.linalg.norm(xt.values, axis=1)
    imag = np.abs(spec.imag).max(axis=1) if L else np.zeros(xt.p)
    if np.any(imag > _IMAG_RTOL * np.maximum(row_norm, np.finfo(float).tiny)):
        raise InternalInvariantError("extended block is not mirror symmetric: DFT has an imaginary part")
    real = np.ascontiguousarray(spec.real)
    energy_in = row_norm**2
    energy_out = np.einsum("ij,ij->i", real, real)
    if np.any(np.abs(energy_out - energy_in) > _PARSEVAL_RTOL * np.maximum(energy_in, np.finfo(float).tiny)):
        raise InternalInvariantError("Parseval identity violated")
    return SpectrumBlock(real)


def spectrum(X: SampleBlock) -> SpectrumBlock:
    return dft_rows(mirror_extend(X))


@dataclass(frozen=True, eq=False)
class ZStatistics:
    """Inner products of spectral row ``r`` with every other row (un-normalized)."""

    r: int
    others: np.ndarray
    values: np.ndarray
    normalizer: int


def z_statistics(xh: SpectrumBlock, r: int) -> ZStatistics:
    if not 0 <= r < xh.p:
        raise InvalidInputError(f"node {r} out of range for p={xh.p}")
    others = np.array([c for c in range(xh.p) if c != r], dtype=int)
    values = xh.values[others] @ xh.values[r]
    return ZStatistics(r, others, values, xh.length)


def select_neighborhood(Z, eta: float) -> int | None:
    """Position of the largest ``|Z|`` if it reaches ``eta``, else None.

    Ties go to the smallest position (``argmax`` returns the first maximum).
    """
    Z = np.asarray(Z, dtype=float)
    if Z.size == 0:
        raise InvalidInputError("empty statistic vector (p = 1 has no candidate neighbors)")
    if not eta > 0:
        raise InvalidInputError(f"threshold must be positive, got {eta}")
    k = int(np.argmax(np.abs(Z)))
    return k if abs(Z[k]) >= eta else None


def threshold(N: int, rho_min: float, B: float) -> float:
    """Threshold on the un-normalized statistic: ``2N * rho_min / (2B)``."""
    return 2 * N * rho_min / (2.0 * B)


@dataclass(frozen=True)
class NodeDecision:
    r: int
    rhat: int
    zmax: float
    eta: float
    kept: bool

    def to_json(self) -> dict:
        return {"r": self.r, "rhat": self.rhat, "zmax": self.zmax, "eta": self.eta, "kept": self.kept}


@dataclass(frozen=True)
class SelectionResult:
    graph: Graph
    per_node: tuple[NodeDecision, ...]
    statistics: tuple[ZStatistics, ...] = field(default=(), compare=False, repr=False)

    def to_json(self) -> dict:
        out = self.graph.to_json()
        out["per_node"] = [d.to_json() for d in self.per_node]
        return out


def select_graph(X: SampleBlock, rho_min: float, B: float, keep_statistics: bool = False) -> SelectionResult:
    """Estimate the CIG from ``N + 1`` observations.

    A node keeps its strongest partner ``rhat`` when ``|Z(rhat)|`` reaches
    ``2N * rho_min / (2B)``; an edge is reported when either endpoint keeps it.
    """
    if not 0.0 < rho_min < 1.0:
        raise InvalidInputError(f"rho_min must lie in (0, 1), got {rho_min}")
    if not B >= 1.0:
        raise InvalidInputError(f"B must be >= 1, got {B}")
    if X.p < 2:
        raise InvalidInputError("need p >= 2 components")
    xh = spectrum(X)
    eta = threshold(X.N, rho_min, B)
    gram = xh.values @ xh.values.T
    decisions = []
    stats = []
    edges = set()
    for r in range(X.p):
        others = np.delete(np.arange(X.p), r)
        Z = gram[r, others]
        k = select_neighborhood(Z, eta)
        pos = k if k is not None else int(np.argmax(np.abs(Z)))
        rhat = int(others[pos])
        kept = k is not None
        if kept:
            edges.add((min(r, rhat), max(r, rhat)))
        decisions.append(NodeDecision(r, rhat, float(Z[pos]), eta, kept))
        if keep_statistics:
            stats.append(ZStatistics(r, others, Z.copy(), xh.length))
    return SelectionResult(Graph(X.p, edges), tuple(decisions), tuple(stats))


# -- exact second-order oracles -------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiagonalizationReport:
    """DFT conjugation of the block-circulant covariance model of the extended window.

    ``cross_bin_max`` and ``bin_errors`` refer to the block-circulant matrix
    whose first block row is ``R[0], ..., R[N], R[N-1], ..., R[1]``; bins are
    restricted to ``k = 0..N`` (the non-redundant half).
    ``mirror_gap`` is the largest entrywise difference between that model and
    the true covariance of the mirror-extended window; ``mirror_cross_bin_max``
    and ``mirror_bin_errors`` are the same diagnostics for the true covariance.
    """

    N: int
    cross_bin_max: float
    bin_errors: np.ndarray
    mirror_gap: float
    mirror_cross_bin_max: float
    mirror_bin_errors: np.ndarray

    @property
    def max_bin_error(self) -> float:
        return float(self.bin_errors.max())


def _unitary_dft(L: int, p: int) -> np.ndarray:
    n = np.arange(L)
    F = np.exp(-2j * np.pi * np.outer(n, n) / L) / np.sqrt(L)
    return np.kron(F, np.eye(p))


def circulant_covariance(spec: ProcessSpec, N: int) -> np.ndarray:
    """Block-circulant ``2N p`` matrix with block ``(a, b)`` equal to ``R[d]``, ``d = min(|a-b|, 2N-|a-b|)``."""
    acf = acf_of_spec(spec)
    p, L = spec.p, 2 * N
    out = np.zeros((L * p, L * p))
    for a in range(L):
        for b in range(L):
            d = abs(a - b)
            out[a * p:(a + 1) * p, b * p:(b + 1) * p] = acf.at(min(d, L - d))
    return out


def mirror_covariance(spec: ProcessSpec, N: int) -> np.ndarray:
    """True covariance of the stacked mirror-extended window ``(x~[1], ..., x~[2N])``."""
    acf = acf_of_spec(spec)
    p = spec.p
    src = mirror_index(N)
    L = src.size
    out = np.zeros((L * p, L * p))
    for a in range(L):
        for b in range(L):
            out[a * p:(a + 1) * p, b * p:(b + 1) * p] = acf.at(src[a] - src[b])
    return out


def spectrum_covariance(spec: ProcessSpec, N: int) -> np.ndarray:
    """Exact covariance of the stacked spectrum ``(x^[1], ..., x^[2N])``."""
    _oracle_guard(spec, N)
    U = _unitary_dft(2 * N, spec.p)
    return (U @ mirror_covariance(spec, N) @ U.conj().T).real


def _oracle_guard(spec: ProcessSpec, N: int) -> None:
    if 2 * N * spec.p > ORACLE_MAX_DIM:
        raise OracleSizeError(f"oracle dimension 2N*p={2 * N * spec.p} exceeds {ORACLE_MAX_DIM}")


def _bin_diagnostics(Chat: np.ndarray, sdm: np.ndarray, N: int, p: int) -> tuple[float, np.ndarray]:
    half = N + 1
    cross = 0.0
    errs = np.zeros(half)
    for k in range(half):
        for l in range(half):
            blk = Chat[k * p:(k + 1) * p, l * p:(l + 1) * p]
            if k == l:
                ref = sdm[k]
                errs[k] = np.abs(blk - ref).max() / np.abs(ref).max()
            else:
                cross = max(cross, float(np.abs(blk).max()))
    return cross, errs


def diagonalization_oracle(spec: ProcessSpec, N: int) -> DiagonalizationReport:
    """Conjugate the extended-window covariance by the unitary DFT and compare with the SDM."""
    check_finite_support(spec.filter.K, N)
    _oracle_guard(spec, N)
    p = spec.p
    U = _unitary_dft(2 * N, p)
    sdm = sdm_from_acf(acf_of_spec(spec), 2 * N).mats
    circ = circulant_covariance(spec, N)
    mirror = mirror_covariance(spec, N)
    cross, errs = _bin_diagnostics(U @ circ @ U.conj().T, sdm, N, p)
    m_cross, m_errs = _bin_diagnostics(U @ mirror @ U.conj().T, sdm, N, p)
    return DiagonalizationReport(N, cross, errs, float(np.abs(circ - mirror).max()), m_cross, m_errs)
