"""Synthesizable processes with known conditional independence graphs.

Two families are provided:

* filtered white noise ``x[n] = sum_m h[m] w[n-m]`` whose innovation
  precision is a matching (at most one off-diagonal entry per row), and
* the flat-spectrum single-edge ensemble used for the Fano lower bound.

Every spec carries its exact ACF, so the brute-force covariance oracle and
the sampler can be checked against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidConfigurationError, InvalidInputError, OracleSizeError
from .model import Acf, Graph, SampleBlock

_NORM_TOL = 1e-12
#: Largest ``n * p`` the dense covariance oracle will build.
ORACLE_MAX_DIM = 4096
_RESPONSE_GRID = 8192


@dataclass(frozen=True, eq=False)
class FilterSpec:
    """Real FIR filter with unit energy. ``beta`` records the exponential family parameter, if any."""

    taps: np.ndarray
    beta: float | None = None

    def __post_init__(self) -> None:
        taps = np.atleast_1d(np.array(self.taps, dtype=float))
        if taps.ndim != 1 or taps.size < 1:
            raise InvalidInputError("filter needs at least one tap")
        if abs(float(taps @ taps) - 1.0) > _NORM_TOL:
            raise InvalidInputError(f"filter energy {taps @ taps!r} is not 1")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def K(self) -> int:
        return self.taps.size

    def autocorrelation(self) -> np.ndarray:
        """``r_h[m] = sum_k h[k] h[k+m]`` for ``m = 0..K-1``."""
        h = self.taps
        return np.array([h[: self.K - m] @ h[m:] for m in range(self.K)])

    def power_response(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        H = np.exp(-2j * np.pi * np.multiply.outer(theta, np.arange(self.K))) @ self.taps
        return np.abs(H) ** 2

    def power_range(self) -> tuple[float, float]:
        """Min and max of ``|H(theta)|^2`` over ``[0, 1)``."""
        return self._power_range

    @cached_property
    def _power_range(self) -> tuple[float, float]:
        if self.K == 1:
            return 1.0, 1.0
        grid = np.arange(_RESPONSE_GRID) / _RESPONSE_GRID
        vals = self.power_response(grid)
        step = 1.0 / _RESPONSE_GRID
        out = []
        for sign, k in ((1.0, int(vals.argmin())), (-1.0, int(vals.argmax()))):
            res = minimize_scalar(
                lambda t: sign * float(self.power_response(t)),
                bounds=(grid[k] - step, grid[k] + step),
                method="bounded",
                options={"xatol": 1e-12},
            )
            best = sign * min(sign * vals[k], float(res.fun))
            out.append(best)
        return float(out[0]), float(out[1])

    def to_json(self) -> dict:
        if self.beta is not None:
            return {"beta": self.beta, "K": self.K}
        return {"taps": self.taps.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "FilterSpec":
        if "taps" in obj:
            return cls(normalize_taps(obj["taps"]))
        return exponential_filter(float(obj.get("beta", 0.0)), int(obj.get("K", 1)))


def normalize_taps(taps: Sequence[float]) -> np.ndarray:
    taps = np.asarray(taps, dtype=float)
    norm = np.linalg.norm(taps)
    if norm == 0.0:
        raise InvalidInputError("all-zero filter")
    return taps / norm


def exponential_filter(beta: float, K: int) -> FilterSpec:
    """Truncated geometric filter ``h[m] ∝ beta**m``, ``m < K``, unit energy."""
    if K < 1:
        raise InvalidInputError(f"filter length must be >= 1, got {K}")
    return FilterSpec(normalize_taps(float(beta) ** np.arange(K)), beta=float(beta))


def unit_impulse() -> FilterSpec:
    return exponential_filter(0.0, 1)


@dataclass(frozen=True)
class InnovationCovariance:
    """Covariance ``C`` of the white innovations, described by its precision.

    The precision is block diagonal over a partial matching: a matched pair
    ``(a, b)`` with coefficient ``kappa`` and block scale ``t`` contributes
    ``[[1, kappa], [kappa, 1]] / t``; every unmatched node contributes
    ``1 / scale``. ``pair_scales`` defaults to ``scale`` for every pair.
    """

    p: int
    pairs: tuple[tuple[int, int], ...]
    kappa: tuple[float, ...]
    scale: float
    pair_scales: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        pairs = tuple((min(a, b), max(a, b)) for a, b in ((int(a), int(b)) for a, b in self.pairs))
        seen: set[int] = set()
        for a, b in pairs:
            if a == b or not (0 <= a < self.p and 0 <= b < self.p):
                raise InvalidInputError(f"invalid pair ({a}, {b}) for p={self.p}")
            if a in seen or b in seen:
                raise InvalidInputError(f"pairs overlap at ({a}, {b}); a matching is required")
            seen.update((a, b))
        kappa = tuple(float(k) for k in self.kappa)
        if len(kappa) != len(pairs):
            raise InvalidInputError("need one kappa per pair")
        if any(not abs(k) < 1.0 for k in kappa):
            raise InvalidInputError(f"|kappa| must be < 1, got {kappa}")
        if not self.scale > 0:
            raise InvalidInputError("scale must be positive")
        ps = tuple(float(t) for t in self.pair_scales) if self.pair_scales is not None else (float(self.scale),) * len(pairs)
        if len(ps) != len(pairs) or any(not t > 0 for t in ps):
            raise InvalidInputError("pair_scales must be positive, one per pair")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "pair_scales", ps)

    def _blocks(self):
        matched = set()
        for (a, b), k, t in zip(self.pairs, self.kappa, self.pair_scales):
            matched.update((a, b))
            yield (a, b), k, t
        for r in range(self.p):
            if r not in matched:
                yield (r,), 0.0, self.scale

    def precision(self) -> np.ndarray:
        P = np.zeros((self.p, self.p))
        for idx, k, t in self._blocks():
            if len(idx) == 1:
                P[idx[0], idx[0]] = 1.0 / t
            else:
                a, b = idx
                P[a, a] = P[b, b] = 1.0 / t
                P[a, b] = P[b, a] = k / t
        return P

    def covariance(self) -> np.ndarray:
        L = self.factor()
        return L @ L.T

    def factor(self) -> np.ndarray:
        """Closed-form lower factor ``L`` with ``L L^T = C``, one 2x2 block per pair."""
        L = np.zeros((self.p, self.p))
        for idx, k, t in self._blocks():
            if len(idx) == 1:
                L[idx[0], idx[0]] = math.sqrt(t)
            else:
                a, b = idx
                # block covariance t / (1 - k^2) * [[1, -k], [-k, 1]]
                g = math.sqrt(t / (1.0 - k * k))
                L[a, a] = g
                L[b, a] = -k * g
                L[b, b] = g * math.sqrt(1.0 - k * k)
        return L

    def eigen_extremes(self) -> tuple[float, float]:
        """Smallest and largest eigenvalue of ``C``."""
        lo, hi = math.inf, 0.0
        for idx, k, t in self._blocks():
            if len(idx) == 1:
                lo, hi = min(lo, t), max(hi, t)
            else:
                lo = min(lo, t / (1.0 + abs(k)))
                hi = max(hi, t / (1.0 - abs(k)))
        return lo, hi

    def edges(self) -> list[tuple[int, int]]:
        return [e for e, k in zip(self.pairs, self.kappa) if k != 0.0]


@dataclass(frozen=True)
class ProcessSpec:
    """Filter plus innovations; fully determines a stationary Gaussian process."""

    filter: FilterSpec
    innovations: InnovationCovariance
    kind: str = "custom"
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def p(self) -> int:
        return self.innovations.p

    @property
    def truth(self) -> Graph:
        return Graph(self.p, self.innovations.edges())

    @property
    def support(self) -> int:
        return self.filter.K - 1

    @property
    def b_actual(self) -> float:
        """Largest SDM eigenvalue over all frequencies."""
        _, hmax = self.filter.power_range()
        return hmax * self.innovations.eigen_extremes()[1]

    @property
    def lambda_floor(self) -> float:
        hmin, _ = self.filter.power_range()
        return hmin * self.innovations.eigen_extremes()[0]

    def to_json(self) -> dict:
        inn = self.innovations
        out = {
            "kind": self.kind,
            "p": self.p,
            "pairs": [list(e) for e in inn.pairs],
            "kappa": list(inn.kappa),
            "filter": self.filter.to_json(),
            "scale": inn.scale,
        }
        if any(t != inn.scale for t in inn.pair_scales):
            out["pair_scales"] = list(inn.pair_scales)
        out.update(self.meta)
        out["b_actual"] = self.b_actual
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ProcessSpec":
        kind = obj.get("kind", "matched-pair")
        p = int(obj["p"])
        if kind == "fano-member":
            return fano_member(p, tuple(obj["edge"]), float(obj["rho"]))
        filt = FilterSpec.from_json(obj.get("filter", {}))
        pairs = [tuple(e) for e in obj.get("pairs", [])]
        kappa = obj.get("kappa", 0.0)
        if kind == "matched-pair" and "scale" not in obj:
            return build_matching_process(p, pairs, kappa, filt)
        kappas = _per_pair(kappa, len(pairs))
        inn = InnovationCovariance(p, tuple(pairs), kappas, float(obj["scale"]), obj.get("pair_scales"))
        return cls(filt, inn, kind)


def _per_pair(kappa, n: int) -> tuple[float, ...]:
    if np.ndim(kappa) == 0:
        return (float(kappa),) * n
    kappa = tuple(float(k) for k in kappa)
    if len(kappa) != n:
        raise InvalidInputError(f"got {len(kappa)} kappa values for {n} pairs")
    return kappa


def build_matching_process(
    p: int,
    pairs: Iterable[tuple[int, int]],
    kappa: float | Sequence[float],
    filter: FilterSpec | None = None,
) -> ProcessSpec:
    """Filtered white noise whose innovation precision is the given matching.

    The innovation scale is ``(1 + max|kappa|) / min_theta |H(theta)|^2``, which
    puts the smallest SDM eigenvalue exactly at 1. The resulting ceiling is
    available as ``spec.b_actual``.
    """
    filter = filter if filter is not None else unit_impulse()
    pairs = tuple(tuple(e) for e in pairs)
    kappas = _per_pair(kappa, len(pairs))
    hmin, _ = filter.power_range()
    if hmin <= 1e-12:
        raise InvalidInputError("filter response vanishes somewhere; the spectral floor cannot be met")
    kmax = max((abs(k) for k in kappas), default=0.0)
    if kmax >= 1.0:
        raise InvalidInputError(f"|kappa| must be < 1, got {kmax}")
    scale = (1.0 + kmax) / hmin
    inn = InnovationCovariance(p, pairs, kappas, scale)
    return ProcessSpec(filter, inn, "matched-pair")


def half_matching(p: int) -> list[tuple[int, int]]:
    """Pairs ``(0,1), (2,3), ...`` covering the first ``2 * (p // 4)`` nodes.

    Leaves about half of the nodes unmatched, so both error modes of the
    selector (missed edge, spurious edge) are exercised.
    """
    return [(2 * i, 2 * i + 1) for i in range(p // 4)] or ([(0, 1)] if p >= 2 else [])


def full_matching(p: int) -> list[tuple[int, int]]:
    return [(2 * i, 2 * i + 1) for i in range(p // 2)]


def corrected_fano_coefficient(rho: float) -> float:
    return 4.0 * rho / (1.0 + 4.0 * rho)


def printed_fano_coefficient(rho: float) -> float:
    """Coefficient as typeset in the source derivation; inconsistent with the stated inverse."""
    return 2.0 * rho / (1.0 + 4.0 * rho)


def fano_member(p: int, edge: tuple[int, int], rho: float, coefficient: float | None = None) -> ProcessSpec:
    """Flat-spectrum process with SDM ``2I - c v v^T``, ``v`` the indicator of ``edge``.

    With the default ``c = 4 rho / (1 + 4 rho)`` the inverse SDM is
    ``(I + 2 rho v v^T) / 2``.
    """
    if not 0.0 < rho <= 0.25:
        raise InvalidInputError(f"rho must lie in (0, 1/4], got {rho}")
    c = corrected_fano_coefficient(rho) if coefficient is None else float(coefficient)
    if not 0.0 < c < 1.0:
        raise InvalidInputError(f"ensemble coefficient {c} leaves the SDM indefinite")
    # 2x2 block [[2-c, -c], [-c, 2-c]]: precision ratio kappa = c / (2 - c)
    kappa = c / (2.0 - c)
    pair_scale = (2.0 - c) * (1.0 - kappa * kappa)
    inn = InnovationCovariance(p, (tuple(edge),), (kappa,), 2.0, (pair_scale,))
    meta = {"rho": float(rho), "edge": [min(edge), max(edge)]}
    return ProcessSpec(unit_impulse(), inn, "fano-member", meta)


@dataclass(frozen=True)
class FanoEnsemble:
    p: int
    rho: float
    members: tuple[ProcessSpec, ...]
    coefficient: float

    @property
    def M(self) -> int:
        return len(self.members)

    def member_sdm(self, i: int) -> np.ndarray:
        return self.members[i].innovations.covariance()

    def mean_sdm(self) -> np.ndarray:
        return sum(m.innovations.covariance() for m in self.members) / self.M


def build_fano_ensemble(p: int, rho: float, coefficient: float | None = None) -> FanoEnsemble:
    """All ``C(p, 2)`` single-edge flat-spectrum processes, indexed by lexicographic edge order.

    ``coefficient`` overrides the rank-one weight; only verification code
    should pass it.
    """
    if p < 2:
        raise InvalidInputError("the ensemble needs p >= 2")
    if not 0.0 < rho <= 0.25:
        raise InvalidInputError(f"rho must lie in (0, 1/4], got {rho}")
    c = corrected_fano_coefficient(rho) if coefficient is None else float(coefficient)
    members = tuple(fano_member(p, e, rho, c) for e in combinations(range(p), 2))
    return FanoEnsemble(p, float(rho), members, c)


def acf_of_spec(spec: ProcessSpec) -> Acf:
    """``R[m] = r_h[m] C`` with ``r_h`` the filter autocorrelation."""
    C = spec.innovations.covariance()
    r = spec.filter.autocorrelation()
    return Acf(r[:, None, None] * C[None, :, :])


def exact_covariance(spec: ProcessSpec, n: int) -> np.ndarray:
    """Covariance of ``(x[1]^T, ..., x[n]^T)^T``: block Toeplitz with ``(a, b)`` block ``R[a - b]``."""
    if n < 1:
        raise InvalidInputError("window length must be >= 1")
    p = spec.p
    if n * p > ORACLE_MAX_DIM:
        raise OracleSizeError(f"oracle dimension n*p={n * p} exceeds {ORACLE_MAX_DIM}")
    acf = acf_of_spec(spec)
    out = np.zeros((n * p, n * p))
    for a in range(n):
        for b in range(max(0, a - acf.support), min(n, a + acf.support + 1)):
            out[a * p:(a + 1) * p, b * p:(b + 1) * p] = acf.at(a - b)
    return out


def check_finite_support(K: int, N: int) -> None:
    if not (K - 1) < N / 2:
        raise InvalidConfigurationError(f"filter length K={K} needs K - 1 < N/2, got N={N}")


def sample(spec: ProcessSpec, N: int, seed: int) -> SampleBlock:
    """Exact stationary draw of ``N + 1`` consecutive observations.

    Draws ``N + K`` innovation vectors, filters each component with ``h``
    and drops the first ``K - 1`` outputs (the warm-up, where the filter
    memory is incomplete).
    """
    N = int(N)
    if N < 1:
        raise InvalidInputError("N must be >= 1")
    K = spec.filter.K
    check_finite_support(K, N)
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    z = rng.standard_normal((spec.p, N + K))
    w = spec.innovations.factor() @ z
    h = spec.filter.taps
    x = np.zeros((spec.p, N + 1))
    for m in range(K):
        x += h[m] * w[:, K - 1 - m: K - 1 - m + N + 1]
    return SampleBlock(x)
