"""Sample-size bounds and the Fano / mutual-information apparatus.

Conventions: mutual information is in nats, graph entropy in bits; the
conversion happens only in :func:`fano_error_floor`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConditioningError, InvalidInputError
from .process import FanoEnsemble, build_fano_ensemble

MI_DESK_MAX_P = 32


def _check_rho(rho: float, upper: float, closed: bool) -> None:
    ok = 0.0 < rho <= upper if closed else 0.0 < rho < upper
    if not ok:
        bracket = "]" if closed else ")"
        raise InvalidInputError(f"rho must lie in (0, {upper}{bracket}, got {rho}")


def necessary_sample_size(p: int, rho: float) -> float:
    """``(ln C(p, 2) - 1) / (4 rho^2)``; raw value, may be negative for tiny ``p``."""
    if p < 2:
        raise InvalidInputError("p must be >= 2")
    _check_rho(rho, 0.25, closed=True)
    return (math.log(math.comb(p, 2)) - 1.0) / (4.0 * rho * rho)


def sufficient_sample_size(p: int, rho: float, B: float, delta: float) -> float:
    """``32 B^4 / rho^2 * ln(2 p^2 / delta)``."""
    if p < 2:
        raise InvalidInputError("p must be >= 2")
    _check_rho(rho, 1.0, closed=False)
    if not B >= 1.0:
        raise InvalidInputError(f"B must be >= 1, got {B}")
    if not 0.0 < delta < 1.0:
        raise InvalidInputError(f"delta must lie in (0, 1), got {delta}")
    return 32.0 * B**4 / (rho * rho) * math.log(2.0 * p * p / delta)


def graph_entropy(M: int) -> float:
    """Entropy in bits of a uniform choice among ``M`` distinct graphs."""
    if M < 1:
        raise InvalidInputError("ensemble size must be >= 1")
    return math.log2(M)


def _logdet(S: np.ndarray) -> float:
    sign, val = np.linalg.slogdet(S)
    if sign <= 0:
        raise ConditioningError("covariance is not positive definite")
    return float(val)


def mi_entropy_bound(ensemble: FanoEnsemble, N: int) -> float:
    """``N (ln|S_bar| - mean_i ln|S_i|)`` in nats, ``S_bar`` the ensemble-average SDM.

    Flat spectra make the window covariance ``I_N (x) S_i``, so the
    determinant bound is exactly ``N`` times its single-sample value.
    """
    if ensemble.p > MI_DESK_MAX_P:
        raise InvalidInputError(f"ensemble too large for exact determinants (p={ensemble.p})")
    if N < 0:
        raise InvalidInputError("N must be nonnegative")
    sdms = [ensemble.member_sdm(i) for i in range(ensemble.M)]
    per_sample = _logdet(sum(sdms) / ensemble.M) - sum(_logdet(S) for S in sdms) / ensemble.M
    return N * per_sample


def mi_linear_bound(N: int, rho: float) -> float:
    if N < 0:
        raise InvalidInputError("N must be nonnegative")
    return 16.0 * N * rho * rho


def fano_error_floor(mi: float, entropy_bits: float) -> float:
    """Lower bound ``max(0, 1 - (I + 1) / H)`` on the error of any selector; ``mi`` in nats."""
    if not entropy_bits > 0:
        raise InvalidInputError("graph entropy must be positive")
    return max(0.0, 1.0 - (mi / math.log(2.0) + 1.0) / entropy_bits)


@dataclass(frozen=True)
class BoundReport:
    p: int
    rho_min: float
    B: float
    delta: float
    N: int
    necessary_N: float | None
    necessary_N_raw: float | None
    sufficient_N: float
    graph_entropy_bits: float
    mi_upper: float | None
    mi_linear: float
    fano_error_floor: float

    def to_json(self) -> dict:
        return asdict(self)


def bound_report(p: int, rho_min: float, B: float = 3.0, delta: float = 0.05, N: int = 1) -> BoundReport:
    """All bounds at one parameter point.

    The necessary condition and the Fano apparatus need ``rho_min <= 1/4``;
    outside that range those fields are reported as None rather than
    failing the whole report. ``mi_upper`` is None beyond desk scale.
    """
    suff = sufficient_sample_size(p, rho_min, B, delta)
    H = graph_entropy(math.comb(p, 2))
    mi_lin = mi_linear_bound(N, rho_min)
    if rho_min <= 0.25:
        raw = necessary_sample_size(p, rho_min)
        mi_up = mi_entropy_bound(build_fano_ensemble(p, rho_min), N) if p <= MI_DESK_MAX_P else None
    else:
        raw, mi_up = None, None
    floor = fano_error_floor(mi_lin, H) if H > 0 else 0.0
    return BoundReport(
        p=p,
        rho_min=rho_min,
        B=B,
        delta=delta,
        N=N,
        necessary_N=max(raw, 0.0) if raw is not None else None,
        necessary_N_raw=raw,
        sufficient_N=suff,
        graph_entropy_bits=H,
        mi_upper=mi_up,
        mi_linear=mi_lin,
        fano_error_floor=floor,
    )
