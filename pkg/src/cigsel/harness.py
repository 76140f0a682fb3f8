"""Seeded Monte Carlo trials, error-rate estimation, sweeps and phase-transition search.

Seeds are positional: every trial seed is a pure function of
``(master_seed, cell key, trial index)``, so results do not depend on
worker count or scheduling order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import binomtest

from .bounds import fano_error_floor, graph_entropy, mi_linear_bound, necessary_sample_size, sufficient_sample_size
from .errors import CigselError, InvalidInputError
from .model import Graph, SampleBlock, graph_equal
from .process import (
    ProcessSpec,
    build_fano_ensemble,
    build_matching_process,
    check_finite_support,
    exponential_filter,
    full_matching,
    half_matching,
    sample,
)
from .selector import select_graph

log = logging.getLogger(__name__)

_MASK64 = 0xFFFFFFFFFFFFFFFF

Decoder = Callable[[SampleBlock], Graph]


def splitmix64(x: int) -> int:
    """One SplitMix64 output step (Steele, Lea, Flood 2014)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def cell_id(key: str) -> int:
    """Stable 64-bit id of a cell key (first 8 bytes of its BLAKE2b digest)."""
    return int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "little")


def derive_seed(master_seed: int, cell: int, trial: int) -> int:
    """``splitmix64(splitmix64(splitmix64(master) ^ cell) ^ trial)``."""
    h = splitmix64(int(master_seed) & _MASK64)
    h = splitmix64(h ^ (int(cell) & _MASK64))
    return splitmix64(h ^ (int(trial) & _MASK64))


@dataclass(frozen=True)
class Cell:
    """One sweep cell: a matched-pair process or a Fano ensemble at sample size ``N``."""

    p: int
    N: int
    kappa: float
    beta: float = 0.0
    K: int = 1
    pairing: str = "half"
    process: str = "matched-pair"

    @property
    def key(self) -> str:
        return f"{self.process}|p={self.p}|N={self.N}|kappa={self.kappa!r}|beta={self.beta!r}|K={self.K}|pairing={self.pairing}"

    def sort_key(self) -> tuple:
        return (self.process, self.p, self.N, self.kappa, self.beta, self.K, self.pairing)

    def build(self) -> ProcessSpec:
        if self.process != "matched-pair":
            raise InvalidInputError(f"cell of kind {self.process!r} has no single process")
        pairs = {"half": half_matching, "full": full_matching}.get(self.pairing)
        if pairs is None:
            raise InvalidInputError(f"unknown pairing {self.pairing!r}")
        return build_matching_process(self.p, pairs(self.p), self.kappa, exponential_filter(self.beta, self.K))


def spec_rho_min(spec: ProcessSpec) -> float | None:
    """Minimum partial coherence of a filtered matching process: ``min |kappa|`` over its edges.

    The filter cancels in the coherence ratio, which is constant in frequency.
    """
    ks = [abs(k) for k in spec.innovations.kappa if k != 0.0]
    return min(ks) if ks else None


@dataclass(frozen=True)
class TrialRecord:
    cell: dict
    trial: int
    seed: int
    success: bool
    sym_diff: int
    wall_time: float


def run_trial(
    spec: ProcessSpec,
    N: int,
    seed: int,
    rho_min: float | None = None,
    B: float | None = None,
    decoder: Decoder | None = None,
    trial: int = 0,
    cell: dict | None = None,
) -> TrialRecord:
    """Sample, select, compare with the true graph. ``rho_min`` and ``B`` default to the spec's own."""
    t0 = time.perf_counter()
    X = sample(spec, N, seed)
    if decoder is None:
        rho = rho_min if rho_min is not None else spec_rho_min(spec)
        if rho is None:
            raise InvalidInputError("rho_min must be given for a process without edges")
        est = select_graph(X, rho, B if B is not None else spec.b_actual).graph
    else:
        est = decoder(X)
    cmp = graph_equal(est, spec.truth)
    return TrialRecord(cell or {}, trial, seed, cmp.equal, cmp.symmetric_difference, time.perf_counter() - t0)


def wilson_interval(failures: int, trials: int) -> tuple[float, float]:
    ci = binomtest(failures, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class ErrorEstimate:
    trials: int
    failures: int
    rate: float
    wilson_lo: float
    wilson_hi: float
    member_rate_mean: float | None = None
    member_rate_max: float | None = None


def _estimate(failures: int, trials: int, **extra) -> ErrorEstimate:
    lo, hi = wilson_interval(failures, trials)
    return ErrorEstimate(trials, failures, failures / trials, lo, hi, **extra)


def _trial_chunk(args) -> list[tuple[int, int]]:
    """Worker: (trial, failed) pairs for a slice of trial indices of one matched-pair cell."""
    spec, N, rho, B, master_seed, cid, indices = args
    out = []
    for t in indices:
        rec = run_trial(spec, N, derive_seed(master_seed, cid, t), rho, B, trial=t)
        out.append((t, int(not rec.success)))
    return out


def _map_trials(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _chunks(n: int, parts: int) -> list[range]:
    parts = max(1, min(parts, n))
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [range(bounds[i], bounds[i + 1]) for i in range(parts)]


def estimate_error_prob(
    cell: Cell,
    trials: int,
    master_seed: int,
    decoder: Decoder | None = None,
    workers: int = 1,
    rho_min: float | None = None,
    B: float | None = None,
) -> ErrorEstimate:
    """Failure rate of the selector on ``cell`` over independently seeded trials.

    Fano cells draw the member index uniformly per trial and also report the
    mean and max of the per-member rates. A custom ``decoder`` forces serial
    execution.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    cid = cell_id(cell.key)
    if cell.process == "fano":
        return _estimate_fano(cell, trials, master_seed, cid, decoder)
    spec = cell.build()
    check_finite_support(spec.filter.K, cell.N)
    if decoder is not None:
        fails = sum(
            not run_trial(spec, cell.N, derive_seed(master_seed, cid, t), decoder=decoder, trial=t).success
            for t in range(trials)
        )
        return _estimate(int(fails), trials)
    rho = rho_min if rho_min is not None else spec_rho_min(spec)
    b = B if B is not None else spec.b_actual
    jobs = [(spec, cell.N, rho, b, master_seed, cid, list(r)) for r in _chunks(trials, workers * 4 if workers > 1 else 1)]
    results = [x for chunk in _map_trials(_trial_chunk, jobs, workers) for x in chunk]
    return _estimate(sum(f for _, f in results), trials)


def _estimate_fano(cell: Cell, trials: int, master_seed: int, cid: int, decoder: Decoder | None) -> ErrorEstimate:
    ens = build_fano_ensemble(cell.p, cell.kappa)
    per_member = np.zeros((ens.M, 2), dtype=int)
    fails = 0
    for t in range(trials):
        seed = derive_seed(master_seed, cid, t)
        i = int(np.random.default_rng(seed).integers(ens.M))
        # class parameters (rho, B = 3), not the member's own coherence
        rec = run_trial(ens.members[i], cell.N, splitmix64(seed), cell.kappa, 3.0, decoder, trial=t)
        per_member[i, 0] += 1
        per_member[i, 1] += int(not rec.success)
        fails += int(not rec.success)
    seen = per_member[:, 0] > 0
    rates = per_member[seen, 1] / per_member[seen, 0]
    return _estimate(fails, trials, member_rate_mean=float(rates.mean()), member_rate_max=float(rates.max()))


# -- sweeps ---------------------------------------------------------------------

SWEEP_COLUMNS = [
    "p", "n_samples", "kappa", "rho_min", "b_actual", "trials", "failures", "rate",
    "wilson_lo", "wilson_hi", "necessary_n", "sufficient_n", "fano_floor", "master_seed",
]
FANO_COLUMNS = ["member_rate_mean", "member_rate_max"]


@dataclass(frozen=True)
class SweepConfig:
    p_list: tuple[int, ...]
    N_list: tuple[int, ...]
    kappa_list: tuple[float, ...]
    trials: int
    master_seed: int
    beta: float = 0.0
    K: int = 1
    delta: float = 0.05
    pairing: str = "half"
    process: str = "matched-pair"
    workers: int = 1

    def __post_init__(self) -> None:
        if not (self.p_list and self.N_list and self.kappa_list):
            raise InvalidInputError("p_list, N_list and kappa_list must be nonempty")
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        if self.process not in ("matched-pair", "fano"):
            raise InvalidInputError(f"unknown process kind {self.process!r}")
        for N in self.N_list:
            check_finite_support(self.K, N)

    @classmethod
    def from_json(cls, obj: dict) -> "SweepConfig":
        filt = obj.get("filter", {})
        kappas = obj.get("kappa_list", obj.get("rho_list"))
        if kappas is None:
            raise InvalidInputError("config needs kappa_list (or rho_list)")
        try:
            return cls(
                p_list=tuple(int(v) for v in obj["p_list"]),
                N_list=tuple(int(v) for v in obj["N_list"]),
                kappa_list=tuple(float(v) for v in kappas),
                trials=int(obj["trials"]),
                master_seed=int(obj["master_seed"]),
                beta=float(filt.get("beta", 0.0)),
                K=int(filt.get("K", 1)),
                delta=float(obj.get("delta", 0.05)),
                pairing=str(obj.get("pairing", "half")),
                process=str(obj.get("process", "matched-pair")),
                workers=int(obj.get("workers", 1)),
            )
        except KeyError as exc:
            raise InvalidInputError(f"config is missing {exc.args[0]!r}") from None

    def cells(self) -> list[Cell]:
        cells = [
            Cell(p, N, k, self.beta, self.K, self.pairing, self.process)
            for p in self.p_list for N in self.N_list for k in self.kappa_list
        ]
        return sorted(set(cells), key=Cell.sort_key)


def _bound_columns(p: int, rho: float, B: float, delta: float, N: int) -> dict:
    out = {"necessary_n": None, "sufficient_n": None, "fano_floor": None}
    if rho is None:
        return out
    out["sufficient_n"] = sufficient_sample_size(p, rho, max(B, 1.0), delta)
    if rho <= 0.25:
        out["necessary_n"] = max(necessary_sample_size(p, rho), 0.0)
        H = graph_entropy(math.comb(p, 2))
        out["fano_floor"] = fano_error_floor(mi_linear_bound(N, rho), H) if H > 0 else 0.0
    return out


def _sweep_cell(args) -> dict:
    cell, config = args
    row: dict = {"p": cell.p, "n_samples": cell.N, "trials": config.trials, "master_seed": config.master_seed}
    try:
        if cell.process == "fano":
            rho, B = cell.kappa, 3.0
            row.update(kappa=2 * rho / (1 + 2 * rho), rho_min=rho, b_actual=2.0)
        else:
            spec = cell.build()
            rho, B = spec_rho_min(spec), spec.b_actual
            row.update(kappa=cell.kappa, rho_min=rho, b_actual=B)
        est = estimate_error_prob(cell, config.trials, config.master_seed)
        row.update(failures=est.failures, rate=est.rate, wilson_lo=est.wilson_lo, wilson_hi=est.wilson_hi)
        if cell.process == "fano":
            row.update(member_rate_mean=est.member_rate_mean, member_rate_max=est.member_rate_max)
        row.update(_bound_columns(cell.p, rho, B, config.delta, cell.N))
        row["error"] = ""
    except CigselError as exc:
        log.warning("cell %s failed: %s", cell.key, exc)
        row.setdefault("kappa", cell.kappa)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep(config: SweepConfig) -> list[dict]:
    """One row per cell, in sorted cell order. Cells run in parallel when ``config.workers > 1``."""
    cells = config.cells()
    return _map_trials(_sweep_cell, [(c, config) for c in cells], config.workers)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def sweep_csv(rows: Sequence[dict], fano: bool = False) -> str:
    cols = SWEEP_COLUMNS + (FANO_COLUMNS if fano else []) + ["error"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


# -- phase transition -----------------------------------------------------------


@dataclass(frozen=True)
class TransitionPoint:
    p: int
    n_star: int
    probes: tuple[tuple[int, float], ...] = field(default=(), compare=False)


def success_rate(cell: Cell, trials: int, master_seed: int, workers: int = 1) -> float:
    return 1.0 - estimate_error_prob(cell, trials, master_seed, workers=workers).rate


def bisect_transition(
    make_cell: Callable[[int], Cell],
    trials: int = 100,
    master_seed: int = 0,
    n_lo: int = 2,
    n_hi: int | None = None,
    rel_tol: float = 0.02,
    workers: int = 1,
) -> TransitionPoint:
    """Smallest ``N`` (to ``rel_tol``) whose empirical success rate reaches 1/2.

    Doubles ``N`` until success reaches 1/2, then bisects. Each probe uses
    ``trials`` seeded trials; seeds depend on ``N`` through the cell key.
    """
    probes: list[tuple[int, float]] = []

    def ok(N: int) -> bool:
        s = success_rate(make_cell(N), trials, master_seed, workers)
        probes.append((N, s))
        return s >= 0.5

    lo = n_lo
    if ok(lo):
        return TransitionPoint(make_cell(lo).p, lo, tuple(probes))
    hi = n_hi if n_hi is not None else 2 * lo
    while not ok(hi):
        lo, hi = hi, 2 * hi
        if hi > 1 << 26:
            raise CigselError("no transition found below 2^26 samples")
    while hi - lo > max(1, int(rel_tol * hi)):
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return TransitionPoint(make_cell(hi).p, hi, tuple(probes))


@dataclass(frozen=True)
class ScalingFit:
    points: tuple[TransitionPoint, ...]
    c: float
    ratios: tuple[float, ...]

    @property
    def within_factor(self) -> float:
        """Largest multiplicative deviation of any point from ``c ln p``."""
        return max(max(r, 1.0 / r) for r in self.ratios)


def fit_log_scaling(points: Sequence[TransitionPoint]) -> ScalingFit:
    """Least-squares ``N*(p) = c ln p`` through the origin."""
    x = np.log([pt.p for pt in points])
    y = np.array([pt.n_star for pt in points], dtype=float)
    c = float(x @ y / (x @ x))
    return ScalingFit(tuple(points), c, tuple(float(v) for v in y / (c * x)))


def scaling_experiment(
    p_list: Iterable[int],
    kappa: float = 0.5,
    trials: int = 100,
    master_seed: int = 0,
    beta: float = 0.0,
    K: int = 1,
    pairing: str = "half",
    workers: int = 1,
) -> ScalingFit:
    points = []
    for p in p_list:
        pt = bisect_transition(
            lambda N, p=p: Cell(p, N, kappa, beta, K, pairing), trials, master_seed,
            n_lo=max(2, 2 * K), workers=workers,
        )
        log.info("p=%d: N*=%d", p, pt.n_star)
        points.append(pt)
    return fit_log_scaling(points)
