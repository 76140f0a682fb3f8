"""Oracle verification suites.

Each check compares an implementation path against an independent
computation (closed forms, dense linear algebra, Monte Carlo) and returns a
:class:`CheckResult`. ``run_verification("fast")`` stays well under 30 s;
``"full"`` adds the large Monte Carlo checks.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bounds import mi_entropy_bound, mi_linear_bound, necessary_sample_size, sufficient_sample_size
from .model import acf_moment, cig_from_inverse_sdm, eigen_band, partial_coherence, sdm_from_acf
from .process import (
    ProcessSpec,
    acf_of_spec,
    build_fano_ensemble,
    build_matching_process,
    exact_covariance,
    exponential_filter,
    full_matching,
    half_matching,
    sample,
)
from .selector import diagonalization_oracle, select_graph, spectrum, spectrum_covariance

ENSEMBLE_P = range(3, 13)
ENSEMBLE_RHO = (0.05, 0.10, 0.25)
MI_P = range(3, 9)
DIAG_P = (2, 3, 4)
DIAG_K = (1, 2, 4)
DIAG_N = (8, 16)
DIAG_TOL = 1e-10
COHERENCE_TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _timed(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


def check_ensemble_validity(coefficient: Callable[[float], float] | None = None) -> tuple[bool, str]:
    """Band within [1, 3], coherence >= rho, zero moment, single distinct edges, M = C(p, 2)."""
    worst_coh = math.inf
    problems = []
    for p in ENSEMBLE_P:
        for rho in ENSEMBLE_RHO:
            ens = build_fano_ensemble(p, rho, None if coefficient is None else coefficient(rho))
            if ens.M != math.comb(p, 2):
                problems.append(f"p={p}: M={ens.M}")
            graphs = set()
            for m in ens.members:
                acf = acf_of_spec(m)
                sdm = sdm_from_acf(acf, 4)
                band = eigen_band(sdm, 1.0, 3.0)
                coh = partial_coherence(sdm, m.truth)
                cig = cig_from_inverse_sdm(sdm)
                worst_coh = min(worst_coh, coh.minimum - rho)
                if not band.within:
                    problems.append(f"p={p} rho={rho}: band [{band.lam_min:.4g}, {band.lam_max:.4g}]")
                if coh.minimum < rho - COHERENCE_TOL:
                    problems.append(f"p={p} rho={rho}: coherence {coh.minimum:.4g} < rho")
                if acf_moment(acf) != 0.0:
                    problems.append(f"p={p}: nonzero moment")
                if len(cig.edges) != 1 or cig != m.truth:
                    problems.append(f"p={p}: CIG {cig.edges} != {m.truth.edges}")
                graphs.add(cig.edges)
            if len(graphs) != ens.M:
                problems.append(f"p={p}: member graphs not distinct")
    if problems:
        return False, f"{len(problems)} violations, first: {problems[0]}"
    return True, f"all members valid; min(rho_x - rho) = {worst_coh:.4g}"


def check_mi_inequality() -> tuple[bool, str]:
    worst = -math.inf
    for p in MI_P:
        for rho in ENSEMBLE_RHO:
            ens = build_fano_ensemble(p, rho)
            one = mi_entropy_bound(ens, 1)
            if mi_entropy_bound(ens, 10) != 10 * one:
                return False, f"not exactly linear in N at p={p}, rho={rho}"
            gap = one - mi_linear_bound(1, rho)
            worst = max(worst, gap)
            if not gap < 0:
                return False, f"entropy bound {one:.6g} >= 16 rho^2 at p={p}, rho={rho}"
    spot = mi_entropy_bound(build_fano_ensemble(3, 0.25), 1)
    closed = math.log(4 / 3) + 2 * math.log(11 / 6) - 2 * math.log(2)
    if abs(spot - closed) > 1e-12 or abs(spot - 0.1137) > 1e-3:
        return False, f"p=3 spot value {spot:.6g}, closed form {closed:.6g}"
    return True, f"max(I_entropy - 16 rho^2) = {worst:.4g}; p=3 spot {spot:.5f}"


def diagonalization_specs():
    for p in DIAG_P:
        for K in DIAG_K:
            yield p, K, build_matching_process(p, full_matching(p), 0.4, exponential_filter(0.5, K))


def check_diagonalization() -> tuple[bool, str]:
    cross = err = gap = 0.0
    for p, K, spec in diagonalization_specs():
        for N in DIAG_N:
            rep = diagonalization_oracle(spec, N)
            cross, err, gap = max(cross, rep.cross_bin_max), max(err, rep.max_bin_error), max(gap, rep.mirror_gap)
    ok = cross <= DIAG_TOL and err <= DIAG_TOL
    return ok, f"cross-bin {cross:.3g}, bin error {err:.3g} (block-circulant model); true mirror-covariance gap {gap:.3g}"


def check_formulas() -> tuple[bool, str]:
    nec = necessary_sample_size(10, 0.25)
    suf = sufficient_sample_size(64, 0.5, 3.0, 0.05)
    ok = abs(nec - 11.2267) <= 1e-3 and abs(suf - 1.2449e5) <= 1e1
    return ok, f"necessary(10, 0.25) = {nec:.5f}; sufficient(64, 0.5, 3, 0.05) = {suf:.2f}"


def generator_configs() -> list[ProcessSpec]:
    out = []
    for p in (2, 3, 5, 8):
        for kappa in (0.2, -0.6, 0.9):
            for beta, K in ((0.0, 1), (0.5, 3), (-0.3, 4)):
                for pairs in (full_matching(p), half_matching(p), []):
                    out.append(build_matching_process(p, pairs, kappa, exponential_filter(beta, K)))
    return out


def check_oracle_equivalence() -> tuple[bool, str]:
    """CIG recovered from the exact SDM equals the generator's stored graph; floor is exactly 1."""
    specs = generator_configs()
    for spec in specs:
        acf = acf_of_spec(spec)
        sdm = sdm_from_acf(acf, 512)
        if cig_from_inverse_sdm(sdm) != spec.truth:
            return False, f"CIG mismatch for {spec.to_json()}"
        band = eigen_band(sdm)
        if band.lam_min < 1.0 - 1e-9 or band.lam_max > spec.b_actual * (1 + 1e-9):
            return False, f"band [{band.lam_min}, {band.lam_max}] vs [1, {spec.b_actual}]"
        C = exact_covariance(spec, 6)
        np.linalg.cholesky(C)
    return True, f"{len(specs)} generator configurations"


def check_determinism() -> tuple[bool, str]:
    spec = build_matching_process(4, [(0, 1)], 0.5, exponential_filter(0.5, 3))
    a, b = sample(spec, 64, 12345), sample(spec, 64, 12345)
    ra = select_graph(a, 0.5, spec.b_actual).to_json()
    rb = select_graph(b, 0.5, spec.b_actual).to_json()
    ok = np.array_equal(a.values, b.values) and ra == rb
    return ok, "sampler and selector bit-identical under a fixed seed"


def bartlett_se(spec: ProcessSpec, n: int, max_lag: int) -> np.ndarray:
    """Asymptotic standard errors of lag-``0..max_lag`` sample autocovariances (known zero mean).

    ``Var(g_ab(m)) ~ (1/(n-m)) sum_u [R_aa(u) R_bb(u) + R_ab(u+m) R_ba(u-m)]``.
    """
    acf = acf_of_spec(spec)
    p, S = spec.p, acf.support
    se = np.zeros((max_lag + 1, p, p))
    us = range(-(2 * S + max_lag) - 1, 2 * S + max_lag + 2)
    for m in range(max_lag + 1):
        var = np.zeros((p, p))
        for u in us:
            Ru, Rp, Rm = acf.at(u), acf.at(u + m), acf.at(u - m)
            var += np.outer(np.diag(Ru), np.diag(Ru)) + Rp * Rm.T
        se[m] = np.sqrt(var / (n - m))
    return se


def sample_autocovariance(x: np.ndarray, max_lag: int) -> np.ndarray:
    """``g[m][a, b] = mean_t x_a[t + m] x_b[t]``, zero mean assumed."""
    n = x.shape[1]
    return np.array([x[:, m:] @ x[:, : n - m].T / (n - m) for m in range(max_lag + 1)])


def sampler_zscores(spec: ProcessSpec, n: int, seed: int, max_lag: int) -> np.ndarray:
    x = sample(spec, n - 1, seed).values
    g = sample_autocovariance(x, max_lag)
    acf = acf_of_spec(spec)
    ref = np.array([acf.at(m) for m in range(max_lag + 1)])
    return (g - ref) / bartlett_se(spec, n, max_lag)


def check_sampler_fidelity(seed: int = 2024) -> tuple[bool, str]:
    spec = build_matching_process(2, [(0, 1)], 0.4, exponential_filter(0.5, 4))
    z = sampler_zscores(spec, 100_000, seed, 3)
    worst = float(np.abs(z).max())
    return worst <= 3.0, f"max |z| over lags 0..3 = {worst:.3f} (limit 3)"


def check_spectrum_covariance(trials: int = 10_000, seed: int = 7) -> tuple[bool, str]:
    """Empirical covariance of the DFT bins vs the exact mirror-extension oracle."""
    spec = build_matching_process(2, [(0, 1)], 0.5, exponential_filter(0.5, 2))
    N = 8
    exact = spectrum_covariance(spec, N)
    rng = np.random.default_rng(seed)
    acc = np.zeros_like(exact)
    for s in rng.integers(0, 2**63, size=trials):
        v = spectrum(sample(spec, N, int(s))).values.T.reshape(-1)
        acc += np.outer(v, v)
    emp = acc / trials
    # entrywise SE of a Gaussian second moment: sqrt((S_ii S_jj + S_ij^2) / n)
    d = np.diag(exact)
    se = np.sqrt((np.outer(d, d) + exact**2) / trials)
    z = np.abs(emp - exact) / se
    return float(z.max()) < 5.0, f"max |z| = {z.max():.2f} over {exact.size} entries (limit 5)"


def check_expected_z(trials: int = 10_000, seed: int = 11) -> tuple[bool, str]:
    """Mean of Z(c) for a true edge equals 2N C_rc within 3 standard errors."""
    spec = build_matching_process(3, [(0, 1)], 0.5, exponential_filter(0.5, 3))
    N = 32
    C = spec.innovations.covariance()
    rng = np.random.default_rng(seed)
    vals = np.array([
        (lambda xh: xh[0] @ xh[1])(spectrum(sample(spec, N, int(s))).values)
        for s in rng.integers(0, 2**63, size=trials)
    ])
    target = 2 * N * C[0, 1]
    z = abs(vals.mean() - target) / (vals.std(ddof=1) / math.sqrt(trials))
    return z <= 3.0, f"mean Z = {vals.mean():.4f}, 2N C_rc = {target:.4f}, |z| = {z:.2f}"


FAST_CHECKS = {
    "ensemble-validity": check_ensemble_validity,
    "mi-inequality": check_mi_inequality,
    "exact-diagonalization": check_diagonalization,
    "formula-spot-checks": check_formulas,
    "oracle-equivalence": check_oracle_equivalence,
    "determinism": check_determinism,
}
FULL_CHECKS = {
    "sampler-fidelity": check_sampler_fidelity,
    "spectrum-covariance": check_spectrum_covariance,
    "expected-statistic": check_expected_z,
}


def run_verification(level: str = "fast", ensemble_coefficient: Callable[[float], float] | None = None) -> list[CheckResult]:
    if level not in ("fast", "full"):
        raise ValueError(f"level must be 'fast' or 'full', got {level!r}")
    checks = dict(FAST_CHECKS)
    if ensemble_coefficient is not None:
        checks["ensemble-validity"] = lambda: check_ensemble_validity(ensemble_coefficient)
    if level == "full":
        checks.update(FULL_CHECKS)
    return [_timed(name, fn) for name, fn in checks.items()]
