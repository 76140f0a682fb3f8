"""Acceptance criteria, one test per criterion.

Each test prints (and records for the terminal summary) a single line
``[PASS] C<n> <name>: <detail>`` or ``[FAIL] ...``. Criteria 5 and 6 are
long Monte Carlo runs and carry the ``slow`` marker.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from cigsel.bounds import (
    fano_error_floor,
    graph_entropy,
    mi_entropy_bound,
    mi_linear_bound,
    necessary_sample_size,
    sufficient_sample_size,
)
from cigsel.cli import main
from cigsel.harness import Cell, estimate_error_prob, scaling_experiment
from cigsel.model import acf_moment, cig_from_inverse_sdm, eigen_band, partial_coherence, sdm_from_acf
from cigsel.process import acf_of_spec, build_fano_ensemble, build_matching_process, exponential_filter, full_matching
from cigsel.selector import diagonalization_oracle
from cigsel.verify import sampler_zscores


@contextmanager
def criterion(log, number, name):
    """Times the block and records one pass/fail line; assertion failures still propagate."""
    state = {"detail": ""}
    t0 = time.perf_counter()
    try:
        yield state
    except BaseException as exc:
        line = f"[FAIL] C{number} {name}: {state['detail'] or exc} ({time.perf_counter() - t0:.1f}s)"
        print(line)
        log.append(line)
        raise
    line = f"[PASS] C{number} {name}: {state['detail']} ({time.perf_counter() - t0:.1f}s)"
    print(line)
    log.append(line)


def within_budget(t0, seconds):
    elapsed = time.perf_counter() - t0
    assert elapsed < seconds, f"took {elapsed:.1f}s, budget {seconds}s"


def test_c1_ensemble_validity(criterion_log):
    with criterion(criterion_log, 1, "ensemble validity") as st:
        t0 = time.perf_counter()
        worst = math.inf
        for p in range(3, 13):
            for rho in (0.05, 0.10, 0.25):
                ens = build_fano_ensemble(p, rho)
                assert ens.M == math.comb(p, 2)
                for m in ens.members:
                    acf = acf_of_spec(m)
                    sdm = sdm_from_acf(acf, 4)
                    band = eigen_band(sdm, 1.0, 3.0)
                    assert band.within, (p, rho, band)
                    coh = partial_coherence(sdm, m.truth).minimum
                    assert coh >= rho - 1e-10, (p, rho, coh)
                    worst = min(worst, coh - rho)
                    assert acf_moment(acf) == 0.0
                    assert len(m.truth.edges) == 1
                    assert cig_from_inverse_sdm(sdm) == m.truth
        within_budget(t0, 5)
        st["detail"] = f"30 ensembles checked, min(rho_x - rho) = {worst:.4f}"


def test_c2_mi_inequality(criterion_log):
    with criterion(criterion_log, 2, "MI inequality") as st:
        t0 = time.perf_counter()
        worst = -math.inf
        for p in range(3, 9):
            for rho in (0.05, 0.10, 0.25):
                gap = mi_entropy_bound(build_fano_ensemble(p, rho), 1) - mi_linear_bound(1, rho)
                assert gap < 0, (p, rho, gap)
                worst = max(worst, gap)
        spot = mi_entropy_bound(build_fano_ensemble(3, 0.25), 1)
        oracle = math.log(4 / 3) + 2 * math.log(11 / 6) - 2 * math.log(2)
        assert abs(spot - 0.1137) <= 1e-3
        assert spot == pytest.approx(oracle, rel=1e-12)
        within_budget(t0, 1)
        st["detail"] = f"max gap {worst:.4g} < 0; p=3 spot {spot:.6f}"


def test_c3_exact_diagonalization(criterion_log):
    with criterion(criterion_log, 3, "exact diagonalization") as st:
        t0 = time.perf_counter()
        cross = err = gap = 0.0
        for p in (2, 3, 4):
            for K in (1, 2, 4):
                spec = build_matching_process(p, full_matching(p), 0.4, exponential_filter(0.5, K))
                for N in (8, 16):
                    rep = diagonalization_oracle(spec, N)
                    assert rep.bin_errors.size == N + 1
                    cross = max(cross, rep.cross_bin_max)
                    err = max(err, rep.max_bin_error)
                    gap = max(gap, rep.mirror_gap)
        assert cross <= 1e-10 and err <= 1e-10, (cross, err)
        within_budget(t0, 10)
        st["detail"] = (
            f"block-circulant model: cross-bin {cross:.2e}, bin error {err:.2e}; "
            f"true mirror-window covariance differs from the model by up to {gap:.3f}"
        )


def test_c4_sampler_fidelity(criterion_log):
    with criterion(criterion_log, 4, "sampler fidelity") as st:
        t0 = time.perf_counter()
        spec = build_matching_process(2, [(0, 1)], 0.4, exponential_filter(0.5, 4))
        z = sampler_zscores(spec, 100_000, 2024, 3)
        worst = float(np.abs(z).max())
        assert worst <= 3.0, worst
        within_budget(t0, 10)
        st["detail"] = f"max |z| = {worst:.3f} over {z.size} entries"


@pytest.mark.slow
def test_c5_sufficient_sample_size(criterion_log):
    with criterion(criterion_log, 5, "sufficient sample size, p=32") as st:
        t0 = time.perf_counter()
        cell0 = Cell(32, 2, 0.5)
        spec = cell0.build()
        B = spec.b_actual
        N = math.ceil(sufficient_sample_size(32, 0.5, B, 0.05))
        est = estimate_error_prob(Cell(32, N, 0.5), 200, master_seed=2024, rho_min=0.5, B=B)
        assert est.rate <= 0.05, est
        within_budget(t0, 600)
        st["detail"] = (
            f"N={N}, B={B:.4g}, {est.failures}/200 failures, "
            f"Wilson [{est.wilson_lo:.3f}, {est.wilson_hi:.3f}]"
        )


@pytest.mark.slow
def test_c6_scaling_law(criterion_log):
    with criterion(criterion_log, 6, "log p scaling") as st:
        t0 = time.perf_counter()
        fit = scaling_experiment([8, 16, 32, 64], kappa=0.5, trials=100, master_seed=2024)
        pts = ", ".join(f"N*({pt.p})={pt.n_star}" for pt in fit.points)
        st["detail"] = f"{pts}; c={fit.c:.1f}; worst factor {fit.within_factor:.3f}"
        assert fit.within_factor <= 2.0
        within_budget(t0, 1800)


def test_c7_fano_floor(criterion_log):
    with criterion(criterion_log, 7, "Fano floor consistency") as st:
        t0 = time.perf_counter()
        H = graph_entropy(45)
        parts = []
        for N in (1, 5, 10):
            est = estimate_error_prob(Cell(10, N, 0.25, process="fano"), 500, master_seed=2024)
            floor = fano_error_floor(mi_linear_bound(N, 0.25), H)
            assert est.rate >= floor - 0.05, (N, est.rate, floor)
            parts.append(f"N={N}: error {est.rate:.3f} vs floor {floor:.3f}")
        within_budget(t0, 300)
        st["detail"] = "; ".join(parts)


def test_c8_formula_spot_checks(criterion_log):
    with criterion(criterion_log, 8, "formula spot checks") as st:
        t0 = time.perf_counter()
        nec = necessary_sample_size(10, 0.25)
        suf = sufficient_sample_size(64, 0.5, 3, 0.05)
        assert abs(nec - 11.2267) <= 1e-3
        assert abs(suf - 1.2449e5) <= 1e1
        within_budget(t0, 1)
        st["detail"] = f"necessary {nec:.5f}, sufficient {suf:.2f}"


def test_c9_sweep_determinism(criterion_log, tmp_path):
    with criterion(criterion_log, 9, "sweep determinism") as st:
        cfg = tmp_path / "sweep.json"
        cfg.write_text(
            '{"p_list": [8, 16], "N_list": [256, 512], "kappa_list": [0.25, 0.5], '
            '"trials": 20, "master_seed": 2024, "filter": {"beta": 0.5, "K": 3}}'
        )
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sweep", "--config", str(cfg), "--out", str(a)]) == 0
        assert main(["sweep", "--config", str(cfg), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        st["detail"] = f"{len(a.read_text().splitlines()) - 1} rows, {a.stat().st_size} bytes identical"
