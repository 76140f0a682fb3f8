import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cigsel.errors import InternalInvariantError, InvalidInputError, OracleSizeError
from cigsel.model import SampleBlock, sdm_from_acf
from cigsel.process import acf_of_spec, build_matching_process, exponential_filter, full_matching, sample
from cigsel.selector import (
    ExtendedBlock,
    diagonalization_oracle,
    dft_rows,
    mirror_extend,
    mirror_index,
    select_graph,
    select_neighborhood,
    spectrum,
    spectrum_covariance,
    threshold,
    z_statistics,
)

row_arrays = st.integers(1, 40).flatmap(
    lambda n: st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=n + 1, max_size=n + 1)
)


# -- mirror extension ---------------------------------------------------------


def test_mirror_extend_n2():
    X = SampleBlock(np.array([[1.0, 2.0, 3.0]]))
    assert mirror_extend(X).values.tolist() == [[1.0, 2.0, 3.0, 2.0]]


def test_mirror_extend_n3():
    X = SampleBlock(np.array([[1.0, 2.0, 3.0, 4.0]]))
    assert mirror_extend(X).values.tolist() == [[1.0, 2.0, 3.0, 4.0, 3.0, 2.0]]


def test_mirror_extend_n1_is_identity():
    X = SampleBlock(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert np.array_equal(mirror_extend(X).values, X.values)


@settings(max_examples=50, deadline=None)
@given(row_arrays)
def test_mirror_symmetry(values):
    xt = mirror_extend(SampleBlock(np.array([values]))).values[0]
    L = xt.size
    assert L == 2 * (len(values) - 1)
    # 1-based x~[m] = x~[2N + 2 - m] for m = 2..2N
    for m in range(2, L + 1):
        assert xt[m - 1] == xt[(L + 2 - m) - 1]


# -- DFT ----------------------------------------------------------------------


def test_dft_of_constant_row():
    N, c = 5, 1.7
    xh = spectrum(SampleBlock(np.full((1, N + 1), c))).values[0]
    assert xh[0] == pytest.approx(c * np.sqrt(2 * N), rel=1e-14)
    assert np.abs(xh[1:]).max() < 1e-13


@settings(max_examples=50, deadline=None)
@given(row_arrays)
def test_parseval_and_redundant_bins(values):
    X = SampleBlock(np.array([values, values[::-1]]))
    xt = mirror_extend(X)
    xh = dft_rows(xt).values
    L = xh.shape[1]
    energy = (xt.values**2).sum(axis=1)
    np.testing.assert_allclose((xh**2).sum(axis=1), energy, rtol=1e-10, atol=1e-300)
    # 1-based column k equals column 2N + 2 - k
    for k in range(2, L // 2 + 1):
        np.testing.assert_allclose(xh[:, k - 1], xh[:, L + 1 - k], atol=1e-9 * (1 + np.sqrt(energy.max())))


def test_dft_rejects_asymmetric_block():
    with pytest.raises(InternalInvariantError):
        dft_rows(ExtendedBlock(np.array([[1.0, 2.0, 3.0, 5.0]])))


def test_white_noise_bins_are_not_distributed_as_c():
    """The extension duplicates samples, so bin variances of white noise are not C."""
    spec = build_matching_process(1, [], 0.0)
    N = 8
    Chat = spectrum_covariance(spec, N)
    # bin 0: (x1 + x_{N+1} + 2 sum_{n=2..N} x_n) / sqrt(2N), variance (2 + 4(N-1)) / 2N
    assert Chat[0, 0] == pytest.approx((2 + 4 * (N - 1)) / (2 * N), rel=1e-12)
    assert Chat[0, 0] != pytest.approx(spec.innovations.covariance()[0, 0])


def test_spectrum_covariance_monte_carlo():
    """Empirical bin covariance agrees with the exact mirror-extension oracle."""
    spec = build_matching_process(2, [(0, 1)], 0.5, exponential_filter(0.5, 2))
    N, trials = 6, 20_000
    exact = spectrum_covariance(spec, N)
    x = sample(spec, (N + 2) * trials, 8).values
    stride = N + 2  # gap of K - 1 = 1 sample between windows keeps them independent
    vecs = np.stack([
        spectrum(SampleBlock(x[:, i * stride: i * stride + N + 1])).values.T.reshape(-1) for i in range(trials)
    ])
    emp = vecs.T @ vecs / trials
    d = np.diag(exact)
    se = np.sqrt((np.outer(d, d) + exact**2) / trials)
    assert (np.abs(emp - exact) / se).max() < 4.5  # 576 entries


# -- diagonalization oracle ---------------------------------------------------


@pytest.mark.parametrize("N", [4, 8])
def test_diagonalization_white_noise(N):
    spec = build_matching_process(3, [(0, 2)], 0.6)
    rep = diagonalization_oracle(spec, N)
    assert rep.cross_bin_max <= 1e-12
    assert rep.max_bin_error <= 1e-12


def test_diagonalization_short_filter():
    spec = build_matching_process(2, [(0, 1)], 0.4, exponential_filter(0.5, 3))
    rep = diagonalization_oracle(spec, 8)
    assert rep.cross_bin_max <= 1e-10
    assert rep.max_bin_error <= 1e-10
    assert rep.bin_errors.shape == (9,)


def test_diagonalization_bins_match_sdm_directly():
    spec = build_matching_process(2, [(0, 1)], -0.3, exponential_filter(0.8, 4))
    N = 8
    from cigsel.selector import _unitary_dft, circulant_covariance

    U = _unitary_dft(2 * N, 2)
    Chat = U @ circulant_covariance(spec, N) @ U.conj().T
    sdm = sdm_from_acf(acf_of_spec(spec), 2 * N)
    for k in range(N + 1):
        blk = Chat[2 * k: 2 * k + 2, 2 * k: 2 * k + 2]
        np.testing.assert_allclose(blk, sdm.mats[k], atol=1e-10 * np.abs(sdm.mats[k]).max())


def test_true_mirror_covariance_is_not_block_circulant():
    spec = build_matching_process(2, [(0, 1)], 0.4, exponential_filter(0.5, 2))
    rep = diagonalization_oracle(spec, 8)
    assert rep.mirror_gap > 0.1
    assert rep.mirror_cross_bin_max > 0.1


def test_diagonalization_guards():
    spec = build_matching_process(64, [], 0.0)
    with pytest.raises(OracleSizeError):
        diagonalization_oracle(spec, 64)


# -- statistics and neighborhood rule ------------------------------------------


def test_z_orthogonal_rows():
    from cigsel.selector import SpectrumBlock

    xh = SpectrumBlock(np.array([[1.0, 0.0, 1.0, 0.0], [0.0, 2.0, 0.0, -3.0], [1.0, 1.0, 1.0, 1.0]]))
    z = z_statistics(xh, 0)
    assert z.others.tolist() == [1, 2]
    assert z.values[0] == 0.0 and z.values[1] == 2.0
    assert z.normalizer == 4


def test_z_symmetric():
    spec = build_matching_process(4, [(0, 1)], 0.5, exponential_filter(0.5, 2))
    xh = spectrum(sample(spec, 32, 1))
    for r in range(4):
        zr = z_statistics(xh, r)
        for c, val in zip(zr.others, zr.values):
            zc = z_statistics(xh, int(c))
            assert zc.values[list(zc.others).index(r)] == pytest.approx(val, rel=1e-12)


def test_z_out_of_range():
    xh = spectrum(SampleBlock(np.ones((2, 3))))
    with pytest.raises(InvalidInputError):
        z_statistics(xh, 2)


@pytest.mark.parametrize(
    "Z, eta, expected",
    [((0.1, -0.9, 0.3), 0.5, 1), ((0.1, 0.2), 0.5, None), ((0.7, -0.7), 0.5, 0), ((0.5,), 0.5, 0)],
)
def test_select_neighborhood(Z, eta, expected):
    assert select_neighborhood(Z, eta) == expected


def test_select_neighborhood_errors():
    with pytest.raises(InvalidInputError):
        select_neighborhood([], 0.5)
    with pytest.raises(InvalidInputError):
        select_neighborhood([1.0], 0.0)


def test_threshold_value():
    assert threshold(100, 0.5, 3.0) == pytest.approx(200 * 0.5 / 6)


# -- full selector ------------------------------------------------------------


def test_select_graph_recovers_strong_pair():
    spec = build_matching_process(2, [(0, 1)], 0.9)
    res = select_graph(sample(spec, 4096, 2024), 0.9, spec.b_actual)
    assert res.graph == spec.truth


def test_select_graph_independent_components_mostly_empty():
    spec = build_matching_process(4, [], 0.0)
    empty = sum(select_graph(sample(spec, 4096, s), 0.5, 3.0).graph.edges == () for s in range(200))
    assert empty / 200 >= 0.95


def test_select_graph_per_node_records():
    spec = build_matching_process(4, [(0, 1)], 0.8)
    res = select_graph(sample(spec, 512, 4), 0.8, spec.b_actual, keep_statistics=True)
    assert [d.r for d in res.per_node] == [0, 1, 2, 3]
    assert res.per_node[0].rhat == 1 and res.per_node[0].kept
    assert all(d.eta == threshold(512, 0.8, spec.b_actual) for d in res.per_node)
    assert len(res.statistics) == 4 and res.statistics[2].values.shape == (3,)
    obj = json.loads(json.dumps(res.to_json()))
    assert obj["p"] == 4 and [0, 1] in obj["edges"]
    assert obj["edges"] == sorted(obj["edges"])
    assert set(obj["per_node"][0]) == {"r", "rhat", "zmax", "eta", "kept"}


def test_or_rule_keeps_one_sided_detection():
    # node 0 sees node 1 strongly; node 1's strongest partner is node 2
    X = np.zeros((3, 9))
    X[0, :] = [1, -1, 1, -1, 1, -1, 1, -1, 1]
    X[1, :] = [1, -1, 1, -1, 1, -1, 1, -1, 1]
    X[1, :] += 0.01
    X[2, :] = 3 * X[1, :]
    res = select_graph(SampleBlock(X), 0.5, 1.0)
    assert res.per_node[0].rhat in (1, 2)
    assert (1, 2) in res.graph.edges


@settings(max_examples=20, deadline=None)
@given(st.permutations(range(6)), st.integers(0, 2**32 - 1))
def test_select_graph_label_equivariance(perm, seed):
    spec = build_matching_process(6, full_matching(6), 0.3, exponential_filter(0.4, 2))
    X = sample(spec, 64, seed)
    base = select_graph(X, 0.3, spec.b_actual).graph
    Xp = np.empty_like(X.values)
    for r, pr in enumerate(perm):
        Xp[pr] = X.values[r]
    moved = select_graph(SampleBlock(Xp), 0.3, spec.b_actual).graph
    assert moved == base.permuted(perm)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 5), st.integers(0, 2**32 - 1))
def test_select_graph_sign_invariance(row, seed):
    spec = build_matching_process(6, full_matching(6), 0.3, exponential_filter(0.4, 2))
    X = sample(spec, 64, seed).values.copy()
    base = select_graph(SampleBlock(X), 0.3, spec.b_actual).graph
    X[row] *= -1
    assert select_graph(SampleBlock(X), 0.3, spec.b_actual).graph == base


@pytest.mark.parametrize("rho, B", [(0.0, 3.0), (1.0, 3.0), (0.5, 0.9)])
def test_select_graph_validates(rho, B):
    with pytest.raises(InvalidInputError):
        select_graph(SampleBlock(np.ones((2, 5))), rho, B)


def test_mirror_index():
    assert mirror_index(3).tolist() == [0, 1, 2, 3, 2, 1]
