import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from twedge.errors import DegenerateGap, EigenFailure
from twedge.model import ComplexPoint, builtin_model, make_population_spectrum
from twedge.mp_law import edge_params, solve_m
from twedge.parallel import map_replicates_array
from twedge.sampler import RngStream, sample_data_matrix
from twedge.spectral import (
    SpectralSample,
    counting_function,
    empirical_stieltjes,
    gram_eigenvalues,
    onatski_statistic,
    rescale_largest,
)

IDENTITY = make_population_spectrum([(1.0, 1.0)])


def test_gram_scalar():
    assert gram_eigenvalues(np.array([[2.0]])).eigenvalues.tolist() == [4.0]


def test_gram_zero_matrix():
    s = gram_eigenvalues(np.zeros((4, 6)))
    assert s.eigenvalues.tolist() == [0.0] * 4
    assert (s.M, s.N) == (4, 6)


def test_gram_duality_5x3():
    X = np.random.default_rng(0).standard_normal((5, 3))
    small = gram_eigenvalues(X).eigenvalues
    full = np.sort(np.linalg.eigvalsh(X @ X.T))[::-1]
    np.testing.assert_allclose(small, full[:3], atol=1e-10)
    np.testing.assert_allclose(full[3:], 0.0, atol=1e-10)


def test_gram_duality_many_shapes():
    rng = np.random.default_rng(1)
    for _ in range(200):
        M, N = rng.integers(1, 25, size=2)
        X = rng.standard_normal((M, N))
        a = np.sort(np.linalg.eigvalsh(X.T @ X))[::-1][: min(M, N)]
        b = np.sort(np.linalg.eigvalsh(X @ X.T))[::-1][: min(M, N)]
        np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9 * a[0])
        np.testing.assert_allclose(gram_eigenvalues(X).eigenvalues, a, rtol=1e-9, atol=1e-9 * a[0])


@settings(max_examples=60)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)),
              elements=st.floats(-100, 100)))
def test_trace_is_frobenius(X):
    s = gram_eigenvalues(X)
    fro = float(np.sum(X * X))
    assert abs(s.eigenvalues.sum() - fro) <= 1e-9 * max(1.0, fro)
    assert np.all(np.diff(s.eigenvalues) <= 0) and np.all(s.eigenvalues >= 0)


def test_gram_scale_and_truncation():
    X = np.random.default_rng(2).standard_normal((6, 9))
    full = gram_eigenvalues(X)
    top = gram_eigenvalues(X, k=2, scale=0.5)
    np.testing.assert_allclose(top.eigenvalues, 0.5 * full.eigenvalues[:2], rtol=1e-12)
    assert not top.complete and full.complete
    with pytest.raises(ValueError):
        top.n_side()


def test_gram_rejects_nonfinite():
    with pytest.raises(EigenFailure):
        gram_eigenvalues(np.array([[1.0, np.nan]]))


def test_gram_records_stream():
    spec = builtin_model("identity", 8, 10)
    s = gram_eigenvalues(sample_data_matrix(spec, RngStream(5, 3)))
    assert (s.master_seed, s.stream_index) == (5, 3)


def test_rescale_at_edge_is_zero():
    e = edge_params(IDENTITY, 1.0)
    assert rescale_largest(e.lambda_plus, e, 500) == 0.0


def test_rescale_inverts():
    e = edge_params(IDENTITY, 1.0)
    lam = 4 + 1 / (e.gamma * 1000 ** (2 / 3))
    assert rescale_largest(lam, e, 1000) == pytest.approx(1.0, abs=1e-9)


def test_rescale_worked_value():
    e = edge_params(IDENTITY, 1.0)
    assert rescale_largest(4.1, e, 100) == pytest.approx(2 ** (-4 / 3) * 100 ** (2 / 3) * 0.1, abs=1e-10)
    assert rescale_largest(4.1, e, 100) == pytest.approx(0.8550, abs=1e-4)
    with pytest.raises(ValueError):
        rescale_largest(4.1, e, 0)


@pytest.mark.parametrize("vals, expected", [((5, 3, 2), 2.0), ((10, 6, 4), 2.0), ((2, 3, 5), 2.0),
                                            ((3, 3, 1), 0.0)])
def test_onatski_examples(vals, expected):
    assert onatski_statistic(vals) == expected


def test_onatski_degenerate():
    with pytest.raises(DegenerateGap):
        onatski_statistic((5, 3, 3))
    with pytest.raises(ValueError):
        onatski_statistic((5, 3))


@settings(max_examples=100)
@given(st.lists(st.floats(0.0, 1e3), min_size=3, max_size=8, unique=True), st.floats(1e-3, 1e3))
def test_onatski_scale_invariant(vals, a):
    top = sorted(vals, reverse=True)
    if top[1] - top[2] <= 1e-6 * max(1.0, top[0]):
        return
    t = onatski_statistic(vals)
    assert t >= 0
    assert onatski_statistic([a * v for v in vals]) == pytest.approx(t, rel=1e-12, abs=1e-12)


def test_stieltjes_examples():
    assert empirical_stieltjes(SpectralSample.from_values([1.0]), 1j) == pytest.approx(0.5 + 0.5j)
    assert empirical_stieltjes(SpectralSample.from_values([0.0, 0.0]), 1j) == pytest.approx(1j)
    with pytest.raises(ValueError):
        empirical_stieltjes(SpectralSample.from_values([1.0]), 1.0 + 0j)


def test_stieltjes_pads_zeros():
    s = SpectralSample.from_values([2.0], N=3, M=1)
    z = 0.5 + 1j
    expected = (1 / (2 - z) + 2 / (0 - z)) / 3
    assert empirical_stieltjes(s, z) == pytest.approx(expected, abs=1e-15)


@settings(max_examples=50)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=10), st.floats(-2, 12), st.floats(0.05, 3))
def test_stieltjes_derivative(vals, E, eta):
    s = SpectralSample.from_values(vals)
    z, h = complex(E, eta), 1e-5
    fd = (empirical_stieltjes(s, z + h) - empirical_stieltjes(s, z - h)) / (2 * h)
    exact = complex(np.mean(1 / (s.eigenvalues - z) ** 2))
    assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))
    assert empirical_stieltjes(s, z).imag > 0


def test_stieltjes_local_law():
    spec = builtin_model("identity", 400, 400)
    e = edge_params(spec.spectrum, spec.phi)
    z = ComplexPoint(e.lambda_plus, 0.05)
    m = solve_m(z, spec.spectrum, spec.phi).m
    hits = 0
    for seed in range(20):
        eigs = gram_eigenvalues(sample_data_matrix(spec, RngStream(seed)))
        hits += abs(empirical_stieltjes(eigs, z) - m) <= 5 / (400 * 0.05)
    assert hits >= 19


def test_counting_examples():
    s = SpectralSample.from_values([3.0, 2.0, 1.0])
    assert counting_function(s, 1.5, 3.5) == 2
    assert counting_function(s, 5.0, 5.0) == 0
    padded = SpectralSample.from_values([3.0, 2.0], N=5, M=2)
    assert counting_function(padded, 0.0, np.inf) == 5
    with pytest.raises(ValueError):
        counting_function(s, 2.0, 1.0)


def _rigidity_replicate(stream, spec):
    return gram_eigenvalues(sample_data_matrix(spec, stream), k=1).eigenvalues[0]


def test_rigidity_of_largest_eigenvalue():
    medians = []
    for N in (100, 200, 400):
        spec = builtin_model("identity", N, N)
        lam = map_replicates_array(_rigidity_replicate, 500, 17, spec, workers=2)
        medians.append(float(np.median(N ** (2 / 3) * np.abs(lam - 4.0))))
    assert all(0.2 <= m <= 5 for m in medians)
    assert medians[-1] <= 1.25 * medians[0]
