"""Spectral basis, graph Fourier transform, total variation, filters."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridshield.errors import SolverError
from gridshield.gsp import (
    FilterSpec,
    apply_filter,
    default_cutoff,
    eig_sym,
    filter_response,
    gft,
    graph_tv,
    ideal_highpass_filter,
    igft,
    smoothness,
    tv_sqrt_filter,
)

from oracles import random_connected_case, tv_by_edges
from gridshield.grid_model import build_laplacian

finite_floats = st.floats(
    min_value=-50, max_value=50, allow_nan=False, allow_infinity=False
)


def signal_strategy(n):
    return st.lists(finite_floats, min_size=n, max_size=n).map(np.array)


# ---------------------------------------------------------------------------
# Eigendecomposition
# ---------------------------------------------------------------------------

def test_path_eigenvalues(path3_basis):
    np.testing.assert_allclose(path3_basis.eigenvalues, [0.0, 1.0, 3.0], atol=1e-10)
    assert path3_basis.eigenvalues[0] >= 0.0  # negatives are clamped away
    assert path3_basis.lambda_max == pytest.approx(3.0)
    assert path3_basis.n_vertices == 3


def test_bottom_eigenvector_is_constant(path3_basis, ieee57_basis):
    for basis in (path3_basis, ieee57_basis):
        n = basis.n_vertices
        np.testing.assert_allclose(
            basis.U[:, 0], np.full(n, 1.0 / np.sqrt(n)), atol=1e-9
        )


def test_diagonal_matrix_identity_basis():
    basis = eig_sym(np.diag([2.0, 5.0, 7.0]))
    np.testing.assert_allclose(basis.eigenvalues, [2.0, 5.0, 7.0], atol=1e-12)
    np.testing.assert_allclose(basis.U, np.eye(3), atol=1e-12)


def test_permuted_diagonal_sorted():
    basis = eig_sym(np.diag([7.0, 2.0, 5.0]))
    np.testing.assert_allclose(basis.eigenvalues, [2.0, 5.0, 7.0], atol=1e-12)
    expected = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=float)
    np.testing.assert_allclose(basis.U, expected, atol=1e-12)


def test_orthonormality_and_reconstruction(ieee57_basis):
    U = ieee57_basis.U
    n = ieee57_basis.n_vertices
    np.testing.assert_allclose(U.T @ U, np.eye(n), atol=1e-10)
    recon = U @ np.diag(ieee57_basis.eigenvalues) @ U.T
    np.testing.assert_allclose(recon, ieee57_basis.L, atol=1e-8)


def test_matches_reference_eigensolver(rng):
    for _ in range(10):
        n = int(rng.integers(2, 25))
        A = rng.normal(size=(n, n))
        A = (A + A.T) / 2
        basis = eig_sym(A)
        reference = np.linalg.eigvalsh(A)
        np.testing.assert_allclose(basis.eigenvalues, reference, atol=1e-8)
        np.testing.assert_allclose(
            basis.U @ np.diag(basis.eigenvalues) @ basis.U.T, A, atol=1e-8
        )


def test_laplacian_eigendecomposition_random_graphs(rng):
    for _ in range(5):
        case = random_connected_case(rng, int(rng.integers(3, 20)), extra_edges=2)
        basis = eig_sym(build_laplacian(case))
        assert abs(basis.eigenvalues[0]) < 1e-9
        assert np.all(basis.eigenvalues >= 0)
        assert np.all(np.diff(basis.eigenvalues) >= -1e-12)


def test_sign_normalization_deterministic(ieee57_L):
    a = eig_sym(ieee57_L)
    b = eig_sym(ieee57_L.copy())
    np.testing.assert_array_equal(a.U, b.U)
    for j in range(a.n_vertices):
        col = a.U[:, j]
        first = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
        assert first > 0


def test_eig_rejects_bad_input():
    with pytest.raises(ValueError, match="square"):
        eig_sym(np.ones((2, 3)))
    asym = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError, match="not symmetric"):
        eig_sym(asym)


def test_one_by_one_matrix():
    basis = eig_sym(np.array([[4.0]]))
    np.testing.assert_allclose(basis.eigenvalues, [4.0])
    np.testing.assert_allclose(basis.U, [[1.0]])


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------

def test_gft_of_constant(path3_basis):
    s_hat = gft(path3_basis, np.ones(3))
    np.testing.assert_allclose(s_hat, [np.sqrt(3.0), 0.0, 0.0], atol=1e-10)


def test_gft_igft_round_trip(path3_basis):
    s = np.array([0.3, -1.2, 2.5])
    np.testing.assert_allclose(igft(path3_basis, gft(path3_basis, s)), s, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(s=signal_strategy(57))
def test_gft_round_trip_and_parseval(s, ieee57_basis):
    s_hat = gft(ieee57_basis, s)
    np.testing.assert_allclose(igft(ieee57_basis, s_hat), s, atol=1e-8)
    assert np.dot(s_hat, s_hat) == pytest.approx(np.dot(s, s), abs=1e-7, rel=1e-9)


def test_transform_length_validation(path3_basis):
    with pytest.raises(ValueError, match="length"):
        gft(path3_basis, np.ones(4))
    with pytest.raises(ValueError, match="length"):
        igft(path3_basis, np.ones(2))


# ---------------------------------------------------------------------------
# Total variation
# ---------------------------------------------------------------------------

def test_tv_spike_on_path(path3_L, path3_basis):
    s = np.array([1.0, 0.0, 0.0])
    assert graph_tv(path3_L, s) == pytest.approx(1.0)
    assert graph_tv(path3_basis, s) == pytest.approx(1.0)


def test_tv_nonnegative_and_zero_on_constants(ieee57_L, rng):
    for _ in range(20):
        s = rng.normal(size=57)
        assert graph_tv(ieee57_L, s) >= -1e-12
    np.testing.assert_allclose(graph_tv(ieee57_L, np.full(57, 2.5)), 0.0, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(s=signal_strategy(6), shift=finite_floats)
def test_tv_shift_invariant(s, shift, test6_L):
    base = graph_tv(test6_L, s)
    shifted = graph_tv(test6_L, s + shift)
    assert shifted == pytest.approx(base, abs=1e-6, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(s=signal_strategy(6), alpha=st.floats(min_value=-10, max_value=10))
def test_tv_quadratic_scaling(s, alpha, test6_L):
    assert graph_tv(test6_L, alpha * s) == pytest.approx(
        alpha**2 * graph_tv(test6_L, s), abs=1e-6, rel=1e-9
    )


def test_tv_agrees_with_edge_sum(rng):
    for _ in range(10):
        case = random_connected_case(rng, int(rng.integers(2, 12)), extra_edges=2)
        L = build_laplacian(case)
        s = rng.normal(size=case.n_bus)
        assert graph_tv(L, s) == pytest.approx(tv_by_edges(case, s), abs=1e-9)


def test_tv_agrees_with_spectral_sum(ieee57_basis, rng):
    s = rng.normal(size=57)
    s_hat = gft(ieee57_basis, s)
    spectral = float(np.sum(ieee57_basis.eigenvalues * s_hat**2))
    assert graph_tv(ieee57_basis, s) == pytest.approx(spectral, rel=1e-9)


def test_tv_length_validation(path3_L):
    with pytest.raises(ValueError, match="length"):
        graph_tv(path3_L, np.ones(5))


# ---------------------------------------------------------------------------
# Filters
# ---------------------------------------------------------------------------

def test_filter_spec_validation():
    with pytest.raises(ValueError, match="unknown filter"):
        FilterSpec("bandpass")
    with pytest.raises(ValueError, match="cutoff"):
        FilterSpec("ideal_highpass")
    with pytest.raises(ValueError, match="cutoff"):
        FilterSpec("ideal_highpass", -1.0)
    with pytest.raises(ValueError, match="no cutoff"):
        FilterSpec("tv_sqrt", 1.0)


def test_filter_responses():
    eigs = np.array([0.0, 1.0, 4.0])
    np.testing.assert_allclose(
        filter_response(tv_sqrt_filter(), eigs), [0.0, 1.0, 2.0]
    )
    np.testing.assert_allclose(
        filter_response(ideal_highpass_filter(1.0), eigs), [0.0, 0.0, 1.0]
    )
    with pytest.raises(ValueError, match="nonnegative"):
        filter_response(tv_sqrt_filter(), np.array([-0.5]))


def test_tv_sqrt_smoothness_equals_tv(ieee57_basis, rng):
    spec = tv_sqrt_filter()
    for _ in range(10):
        s = rng.normal(size=57)
        assert smoothness(ieee57_basis, spec, s) == pytest.approx(
            graph_tv(ieee57_basis, s), abs=1e-9, rel=1e-9
        )


def test_ideal_above_spectrum_kills_everything(path3_basis, rng):
    spec = ideal_highpass_filter(path3_basis.lambda_max)
    s = rng.normal(size=3)
    np.testing.assert_allclose(apply_filter(path3_basis, spec, s), 0.0, atol=1e-10)
    assert smoothness(path3_basis, spec, s) == pytest.approx(0.0, abs=1e-12)


def test_ideal_between_modes_passes_top_only(ieee57_basis):
    s = ieee57_basis.U[:, 1] + ieee57_basis.U[:, -1]
    lam = ieee57_basis.eigenvalues
    cutoff = (lam[1] + lam[-1]) / 2
    spec = ideal_highpass_filter(cutoff)
    assert smoothness(ieee57_basis, spec, s) == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(
        apply_filter(ieee57_basis, spec, s), ieee57_basis.U[:, -1], atol=1e-9
    )


def test_default_cutoff_is_middle_eigenvalue(path3_basis, ieee57_basis):
    assert default_cutoff(path3_basis) == pytest.approx(
        path3_basis.eigenvalues[1]
    )
    assert default_cutoff(ieee57_basis) == pytest.approx(
        ieee57_basis.eigenvalues[28]
    )


def test_constant_signal_invisible_to_highpass(ieee57_basis):
    s = np.full(57, 3.0)
    for spec in (tv_sqrt_filter(), ideal_highpass_filter(0.0)):
        assert smoothness(ieee57_basis, spec, s) == pytest.approx(0.0, abs=1e-9)
