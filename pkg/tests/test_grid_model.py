"""Laplacian, measurement model, secured-row derivation, complex admittance."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridshield.cases import load_case
from gridshield.errors import UnobservableModelError
from gridshield.grid_model import (
    MeasurementModel,
    MeasurementTag,
    MeterConfig,
    build_complex_admittance,
    build_laplacian,
    build_measurement_model,
    derive_secured_rows,
)

from oracles import laplacian_by_hand, random_connected_case


def test_path3_laplacian_matrix(path3_case):
    expected = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
    np.testing.assert_allclose(build_laplacian(path3_case), expected)


def test_laplacian_matches_entrywise_construction(ieee57_case, path3_case, test6_case):
    for case in (path3_case, test6_case, ieee57_case):
        np.testing.assert_allclose(
            build_laplacian(case), laplacian_by_hand(case), atol=1e-12
        )


def test_laplacian_random_cases_match_oracle(rng):
    for _ in range(10):
        case = random_connected_case(rng, int(rng.integers(2, 15)), extra_edges=3)
        np.testing.assert_allclose(
            build_laplacian(case), laplacian_by_hand(case), atol=1e-12
        )


def test_laplacian_symmetric_psd(ieee57_case):
    L = build_laplacian(ieee57_case)
    np.testing.assert_allclose(L, L.T)
    eigvals = np.linalg.eigvalsh(L)
    assert eigvals.min() > -1e-9
    assert abs(eigvals[0]) < 1e-9  # constant vector in the kernel


def test_injection_rows_equal_laplacian_rows(test6_case):
    model = build_measurement_model(test6_case)
    L = build_laplacian(test6_case)
    np.testing.assert_allclose(model.H[: test6_case.n_bus], L)


def test_row_count_and_order(ieee57_case):
    model = build_measurement_model(ieee57_case)
    n, m = ieee57_case.n_bus, ieee57_case.n_branch
    assert model.n_rows == n + m
    assert model.H.shape == (n + m, n)
    assert all(tag.kind == "injection" for tag in model.rows[:n])
    assert all(tag.kind == "flow" for tag in model.rows[n:])
    assert [tag.location for tag in model.rows[:n]] == list(range(1, n + 1))
    assert [tag.location for tag in model.rows[n:]] == list(range(1, m + 1))


def test_flow_row_structure(path3_case):
    model = build_measurement_model(path3_case)
    flow_row = model.H[3]  # branch 1: buses 1 -> 2, b = 1
    np.testing.assert_allclose(flow_row, [1.0, -1.0, 0.0])
    flow_row = model.H[4]  # branch 2: buses 2 -> 3
    np.testing.assert_allclose(flow_row, [0.0, 1.0, -1.0])


def test_constant_state_annihilated(ieee57_case):
    model = build_measurement_model(ieee57_case)
    ones = np.ones(ieee57_case.n_bus)
    np.testing.assert_allclose(model.H @ ones, 0.0, atol=1e-9)
    np.testing.assert_allclose(model.H @ (3.7 * ones), 0.0, atol=1e-9)


def test_rank_is_n_minus_one(test6_case, ieee57_case):
    for case in (test6_case, ieee57_case):
        model = build_measurement_model(case)
        assert np.linalg.matrix_rank(model.H) == case.n_bus - 1


def test_noise_covariance_diagonal(test6_case):
    model = build_measurement_model(test6_case, noise_var=0.002)
    np.testing.assert_allclose(model.noise_var, 0.002)
    np.testing.assert_allclose(model.noise_cov, 0.002 * np.eye(model.n_rows))


def test_noise_var_must_be_positive(path3_case):
    with pytest.raises(ValueError, match="noise_var"):
        build_measurement_model(path3_case, noise_var=0.0)


def test_meter_subset_unobservable(path3_case):
    config = MeterConfig(injection_buses=(1,), flow_branches=())
    with pytest.raises(UnobservableModelError, match="rank"):
        build_measurement_model(path3_case, config)
    with pytest.raises(UnobservableModelError, match="no meters"):
        build_measurement_model(path3_case, MeterConfig((), ()))


def test_meter_subset_observable(path3_case):
    config = MeterConfig(injection_buses=(), flow_branches=(1, 2))
    model = build_measurement_model(path3_case, config)
    assert model.n_rows == 2
    assert np.linalg.matrix_rank(model.H) == 2


def test_meter_config_validates_indices(path3_case):
    with pytest.raises(ValueError, match="unknown bus"):
        MeterConfig(injection_buses=(9,)).resolve(path3_case)
    with pytest.raises(ValueError, match="unknown branch"):
        MeterConfig(flow_branches=(17,)).resolve(path3_case)


def test_model_shape_validation():
    with pytest.raises(ValueError, match="inconsistent"):
        MeasurementModel(
            H=np.ones((2, 3)),
            rows=(MeasurementTag("injection", 1),),
            noise_var=np.ones(2),
            n_state=3,
        )
    with pytest.raises(ValueError, match="positive"):
        MeasurementModel(
            H=np.ones((1, 3)),
            rows=(MeasurementTag("injection", 1),),
            noise_var=np.zeros(1),
            n_state=3,
        )


def test_secured_rows_empty_and_full(path3_case):
    model = build_measurement_model(path3_case)
    assert derive_secured_rows((), model, path3_case).rows == frozenset()
    full = derive_secured_rows((1, 2, 3), model, path3_case)
    assert full.rows == frozenset(range(model.n_rows))


def test_secured_rows_single_bus(path3_case):
    model = build_measurement_model(path3_case)
    secured = derive_secured_rows((2,), model, path3_case)
    assert secured.buses == frozenset({2})
    # injection at bus 2 (row 1) plus both incident flow rows (rows 3, 4)
    assert secured.rows == frozenset({1, 3, 4})


def test_secured_rows_leaf_bus(path3_case):
    model = build_measurement_model(path3_case)
    secured = derive_secured_rows((1,), model, path3_case)
    assert secured.rows == frozenset({0, 3})


def test_secured_rows_out_of_range(path3_case):
    model = build_measurement_model(path3_case)
    with pytest.raises(ValueError, match="out of range"):
        derive_secured_rows((0,), model, path3_case)


@settings(max_examples=30, deadline=None)
@given(data=st.data())
def test_secured_rows_monotone(data, test6_model, test6_case):
    small = data.draw(
        st.sets(st.integers(min_value=1, max_value=6), max_size=4), label="small"
    )
    extra = data.draw(
        st.sets(st.integers(min_value=1, max_value=6), max_size=3), label="extra"
    )
    rows_small = derive_secured_rows(small, test6_model, test6_case).rows
    rows_big = derive_secured_rows(small | extra, test6_model, test6_case).rows
    assert rows_small <= rows_big


def test_complex_admittance_lossless(test6_case):
    Y = build_complex_admittance(test6_case)
    np.testing.assert_allclose(Y, -1j * build_laplacian(test6_case), atol=1e-12)


def test_complex_admittance_with_resistance(test6_case):
    Y = build_complex_admittance(test6_case, r_over_x=0.5)
    L = build_laplacian(test6_case)
    np.testing.assert_allclose(Y, (0.4 - 0.8j) * L, atol=1e-12)


def test_complex_admittance_rejects_negative_ratio(test6_case):
    with pytest.raises(ValueError, match="r_over_x"):
        build_complex_admittance(test6_case, r_over_x=-0.1)
