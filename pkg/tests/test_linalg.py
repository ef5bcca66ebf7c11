import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resource_weight.linalg import (
    SolverError,
    as_density,
    bell_state,
    herm_eig,
    matrix_from_json,
    matrix_to_json,
    operator_norm,
    partial_trace,
    partial_transpose,
    projector,
    random_density,
    random_hermitian,
    trace_norm,
)

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def test_herm_eig_diagonal_and_pauli():
    lam, v = herm_eig(np.diag([2.0, 1.0]))
    assert np.allclose(lam, [2, 1]) and np.allclose(np.abs(v), np.eye(2))
    lam, _ = herm_eig(np.array([[0, 1], [1, 0]]))
    assert np.allclose(lam, [1, -1])


@given(seeds, st.integers(2, 8))
@settings(max_examples=30, deadline=None)
def test_herm_eig_reconstruction(seed, d):
    a = random_hermitian(d, seed)
    lam, v = herm_eig(a)
    assert np.all(np.diff(lam) <= 0)
    assert np.max(np.abs(a - (v * lam) @ v.conj().T)) <= 1e-10
    assert np.max(np.abs(v.conj().T @ v - np.eye(d))) <= 1e-10
    assert abs(lam.sum() - np.trace(a).real) <= 1e-10


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(ValueError):
        herm_eig(np.array([[0, 1], [0, 0]]))


def test_herm_eig_random_8x8():
    a = random_hermitian(8, 5)
    lam, v = herm_eig(a)
    assert np.max(np.abs(a - (v * lam) @ v.conj().T)) <= 1e-10


def test_trace_norm_examples():
    assert trace_norm(np.diag([1.0, -1.0])) == pytest.approx(2)
    plus = projector([1, 1])
    # eigenvalues +-1/sqrt(2) by hand
    assert trace_norm(np.diag([1.0, 0.0]) - plus) == pytest.approx(np.sqrt(2), abs=1e-12)
    assert trace_norm(np.zeros((3, 3))) == 0


def test_trace_norm_non_hermitian_is_singular_value_sum():
    a = np.array([[0, 2], [0, 0]], dtype=complex)
    assert trace_norm(a) == pytest.approx(2)


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_trace_norm_properties(seed):
    a, b, c = (random_hermitian(3, [seed, i]) for i in range(3))
    assert trace_norm(a) >= abs(np.trace(a).real) - 1e-12
    assert trace_norm(a - b) == pytest.approx(trace_norm(b - a), abs=1e-12)
    assert trace_norm(a - c) <= trace_norm(a - b) + trace_norm(b - c) + 1e-12


def test_operator_norm():
    assert operator_norm(np.diag([3.0, -5.0])) == 5
    assert operator_norm(np.eye(4)) == pytest.approx(1)
    a = random_hermitian(5, 2)
    assert operator_norm(a) == np.max(np.abs(herm_eig(a)[0]))


def test_partial_transpose_bell():
    pt = partial_transpose(bell_state(), 2, 2)
    assert np.linalg.eigvalsh(pt)[0] == pytest.approx(-0.5, abs=1e-12)


@given(seeds, st.sampled_from([(2, 2), (2, 3), (3, 2)]), st.sampled_from(["A", "B"]))
@settings(max_examples=30, deadline=None)
def test_partial_transpose_properties(seed, dims, sub):
    da, db = dims
    rho = random_density(da * db, seed)
    pt = partial_transpose(rho, da, db, sub)
    assert np.allclose(partial_transpose(pt, da, db, sub), rho, atol=1e-14)
    assert np.trace(pt).real == pytest.approx(1, abs=1e-12)
    assert np.max(np.abs(pt - pt.conj().T)) <= 1e-14
    prod = np.kron(random_density(da, seed + 1), random_density(db, seed + 2))
    assert np.linalg.eigvalsh(partial_transpose(prod, da, db, sub))[0] >= -1e-12


def test_partial_transpose_dimension_mismatch():
    with pytest.raises(ValueError):
        partial_transpose(np.eye(4), 2, 3)


def test_partial_trace_of_product():
    a, b = random_density(2, 1), random_density(3, 2)
    assert np.allclose(partial_trace(np.kron(a, b), 2, 3, "A"), a)
    assert np.allclose(partial_trace(np.kron(a, b), 2, 3, "B"), b)


def test_random_density_pure_and_deterministic():
    p = random_density(2, 17, "pure-haar")
    assert np.linalg.matrix_rank(p, tol=1e-9) == 1
    assert np.array_equal(random_density(3, 4), random_density(3, 4))
    as_density(random_density(5, 9))


def test_ginibre_mean_is_maximally_mixed():
    n = 10_000
    rng = np.random.default_rng(123)
    samples = np.array([random_density(4, rng) for _ in range(n)])
    mean = samples.mean(axis=0)
    se = samples.std(axis=0) / np.sqrt(n)
    assert np.all(np.abs(mean - np.eye(4) / 4) <= 3 * se + 1e-15)


def test_matrix_json_round_trip_full_precision():
    a = random_density(3, 8)
    obj = matrix_to_json(a)
    assert obj["dim"] == 3
    assert np.array_equal(matrix_from_json(obj), a)


def test_matrix_json_rejects_bad_shapes():
    with pytest.raises(ValueError):
        matrix_from_json({"dim": 2, "re": [[1, 0]]})
    with pytest.raises(ValueError):
        matrix_from_json({"re": [[1]]})
    with pytest.raises(ValueError):
        matrix_from_json([[1, 0]])


def test_matrix_json_plain_list():
    assert np.array_equal(matrix_from_json([[0.5, 0.5], [0.5, 0.5]]), np.full((2, 2), 0.5, dtype=complex))


def test_as_density_rejects_invalid():
    with pytest.raises(ValueError):
        as_density(np.diag([0.6, 0.6]))
    with pytest.raises(ValueError):
        as_density(np.diag([1.5, -0.5]))


def test_solver_error_carries_residual():
    err = SolverError("boom", residual=1e-3, status="max-iter")
    assert err.residual == 1e-3 and err.info["status"] == "max-iter"
