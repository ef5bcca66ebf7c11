import cvxpy as cp
import numpy as np
import pytest

from oracles import SDP_GRID_VALUE, grid_sdp_dual, grid_sdp_problem
from resource_weight.free_sets import Hull, Incoherent, PptBipartite
from resource_weight.linalg import SolverError, random_density, random_hermitian
from resource_weight.quantifiers import _cone_problem
from resource_weight.sdp import SdpBuilder, SdpProblem, SdpSolution, SolverOptions, residuals, solve


def trace_one_problem(c=None):
    c = np.eye(2) if c is None else c
    return SdpProblem((2,), 0, [c], [], [np.eye(2)[None]], np.zeros((1, 0)), [1.0])


def grid_problem():
    c, a, b2 = grid_sdp_problem()
    return SdpProblem((3,), 0, [c], [], [np.stack([np.eye(3), a])], np.zeros((2, 0)), [1.0, b2]), (c, a, b2)


def corpus():
    out = [trace_one_problem(), grid_problem()[0]]
    fs = [Incoherent(3), PptBipartite(2, 2), Hull(tuple(random_density(3, 900 + j) for j in range(4)))]
    for s in range(4):
        for f in fs:
            for sign in (1, -1):
                out.append(_cone_problem(random_density(f.dim, s), f, sign)[0])
    return out


def test_trace_constraint_forces_objective():
    sol = solve(trace_one_problem())
    assert sol.status == "optimal"
    assert sol.primal_objective == pytest.approx(1, abs=1e-9)


def test_grid_oracle_frozen_value():
    # the oracle itself must reproduce its frozen value
    c, a, b2 = grid_sdp_problem()
    assert grid_sdp_dual(c, a, b2) == pytest.approx(SDP_GRID_VALUE, abs=1e-12)


def test_matches_grid_oracle():
    p, _ = grid_problem()
    sol = solve(p)
    assert abs(sol.primal_objective - SDP_GRID_VALUE) <= 1e-4
    assert abs(sol.primal_objective - SDP_GRID_VALUE) <= 1e-8


def _cvxpy_value(p: SdpProblem) -> float:
    xs = [cp.Variable((n, n), hermitian=True) for n in p.block_dims]
    x = cp.Variable(p.n_scalar) if p.n_scalar else None
    cons = [xv >> 0 for xv in xs] + ([x >= 0] if x is not None else [])
    for i in range(p.m):
        expr = sum(cp.real(cp.trace(p.a_blocks[k][i] @ xs[k])) for k in range(len(xs)))
        if x is not None:
            expr = expr + p.a_scalar[i] @ x
        cons.append(expr == p.b[i])
    obj = sum(cp.real(cp.trace(p.c_blocks[k] @ xs[k])) for k in range(len(xs)))
    if x is not None:
        obj = obj + p.c_scalar @ x
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.CLARABEL)
    return float(prob.value)


@pytest.mark.parametrize("seed", range(8))
def test_matches_cvxpy_on_random_problems(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    b = SdpBuilder()
    x1, x2 = b.psd_block(n), b.psd_block(2)
    b.minimize_block(x1, random_hermitian(n, rng))
    b.minimize_block(x2, random_hermitian(2, rng))
    b.add_scalar_constraint({x1: np.eye(n), x2: np.eye(2)}, {}, 1.0)
    rho = random_density(n, rng)
    a = random_hermitian(n, rng)
    b.add_scalar_constraint({x1: a}, {}, float(np.trace(a @ rho).real) / 2)
    p = b.build()
    sol = solve(p)
    assert sol.primal_objective == pytest.approx(_cvxpy_value(p), abs=1e-6)


def test_cone_problems_match_cvxpy():
    for p in corpus()[2:8]:
        assert solve(p).primal_objective == pytest.approx(_cvxpy_value(p), abs=1e-6)


def test_optimal_status_implies_residual_bounds_and_hermiticity():
    for p in corpus():
        sol = solve(p)
        pr, dr, gap = residuals(p, sol)
        assert pr <= 1e-8 and dr <= 1e-8 and gap <= 1e-7
        for blk in sol.primal_blocks + sol.dual_blocks:
            assert np.max(np.abs(blk - blk.conj().T)) <= 1e-10


def test_weak_duality_on_feasible_iterates():
    # infeasible-start iterates carry no duality relation; feasible ones and the final point do
    for p in corpus():
        sol = solve(p)
        for h in sol.history:
            if h["pinf"] <= 1e-8 and h["dinf"] <= 1e-8:
                assert h["pobj"] >= h["dobj"] - 1e-9
        assert sol.primal_objective >= sol.dual_objective - 1e-9


def test_permuted_constraints_agree():
    rng = np.random.default_rng(3)
    for p in corpus():
        order = rng.permutation(p.m)
        assert solve(p.permuted(order)).primal_objective == pytest.approx(solve(p).primal_objective, abs=1e-7)


def test_residuals_detect_perturbation():
    p = trace_one_problem()
    sol = solve(p)
    pr, dr, gap = residuals(p, sol)
    assert max(pr, dr) <= 1e-8 and gap <= 1e-7
    shifted = [sol.primal_blocks[0] + 0.01 * np.eye(2)]
    bumped = SdpSolution(sol.status, shifted, sol.primal_scalar, sol.y, sol.dual_blocks, sol.dual_scalar,
                         sol.primal_objective, sol.dual_objective, sol.gap, sol.iterations)
    # Tr(0.01 I) = 0.02 is the change of the single constraint value
    assert residuals(p, bumped)[0] == pytest.approx(0.02, abs=1e-8)
    zero = SdpSolution(sol.status, [np.zeros((2, 2))], sol.primal_scalar, sol.y, sol.dual_blocks, sol.dual_scalar,
                       0.0, 0.0, 0.0, 0)
    assert residuals(p, zero)[0] >= 1


def test_residuals_shape_mismatch():
    p = trace_one_problem()
    sol = solve(p)
    with pytest.raises(ValueError):
        residuals(grid_problem()[0], sol)


def test_primal_infeasible_is_reported():
    p = SdpProblem((2,), 0, [np.zeros((2, 2))], [], [np.eye(2)[None]], np.zeros((1, 0)), [-1.0])
    sol = solve(p, SolverOptions(raise_on_failure=False))
    assert sol.status == "infeasible"
    assert sol.certificate["kind"] == "primal-infeasible"
    with pytest.raises(SolverError) as exc:
        solve(p)
    assert exc.value.info["status"] == "infeasible"


def test_unbounded_is_reported():
    p = SdpProblem((2,), 0, [-np.eye(2)], [], [np.diag([1.0, 0.0])[None]], np.zeros((1, 0)), [1.0])
    sol = solve(p, SolverOptions(raise_on_failure=False))
    assert sol.status == "dual-infeasible"


def test_iteration_cap_reports_max_iter():
    sol = solve(grid_problem()[0], SolverOptions(max_iter=2, raise_on_failure=False))
    assert sol.status == "max-iter" and sol.iterations <= 2


def test_problem_json_round_trip_and_determinism():
    p = corpus()[5]
    q = SdpProblem.from_json(p.to_json())
    assert all(np.array_equal(x, y) for x, y in zip(p.a_blocks + p.c_blocks, q.a_blocks + q.c_blocks))
    assert np.array_equal(p.b, q.b)
    a, b = solve(p), solve(q)
    assert a.primal_objective == b.primal_objective


def test_problem_validation():
    with pytest.raises(ValueError):
        SdpProblem((2,), 0, [np.eye(2)], [], [np.zeros((0, 2, 2))], np.zeros((0, 0)), [])
    with pytest.raises(ValueError):
        SdpProblem((2,), 0, [np.array([[0, 1], [0, 0]])], [], [np.eye(2)[None]], np.zeros((1, 0)), [1.0])
