import itertools

import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given, settings
from hypothesis import strategies as st

from ekf_deepc.qp import (ActiveSetSolver, InfeasibleError, NotConvexError, QpProblem, affine_law, check_kkt,
                          kkt_residuals, solve)


def brute_force(P, q, Aeq, beq, Ain, bin):
    """Enumerate active sets of a small strictly convex QP (independent oracle)."""
    d, e = P.shape[0], Aeq.shape[0]
    for size in range(Ain.shape[0] + 1):
        for W in itertools.combinations(range(Ain.shape[0]), size):
            A = np.vstack([Aeq, Ain[list(W)]])
            K = np.block([[P, A.T], [A, np.zeros((len(A), len(A)))]])
            try:
                z = np.linalg.solve(K, np.concatenate([-q, beq, bin[list(W)]]))
            except np.linalg.LinAlgError:
                continue
            g, mu = z[:d], z[d + e:]
            if np.all(Ain @ g <= bin + 1e-9) and np.all(mu >= -1e-9):
                return g
    raise AssertionError("no KKT point found")


def independent_kkt(qp, sol, tol=1e-7):
    g = sol.g_star
    lag = qp.P @ g + qp.q + qp.Aeq.T @ sol.eq_multipliers + qp.Ain.T @ sol.ineq_multipliers
    slack = qp.bin - qp.Ain @ g
    scale = 1 + np.linalg.norm(qp.q, np.inf) + np.linalg.norm(qp.P @ g, np.inf)
    return (np.linalg.norm(lag, np.inf) <= tol * scale and np.all(slack >= -tol)
            and np.allclose(qp.Aeq @ g, qp.beq, atol=tol) and np.all(sol.ineq_multipliers >= 0)
            and np.all(np.abs(sol.ineq_multipliers * slack) <= tol))


def random_qp(seed, d=None, n_eq=None, n_in=None):
    rng = np.random.default_rng(seed)
    d = d or int(rng.integers(2, 7))
    n_eq = int(rng.integers(0, min(d - 1, 2) + 1)) if n_eq is None else n_eq
    n_in = int(rng.integers(0, 6)) if n_in is None else n_in
    X = rng.standard_normal((d, d))
    P = X @ X.T + 0.1 * np.eye(d)
    feasible = rng.standard_normal(d)
    Aeq = rng.standard_normal((n_eq, d))
    Ain = rng.standard_normal((n_in, d))
    return QpProblem(P=P, q=3 * rng.standard_normal(d), Aeq=Aeq, beq=Aeq @ feasible, Ain=Ain,
                     bin=Ain @ feasible + rng.uniform(0, 1, n_in))


class TestSolveExamples:
    def test_unconstrained_origin(self):
        sol = solve(QpProblem(P=2 * np.eye(3), q=np.zeros(3)))
        np.testing.assert_array_equal(sol.g_star, 0)
        assert sol.active_set == ()

    def test_equality_projection(self):
        qp = QpProblem(P=2 * np.eye(2), q=np.zeros(2), Aeq=[[1.0, 0.0]], beq=[1.0])
        sol = solve(qp)
        np.testing.assert_allclose(sol.g_star, [1, 0], atol=1e-14)
        # stationarity 2 g + nu e_1 = 0 gives nu = -2
        np.testing.assert_allclose(sol.eq_multipliers, [-2.0])

    def test_clamped_scalar(self):
        # (g - 2)^2 = g^2 - 4 g + 4 in the 1/2 g'Pg + q'g form
        qp = QpProblem(P=[[2.0]], q=[-4.0], Ain=[[1.0]], bin=[1.0])
        sol = solve(qp)
        np.testing.assert_allclose(sol.g_star, [1.0])
        assert sol.active_set == (0,)
        np.testing.assert_allclose(sol.ineq_multipliers, [2.0])
        assert check_kkt(qp, sol)

    def test_infeasible(self):
        qp = QpProblem(P=np.eye(1), q=[0.0], Ain=[[1.0], [-1.0]], bin=[-1.0, -1.0])
        with pytest.raises(InfeasibleError):
            solve(qp)

    def test_indefinite_hessian(self):
        with pytest.raises(NotConvexError):
            ActiveSetSolver(np.diag([1.0, -1.0]))
        with pytest.raises(NotConvexError):
            ActiveSetSolver(np.zeros((2, 2)))

    def test_asymmetric_hessian(self):
        with pytest.raises(ValueError):
            QpProblem(P=[[1.0, 1.0], [0.0, 1.0]], q=[0, 0])

    def test_warm_start_same_solution(self):
        qp = random_qp(3, d=6, n_eq=1, n_in=5)
        solver = ActiveSetSolver.from_problem(qp)
        cold = solver.solve(qp.q, qp.beq, qp.bin)
        warm = solver.solve(qp.q, qp.beq, qp.bin, warm_start=cold.working_set)
        np.testing.assert_allclose(warm.g_star, cold.g_star, atol=1e-12)
        assert warm.iterations <= cold.iterations
        # a stale or nonsense warm start is tolerated
        bad = solver.solve(qp.q, qp.beq, qp.bin, warm_start=(0, 1, 2, 3, 4))
        np.testing.assert_allclose(bad.g_star, cold.g_star, atol=1e-10)

    def test_dump_roundtrip(self, tmp_path):
        qp = random_qp(5, d=4, n_eq=1, n_in=3)
        qp.dump(tmp_path / "qp.txt")
        back = QpProblem.load(tmp_path / "qp.txt")
        for name in ("P", "q", "Aeq", "beq", "Ain", "bin"):
            assert getattr(back, name).tobytes() == getattr(qp, name).tobytes()

    def test_residual_report(self):
        qp = QpProblem(P=[[2.0]], q=[-4.0], Ain=[[1.0]], bin=[1.0])
        res = kkt_residuals(qp, solve(qp))
        assert set(res) == {"stationarity", "primal_eq", "primal_in", "dual", "complementarity"}
        assert max(res.values()) < 1e-12


class TestSolveProperties:
    @settings(max_examples=80)
    @given(seed=st.integers(0, 100_000))
    def test_kkt_and_brute_force(self, seed):
        qp = random_qp(seed)
        sol = solve(qp)
        assert independent_kkt(qp, sol)
        ref = brute_force(qp.P, qp.q, qp.Aeq, qp.beq, qp.Ain, qp.bin)
        np.testing.assert_allclose(sol.g_star, ref, atol=1e-7 * (1 + np.abs(ref).max()))
        slack = qp.bin - qp.Ain @ sol.g_star
        assert sol.active_set == tuple(np.flatnonzero(slack <= 1e-8))

    @settings(max_examples=40)
    @given(seed=st.integers(0, 100_000))
    def test_equality_only_objective(self, seed):
        qp = random_qp(seed, n_in=0)
        sol = solve(qp)
        # null-space elimination reference
        if qp.Aeq.shape[0]:
            g0 = np.linalg.lstsq(qp.Aeq, qp.beq, rcond=None)[0]
            Z = la.null_space(qp.Aeq)
        else:
            g0, Z = np.zeros(qp.d), np.eye(qp.d)
        y = np.linalg.solve(Z.T @ qp.P @ Z, -Z.T @ (qp.P @ g0 + qp.q))
        g = g0 + Z @ y
        assert abs(sol.objective - qp.objective(g)) <= 1e-10 * (1 + abs(qp.objective(g)))


class TestAffineLaw:
    def test_unconstrained_identity(self):
        # 1/2|g|^2 - theta'g: q = G theta with G = -I
        qp = QpProblem(P=np.eye(2), q=[-0.3, 0.7])
        sol = solve(qp)
        law = affine_law(qp, -np.eye(2), np.zeros((0, 2)), sol, theta=[0.3, -0.7])
        np.testing.assert_allclose(law.A_tilde, np.eye(2), atol=1e-14)
        np.testing.assert_allclose(law.h_tilde, 0, atol=1e-14)
        assert not law.degenerate

    def test_clamped(self):
        qp = QpProblem(P=[[1.0]], q=[-2.0], Ain=[[1.0]], bin=[1.0])
        sol = solve(qp)
        law = affine_law(qp, [[-1.0]], np.zeros((0, 1)), sol, theta=[2.0])
        np.testing.assert_allclose(law.A_tilde, [[0.0]], atol=1e-14)
        np.testing.assert_allclose(law.h_tilde, [1.0])
        assert law.region_active_set == (0,)

    def test_weakly_active_flagged(self):
        qp = QpProblem(P=[[1.0]], q=[-1.0], Ain=[[1.0]], bin=[1.0])
        sol = solve(qp)
        law = affine_law(qp, [[-1.0]], np.zeros((0, 1)), sol, theta=[1.0])
        assert law.degenerate and law.dropped == (0,)
        np.testing.assert_allclose(law.A_tilde, [[1.0]])

    def test_dependent_constraints_flagged(self):
        qp = QpProblem(P=[[1.0]], q=[-2.0], Ain=[[1.0], [2.0]], bin=[1.0, 2.0])
        sol = solve(qp)
        law = affine_law(qp, [[-1.0]], np.zeros((0, 1)), sol, theta=[2.0])
        assert law.degenerate
        np.testing.assert_allclose(law.A_tilde, [[0.0]], atol=1e-14)
        np.testing.assert_allclose(law([2.0]), sol.g_star)

    @settings(max_examples=60)
    @given(seed=st.integers(0, 100_000))
    def test_law_inside_region(self, seed):
        rng = np.random.default_rng(seed)
        base = random_qp(seed, n_in=int(rng.integers(1, 6)))
        d, e = base.d, base.Aeq.shape[0]
        k = 3
        G = rng.standard_normal((d, k))
        Beq = rng.standard_normal((e, k))
        theta = rng.standard_normal(k)
        q0, b0 = base.q - G @ theta, base.beq - Beq @ theta
        solver = ActiveSetSolver.from_problem(base)
        sol = solver.solve(G @ theta + q0, Beq @ theta + b0, base.bin)
        law = solver.affine_law(sol, G, Beq, theta)
        np.testing.assert_allclose(law(theta), sol.g_star, atol=1e-10 * (1 + np.abs(sol.g_star).max()))
        for _ in range(5):
            t2 = theta + 1e-3 * rng.standard_normal(k)
            s2 = solver.solve(G @ t2 + q0, Beq @ t2 + b0, base.bin)
            if s2.active_set != sol.active_set or law.degenerate:
                continue
            assert np.linalg.norm(s2.g_star - law(t2)) < 1e-8 * (1 + np.linalg.norm(s2.g_star))
