import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ekf_deepc.deepc import (DeePCConfig, assemble_parametric_qp, deepc_step_ekf, deepc_step_standard,
                             prediction_map)
from ekf_deepc.harness import mpc_oracle
from ekf_deepc.hankel import split_past_future
from ekf_deepc.lti_sim import NoiseSpec, benchmark_model, generate_pe_input, simulate
from ekf_deepc.qp import InfeasibleError, NotConvexError


def clean_blocks(Np=3, Nf=5, T=100, seed=0, model=None):
    model = model or benchmark_model()
    u = generate_pe_input(model.m, T, Np + Nf + model.n, amplitude=2.0, seed=seed)
    traj = simulate(model, np.zeros(model.n), u)
    return split_past_future(traj.inputs, traj.outputs, Np, Nf)


def noisy_blocks(Np=3, Nf=5, T=100, seed=0):
    u = generate_pe_input(1, T, Np + Nf + 2, amplitude=2.0, seed=seed)
    traj = simulate(benchmark_model(), np.zeros(2), u, NoiseSpec(0.5, 0.5, seed=seed + 1))
    return split_past_future(traj.inputs, traj.outputs, Np, Nf)


def lifted_optimum(data, cfg, r, u_p, z):
    """Solve the uncondensed program in (g, u, y) with coupling equalities through its KKT system."""
    d, m, p, Nf = data.L, data.m, data.p, cfg.Nf
    Q, R = cfg.weights(m, p)
    Qb, Rb = np.kron(np.eye(Nf), Q), np.kron(np.eye(Nf), R)
    nu, ny = m * Nf, p * Nf
    H = np.zeros((d + nu + ny,) * 2)
    H[:d, :d] = 2 * (cfg.lambda_y * data.Yp.T @ data.Yp + cfg.lambda_g * np.eye(d))
    H[d:d + nu, d:d + nu] = 2 * Rb
    H[d + nu:, d + nu:] = 2 * Qb
    c = np.concatenate([-2 * cfg.lambda_y * data.Yp.T @ z, np.zeros(nu), -2 * Qb @ r])
    A = np.vstack([
        np.hstack([-data.Uf, np.eye(nu), np.zeros((nu, ny))]),
        np.hstack([-data.Yf, np.zeros((ny, nu)), np.eye(ny)]),
        np.hstack([data.Up, np.zeros((data.Up.shape[0], nu + ny))]),
    ])
    b = np.concatenate([np.zeros(nu + ny), u_p])
    K = np.block([[H, A.T], [A, np.zeros((len(A), len(A)))]])
    sol = np.linalg.lstsq(K, np.concatenate([-c, b]), rcond=None)[0]
    x = sol[:d + nu + ny]
    g, u, y = x[:d], x[d:d + nu], x[d + nu:]
    cost = ((y - r) @ Qb @ (y - r) + u @ Rb @ u + cfg.lambda_y * np.sum((data.Yp @ g - z) ** 2)
            + cfg.lambda_g * g @ g)
    return g, cost


class TestAssemble:
    def test_hessian_without_regularization(self):
        rng = np.random.default_rng(1)
        data = split_past_future(rng.standard_normal(6), rng.standard_normal(6), 2, 2)
        assert data.L == 3
        # generic data with d = 3 <= 4 future rows, so P is PD without regularization
        pqp = assemble_parametric_qp(data, DeePCConfig(Np=2, Nf=2, lambda_y=0.0, lambda_g=0.0))
        np.testing.assert_allclose(pqp.P, data.Yf.T @ data.Yf + data.Uf.T @ data.Uf, atol=1e-12)

    def test_constraint_vector(self):
        cfg = DeePCConfig(u_min=-1, u_max=1, y_min=-10, y_max=10)
        pqp = assemble_parametric_qp(clean_blocks(), cfg)
        np.testing.assert_array_equal(pqp.bin, [1] * 10 + [10] * 10)
        np.testing.assert_array_equal(pqp.Ain[:5], pqp.Ain[5:10] * -1)

    def test_benchmark_dimensions(self):
        pqp = assemble_parametric_qp(clean_blocks(), DeePCConfig())
        assert pqp.d == 93 and pqp.dim_theta == 6
        np.testing.assert_array_equal(pqp.Beq, np.hstack([np.zeros((3, 3)), np.eye(3)]))
        np.testing.assert_allclose(pqp.G[:, :3], -1e3 * clean_blocks().Yp.T)
        np.testing.assert_array_equal(pqp.G[:, 3:], 0)

    def test_rank_deficient_hessian(self):
        with pytest.raises(NotConvexError, match="lambda_g"):
            assemble_parametric_qp(clean_blocks(), DeePCConfig(lambda_g=0.0))

    def test_horizon_mismatch(self):
        with pytest.raises(ValueError):
            assemble_parametric_qp(clean_blocks(), DeePCConfig(Np=2))

    @pytest.mark.parametrize("kwargs", [dict(Np=0), dict(Nc=5), dict(lambda_g=-1.0), dict(u_min=2, u_max=1),
                                        dict(y_min=2, y_max=1)])
    def test_config_invariants(self, kwargs):
        with pytest.raises(ValueError):
            DeePCConfig(**kwargs)

    def test_weights_validated(self):
        with pytest.raises(ValueError):
            DeePCConfig(R=0.0).weights(1, 1)
        with pytest.raises(ValueError):
            DeePCConfig(Q=-1.0).weights(1, 1)


class TestStandardStep:
    def test_origin_is_optimal(self):
        data = clean_blocks()
        cfg = DeePCConfig()
        step = deepc_step_standard(assemble_parametric_qp(data, cfg), data, cfg, np.zeros(5), np.zeros(3),
                                   np.zeros(3))
        np.testing.assert_allclose(step.u_applied, 0, atol=1e-10)
        assert step.u_applied.shape == (1, 1)

    def test_input_saturation(self):
        data = clean_blocks()
        cfg = DeePCConfig(u_min=-0.5, u_max=0.5)
        step = deepc_step_standard(assemble_parametric_qp(data, cfg), data, cfg, np.full(5, 50.0), np.zeros(3),
                                   np.zeros(3))
        np.testing.assert_allclose(step.u_applied, [[0.5]], atol=1e-9)
        assert 0 in step.solution.active_set

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_model_based_mpc(self, seed):
        model = benchmark_model()
        data = clean_blocks(seed=seed)
        cfg = DeePCConfig(lambda_y=1e8, lambda_g=1e-8)
        rng = np.random.default_rng(seed)
        x0 = rng.standard_normal(2)
        past = simulate(model, x0, rng.uniform(-1, 1, (3, 1)))
        x_now = model.A @ past.states[-1] + model.B @ past.inputs[-1]
        r = 5 * np.sin(0.3 * np.arange(5))
        step = deepc_step_standard(assemble_parametric_qp(data, cfg), data, cfg, r, past.inputs.ravel(),
                                   past.outputs.ravel())
        np.testing.assert_allclose(step.u_applied[0], mpc_oracle(model, cfg, x_now, r), atol=1e-6)

    def test_sub_sequence_length(self):
        data = clean_blocks()
        cfg = DeePCConfig(Nc=2)
        step = deepc_step_standard(assemble_parametric_qp(data, cfg), data, cfg, np.ones(5), np.zeros(3),
                                   np.zeros(3))
        assert step.u_applied.shape == (3, 1)
        np.testing.assert_allclose(step.u_applied.ravel(), (data.Uf @ step.g_star)[:3])

    def test_wrong_window_sizes(self):
        data = clean_blocks()
        cfg = DeePCConfig()
        pqp = assemble_parametric_qp(data, cfg)
        with pytest.raises(ValueError):
            deepc_step_standard(pqp, data, cfg, np.zeros(4), np.zeros(3), np.zeros(3))
        with pytest.raises(ValueError):
            deepc_step_standard(pqp, data, cfg, np.zeros(5), np.zeros(2), np.zeros(3))

    def test_infeasible_output_box_widened(self):
        # zero input and a narrow output band away from the free response
        data = clean_blocks()
        cfg = DeePCConfig(u_min=0, u_max=0, y_min=0.5, y_max=0.52)
        step = deepc_step_standard(assemble_parametric_qp(data, cfg), data, cfg, np.zeros(5), np.zeros(3),
                                   np.zeros(3))
        assert step.fallback
        assert np.all(step.y_pred >= 0.51 - 10 * 0.01 - 1e-8)

    def test_infeasible_after_widening(self):
        data = clean_blocks()
        cfg = DeePCConfig(u_min=0, u_max=0, y_min=1.0, y_max=1.001)
        with pytest.raises(InfeasibleError):
            deepc_step_standard(assemble_parametric_qp(data, cfg), data, cfg, np.zeros(5), np.zeros(3),
                                np.zeros(3))

    def test_large_regularization_drives_input_to_zero(self):
        # u_p = 0 so that g = 0 stays feasible for the hard past-input constraint
        data = noisy_blocks()
        u0, g = [], []
        for lg in (1e0, 1e3, 1e6, 1e9, 1e12):
            cfg = DeePCConfig(lambda_g=lg)
            step = deepc_step_standard(assemble_parametric_qp(data, cfg), data, cfg, np.full(5, 3.0),
                                       np.zeros(3), np.ones(3))
            u0.append(abs(step.u_applied[0, 0]))
            g.append(np.linalg.norm(step.g_star))
        assert u0[-1] < 1e-6
        assert g == sorted(g, reverse=True)


class TestCondensedForm:
    @settings(max_examples=25)
    @given(seed=st.integers(0, 10_000), log_ly=st.floats(-1, 4), log_lg=st.floats(-2, 3))
    def test_matches_lifted_program(self, seed, log_ly, log_lg):
        data = noisy_blocks(seed=seed % 50)
        cfg = DeePCConfig(lambda_y=10 ** log_ly, lambda_g=10 ** log_lg)
        rng = np.random.default_rng(seed)
        r, u_p, z = rng.standard_normal(5) * 3, rng.uniform(-1, 1, 3), rng.standard_normal(3)
        pqp = assemble_parametric_qp(data, cfg)
        step = deepc_step_standard(pqp, data, cfg, r, u_p, z)
        g_ref, cost = lifted_optimum(data, cfg, r, u_p, z)
        np.testing.assert_allclose(step.g_star, g_ref, atol=1e-8 * (1 + np.abs(g_ref).max()))
        assert step.objective == pytest.approx(0.5 * cost, rel=1e-8, abs=1e-8)

    @settings(max_examples=25)
    @given(seed=st.integers(0, 10_000))
    def test_shift_consistency(self, seed):
        data = noisy_blocks(seed=seed % 50)
        cfg = DeePCConfig()
        rng = np.random.default_rng(seed)
        step = deepc_step_standard(assemble_parametric_qp(data, cfg), data, cfg, rng.standard_normal(5),
                                   rng.uniform(-1, 1, 3), rng.standard_normal(3))
        M = prediction_map(data, cfg).M
        assert (M @ step.g_star)[-1] == pytest.approx(step.y_pred[0], abs=1e-12)


class TestEkfStep:
    def test_same_parameter_same_output(self):
        data = noisy_blocks()
        cfg = DeePCConfig()
        pqp = assemble_parametric_qp(data, cfg)
        y_p, u_p, r = np.array([0.3, -0.2, 0.5]), np.array([0.1, 0.0, -0.4]), np.full(5, 2.0)
        a = deepc_step_standard(pqp, data, cfg, r, u_p, y_p)
        b = deepc_step_ekf(pqp, data, cfg, r, u_p, y_p)
        np.testing.assert_array_equal(a.g_star, b.g_star)
        np.testing.assert_array_equal(a.u_applied, b.u_applied)
        assert a.law is None and b.law is not None

    def test_no_output_penalty_decouples_estimate(self):
        data = noisy_blocks()
        cfg = DeePCConfig(lambda_y=0.0, lambda_g=10.0)
        pqp = assemble_parametric_qp(data, cfg)
        u_p, r = np.array([0.1, 0.0, -0.4]), np.full(5, 2.0)
        a = deepc_step_ekf(pqp, data, cfg, r, u_p, np.zeros(3))
        b = deepc_step_ekf(pqp, data, cfg, r, u_p, np.array([5.0, -3.0, 1.0]))
        np.testing.assert_allclose(a.g_star, b.g_star, atol=1e-12)
        np.testing.assert_allclose(a.law.A_tilde[:, :3], 0, atol=1e-12)

    @pytest.mark.parametrize("bounds", [dict(), dict(u_min=-0.3, u_max=0.3)])
    def test_law_matches_finite_differences(self, bounds):
        data = noisy_blocks(seed=3)
        cfg = DeePCConfig(**bounds)
        pqp = assemble_parametric_qp(data, cfg)
        z, u_p, r = np.array([0.4, 0.1, -0.2]), np.array([0.2, -0.1, 0.3]), np.full(5, 4.0)
        base = deepc_step_ekf(pqp, data, cfg, r, u_p, z)
        for j in range(3):
            eps = 1e-4
            dz = np.zeros(3)
            dz[j] = eps
            up = deepc_step_ekf(pqp, data, cfg, r, u_p, z + dz)
            dn = deepc_step_ekf(pqp, data, cfg, r, u_p, z - dz)
            assert up.solution.active_set == base.solution.active_set == dn.solution.active_set
            fd = (up.g_star - dn.g_star) / (2 * eps)
            col = base.law.A_tilde[:, j]
            assert np.linalg.norm(fd - col) <= 1e-5 * (1 + np.linalg.norm(col))


class TestPredictionMap:
    def test_single_past_step(self):
        data = clean_blocks(Np=1)
        M = prediction_map(data).M
        np.testing.assert_array_equal(M, data.Yf[:1])

    def test_scalar_three_past_steps(self):
        data = clean_blocks()
        M = prediction_map(data).M
        np.testing.assert_array_equal(M, np.vstack([data.Yp[1], data.Yp[2], data.Yf[0]]))

    def test_multi_output_rows(self):
        rng = np.random.default_rng(0)
        data = split_past_future(rng.standard_normal((30, 1)), rng.standard_normal((30, 2)), 3, 2)
        M = prediction_map(data).M
        assert M.shape == (6, data.L)
        np.testing.assert_array_equal(M[:4], data.Yp[2:])
        np.testing.assert_array_equal(M[4:], data.Yf[:2])

    def test_reproduces_shifted_window(self):
        model = benchmark_model()
        data = clean_blocks()
        H = np.vstack([data.Up, data.Uf, data.Yp, data.Yf])
        traj = simulate(model, np.array([1.0, -0.5]), np.random.default_rng(4).uniform(-1, 1, (8, 1)))
        w = np.concatenate([traj.inputs.ravel(), traj.outputs[:3].ravel(), traj.outputs[3:].ravel()])
        g = np.linalg.lstsq(H, w, rcond=None)[0]
        np.testing.assert_allclose(prediction_map(data).M @ g, traj.outputs[1:4].ravel(), atol=1e-9)
