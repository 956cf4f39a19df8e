"""
One DeePC step and its affine law
=================================

Solve a single receding-horizon problem, compare it with model-based MPC
on clean data, and read off the local affine law g*(theta) that the
filtered controller uses as its one-step predictor.
"""
import numpy as np

from ekf_deepc import (DeePCConfig, assemble_parametric_qp, benchmark_model, deepc_step_ekf,
                       deepc_step_standard, generate_pe_input, mpc_oracle, prediction_map, simulate)
from ekf_deepc.hankel import split_past_future

model = benchmark_model()
u = generate_pe_input(1, 100, 10, amplitude=2.0, seed=0)
data = split_past_future(u, simulate(model, np.zeros(2), u).outputs, 3, 5)

# with clean data, a heavy past-output weight and tiny regularization DeePC is MPC
cfg = DeePCConfig(lambda_y=1e8, lambda_g=1e-8)
pqp = assemble_parametric_qp(data, cfg)
past = simulate(model, np.array([1.0, -0.5]), np.array([[0.2], [-0.4], [0.1]]))
x_now = model.A @ past.states[-1] + model.B @ past.inputs[-1]
r = 5 * np.sin(0.3 * np.arange(3, 8))
step = deepc_step_standard(pqp, data, cfg, r, past.inputs.ravel(), past.outputs.ravel())
print(f"DeePC first input {step.u_applied[0, 0]:+.8f}")
print(f"MPC   first input {mpc_oracle(model, cfg, x_now, r)[0]:+.8f}")

# a tight input bound becomes active and the input saturates
tight = DeePCConfig(lambda_y=1e8, lambda_g=1e-8, u_min=-0.5, u_max=0.5)
sat = deepc_step_standard(assemble_parametric_qp(data, tight), data, tight, r, past.inputs.ravel(),
                          past.outputs.ravel())
print(f"with |u| <= 0.5: first input {sat.u_applied[0, 0]:+.4f}, active constraints {sat.solution.active_set}")

# the affine law predicts how g* moves when the output window changes
cfg = DeePCConfig(lambda_y=1e3, lambda_g=10.0)
pqp = assemble_parametric_qp(data, cfg)
z = past.outputs.ravel()
base = deepc_step_ekf(pqp, data, cfg, r, past.inputs.ravel(), z)
dz = np.array([0.0, 0.0, 1e-3])
moved = deepc_step_ekf(pqp, data, cfg, r, past.inputs.ravel(), z + dz)
predicted = base.law.A_tilde[:, :3] @ dz
print(f"law error on a 1e-3 perturbation: {np.linalg.norm(moved.g_star - base.g_star - predicted):.2e}")

# composed with the prediction map, the law is a linear model of the output window
M = prediction_map(data).M
A_k = M @ base.law.A_tilde[:, :3]
print("one-step window dynamics A_k:")
print(np.array2string(A_k, precision=3, suppress_small=True))
