"""
Data collection and persistency of excitation
=============================================

Simulate the second-order benchmark plant under a random exciting input,
build the past/future Hankel blocks, and confirm that every short
trajectory of the plant lies in their range.
"""
import numpy as np

from ekf_deepc import benchmark_model, generate_pe_input, simulate, split_past_future
from ekf_deepc.hankel import excitation_order, numerical_rank
from ekf_deepc.lti_sim import NoiseSpec

model = benchmark_model()
Np, Nf, T = 3, 5, 100
order = Np + Nf + model.n
print(f"plant: n={model.n}, m={model.m}, p={model.p}; required excitation order {order}")

# an i.i.d. uniform input is exciting of high order with probability one
u = generate_pe_input(model.m, T, order, amplitude=2.0, seed=0)
print(f"input of length {T} is exciting of order {excitation_order(u)}")

# a periodic input is not, however long it is
periodic = np.tile([1.0, -1.0, 0.5], 40)[:, None]
print(f"period-3 input is exciting of order {excitation_order(periodic)} only")

# noise-free data: the stacked Hankel matrix has rank m*(Np+Nf) + n
data = simulate(model, np.zeros(model.n), u)
blocks = split_past_future(data.inputs, data.outputs, Np, Nf)
H = blocks.stacked()
print(f"stacked data matrix {H.shape}, rank {numerical_rank(H)} (expected {model.m * (Np + Nf) + model.n})")

# any fresh trajectory of length Np+Nf is a combination of the data columns
rng = np.random.default_rng(1)
fresh = simulate(model, rng.standard_normal(model.n), rng.uniform(-1, 1, (Np + Nf, 1)))
w = np.concatenate([fresh.inputs[:Np].ravel(), fresh.inputs[Np:].ravel(),
                    fresh.outputs[:Np].ravel(), fresh.outputs[Np:].ravel()])
g = np.linalg.lstsq(H, w, rcond=None)[0]
print(f"fresh trajectory reproduced with residual {np.linalg.norm(H @ g - w):.2e}")

# with noise the rank is full: every window fits, and the size of g
# rather than the residual reflects the noise
noisy = simulate(model, np.zeros(model.n), u, NoiseSpec(0.5, 0.5, seed=2))
Hn = split_past_future(noisy.inputs, noisy.outputs, Np, Nf).stacked()
g = np.linalg.lstsq(Hn, w, rcond=None)[0]
print(f"noisy data rank {numerical_rank(Hn)} of {Hn.shape[0]} rows; the fit now needs |g| = {np.linalg.norm(g):.2f}")
