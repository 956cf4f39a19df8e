"""
Averaging repeated experiments
==============================

Repeat the data experiment N times with the same input. The input blocks
are identical in every repetition, so averaging only touches the outputs
and their noise shrinks like 1/sqrt(N).
"""
import numpy as np

from ekf_deepc import average_data_blocks, benchmark_model, collect_dataset, generate_pe_input, simulate
from ekf_deepc.hankel import split_past_future
from ekf_deepc.lti_sim import NoiseSpec

model = benchmark_model()
Np, Nf = 3, 5
u = generate_pe_input(1, 100, Np + Nf + model.n, amplitude=2.0, seed=0)
clean = split_past_future(u, simulate(model, np.zeros(2), u).outputs, Np, Nf)

trajs = collect_dataset(model, 40, u, noise=NoiseSpec(0.5, 0.5), seed=1)
blocks = [split_past_future(t.inputs, t.outputs, Np, Nf) for t in trajs]

print(" N   |Yp - Yp_clean|_F   ratio to N=1")
base = None
for N in (1, 5, 10, 20, 40):
    avg = average_data_blocks(blocks[:N])
    err = np.linalg.norm(avg.Yp - clean.Yp)
    base = base or err
    print(f"{N:3d}   {err:10.3f}         {err / base:5.3f}   (1/sqrt(N) = {1 / np.sqrt(N):5.3f})")

# averaging needs a shared input; anything else is rejected
other = split_past_future(np.roll(u, 1), trajs[0].outputs, Np, Nf)
try:
    average_data_blocks([blocks[0], other])
except ValueError as exc:
    print(f"rejected: {exc}")
