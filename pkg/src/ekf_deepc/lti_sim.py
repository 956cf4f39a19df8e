"""Stochastic LTI plants: simulation, exciting inputs and dataset collection.

The plant is

    x[k+1] = A x[k] + B u[k] + E w[k]
    y[k]   = C x[k] + D u[k] + F v[k]

with w[k] ~ N(0, sigma_w2 I_n) and v[k] ~ N(0, sigma_v2 I_p). The output uses
the state *before* the update.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .hankel import build_block_hankel, is_persistently_exciting


class DimensionError(ValueError):
    """Raised when vectors or matrices do not match the model dimensions."""


def _as_matrix(a, rows: int, cols: int, name: str) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape != (rows, cols):
        raise DimensionError(f"{name} has shape {a.shape}, expected {(rows, cols)}")
    return a


@dataclass(frozen=True)
class LtiModel:
    """State-space matrices and noise gains of a discrete-time LTI plant."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: Optional[np.ndarray] = None
    E: Optional[np.ndarray] = None
    F: Optional[np.ndarray] = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        if n < 1 or A.shape != (n, n):
            raise DimensionError(f"A must be square and non-empty, got {A.shape}")
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(n, -1)
        m = B.shape[1]
        B = _as_matrix(B, n, m, "B")
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        p = C.shape[0]
        C = _as_matrix(C, p, n, "C")
        D = np.zeros((p, m)) if self.D is None else _as_matrix(self.D, p, m, "D")
        E = np.eye(n) if self.E is None else _as_matrix(self.E, n, n, "E")
        F = np.eye(p) if self.F is None else _as_matrix(self.F, p, p, "F")
        if m < 1 or p < 1:
            raise DimensionError("m and p must be at least 1")
        for name, value in zip("ABCDEF", (A, B, C, D, E, F)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]


def benchmark_model() -> LtiModel:
    """The two-state reachable and observable benchmark plant (D = 0)."""
    return LtiModel(
        A=[[0.8, 1.0], [0.0, 0.8]],
        B=[[0.0], [1.0]],
        C=[[1.0, 1.0]],
    )


@dataclass(frozen=True)
class NoiseSpec:
    """Isotropic process/measurement noise variances and the RNG seed."""

    sigma_w2: float = 0.0
    sigma_v2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_w2 < 0 or self.sigma_v2 < 0:
            raise ValueError("noise variances must be non-negative")


@dataclass
class Trajectory:
    """Input/output samples stored row-wise: ``inputs[k]`` is u_k."""

    inputs: np.ndarray
    outputs: np.ndarray
    states: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.outputs = np.atleast_2d(np.asarray(self.outputs, dtype=float))
        if len(self.inputs) != len(self.outputs) or len(self.inputs) < 1:
            raise ValueError("inputs and outputs must have equal, non-zero length")

    @property
    def T(self) -> int:
        return len(self.inputs)

    def to_csv(self, path) -> None:
        m, p = self.inputs.shape[1], self.outputs.shape[1]
        header = ["k"] + [f"u_{i}" for i in range(m)] + [f"y_{i}" for i in range(p)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for k in range(self.T):
                writer.writerow([k, *(repr(float(v)) for v in self.inputs[k]), *(repr(float(v)) for v in self.outputs[k])])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = np.array([[float(v) for v in row] for row in reader])
        m = sum(h.startswith("u_") for h in header)
        return cls(inputs=rows[:, 1:1 + m], outputs=rows[:, 1 + m:])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def step(model: LtiModel, x, u, w, v):
    """One plant transition. Returns ``(x_next, y)`` with y computed from x."""
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    if x.size != model.n or u.size != model.m or w.size != model.n or v.size != model.p:
        raise DimensionError(
            f"step expects x:{model.n} u:{model.m} w:{model.n} v:{model.p}, "
            f"got x:{x.size} u:{u.size} w:{w.size} v:{v.size}"
        )
    y = model.C @ x + model.D @ u + v
    x_next = model.A @ x + model.B @ u + w
    return x_next, y


def draw_noise(model: LtiModel, noise: NoiseSpec, T: int, rng=None):
    """Sample ``(w, v)`` of shapes (T, n) and (T, p), already mapped through E and F."""
    rng = _rng(noise.seed if rng is None else rng)
    eps = rng.standard_normal((T, model.n)) * np.sqrt(noise.sigma_w2)
    eta = rng.standard_normal((T, model.p)) * np.sqrt(noise.sigma_v2)
    return eps @ model.E.T, eta @ model.F.T


def _rowwise(x: np.ndarray, M: np.ndarray) -> np.ndarray:
    """``x @ M.T`` accumulated column by column.

    Elementwise accumulation gives every row the same rounding whatever the
    batch size, so member i of a dataset does not depend on N.
    """
    out = np.zeros(x.shape[:-1] + (M.shape[0],))
    for j in range(M.shape[1]):
        out += x[..., j:j + 1] * M[:, j]
    return out


def _simulate_batch(model: LtiModel, x0: np.ndarray, inputs: np.ndarray, w: np.ndarray, v: np.ndarray):
    # x0: (N, n), inputs: (T, m), w: (N, T, n), v: (N, T, p)
    N, T = w.shape[0], inputs.shape[0]
    xs = np.empty((N, T, model.n))
    x = x0
    Bu = _rowwise(inputs, model.B)
    for k in range(T):
        xs[:, k] = x
        x = _rowwise(x, model.A) + Bu[k] + w[:, k]
    ys = _rowwise(xs, model.C) + _rowwise(inputs, model.D)[None] + v
    return xs, ys


def simulate(model: LtiModel, x0, inputs, noise: NoiseSpec = NoiseSpec(), rng=None) -> Trajectory:
    """Run the plant over ``inputs`` (shape (T, m)) from ``x0``.

    Noise is drawn from ``rng`` when given, otherwise from ``noise.seed``.
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1:
        inputs = inputs.reshape(-1, model.m)
    if inputs.shape[0] < 1:
        raise ValueError("inputs must be non-empty")
    if inputs.shape[1] != model.m:
        raise DimensionError(f"inputs have {inputs.shape[1]} channels, model has m={model.m}")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != model.n:
        raise DimensionError(f"x0 has size {x0.size}, model has n={model.n}")
    w, v = draw_noise(model, noise, len(inputs), rng)
    xs, ys = _simulate_batch(model, x0[None], inputs, w[None], v[None])
    return Trajectory(inputs=inputs.copy(), outputs=ys[0], states=xs[0])


def generate_pe_input(m: int, T: int, order: int, amplitude: float = 1.0, seed=None,
                      max_retries: int = 20, rank_tol: float = 1e-9) -> np.ndarray:
    """I.i.d. uniform samples on [-amplitude, amplitude]^m, checked for excitation.

    Returns an array of shape (T, m) whose order-``order`` block-Hankel matrix
    has full row rank.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    needed = (m + 1) * order - 1
    if T < needed:
        raise ValueError(
            f"T={T} is too short for excitation of order {order} with m={m}: "
            f"need T >= (m+1)*order - 1 = {needed}"
        )
    rng = _rng(seed)
    for _ in range(max_retries):
        u = rng.uniform(-amplitude, amplitude, size=(T, m))
        if is_persistently_exciting(build_block_hankel(u, order), rank_tol):
            return u
    raise RuntimeError(f"no persistently exciting draw of order {order} after {max_retries} tries")


def gaussian_x0_sampler(n: int, variance: float = 0.0) -> Callable[[np.random.Generator], np.ndarray]:
    """Zero-mean Gaussian initial-state sampler."""
    scale = np.sqrt(variance)

    def sample(rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(n) * scale

    return sample


def collect_dataset(model: LtiModel, N: int, inputs, x0_sampler=None,
                    noise: NoiseSpec = NoiseSpec(), seed=None) -> list[Trajectory]:
    """Run ``N`` experiments sharing one input sequence.

    Each experiment gets its own child stream of the master seed (``seed`` if
    given, else ``noise.seed``), used for its initial state and its noise.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    inputs = np.asarray(inputs, dtype=float).reshape(-1, model.m)
    x0_sampler = x0_sampler or gaussian_x0_sampler(model.n, 0.0)
    master = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(
        noise.seed if seed is None else seed)
    T = len(inputs)
    x0 = np.empty((N, model.n))
    w = np.empty((N, T, model.n))
    v = np.empty((N, T, model.p))
    for i, child in enumerate(master.spawn(N)):
        rng = np.random.default_rng(child)
        x0[i] = x0_sampler(rng)
        w[i], v[i] = draw_noise(model, noise, T, rng)
    xs, ys = _simulate_batch(model, x0, inputs, w, v)
    return [Trajectory(inputs=inputs.copy(), outputs=ys[i], states=xs[i]) for i in range(N)]


def observability_matrix(model: LtiModel, rows: int, start: int = 0) -> np.ndarray:
    """col(C A^start, ..., C A^(start+rows-1))."""
    blocks = []
    Ak = np.linalg.matrix_power(model.A, start)
    for _ in range(rows):
        blocks.append(model.C @ Ak)
        Ak = Ak @ model.A
    return np.vstack(blocks)


def toeplitz_matrix(model: LtiModel, rows: int, cols: int, offset: int = 0,
                    B: Optional[np.ndarray] = None, D: Optional[np.ndarray] = None) -> np.ndarray:
    """Block-Toeplitz map from inputs u_0..u_{cols-1} to outputs y_offset..y_{offset+rows-1}.

    Block (i, j) is the Markov parameter of lag ``offset + i - j``: D at lag 0,
    C A^(l-1) B at lag l > 0, zero for negative lags.
    """
    B = model.B if B is None else B
    D = model.D if D is None else D
    p, m = model.p, B.shape[1]
    out = np.zeros((p * rows, m * cols))
    markov = {0: D}
    for i in range(rows):
        for j in range(cols):
            lag = offset + i - j
            if lag < 0:
                continue
            if lag not in markov:
                markov[lag] = model.C @ np.linalg.matrix_power(model.A, lag - 1) @ B
            out[i * p:(i + 1) * p, j * m:(j + 1) * m] = markov[lag]
    return out


def model_structure_matrices(model: LtiModel, Np: int, Nf: int):
    """Return ``(O_p, O_f, T_p, T_f)`` for the past/future data factorization.

    O_f has Nf block rows C A^Np .. C A^(Np+Nf-1). T_p and T_f both act on
    col(u_p, u_f), so that for zero noise

        col(Y_p, Y_f) = col(O_p, O_f) X + col(T_p, T_f) col(U_p, U_f).
    """
    if Np < 1 or Nf < 1:
        raise ValueError("horizons must be at least 1")
    O_p = observability_matrix(model, Np)
    O_f = observability_matrix(model, Nf, start=Np)
    T_p = toeplitz_matrix(model, Np, Np + Nf)
    T_f = toeplitz_matrix(model, Nf, Np + Nf, offset=Np)
    return O_p, O_f, T_p, T_f


def is_controllable(model: LtiModel, tol: float = 1e-9) -> bool:
    blocks, M = [], model.B
    for _ in range(model.n):
        blocks.append(M)
        M = model.A @ M
    ctrb = np.hstack(blocks)
    s = np.linalg.svd(ctrb, compute_uv=False)
    return bool(s[-1] > tol * s[0])
