"""Closed-loop experiments: DeePC variants against a perfect-model MPC baseline.

Every repetition ``rep`` of an experiment draws its randomness from
``SeedSequence([seed, rep])``, split into three independent streams: the
exciting input used for data collection, the N data experiments, and the
closed loop (warm-up input and plant noise). Variants run with the same
``rep`` therefore see the same data and the same plant noise.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .deepc import (DeePCConfig, ParametricQp, assemble_parametric_qp, deepc_step_ekf,
                    deepc_step_standard, prediction_map)
from .ekf import EkfNoise, ImplicitDynamics, ekf_init, ekf_predict, ekf_update
from .hankel import DataBlocks, average_data_blocks, split_past_future
from .lti_sim import (LtiModel, NoiseSpec, benchmark_model, collect_dataset, draw_noise,
                      gaussian_x0_sampler, generate_pe_input, observability_matrix, toeplitz_matrix)
from .qp import ActiveSetSolver, InfeasibleError, QpError

log = logging.getLogger(__name__)

VARIANTS = ("standard", "averaged", "averaged+ekf", "standard+ekf", "mpc-oracle")


@dataclass(frozen=True)
class Reference:
    """r_k = amplitude * sin(omega * k) (``kind="sine"``) or a constant."""

    kind: str = "sine"
    amplitude: float = 5.0
    omega: float = 0.3

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if self.kind == "sine":
            return self.amplitude * np.sin(self.omega * k)
        if self.kind == "constant":
            return np.full_like(k, self.amplitude)
        if self.kind == "zero":
            return np.zeros_like(k)
        raise ValueError(f"unknown reference kind {self.kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    model: LtiModel = field(default_factory=benchmark_model)
    sigma_w2: float = 0.5
    sigma_v2: float = 0.5
    deepc: DeePCConfig = field(default_factory=lambda: DeePCConfig(lambda_y=1e5, lambda_g=100.0))
    T: int = 100
    N: int = 40
    Nsim: int = 100
    reference: Reference = field(default_factory=Reference)
    variant: str = "averaged+ekf"
    repetitions: int = 100
    seed: int = 0
    lambda_y_grid: tuple = (1e3, 1e4, 1e5)
    lambda_g_grid: tuple = tuple(float(v) for v in np.round(np.logspace(0, 4, 9), 6))
    input_amplitude: float = 2.0
    x0_variance: float = 0.0
    warmup_amplitude: float = 1.0
    online_noise: bool = True
    ekf_q: float = 0.1
    ekf_r: Optional[float] = None
    P0_scale: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        m, n = self.model.m, self.model.n
        need = (m + 1) * (self.deepc.Np + self.deepc.Nf + n) + 1
        if self.T < need:
            raise ValueError(f"T={self.T} is too short: exciting data of order Np+Nf+n needs T >= {need}")
        if self.Nsim < self.deepc.Np:
            raise ValueError("Nsim must be at least Np")
        if self.N < 1 or self.repetitions < 1:
            raise ValueError("N and repetitions must be at least 1")
        if self.sigma_w2 < 0 or self.sigma_v2 < 0:
            raise ValueError("noise variances must be non-negative")

    @property
    def noise(self) -> NoiseSpec:
        return NoiseSpec(self.sigma_w2, self.sigma_v2, self.seed)

    @property
    def pe_order(self) -> int:
        return self.deepc.Np + self.deepc.Nf + self.model.n

    def with_lambdas(self, lambda_y: float, lambda_g: float) -> "ExperimentConfig":
        return replace(self, deepc=replace(self.deepc, lambda_y=lambda_y, lambda_g=lambda_g))

    def ekf_noise(self) -> EkfNoise:
        p, Np = self.model.p, self.deepc.Np
        r = self.ekf_r
        if r is None:
            r = self.sigma_v2 if self.online_noise else 0.0
        # Rk must stay invertible when the measurements are noise-free
        return EkfNoise.isotropic(p * Np, p, q=self.ekf_q, r=max(r, 1e-9))


def rep_streams(seed: int, rep: int):
    """(input, data, closed-loop) seed sequences of one repetition."""
    return np.random.SeedSequence([seed, rep]).spawn(3)


@dataclass
class RepData:
    """Data blocks of one repetition: first member alone, and the average of all N."""

    inputs: np.ndarray
    standard: DataBlocks
    averaged: DataBlocks

    def for_variant(self, variant: str) -> Optional[DataBlocks]:
        if variant.startswith("standard"):
            return self.standard
        if variant.startswith("averaged"):
            return self.averaged
        return None


def prepare_data(cfg: ExperimentConfig, rep: int = 0) -> RepData:
    input_ss, data_ss, _ = rep_streams(cfg.seed, rep)
    m, Np, Nf = cfg.model.m, cfg.deepc.Np, cfg.deepc.Nf
    u = generate_pe_input(m, cfg.T, cfg.pe_order, cfg.input_amplitude, seed=input_ss)
    trajs = collect_dataset(cfg.model, cfg.N, u, gaussian_x0_sampler(cfg.model.n, cfg.x0_variance),
                            cfg.noise, seed=data_ss)
    blocks = [split_past_future(t.inputs, t.outputs, Np, Nf) for t in trajs]
    return RepData(inputs=u, standard=blocks[0], averaged=average_data_blocks(blocks))


@dataclass
class ExperimentResult:
    J: float
    u: np.ndarray
    y: np.ndarray
    r: np.ndarray
    variant: str
    lambda_y: float
    lambda_g: float
    seed: int
    rep: int
    fallbacks: int = 0
    failed: bool = False
    y_clean: Optional[np.ndarray] = field(default=None, repr=False)
    diagnostics: dict = field(default_factory=dict, repr=False)

    def to_csv(self, path) -> None:
        m, p = self.u.shape[1], self.y.shape[1]
        header = ["k"] + [f"u_{i}" for i in range(m)] + [f"y_{i}" for i in range(p)] + [f"r_{i}" for i in range(p)]
        # per-step scalar series only; filter histories stay in memory
        diag_keys = sorted(k for k, v in self.diagnostics.items()
                           if isinstance(v, np.ndarray) and v.shape == (len(self.u),))
        header += diag_keys
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for k in range(len(self.u)):
                row = [k, *self.u[k], *self.y[k], *self.r[k]]
                row += [self.diagnostics[key][k] for key in diag_keys]
                writer.writerow([repr(float(v)) if not isinstance(v, int) else v for v in row])


def closed_loop_cost(u, y, r, Q, R) -> float:
    """sum over k = 1..Nsim of |y_k - r_k|_Q^2 + |u_k|_R^2 (sample 0 excluded)."""
    e = (y - r)[1:]
    uu = u[1:]
    return float(np.einsum("ki,ij,kj->", e, Q, e) + np.einsum("ki,ij,kj->", uu, R, uu))


class MpcOracle:
    """Finite-horizon tracking MPC with the true model and full state access.

    Predicts the same window as DeePC: outputs y_k..y_{k+Nf-1} under inputs
    u_k..u_{k+Nf-1}, with the same weights and box constraints.
    """

    def __init__(self, model: LtiModel, cfg: DeePCConfig):
        m, p, Nf = model.m, model.p, cfg.Nf
        Q, R = cfg.weights(m, p)
        self.model, self.cfg = model, cfg
        self.Ox = observability_matrix(model, Nf)
        self.Gamma = toeplitz_matrix(model, Nf, Nf)
        self.Q_blk = np.kron(np.eye(Nf), Q)
        P = self.Gamma.T @ self.Q_blk @ self.Gamma + np.kron(np.eye(Nf), R)
        u_min, u_max, y_min, y_max = cfg.bounds(m, p)
        self._ub = np.concatenate([np.tile(u_max, Nf), -np.tile(u_min, Nf)])
        self._yb = (np.tile(y_max, Nf), np.tile(y_min, Nf))
        Ain = np.vstack([np.eye(m * Nf), -np.eye(m * Nf), self.Gamma, -self.Gamma])
        self.solver = ActiveSetSolver(0.5 * (P + P.T), None, Ain)
        self._warm: tuple = ()

    def _bin(self, free: np.ndarray, factor: float = 1.0) -> np.ndarray:
        y_max, y_min = self._yb
        c, h = 0.5 * (y_max + y_min), 0.5 * (y_max - y_min)
        return np.concatenate([self._ub, c + factor * h - free, -(c - factor * h) + free])

    def plan(self, x, r_window):
        """Optimal input sequence, shape (Nf, m). Returns ``(plan, used_fallback)``."""
        x = np.asarray(x, dtype=float).reshape(-1)
        free = self.Ox @ x
        q = self.Gamma.T @ self.Q_blk @ (free - np.asarray(r_window, dtype=float).reshape(-1))
        fallback = False
        try:
            sol = self.solver.solve(q, None, self._bin(free), warm_start=self._warm)
        except InfeasibleError:
            log.warning("MPC oracle QP infeasible, retrying with output bounds widened 10x")
            sol = self.solver.solve(q, None, self._bin(free, 10.0))
            fallback = True
        self._warm = sol.working_set
        return sol.g_star.reshape(self.cfg.Nf, self.model.m), fallback


def mpc_oracle(model: LtiModel, cfg: DeePCConfig, x_true, r_window) -> np.ndarray:
    """First input of the perfect-model MPC at state ``x_true``."""
    plan, _ = MpcOracle(model, cfg).plan(x_true, r_window)
    return plan[0]


class _Controller:
    """Per-run controller state for the data-driven variants."""

    def __init__(self, cfg: ExperimentConfig, data: DataBlocks, use_ekf: bool):
        self.cfg, self.data, self.use_ekf = cfg, data, use_ekf
        self.pqp: ParametricQp = assemble_parametric_qp(data, cfg.deepc)
        self.solver = self.pqp.solver()
        self.M = prediction_map(data, cfg.deepc).M
        self.noise = cfg.ekf_noise() if use_ekf else None
        self.warm: tuple = ()
        self._dyn_cache: dict = {}
        self.prev_dyn: Optional[ImplicitDynamics] = None

    def solve(self, r_window, u_p, z):
        step = (deepc_step_ekf if self.use_ekf else deepc_step_standard)(
            self.pqp, self.data, self.cfg.deepc, r_window, u_p, z, solver=self.solver, warm_start=self.warm)
        self.warm = step.solution.working_set
        return step

    def dynamics(self, step) -> ImplicitDynamics:
        law = step.law
        if law.degenerate and self.prev_dyn is not None:
            return self.prev_dyn
        key = law.region_active_set
        cached = self._dyn_cache.get(key)
        if cached is None:
            MA = self.M @ law.A_tilde
            dim_z = self.M.shape[0]
            p = self.data.p
            cached = (MA[:, :dim_z], MA[:, dim_z:], np.hstack([np.zeros((p, dim_z - p)), np.eye(p)]))
            self._dyn_cache[key] = cached
        A, B, C_sel = cached
        dyn = ImplicitDynamics(A=A, B=B, h=self.M @ law.h_tilde, C_sel=C_sel)
        self.prev_dyn = dyn
        return dyn


def run_closed_loop(cfg: ExperimentConfig, data: Optional[DataBlocks] = None, rep: int = 0,
                    rep_data: Optional[RepData] = None, record_filter: bool = False) -> ExperimentResult:
    """Simulate ``Nsim`` closed-loop steps of ``cfg.variant`` on the true plant.

    Samples k = 0..Np-1 are a warm-up driven by a random input that fills the
    past windows; the controller acts from k = Np to k = Nsim. Data blocks
    are built from the repetition seeds unless ``data`` is given.
    """
    model, dc = cfg.model, cfg.deepc
    n, m, p, Np, Nf, Nc = model.n, model.m, model.p, dc.Np, dc.Nf, dc.Nc
    variant = cfg.variant
    K = cfg.Nsim + 1
    Q, R = dc.weights(m, p)
    _, _, loop_ss = rep_streams(cfg.seed, rep)
    rng = np.random.default_rng(loop_ss)
    warm_u = rng.uniform(-cfg.warmup_amplitude, cfg.warmup_amplitude, size=(Np, m))
    online = cfg.noise if cfg.online_noise else NoiseSpec(0.0, 0.0, cfg.seed)
    w, v = draw_noise(model, online, K, rng)
    r_all = np.repeat(cfg.reference(np.arange(K + Nf))[:, None], p, axis=1)

    controller = oracle = None
    if variant == "mpc-oracle":
        oracle = MpcOracle(model, dc)
    else:
        if data is None:
            data = (rep_data or prepare_data(cfg, rep)).for_variant(variant)
        controller = _Controller(cfg, data, use_ekf=variant.endswith("+ekf"))

    u = np.zeros((K, m))
    y = np.zeros((K, p))
    y_clean = np.zeros((K, p))
    x = np.zeros(n)
    fallbacks = 0
    state = None
    diag = {key: np.full(K, np.nan) for key in ("innovation", "gain_norm", "trace_P")} if controller and controller.use_ekf else {}
    z_hist = np.full((K, p * Np), np.nan) if record_filter else None
    P_hist = [] if record_filter else None
    plan, plan_start = None, -1
    A, B, C, D = model.A, model.B, model.C, model.D

    try:
        for k in range(K):
            step = None
            if k < Np:
                u[k] = warm_u[k]
            else:
                r_window = r_all[k:k + Nf].reshape(-1)
                solve_now = plan is None or k - plan_start > Nc
                if oracle is not None:
                    if solve_now:
                        plan, fb = oracle.plan(x, r_window)
                        plan_start, fallbacks = k, fallbacks + fb
                else:
                    if controller.use_ekf and state is None:
                        state = ekf_init(y[k - Np:k].reshape(-1), cfg.P0_scale, k=k)
                    z = state.z_hat if controller.use_ekf else y[k - Np:k].reshape(-1)
                    u_p = u[k - Np:k].reshape(-1)
                    if solve_now or controller.use_ekf:
                        step = controller.solve(r_window, u_p, z)
                        fallbacks += step.fallback
                    if solve_now:
                        plan, plan_start = step.u_applied, k
                u[k] = plan[k - plan_start]
            y_clean[k] = C @ x + D @ u[k]
            y[k] = y_clean[k] + v[k]
            x = A @ x + B @ u[k] + w[k]
            if step is not None and controller.use_ekf:
                dyn = controller.dynamics(step)
                z_pred, P_pred = ekf_predict(state, dyn, step.theta[p * Np:], controller.noise)
                innovation = y[k] - dyn.C_sel @ z_pred
                state = ekf_update(z_pred, P_pred, y[k], dyn, controller.noise, k=k + 1)
                diag["innovation"][k] = float(np.linalg.norm(innovation))
                diag["gain_norm"][k] = float(np.linalg.norm(state.K))
                diag["trace_P"][k] = float(np.trace(state.P))
                if record_filter:
                    z_hist[k] = state.z_hat
                    P_hist.append(state.P)
    except QpError as exc:
        log.warning("run %s rep %d failed: %s", variant, rep, exc)
        return ExperimentResult(J=float("nan"), u=u, y=y, r=r_all[:K], variant=variant, lambda_y=dc.lambda_y,
                                lambda_g=dc.lambda_g, seed=cfg.seed, rep=rep, fallbacks=fallbacks, failed=True)

    J = closed_loop_cost(u, y, r_all[:K], Q, R)
    if record_filter:
        diag["z_hat"] = z_hist
        diag["P"] = P_hist
    return ExperimentResult(J=J, u=u, y=y, r=r_all[:K], variant=variant, lambda_y=dc.lambda_y,
                            lambda_g=dc.lambda_g, seed=cfg.seed, rep=rep, fallbacks=fallbacks,
                            y_clean=y_clean, diagnostics=diag)


# ---------------------------------------------------------------------------
# Monte-Carlo machinery


def _map(fn, items, n_jobs: int):
    if n_jobs == 1:
        return [fn(i) for i in items]
    from joblib import Parallel, delayed
    return Parallel(n_jobs=n_jobs)(delayed(fn)(i) for i in items)


def _grid_costs_for_rep(cfg: ExperimentConfig, rep: int, grid) -> np.ndarray:
    rep_data = None if cfg.variant == "mpc-oracle" else prepare_data(cfg, rep)
    out = np.empty(len(grid))
    for j, (ly, lg) in enumerate(grid):
        out[j] = run_closed_loop(cfg.with_lambdas(ly, lg), rep=rep, rep_data=rep_data).J
    return out


@dataclass
class LambdaSweep:
    best_lambda_y: float
    best_lambda_g: float
    table: list  # rows: (lambda_y, lambda_g, mean J, std J, n ok, n failed)
    costs: np.ndarray = field(repr=False)  # (reps, grid points)

    @property
    def best_costs(self) -> np.ndarray:
        i = next(j for j, row in enumerate(self.table)
                 if row[0] == self.best_lambda_y and row[1] == self.best_lambda_g)
        return self.costs[:, i]


def sweep_lambda(cfg: ExperimentConfig, lambda_y_grid: Optional[Sequence[float]] = None,
                 lambda_g_grid: Optional[Sequence[float]] = None, repetitions: Optional[int] = None,
                 n_jobs: int = 1) -> LambdaSweep:
    """Exhaustive search for the regularization pair with the lowest mean closed-loop cost.

    Ties go to the smaller (lambda_g, lambda_y). Failed runs are excluded
    from the mean.
    """
    ly_grid = list(cfg.lambda_y_grid if lambda_y_grid is None else lambda_y_grid)
    lg_grid = list(cfg.lambda_g_grid if lambda_g_grid is None else lambda_g_grid)
    if not ly_grid or not lg_grid:
        raise ValueError("lambda grids must be non-empty")
    if cfg.variant == "mpc-oracle":
        ly_grid, lg_grid = ly_grid[:1], lg_grid[:1]
    grid = [(ly, lg) for ly in ly_grid for lg in lg_grid]
    reps = cfg.repetitions if repetitions is None else repetitions
    costs = np.array(_map(lambda rep: _grid_costs_for_rep(cfg, rep, grid), range(reps), n_jobs))
    table = []
    for j, (ly, lg) in enumerate(grid):
        c = costs[:, j]
        ok = c[np.isfinite(c)]
        mean = float(ok.mean()) if ok.size else float("inf")
        std = float(ok.std(ddof=1)) if ok.size > 1 else 0.0
        table.append((ly, lg, mean, std, int(ok.size), int(c.size - ok.size)))
    best = min(table, key=lambda row: (row[2], row[1], row[0]))
    return LambdaSweep(best_lambda_y=best[0], best_lambda_g=best[1], table=table, costs=costs)


@dataclass
class VariantStats:
    variant: str
    mean: float
    std: float
    quantiles: dict
    n: int
    failed: int
    costs: np.ndarray = field(repr=False)
    lambda_y: float = float("nan")
    lambda_g: float = float("nan")

    @property
    def invalid(self) -> bool:
        return self.failed > 0.05 * (self.n + self.failed)


def summarize(variant: str, costs, lambda_y=float("nan"), lambda_g=float("nan")) -> VariantStats:
    costs = np.asarray(costs, dtype=float)
    ok = costs[np.isfinite(costs)]
    qs = {q: float(np.quantile(ok, q)) for q in (0.05, 0.25, 0.5, 0.75, 0.95)} if ok.size else {}
    return VariantStats(variant=variant, mean=float(ok.mean()) if ok.size else float("nan"),
                        std=float(ok.std(ddof=1)) if ok.size > 1 else 0.0, quantiles=qs, n=int(ok.size),
                        failed=int(costs.size - ok.size), costs=costs, lambda_y=lambda_y, lambda_g=lambda_g)


def paired_comparison(costs_a, costs_b) -> dict:
    """Paired differences a - b and the one-sided sign test of ``a > b``."""
    a, b = np.asarray(costs_a, dtype=float), np.asarray(costs_b, dtype=float)
    ok = np.isfinite(a) & np.isfinite(b)
    diff = a[ok] - b[ok]
    wins = int(np.sum(diff > 0))
    trials = int(np.sum(diff != 0))
    p = float(stats.binomtest(wins, trials, 0.5, alternative="greater").pvalue) if trials else 1.0
    return {"mean_diff": float(diff.mean()) if diff.size else float("nan"), "wins": wins,
            "trials": trials, "p_value": p}


@dataclass
class MonteCarloResult:
    stats: dict  # variant -> VariantStats
    paired: dict  # (a, b) -> paired_comparison

    def summary(self) -> dict:
        return {
            "variants": {v: {"mean": s.mean, "std": s.std, "n": s.n, "failed": s.failed, "invalid": s.invalid,
                             "lambda_y": s.lambda_y, "lambda_g": s.lambda_g,
                             "quantiles": {str(k): q for k, q in s.quantiles.items()}}
                         for v, s in self.stats.items()},
            "paired": {f"{a} - {b}": d for (a, b), d in self.paired.items()},
        }


def monte_carlo(cfg: ExperimentConfig, repetitions: Optional[int] = None, variants: Optional[Sequence[str]] = None,
                lambdas: Optional[dict] = None, n_jobs: int = 1) -> MonteCarloResult:
    """Run each variant on the same repetition seeds and aggregate costs.

    ``lambdas`` maps variant names to (lambda_y, lambda_g); variants without an
    entry use the values in ``cfg.deepc``.
    """
    reps = cfg.repetitions if repetitions is None else repetitions
    if reps < 1:
        raise ValueError("repetitions must be at least 1")
    variants = list(variants or [cfg.variant])
    lambdas = lambdas or {}

    def one(rep):
        rep_data = None
        out = []
        for variant in variants:
            vcfg = replace(cfg, variant=variant)
            if variant in lambdas:
                vcfg = vcfg.with_lambdas(*lambdas[variant])
            if variant != "mpc-oracle" and rep_data is None:
                rep_data = prepare_data(vcfg, rep)
            out.append(run_closed_loop(vcfg, rep=rep, rep_data=rep_data).J)
        return out

    costs = np.array(_map(one, range(reps), n_jobs)).reshape(reps, len(variants))
    stats_ = {}
    for j, variant in enumerate(variants):
        ly, lg = lambdas.get(variant, (cfg.deepc.lambda_y, cfg.deepc.lambda_g))
        stats_[variant] = summarize(variant, costs[:, j], ly, lg)
    paired = {(a, b): paired_comparison(costs[:, i], costs[:, j])
              for i, a in enumerate(variants) for j, b in enumerate(variants) if i < j}
    return MonteCarloResult(stats=stats_, paired=paired)


SWEEP_PARAMETERS = ("sigma_v2", "sigma_w2", "Np", "N")


def with_parameter(cfg: ExperimentConfig, parameter: str, value) -> ExperimentConfig:
    if parameter in ("sigma_v2", "sigma_w2"):
        return replace(cfg, **{parameter: float(value)})
    if parameter == "N":
        return replace(cfg, N=int(value))
    if parameter == "Np":
        return replace(cfg, deepc=replace(cfg.deepc, Np=int(value)))
    raise ValueError(f"cannot sweep {parameter!r}; choose from {SWEEP_PARAMETERS}")


@dataclass
class CurvePoint:
    value: float
    variant: str
    mean: float
    std: float
    n: int
    failed: int
    lambda_y: float
    lambda_g: float
    costs: np.ndarray = field(repr=False)

    @property
    def invalid(self) -> bool:
        return self.failed > 0.05 * (self.n + self.failed)


def tuned_costs(cfg: ExperimentConfig, repetitions: Optional[int] = None, n_jobs: int = 1) -> VariantStats:
    """Tune (lambda_y, lambda_g) for ``cfg.variant`` and return the stats at the optimum."""
    sweep = sweep_lambda(cfg, repetitions=repetitions, n_jobs=n_jobs)
    return summarize(cfg.variant, sweep.best_costs, sweep.best_lambda_y, sweep.best_lambda_g)


def sweep_parameter(cfg: ExperimentConfig, parameter: str, grid: Sequence, variants: Sequence[str],
                    repetitions: Optional[int] = None, n_jobs: int = 1) -> list:
    """Cost curves over ``grid`` with the regularization re-tuned at every point."""
    if not len(grid):
        raise ValueError("grid must be non-empty")
    points = []
    for value in grid:
        pcfg = with_parameter(cfg, parameter, value)
        for variant in variants:
            s = tuned_costs(replace(pcfg, variant=variant), repetitions, n_jobs)
            points.append(CurvePoint(value=float(value), variant=variant, mean=s.mean, std=s.std, n=s.n,
                                     failed=s.failed, lambda_y=s.lambda_y, lambda_g=s.lambda_g, costs=s.costs))
    return points


def write_curves_csv(points: Sequence[CurvePoint], path, parameter: str = "value") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([parameter, "variant", "mean_J", "std_J", "n", "failed", "lambda_y", "lambda_g", "invalid"])
        for pt in points:
            writer.writerow([pt.value, pt.variant, repr(pt.mean), repr(pt.std), pt.n, pt.failed,
                             pt.lambda_y, pt.lambda_g, int(pt.invalid)])


def write_json(obj, path) -> None:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(f"not JSON serializable: {type(o)}")

    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=default)
