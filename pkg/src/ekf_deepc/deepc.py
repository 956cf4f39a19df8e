"""DeePC as a multi-parametric QP in theta = col(past outputs, past inputs).

The decision variable is the Hankel combination vector g. Future inputs and
outputs are ``Uf @ g`` and ``Yf @ g``; past outputs enter softly through
``lambda_y * |Yp g - z|^2`` and past inputs exactly through ``Up g = u_p``.
The standard controller feeds raw measurements as ``z``; the filtered variant
feeds the EKF estimate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .hankel import DataBlocks
from .qp import (ActiveSetSolver, AffineLaw, InfeasibleError, NotConvexError, QpProblem, QpSolution,
                 positive_definiteness)

log = logging.getLogger(__name__)


def _weight(w, dim: int) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim == 0:
        return float(w) * np.eye(dim)
    return w.reshape(dim, dim)


def _bound(b, dim: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(b, dtype=float), (dim,)).copy()


@dataclass(frozen=True)
class DeePCConfig:
    """Horizons, weights, regularization and box constraints.

    ``Q`` and ``R`` may be scalars (meaning a multiple of the identity); the
    bounds may be scalars or per-channel vectors.
    """

    Np: int = 3
    Nf: int = 5
    Nc: int = 0
    Q: object = 1.0
    R: object = 1.0
    lambda_y: float = 1e3
    lambda_g: float = 1.0
    u_min: object = -1e3
    u_max: object = 1e3
    y_min: object = -1e3
    y_max: object = 1e3

    def __post_init__(self):
        if self.Np < 1 or self.Nf < 1:
            raise ValueError("horizons must be at least 1")
        if not 0 <= self.Nc <= self.Nf - 1:
            raise ValueError("Nc must satisfy 0 <= Nc <= Nf - 1")
        if self.lambda_y < 0 or self.lambda_g < 0:
            raise ValueError("regularization weights must be non-negative")
        if np.any(np.asarray(self.u_min) > np.asarray(self.u_max)):
            raise ValueError("u_min must not exceed u_max")
        if np.any(np.asarray(self.y_min) > np.asarray(self.y_max)):
            raise ValueError("y_min must not exceed y_max")

    def weights(self, m: int, p: int):
        Q, R = _weight(self.Q, p), _weight(self.R, m)
        if np.linalg.eigvalsh((Q + Q.T) / 2).min() < -1e-12:
            raise ValueError("Q must be positive semidefinite")
        if np.linalg.eigvalsh((R + R.T) / 2).min() <= 0:
            raise ValueError("R must be positive definite")
        return Q, R

    def bounds(self, m: int, p: int):
        return (_bound(self.u_min, m), _bound(self.u_max, m),
                _bound(self.y_min, p), _bound(self.y_max, p))


@dataclass(frozen=True)
class ParametricQp:
    """The theta-independent data of the condensed DeePC program.

    Cost ``1/2 g'Pg + (G theta + q(r))'g + theta'H theta + 1/2 r'Qblk r`` subject
    to ``Up g = Beq theta`` and ``Ain g <= bin``.
    """

    P: np.ndarray
    G: np.ndarray
    H: np.ndarray
    Beq: np.ndarray
    Aeq: np.ndarray
    Ain: np.ndarray
    bin: np.ndarray
    Q_blk: np.ndarray
    R_blk: np.ndarray
    Yf: np.ndarray
    Np: int
    Nf: int
    m: int
    p: int

    @property
    def d(self) -> int:
        return self.P.shape[0]

    @property
    def dim_theta(self) -> int:
        return (self.p + self.m) * self.Np

    def linear_term(self, r_window) -> np.ndarray:
        """q(r) = -Yf' Qblk r."""
        return -self.Yf.T @ (self.Q_blk @ np.asarray(r_window, dtype=float).reshape(-1))

    def theta(self, z, u_p) -> np.ndarray:
        return np.concatenate([np.asarray(z, dtype=float).reshape(-1), np.asarray(u_p, dtype=float).reshape(-1)])

    def qp_at(self, theta, r_window) -> QpProblem:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        return QpProblem(P=self.P, q=self.G @ theta + self.linear_term(r_window), Aeq=self.Aeq,
                         beq=self.Beq @ theta, Ain=self.Ain, bin=self.bin)

    def constant(self, theta, r_window) -> float:
        r = np.asarray(r_window, dtype=float).reshape(-1)
        return float(theta @ self.H @ theta + 0.5 * r @ self.Q_blk @ r)

    def solver(self, tol: float = 1e-9, tol_act: float = 1e-8) -> ActiveSetSolver:
        return ActiveSetSolver(self.P, self.Aeq, self.Ain, tol=tol, tol_act=tol_act)


def assemble_parametric_qp(data: DataBlocks, cfg: DeePCConfig) -> ParametricQp:
    """Build the condensed QP matrices from data blocks and controller settings."""
    if (data.Np, data.Nf) != (cfg.Np, cfg.Nf):
        raise ValueError(f"data horizons {(data.Np, data.Nf)} differ from config {(cfg.Np, cfg.Nf)}")
    m, p, Np, Nf = data.m, data.p, cfg.Np, cfg.Nf
    Q, R = cfg.weights(m, p)
    Q_blk = np.kron(np.eye(Nf), Q)
    R_blk = np.kron(np.eye(Nf), R)
    d = data.L
    P = (data.Yf.T @ Q_blk @ data.Yf + data.Uf.T @ R_blk @ data.Uf
         + cfg.lambda_y * data.Yp.T @ data.Yp + cfg.lambda_g * np.eye(d))
    P = 0.5 * (P + P.T)
    pd = positive_definiteness(P)
    if pd == "no" or (pd == "numerical" and cfg.lambda_g <= 0):
        raise NotConvexError("DeePC Hessian is not positive definite; use lambda_g > 0 or collect more data")
    if pd == "numerical":
        log.warning("DeePC Hessian is positive definite only to working precision (lambda_g=%g)", cfg.lambda_g)
    G = np.hstack([-cfg.lambda_y * data.Yp.T, np.zeros((d, m * Np))])
    H = np.zeros((p * Np + m * Np,) * 2)
    H[:p * Np, :p * Np] = 0.5 * cfg.lambda_y * np.eye(p * Np)
    Beq = np.hstack([np.zeros((m * Np, p * Np)), np.eye(m * Np)])
    u_min, u_max, y_min, y_max = cfg.bounds(m, p)
    Ain = np.vstack([data.Uf, -data.Uf, data.Yf, -data.Yf])
    bin = np.concatenate([np.tile(u_max, Nf), -np.tile(u_min, Nf), np.tile(y_max, Nf), -np.tile(y_min, Nf)])
    return ParametricQp(P=P, G=G, H=H, Beq=Beq, Aeq=data.Up.copy(), Ain=Ain, bin=bin, Q_blk=Q_blk,
                        R_blk=R_blk, Yf=data.Yf, Np=Np, Nf=Nf, m=m, p=p)


@dataclass(frozen=True)
class PredictionMap:
    """Maps g to the output window shifted by one step (newest predicted output appended)."""

    M: np.ndarray


def prediction_map(data: DataBlocks, cfg: Optional[DeePCConfig] = None) -> PredictionMap:
    p = data.p
    return PredictionMap(M=np.vstack([data.Yp[p:], data.Yf[:p]]))


@dataclass
class StepResult:
    u_applied: np.ndarray  # (Nc + 1, m)
    g_star: np.ndarray
    y_pred: np.ndarray  # (p * Nf,)
    objective: float
    solution: QpSolution = field(repr=False)
    theta: np.ndarray = field(repr=False, default=None)
    law: Optional[AffineLaw] = None
    fallback: bool = False


def _widened(pqp: ParametricQp, factor: float = 10.0) -> np.ndarray:
    # bin = (u_max, -u_min, y_max, -y_min) blocks; widen the output box about its centre
    nu, ny = pqp.m * pqp.Nf, pqp.p * pqp.Nf
    y_max, neg_y_min = pqp.bin[2 * nu:2 * nu + ny], pqp.bin[2 * nu + ny:]
    centre, half = 0.5 * (y_max - neg_y_min), 0.5 * (y_max + neg_y_min)
    out = pqp.bin.copy()
    out[2 * nu:2 * nu + ny] = centre + factor * half
    out[2 * nu + ny:] = -(centre - factor * half)
    return out


def _solve(pqp: ParametricQp, theta, r_window, solver: Optional[ActiveSetSolver], warm_start):
    solver = solver or pqp.solver()
    q = pqp.G @ theta + pqp.linear_term(r_window)
    beq = pqp.Beq @ theta
    try:
        return solver, solver.solve(q, beq, pqp.bin, warm_start=warm_start), False
    except InfeasibleError:
        log.warning("DeePC QP infeasible, retrying with output bounds widened 10x")
        return solver, solver.solve(q, beq, _widened(pqp), warm_start=()), True


def _step(pqp, data, cfg, r_window, u_p, z, solver, warm_start, with_law: bool) -> StepResult:
    theta = pqp.theta(z, u_p)
    if theta.size != pqp.dim_theta:
        raise ValueError(f"theta has size {theta.size}, expected {pqp.dim_theta}")
    r_window = np.asarray(r_window, dtype=float).reshape(-1)
    if r_window.size != pqp.p * pqp.Nf:
        raise ValueError(f"reference window must have p*Nf = {pqp.p * pqp.Nf} entries")
    solver, sol, fallback = _solve(pqp, theta, r_window, solver, warm_start)
    g = sol.g_star
    u_f = (data.Uf @ g).reshape(pqp.Nf, pqp.m)
    law = solver.affine_law(sol, pqp.G, pqp.Beq, theta) if with_law else None
    return StepResult(u_applied=u_f[:cfg.Nc + 1].copy(), g_star=g, y_pred=data.Yf @ g,
                      objective=sol.objective + pqp.constant(theta, r_window), solution=sol,
                      theta=theta, law=law, fallback=fallback)


def deepc_step_standard(pqp: ParametricQp, data: DataBlocks, cfg: DeePCConfig, r_window, u_p, y_p,
                        solver: Optional[ActiveSetSolver] = None, warm_start=()) -> StepResult:
    """One receding-horizon DeePC solve using the raw past measurements ``y_p``."""
    return _step(pqp, data, cfg, r_window, u_p, y_p, solver, warm_start, with_law=False)


def deepc_step_ekf(pqp: ParametricQp, data: DataBlocks, cfg: DeePCConfig, r_window, u_p, z_hat,
                   solver: Optional[ActiveSetSolver] = None, warm_start=()) -> StepResult:
    """One solve with the filtered window ``z_hat``; also returns the local affine law."""
    return _step(pqp, data, cfg, r_window, u_p, z_hat, solver, warm_start, with_law=True)
