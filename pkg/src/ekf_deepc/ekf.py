"""Data-driven extended Kalman filter over the window of the Np latest outputs.

The filter state is the stacked output window z. Its one-step dynamics are
borrowed from the DeePC optimizer: on the current critical region
``g* = A_tilde theta + h_tilde`` and ``z_next = M g*``, so

    z_next = (M A_z) z + (M A_u) u_p + M h_tilde,    y = [0 ... 0 I_p] z.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as la

from .qp import AffineLaw


@dataclass
class EkfState:
    z_hat: np.ndarray
    P: np.ndarray
    k: int = 0
    K: Optional[np.ndarray] = None  # gain of the update that produced this state

    def check(self, rtol: float = 1e-10) -> None:
        if not np.allclose(self.P, self.P.T, rtol=0, atol=1e-12 * max(1.0, np.abs(self.P).max())):
            raise AssertionError("covariance is not symmetric")
        lo = np.linalg.eigvalsh(self.P).min()
        if lo < -rtol * max(np.trace(self.P), 1.0):
            raise AssertionError(f"covariance is not PSD (min eigenvalue {lo:.3e})")


@dataclass(frozen=True)
class EkfNoise:
    Qk: np.ndarray
    Rk: np.ndarray

    def __post_init__(self):
        for name in ("Qk", "Rk"):
            a = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if not np.allclose(a, a.T):
                raise ValueError(f"{name} must be symmetric")
            object.__setattr__(self, name, a)
        if np.linalg.eigvalsh(self.Qk).min() < -1e-12:
            raise ValueError("Qk must be positive semidefinite")
        if np.linalg.eigvalsh(self.Rk).min() <= 0:
            raise ValueError("Rk must be positive definite")

    @classmethod
    def isotropic(cls, dim_z: int, p: int, q: float = 0.1, r: float = 0.1) -> "EkfNoise":
        return cls(Qk=q * np.eye(dim_z), Rk=r * np.eye(p))


@dataclass(frozen=True)
class ImplicitDynamics:
    A: np.ndarray
    B: np.ndarray
    h: np.ndarray
    C_sel: np.ndarray

    @classmethod
    def from_law(cls, M: np.ndarray, law: AffineLaw, p: int) -> "ImplicitDynamics":
        dim_z = M.shape[0]
        MA = M @ law.A_tilde
        C_sel = np.hstack([np.zeros((p, dim_z - p)), np.eye(p)])
        return cls(A=MA[:, :dim_z], B=MA[:, dim_z:], h=M @ law.h_tilde, C_sel=C_sel)


def ekf_init(y_window, P0_scale: float = 1.0, k: int = 0) -> EkfState:
    """Start from the raw window of measured outputs with covariance ``P0_scale * I``."""
    z = np.asarray(y_window, dtype=float).reshape(-1).copy()
    return EkfState(z_hat=z, P=P0_scale * np.eye(z.size), k=k)


def ekf_predict(state: EkfState, dyn: ImplicitDynamics, u_p, noise: EkfNoise):
    """Time update through the affine implicit predictor. Returns ``(z_pred, P_pred)``."""
    u_p = np.asarray(u_p, dtype=float).reshape(-1)
    z_pred = dyn.A @ state.z_hat + dyn.B @ u_p + dyn.h
    P_pred = dyn.A @ state.P @ dyn.A.T + noise.Qk
    return z_pred, 0.5 * (P_pred + P_pred.T)


def kalman_gain(P_pred: np.ndarray, C: np.ndarray, Rk: np.ndarray):
    """Innovation covariance ``S = C P C' + R`` and gain ``K = P C' S^-1``."""
    S = C @ P_pred @ C.T + Rk
    PCt = P_pred @ C.T
    try:
        Lc = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("innovation covariance is not positive definite") from exc
    # K S = P C'  =>  K = (P C') L^-T L^-1
    X = la.solve_triangular(Lc, PCt.T, lower=True, check_finite=False)
    K = la.solve_triangular(Lc, X, lower=True, trans="T", check_finite=False).T
    return S, K


def ekf_update(z_pred, P_pred, y_meas, dyn: ImplicitDynamics, noise: EkfNoise, k: int = 0) -> EkfState:
    """Measurement update with the Joseph-form covariance."""
    C = dyn.C_sel
    z_pred = np.asarray(z_pred, dtype=float).reshape(-1)
    P_pred = np.atleast_2d(np.asarray(P_pred, dtype=float))
    y_meas = np.asarray(y_meas, dtype=float).reshape(-1)
    _, K = kalman_gain(P_pred, C, noise.Rk)
    innovation = y_meas - C @ z_pred
    z_hat = z_pred + K @ innovation
    I_KC = np.eye(P_pred.shape[0]) - K @ C
    P = I_KC @ P_pred @ I_KC.T + K @ noise.Rk @ K.T
    return EkfState(z_hat=z_hat, P=0.5 * (P + P.T), k=k, K=K)
