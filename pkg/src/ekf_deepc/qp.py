"""Dense strictly convex QP with an active-set solver and optimizer sensitivities.

Problems have the form

    min  1/2 g'Pg + q'g   s.t.  Aeq g = beq,  Ain g <= bin

Multipliers follow the sign convention of the Lagrangian
``1/2 g'Pg + q'g + nu'(Aeq g - beq) + mu'(Ain g - bin)`` with ``mu >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la
from scipy.optimize import linprog


class QpError(RuntimeError):
    pass


class InfeasibleError(QpError):
    """The constraint set is empty."""


class NotConvexError(QpError):
    """The Hessian is not positive definite."""


def positive_definiteness(P: np.ndarray) -> str:
    """``"strict"`` if P admits a Cholesky factor, ``"numerical"`` if it does
    after a shift of d*eps*|P|_2 (PD up to rounding), else ``"no"``."""
    try:
        la.cholesky(P, check_finite=False)
        return "strict"
    except la.LinAlgError:
        pass
    shift = P.shape[0] * np.finfo(float).eps * np.linalg.norm(P, 2)
    if shift > 0:
        try:
            la.cholesky(P + shift * np.eye(P.shape[0]), check_finite=False)
            return "numerical"
        except la.LinAlgError:
            pass
    return "no"


def _rows(a, d: int) -> np.ndarray:
    if a is None:
        return np.zeros((0, d))
    a = np.asarray(a, dtype=float)
    return a.reshape(-1, d) if a.size else np.zeros((0, d))


def _vec(b, n: int) -> np.ndarray:
    if b is None:
        return np.zeros(n)
    return np.asarray(b, dtype=float).reshape(n)


@dataclass
class QpProblem:
    P: np.ndarray
    q: np.ndarray
    Aeq: Optional[np.ndarray] = None
    beq: Optional[np.ndarray] = None
    Ain: Optional[np.ndarray] = None
    bin: Optional[np.ndarray] = None

    def __post_init__(self):
        self.P = np.atleast_2d(np.asarray(self.P, dtype=float))
        d = self.P.shape[0]
        if self.P.shape != (d, d):
            raise ValueError(f"P must be square, got {self.P.shape}")
        if not np.allclose(self.P, self.P.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(self.P).max())):
            raise ValueError("P must be symmetric")
        self.q = _vec(self.q, d)
        self.Aeq = _rows(self.Aeq, d)
        self.beq = _vec(self.beq, self.Aeq.shape[0])
        self.Ain = _rows(self.Ain, d)
        self.bin = _vec(self.bin, self.Ain.shape[0])

    @property
    def d(self) -> int:
        return self.P.shape[0]

    def objective(self, g) -> float:
        return float(0.5 * g @ self.P @ g + self.q @ g)

    def dump(self, path) -> None:
        """Write the instance as labelled plain-text matrices."""
        with open(path, "w") as fh:
            for name in ("P", "q", "Aeq", "beq", "Ain", "bin"):
                value = np.atleast_2d(getattr(self, name))
                if name in ("q", "beq", "bin"):
                    value = value.reshape(1, -1)
                fh.write(f"# {name} {value.shape[0]} {value.shape[1]}\n")
                np.savetxt(fh, value, fmt="%.17g")

    @classmethod
    def load(cls, path) -> "QpProblem":
        parts, name, buf, shape = {}, None, [], None
        with open(path) as fh:
            lines = fh.read().splitlines()
        lines.append("# end 0 0")
        for line in lines:
            if line.startswith("#"):
                if name is not None:
                    arr = np.array(buf, dtype=float).reshape(shape) if shape[0] * shape[1] else np.zeros(shape)
                    parts[name] = arr
                _, name, r, c = line.split()
                shape, buf = (int(r), int(c)), []
            elif line.strip():
                buf.extend(float(v) for v in line.split())
        return cls(P=parts["P"], q=parts["q"].ravel(), Aeq=parts["Aeq"], beq=parts["beq"].ravel(),
                   Ain=parts["Ain"], bin=parts["bin"].ravel())


@dataclass
class QpSolution:
    g_star: np.ndarray
    eq_multipliers: np.ndarray
    ineq_multipliers: np.ndarray
    active_set: tuple
    objective: float
    iterations: int = 0
    working_set: tuple = ()


@dataclass
class AffineLaw:
    """Local expansion ``g*(theta) = A_tilde @ theta + h_tilde`` on one critical region."""

    A_tilde: np.ndarray
    h_tilde: np.ndarray
    region_active_set: tuple
    degenerate: bool = False
    dropped: tuple = field(default=())

    def __call__(self, theta) -> np.ndarray:
        return self.A_tilde @ np.asarray(theta, dtype=float) + self.h_tilde


def kkt_residuals(qp: QpProblem, sol: QpSolution) -> dict:
    """Stationarity, feasibility and complementarity residuals of a candidate solution."""
    g, nu, mu = sol.g_star, sol.eq_multipliers, sol.ineq_multipliers
    grad = qp.P @ g + qp.q + qp.Aeq.T @ nu + qp.Ain.T @ mu
    slack = qp.bin - qp.Ain @ g
    scale = 1.0 + np.abs(qp.P @ g).max(initial=0) + np.abs(qp.q).max(initial=0)
    return {
        "stationarity": float(np.abs(grad).max(initial=0) / scale),
        "primal_eq": float(np.abs(qp.Aeq @ g - qp.beq).max(initial=0)),
        "primal_in": float(max(0.0, -slack.min(initial=0))),
        "dual": float(max(0.0, -mu.min(initial=0))),
        "complementarity": float(np.abs(mu * slack).max(initial=0)),
    }


def check_kkt(qp: QpProblem, sol: QpSolution, tol: float = 1e-7) -> bool:
    return all(v <= tol for v in kkt_residuals(qp, sol).values())


class ActiveSetSolver:
    """Primal active-set solver for a fixed ``P``, ``Aeq`` and ``Ain``.

    The KKT factorization of every working set met so far is cached, so
    repeated solves with new ``q``, ``beq``, ``bin`` (the receding-horizon
    situation) cost one triangular solve when the working set is reused.
    Instances are not thread-safe.
    """

    def __init__(self, P, Aeq=None, Ain=None, tol: float = 1e-9, tol_act: float = 1e-8,
                 max_iter: Optional[int] = None):
        self.P = np.atleast_2d(np.asarray(P, dtype=float))
        self.d = self.P.shape[0]
        self.Aeq = _rows(Aeq, self.d)
        self.Ain = _rows(Ain, self.d)
        self.tol = tol
        self.tol_act = tol_act
        self.max_iter = max_iter or 10 * (self.d + self.Ain.shape[0]) + 50
        if positive_definiteness(self.P) == "no":
            raise NotConvexError("P is not positive definite")
        self._lu: dict = {}
        self._sens: dict = {}
        self._sens_params = None
        self._eq_rank: Optional[int] = None

    @classmethod
    def from_problem(cls, qp: QpProblem, **kwargs) -> "ActiveSetSolver":
        return cls(qp.P, qp.Aeq, qp.Ain, **kwargs)

    @property
    def n_eq(self) -> int:
        return self.Aeq.shape[0]

    def _factor(self, W: tuple):
        lu = self._lu.get(W)
        if lu is None:
            A = np.vstack([self.Aeq, self.Ain[list(W)]])
            r = A.shape[0]
            K = np.block([[self.P, A.T], [A, np.zeros((r, r))]])
            lu = la.lu_factor(K, check_finite=False)
            # working sets are kept linearly independent by construction, so only
            # an exactly singular pivot is rejected (P itself may be badly scaled)
            diag = np.abs(np.diag(lu[0]))
            if not np.all(np.isfinite(diag)) or diag.min() == 0.0:
                lu = None
            self._lu[W] = lu
        return lu

    def _independent(self, W, i: int) -> bool:
        A = np.vstack([self.Aeq, self.Ain[list(W)]])
        a = self.Ain[i]
        if A.shape[0] == 0:
            return bool(np.any(a))
        coef = np.linalg.lstsq(A.T, a, rcond=None)[0]
        return bool(np.linalg.norm(a - A.T @ coef) > 1e-9 * np.linalg.norm(a))

    def _eqp(self, W: tuple, q, beq, bin):
        lu = self._factor(W)
        if lu is None:
            return None
        rhs = np.concatenate([-q, beq, bin[list(W)]])
        z = la.lu_solve(lu, rhs, check_finite=False)
        d, e = self.d, self.n_eq
        return z[:d], z[d:d + e], z[d + e:]

    def _phase_one(self, beq, bin) -> np.ndarray:
        res = linprog(np.zeros(self.d), A_ub=self.Ain if len(bin) else None, b_ub=bin if len(bin) else None,
                      A_eq=self.Aeq if self.n_eq else None, b_eq=beq if self.n_eq else None,
                      bounds=(None, None), method="highs")
        if res.status == 2:
            raise InfeasibleError("QP constraints are infeasible")
        if res.status != 0:
            raise QpError(f"feasibility search failed: {res.message}")
        return res.x

    def solve(self, q, beq=None, bin=None, warm_start: Sequence[int] = ()) -> QpSolution:
        q = _vec(q, self.d)
        beq = _vec(beq, self.n_eq)
        bin = _vec(bin, self.Ain.shape[0])
        feas_tol = self.tol * (1.0 + np.abs(bin).max(initial=0))

        W = tuple(sorted(set(int(i) for i in warm_start)))
        x = None
        iterations = 0
        eqp = self._eqp(W, q, beq, bin)
        if eqp is not None:
            g, nu, mu = eqp
            if np.all(self.Ain @ g <= bin + feas_tol):
                x = g
        if x is None:
            # warm start unusable: start from a feasible vertex with an empty working set
            W = ()
            eqp = self._eqp(W, q, beq, bin)
            if eqp is None:
                raise QpError("equality constraints are linearly dependent")
            g, nu, mu = eqp
            if np.all(self.Ain @ g <= bin + feas_tol):
                x = g
            else:
                x = self._phase_one(beq, bin)
                eqp = None

        W = list(W)
        for iterations in range(1, self.max_iter + 1):
            if eqp is None:
                eqp = self._eqp(tuple(sorted(W)), q, beq, bin)
                if eqp is None:
                    raise QpError(f"singular KKT system for working set {sorted(W)}")
            g, nu, mu_w = eqp
            eqp = None
            p = g - x
            if np.abs(p).max(initial=0) <= 1e-12 * (1.0 + np.abs(x).max(initial=0)):
                x = g
                Ws = sorted(W)
                if not Ws or mu_w.min() >= -self.tol:
                    break
                W.remove(Ws[int(np.argmin(mu_w))])
                continue
            alpha, blocking = 1.0, None
            Ap = self.Ain @ p
            slack = bin - self.Ain @ x
            steps = []
            for i in np.flatnonzero(Ap > 1e-14 * (1.0 + np.abs(p).max())):
                if i in W:
                    continue
                t = max(slack[i], 0.0) / Ap[i]
                if t < alpha:
                    steps.append((t, int(i)))
            for t, i in sorted(steps):
                # at a degenerate vertex a constraint spanned by the working set
                # only blocks through rounding; adding it would make the KKT singular
                if self._independent(W, i):
                    alpha, blocking = t, i
                    break
            x = x + alpha * p
            if blocking is not None:
                W.append(blocking)
        else:
            raise QpError(f"active-set iteration limit {self.max_iter} reached")

        Ws = tuple(sorted(W))
        mu = np.zeros(self.Ain.shape[0])
        if Ws:
            mu[list(Ws)] = np.maximum(mu_w, 0.0)
        slack = bin - self.Ain @ x
        active = tuple(int(i) for i in np.flatnonzero(slack <= self.tol_act))
        objective = float(0.5 * x @ self.P @ x + q @ x)
        return QpSolution(g_star=x, eq_multipliers=nu, ineq_multipliers=mu, active_set=active,
                          objective=objective, iterations=iterations, working_set=Ws)

    def _region(self, sol: QpSolution, mult_tol: float):
        """Strongly active, linearly independent constraints used for differentiation."""
        active = list(sol.active_set)
        strong = [i for i in active if sol.ineq_multipliers[i] > mult_tol]
        dropped = [i for i in active if i not in strong]
        chosen: list = []
        if not strong:
            return (), tuple(sorted(dropped))
        if self._eq_rank is None:
            self._eq_rank = int(np.linalg.matrix_rank(self.Aeq)) if self.n_eq else 0
        rank = self._eq_rank
        for i in strong:
            trial = np.vstack([self.Aeq, self.Ain[chosen + [i]]])
            r = np.linalg.matrix_rank(trial)
            if r > rank:
                chosen.append(i)
                rank = r
            else:
                dropped.append(i)
        return tuple(sorted(chosen)), tuple(sorted(dropped))

    def affine_law(self, sol: QpSolution, G, Beq, theta, mult_tol: Optional[float] = None) -> AffineLaw:
        """Differentiate the optimizer for ``q = G theta + q0`` and ``beq = Beq theta + b0``.

        Active inequalities are treated as equalities. Weakly active or
        linearly dependent constraints are dropped and the law is flagged.
        """
        mult_tol = self.tol if mult_tol is None else mult_tol
        G = np.asarray(G, dtype=float)
        Beq = np.asarray(Beq, dtype=float)
        theta = np.asarray(theta, dtype=float).reshape(-1)
        region, dropped = self._region(sol, mult_tol)
        if self._sens_params is None or self._sens_params[0] is not G or self._sens_params[1] is not Beq:
            self._sens, self._sens_params = {}, (G, Beq)
        A_tilde = self._sens.get(region)
        if A_tilde is None:
            lu = self._factor(region)
            if lu is None:
                raise QpError(f"singular KKT system for region {region}")
            rhs = np.vstack([-G, Beq, np.zeros((len(region), G.shape[1]))])
            A_tilde = la.lu_solve(lu, rhs, check_finite=False)[:self.d]
            self._sens[region] = A_tilde
        h_tilde = sol.g_star - A_tilde @ theta
        return AffineLaw(A_tilde=A_tilde, h_tilde=h_tilde, region_active_set=region,
                         degenerate=bool(dropped), dropped=dropped)


def solve(qp: QpProblem, tol: float = 1e-9, tol_act: float = 1e-8, warm_start: Sequence[int] = ()) -> QpSolution:
    """Solve ``qp`` with a fresh active-set solver."""
    solver = ActiveSetSolver.from_problem(qp, tol=tol, tol_act=tol_act)
    return solver.solve(qp.q, qp.beq, qp.bin, warm_start=warm_start)


def affine_law(qp_at_theta: QpProblem, G, Beq, sol: QpSolution, theta, tol: float = 1e-9) -> AffineLaw:
    """Affine law of the optimizer of ``qp_at_theta`` around ``theta``."""
    solver = ActiveSetSolver.from_problem(qp_at_theta, tol=tol)
    return solver.affine_law(sol, G, Beq, theta)
