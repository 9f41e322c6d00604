"""Weighted l1-analysis recovery with an l2-ball data constraint.

Solves ``min ||D* f||_{omega,1}  s.t.  ||A f - y||_2 <= eps`` with the
primal-dual hybrid gradient method applied to ``f -> (D* f, A f)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidArgumentError
from .sparsity import as_weights, weighted_norm

__all__ = [
    "LinearMap",
    "AnalysisProblem",
    "SolverConfig",
    "SolverResult",
    "Certificate",
    "as_linear_map",
    "prox_weighted_l1",
    "project_l2_ball",
    "operator_norm",
    "solve_analysis",
    "certify_solution",
]


@dataclass(frozen=True)
class LinearMap:
    """Matrix-free linear map ``C^shape[1] -> C^shape[0]``."""

    forward: Callable
    adjoint: Callable
    shape: tuple


def as_linear_map(K):
    if isinstance(K, LinearMap):
        return K
    if hasattr(K, "forward") and hasattr(K, "adjoint"):
        return LinearMap(K.forward, K.adjoint, (K.m, K.n))
    M = np.asarray(K)
    if M.ndim != 2:
        raise InvalidArgumentError("expected a matrix or an object with forward/adjoint")
    return LinearMap(lambda v: M @ v, lambda g: M.conj().T @ g, M.shape)


def prox_weighted_l1(v, theta, omega=None):
    """Complex soft thresholding with per-entry threshold ``theta * omega_j``."""
    if theta <= 0:
        raise InvalidArgumentError("theta must be positive")
    v = np.asarray(v)
    w = np.ones(v.shape) if omega is None else as_weights(omega, v.size).omega
    mag = np.abs(v)
    shrink = np.maximum(0.0, 1.0 - np.divide(theta * w, mag, out=np.full(mag.shape, np.inf),
                                             where=mag > 0))
    return v * shrink


def project_l2_ball(q, center, radius):
    """Euclidean projection of ``q`` onto the ball ``||x - center||_2 <= radius``."""
    if radius < 0:
        raise InvalidArgumentError("radius must be nonnegative")
    q = np.asarray(q)
    d = q - center
    dist = np.linalg.norm(d)
    if dist <= radius:
        return q
    return center + d * (radius / dist)


def _clip_magnitude(p, bound):
    mag = np.abs(p)
    scale = np.minimum(1.0, np.divide(bound, mag, out=np.ones(mag.shape), where=mag > 0))
    return p * scale


def operator_norm(K, iters=100, tol=1e-6, seed=0):
    """Largest singular value of ``K`` by power iteration on ``K* K``.

    Stops when the estimate changes by less than ``tol`` relative; returns
    0.0 for the zero map.
    """
    K = as_linear_map(K)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(K.shape[1]) + 1j * rng.standard_normal(K.shape[1])
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = K.adjoint(K.forward(x))
        norm_y = np.linalg.norm(y)
        if norm_y == 0:
            return 0.0
        new = math.sqrt(norm_y)
        x = y / norm_y
        if est > 0 and abs(new - est) <= tol * new:
            est = new
            break
        est = new
    return float(np.linalg.norm(K.forward(x))) if est > 0 else 0.0


@dataclass(frozen=True, eq=False)
class AnalysisProblem:
    """``min ||D* f||_{omega,1}  s.t.  ||op(f) - y||_2 <= epsilon``.

    ``y`` lives in the operator's range, i.e. any ``1/sqrt(m)`` and
    preconditioner weighting is already applied (see
    :meth:`redict.sampling.SampledOperator.weight_data`).
    """

    op: object
    D: object
    y: np.ndarray
    epsilon: float = 0.0
    omega: Optional[object] = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise InvalidArgumentError("epsilon must be nonnegative")
        y = np.asarray(self.y, dtype=complex)
        if y.shape != (self.op.m,):
            raise InvalidArgumentError(f"y must have length m={self.op.m}, got {y.shape}")
        if self.op.n != self.D.n:
            raise InvalidArgumentError("operator and dictionary act on different dimensions")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "omega", as_weights(self.omega, self.D.N))

    def objective(self, f):
        return weighted_norm(self.D.analysis(f), self.omega, 1)

    def residual(self, f):
        return float(np.linalg.norm(self.op.forward(f) - self.y))

    def feasibility_gap(self, f):
        return max(0.0, self.residual(f) - self.epsilon)


@dataclass
class SolverConfig:
    max_iters: int = 5000
    tol_rel_change: float = 1e-7
    tol_feasibility: float = 1e-8
    power_iters: int = 100
    theta: float = 1.0
    # sigma / tau = balance * ||omega||^2 / ||y||^2, so the steps follow the data scale
    balance: float = 10.0
    burn_in: int = 500
    window: int = 100
    trace_every: int = 0

    def __post_init__(self):
        if self.max_iters < 1 or self.power_iters < 1:
            raise InvalidArgumentError("iteration counts must be positive")
        if self.tol_rel_change <= 0 or self.tol_feasibility <= 0 or self.balance <= 0:
            raise InvalidArgumentError("tolerances and balance must be positive")
        if not 0 <= self.theta <= 1:
            raise InvalidArgumentError("theta must lie in [0, 1]")

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        bad = set(d) - known
        if bad:
            raise InvalidArgumentError(f"unknown solver options {sorted(bad)}")
        return cls(**d)


@dataclass(eq=False)
class SolverResult:
    f_sharp: np.ndarray
    iterations: int
    objective: float
    feasibility_gap: float
    converged: bool
    rel_change: float
    merit_increases: int = 0
    trace: list = field(default_factory=list)
    dual: Optional[tuple] = None


def _restore_feasibility(A, y, eps, f):
    """Smallest least-squares correction moving ``f`` into the constraint set."""
    r = A @ f - y
    res = np.linalg.norm(r)
    if res <= eps:
        return f
    U, sv, Vh = np.linalg.svd(A, full_matrices=False)
    keep = sv > 1e-12 * sv[0]
    U, sv, Vh = U[:, keep], sv[keep], Vh[keep]
    coef = U.conj().T @ r
    in_range = np.linalg.norm(coef)
    out_of_range2 = max(res**2 - in_range**2, 0.0)
    if in_range == 0:
        return f
    slack2 = eps**2 - out_of_range2
    t = 1.0 if slack2 <= 0 else max(0.0, 1.0 - math.sqrt(slack2) / in_range)
    return f - t * (Vh.conj().T @ (coef / sv))


def solve_analysis(problem, config=None, f0=None, dual0=None):
    """Primal-dual hybrid gradient for the (weighted) l1-analysis program.

    Dual updates: magnitude clipping at ``omega`` (conjugate of the weighted
    l1 norm) and the Moreau identity with the ball projection (``eps = 0``
    reduces it to ``q + sigma (A f - y)``). Step sizes satisfy
    ``sigma tau ||K||^2 = 0.95`` with ratio ``sigma / tau = balance ||omega||^2 / ||y||^2``:
    the dual iterate lives on the scale of the weights and the primal one on
    the scale of the data, which keeps the iteration scale covariant. On exit the iterate receives the smallest
    least-squares correction that makes it feasible.

    ``f0`` and ``dual0 = (p, q)`` warm-start the primal and dual iterates;
    the final dual pair is returned in ``SolverResult.dual``.
    """
    cfg = config or SolverConfig()
    op, D, y, eps = problem.op, problem.D, problem.y, problem.epsilon
    w = problem.omega.omega
    A = op.matrix()
    Dh = D.entries.conj().T
    N = D.N
    K = np.vstack([Dh, A])
    Kh = K.conj().T
    norm_K = operator_norm(K, iters=cfg.power_iters, tol=1e-10)
    y_scale = float(np.linalg.norm(y))
    ratio = cfg.balance * float(w @ w) / y_scale**2 if y_scale > 0 else cfg.balance
    step = math.sqrt(0.95) / norm_K
    tau = step / math.sqrt(ratio)
    sigma = step * math.sqrt(ratio)

    f = np.zeros(D.n, dtype=complex) if f0 is None else np.array(f0, dtype=complex)
    f_bar = f.copy()
    if dual0 is None:
        p = np.zeros(D.N, dtype=complex)
        q = np.zeros(op.m, dtype=complex)
    else:
        p, q = (np.array(v, dtype=complex) for v in dual0)
        if p.shape != (D.N,) or q.shape != (op.m,):
            raise InvalidArgumentError("dual warm start has the wrong shape")
    if f.shape != (D.n,):
        raise InvalidArgumentError(f"f0 must have length {D.n}")
    y_norm = max(1.0, float(np.linalg.norm(y)))
    feas_tol = cfg.tol_feasibility * y_norm

    trace = []
    merit_increases = 0
    prev_merit = None
    rel = np.inf
    k = 0
    converged = False
    for k in range(1, cfg.max_iters + 1):
        g = K @ f_bar
        p = _clip_magnitude(p + sigma * g[:N], w)
        v = q + sigma * g[N:]
        q = v - sigma * project_l2_ball(v / sigma, y, eps)
        f_old = f
        f = f - tau * (Kh @ np.concatenate([p, q]))
        f_bar = f + cfg.theta * (f - f_old)

        diff = np.linalg.norm(f - f_old)
        rel = diff / max(np.linalg.norm(f), 1e-300)

        monitor = k > cfg.burn_in and (k - cfg.burn_in) % cfg.window == 0
        traced = cfg.trace_every and k % cfg.trace_every == 0
        if monitor or traced or rel <= cfg.tol_rel_change:
            res = float(np.linalg.norm(A @ f - y))
            gap = max(0.0, res - eps)
            if monitor or traced:
                obj = weighted_norm(Dh @ f, w, 1)
                if traced:
                    trace.append((k, obj, res))
                if monitor:
                    merit = obj + max(1.0, float(np.linalg.norm(q))) * gap
                    if prev_merit is not None and merit > 1.01 * prev_merit:
                        merit_increases += 1
                    prev_merit = merit
            if rel <= cfg.tol_rel_change and gap <= feas_tol:
                converged = True
                break

    f = _restore_feasibility(A, y, eps, f)
    gap = problem.feasibility_gap(f)
    return SolverResult(f, k, problem.objective(f), gap, converged, float(rel),
                        merit_increases, trace, (p, q))


@dataclass(frozen=True)
class Certificate:
    feasible: bool
    objective: float
    objective_vs_reference: Optional[float] = None
    error_l2: Optional[float] = None
    reference_feasible: Optional[bool] = None


def certify_solution(problem, result, f_reference=None, tol_feasibility=1e-8):
    """Constraint check plus comparison with a reference signal.

    ``objective_vs_reference`` is ``(obj(f#) - obj(ref)) / (1 + obj(ref))``;
    when the reference is feasible a minimizer must make it ``<= ~0``.
    """
    y_norm = max(1.0, float(np.linalg.norm(problem.y)))
    gap = problem.feasibility_gap(result.f_sharp)
    obj = problem.objective(result.f_sharp)
    if f_reference is None:
        return Certificate(gap <= tol_feasibility * y_norm, obj)
    ref = np.asarray(f_reference)
    ref_obj = problem.objective(ref)
    return Certificate(
        gap <= tol_feasibility * y_norm,
        obj,
        (obj - ref_obj) / (1.0 + ref_obj),
        float(np.linalg.norm(result.f_sharp - ref)),
        problem.feasibility_gap(ref) <= tol_feasibility * y_norm,
    )
