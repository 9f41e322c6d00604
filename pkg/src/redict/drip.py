"""Empirical D-RIP constants and measurement-count calculators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError, ResourceError
from .sparsity import (
    admissible_supports,
    as_weights,
    count_admissible_supports,
    random_support,
    support_image_basis,
)

__all__ = [
    "DripEstimate",
    "BoundConfig",
    "drip_delta",
    "support_delta",
    "extreme_eigenvalue_magnitude",
    "check_drip_pair",
    "measurement_bound",
    "required_measurements",
]

EXACT = "exact"
RANDOM = "random"


@dataclass(frozen=True)
class DripEstimate:
    delta: float
    s: float
    method: str
    supports_examined: int
    seed: Optional[int] = None
    per_support_max: Optional[tuple] = None


@dataclass(frozen=True)
class BoundConfig:
    """Constants of the measurement bounds. ``C`` is not known; 1.0 is a placeholder."""

    C: float = 1.0
    delta: float = 0.08
    gamma: float = 0.01
    K: float = 1.0

    def __post_init__(self):
        if not self.C > 0:
            raise InvalidArgumentError("C must be positive")
        if not 0 < self.delta < 1:
            raise InvalidArgumentError("delta must lie in (0, 1)")
        if not 0 < self.gamma < 1:
            raise InvalidArgumentError("gamma must lie in (0, 1)")
        if not self.K >= 1:
            raise InvalidArgumentError("K must be >= 1")


def extreme_eigenvalue_magnitude(H, tol=1e-9, max_iter=10_000, seed=0):
    """Largest ``|eigenvalue|`` of each Hermitian matrix in a batch ``H`` (B, r, r).

    Two shifted power iterations per matrix, one for ``H`` and one for ``-H``,
    each on the positive semidefinite ``±H + c I`` with ``c`` the Frobenius
    norm. Iteration stops once every residual ``||P x - lambda x||`` is below
    ``tol``.
    """
    H = np.asarray(H)
    if H.ndim == 2:
        H = H[None]
    B, r, _ = H.shape
    if r == 0:
        return np.zeros(B)
    rng = np.random.default_rng(seed)
    eye = np.eye(r)
    start = rng.standard_normal(r) + 1j * rng.standard_normal(r)
    start /= np.linalg.norm(start)
    out = np.full(B, -np.inf)
    for sign in (1.0, -1.0):
        shift = np.linalg.norm(H, axis=(1, 2))
        P = sign * H + shift[:, None, None] * eye
        # every matrix starts from the same vector and stops on its own
        # residual, so its result does not depend on the rest of the batch
        x = np.tile(start, (B, 1))
        lam = np.zeros(B)
        active = np.arange(B)
        for _ in range(max_iter):
            Px = np.einsum("bij,bj->bi", P[active], x[active])
            lam[active] = np.real(np.einsum("bi,bi->b", x[active].conj(), Px))
            resid = np.linalg.norm(Px - lam[active, None] * x[active], axis=1)
            norms = np.linalg.norm(Px, axis=1)
            moving = (resid > tol) & (norms > 0)
            x[active[moving]] = Px[moving] / norms[moving, None]
            active = active[moving]
            if active.size == 0:
                break
        out = np.maximum(out, lam - shift)
    return np.maximum(out, 0.0)


def _projected_gram(A, D, supports):
    bases = [support_image_basis(D, sup) for sup in supports]
    r = max((Q.shape[1] for Q in bases), default=0)
    H = np.zeros((len(bases), r, r), dtype=complex)
    for b, Q in enumerate(bases):
        AQ = A @ Q
        k = Q.shape[1]
        H[b, :k, :k] = AQ.conj().T @ AQ - np.eye(k)
    return (H + np.conj(np.transpose(H, (0, 2, 1)))) / 2


def support_delta(op, D, supports, tol=1e-9, max_iter=10_000):
    """``||Q*(A*A - I)Q||`` for each support, ``Q`` an orthonormal basis of ``range(D_Lambda)``."""
    supports = list(supports)
    if not supports:
        return np.zeros(0)
    H = _projected_gram(op.matrix(), D, supports)
    return extreme_eigenvalue_magnitude(H, tol, max_iter)


def drip_delta(op, D, s, omega=None, method=EXACT, budget=None, seed=None,
               tol=1e-9, max_iter=10_000, per_support=False, batch=512):
    """Empirical restricted isometry constant of ``op`` over (weighted) ``s``-sparse images of ``D``.

    ``exact`` evaluates every maximal support with weighted size ``<= s``
    (``budget`` caps the count, default 10**5). ``random`` evaluates
    ``budget`` random maximal supports drawn sequentially from ``seed``, so a
    larger budget extends the same sequence.
    """
    if op.n != D.n:
        raise InvalidArgumentError(f"operator acts on C^{op.n}, dictionary on C^{D.n}")
    if s <= 0:
        raise InvalidArgumentError("s must be positive")
    w = as_weights(omega, D.N)

    if method == EXACT:
        limit = 100_000 if budget is None else int(budget)
        if w.is_uniform and count_admissible_supports(w, s) > limit:
            raise ResourceError(
                f"{count_admissible_supports(w, s)} supports exceed the budget of {limit}"
            )
        support_iter = admissible_supports(w, s, budget=limit)
    elif method == RANDOM:
        draws = 100 if budget is None else int(budget)
        rng = np.random.default_rng(seed)
        support_iter = (random_support(w, s, rng) for _ in range(draws))
    else:
        raise InvalidArgumentError(f"unknown method {method!r}")

    best, count, table = 0.0, 0, []
    chunk = []

    def flush():
        nonlocal best
        vals = support_delta(op, D, chunk, tol, max_iter)
        if vals.size:
            best = max(best, float(vals.max()))
        if per_support:
            table.extend(zip(chunk, vals.tolist()))
        chunk.clear()

    for sup in support_iter:
        chunk.append(sup)
        count += 1
        if len(chunk) >= batch:
            flush()
    flush()
    return DripEstimate(best, s, method, count, seed if method == RANDOM else None,
                        tuple(table) if per_support else None)


def check_drip_pair(op, D, x, delta):
    """Whether ``(1-delta)||Dx||^2 <= ||op(Dx)||^2 <= (1+delta)||Dx||^2``."""
    x = np.asarray(x)
    if x.shape != (D.N,):
        raise InvalidArgumentError(f"coefficients must have length {D.N}, got {x.shape}")
    if op.n != D.n:
        raise InvalidArgumentError("operator and dictionary dimensions differ")
    f = D.synthesis(x)
    energy = float(np.vdot(f, f).real)
    measured = float(np.linalg.norm(op.forward(f)) ** 2)
    return (1 - delta) * energy <= measured <= (1 + delta) * energy


def measurement_bound(s, eta, N, config=None, form="general", kappa=None, n=None):
    """Unrounded right-hand side of one of the measurement-count bounds.

    Forms
    -----
    ``general``: ``C delta^-2 s eta^2 max(log^3(s eta^2) log N, log(1/gamma))``
    ``incoherent``: ``C s K^2 eta^2 log^3(s eta^2) log N`` (no delta: it is fixed inside C)
    ``local-coherence``: ``C delta^-2 eta^2 ||kappa||_2^2 s log^3(s eta^2) log N``
    ``fourier-haar``: ``C delta^-2 s log^3(s log n) log^3 n``
    """
    cfg = config or BoundConfig()
    if s < 1 or eta < 1 or N < 2:
        raise InvalidArgumentError("need s >= 1, eta >= 1 and N >= 2")
    se2 = s * eta**2
    inv_d2 = cfg.delta ** -2
    if form == "general":
        first = cfg.C * inv_d2 * se2 * math.log(se2) ** 3 * math.log(N)
        second = cfg.C * inv_d2 * se2 * math.log(1.0 / cfg.gamma)
        return max(first, second)
    if form == "incoherent":
        return cfg.C * s * cfg.K**2 * eta**2 * math.log(se2) ** 3 * math.log(N)
    if form == "local-coherence":
        if kappa is None:
            raise InvalidArgumentError("local-coherence needs kappa")
        k2 = float(np.sum(np.asarray(kappa, dtype=float) ** 2))
        return cfg.C * inv_d2 * eta**2 * k2 * s * math.log(se2) ** 3 * math.log(N)
    if form == "fourier-haar":
        if n is None or n < 2:
            raise InvalidArgumentError("fourier-haar needs the signal dimension n >= 2")
        return cfg.C * inv_d2 * s * math.log(s * math.log(n)) ** 3 * math.log(n) ** 3
    raise InvalidArgumentError(f"unknown bound form {form!r}")


def required_measurements(s, eta, N, config=None, form="general", kappa=None, n=None):
    """Ceiling of :func:`measurement_bound`, at least 1."""
    return max(1, math.ceil(measurement_bound(s, eta, N, config, form, kappa, n)))
