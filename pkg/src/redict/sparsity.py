"""Weighted norms, best s-term approximation and localization factors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError, PreconditionError, ResourceError, UnsupportedError

__all__ = [
    "Weights",
    "SupportSet",
    "LocalizationEstimate",
    "as_weights",
    "weighted_norm",
    "best_s_term",
    "unrecoverable_energy",
    "admissible_supports",
    "count_admissible_supports",
    "random_support",
    "support_image_basis",
    "localization_factor",
    "closed_form_eta",
]

EXACT = "exact"
MONTE_CARLO = "mc"
BOUND = "bound"

# relative singular-value cutoff for the image of D_Lambda
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Weights:
    """Per-column weights ``omega_j >= 1``."""

    omega: np.ndarray

    def __post_init__(self):
        w = np.array(self.omega, dtype=float, copy=True)
        if w.ndim != 1:
            raise InvalidArgumentError("weights must be a vector")
        if not np.all(np.isfinite(w)) or np.any(w < 1.0):
            raise InvalidArgumentError("weights must be finite and >= 1")
        w.setflags(write=False)
        object.__setattr__(self, "omega", w)

    @classmethod
    def uniform(cls, N):
        return cls(np.ones(int(N)))

    @property
    def is_uniform(self):
        return bool(np.all(self.omega == 1.0))

    def __len__(self):
        return self.omega.size

    def size_of(self, indices):
        """Weighted size ``sum omega_j^2`` of an index set."""
        return float(np.sum(self.omega[list(indices)] ** 2))


def as_weights(omega, N):
    if omega is None:
        return Weights.uniform(N)
    w = omega if isinstance(omega, Weights) else Weights(omega)
    if len(w) != N:
        raise InvalidArgumentError(f"expected {N} weights, got {len(w)}")
    return w


@dataclass(frozen=True)
class SupportSet:
    indices: tuple
    weighted_size: float

    @classmethod
    def from_indices(cls, indices, omega):
        idx = tuple(sorted(int(i) for i in indices))
        return cls(idx, omega.size_of(idx))


@dataclass(frozen=True)
class LocalizationEstimate:
    value: float
    method: str
    s: float
    trials: int
    seed: Optional[int] = None


def weighted_norm(x, omega=None, p=1.0):
    """``(sum |x_j|^p omega_j^(2-p))^(1/p)``; ``p = 0`` gives the weighted sparsity."""
    x = np.asarray(x)
    w = as_weights(omega, x.size).omega
    if p == 0:
        return float(np.sum(w[x != 0] ** 2))
    if not (0 < p <= 2):
        raise InvalidArgumentError(f"p must be 0 or in (0, 2], got {p}")
    return float(np.sum(np.abs(x) ** p * w ** (2 - p)) ** (1.0 / p))


def best_s_term(u, s, omega=None):
    """Keep the largest entries of ``u``; ties go to the lowest index.

    Unweighted: the ``floor(s)`` largest magnitudes. Weighted: scan entries by
    decreasing magnitude and keep each one whose weight still fits in the
    budget ``sum omega_j^2 <= s``.
    """
    u = np.asarray(u)
    if s < 0:
        raise InvalidArgumentError(f"s must be nonnegative, got {s}")
    order = np.argsort(-np.abs(u), kind="stable")
    out = np.zeros_like(u)
    if omega is None:
        keep = order[:int(math.floor(s))]
        out[keep] = u[keep]
        return out
    w2 = as_weights(omega, u.size).omega ** 2
    used = 0.0
    for j in order:
        if u[j] == 0:
            break
        if used + w2[j] <= s:
            out[j] = u[j]
            used += w2[j]
    return out


def unrecoverable_energy(D, f, s):
    """``||D*f - (D*f)_s||_1 / sqrt(s)``."""
    f = np.asarray(f)
    if f.shape != (D.n,):
        raise InvalidArgumentError(f"signal must have length {D.n}, got {f.shape}")
    if s <= 0:
        raise InvalidArgumentError("s must be positive")
    g = D.analysis(f)
    return float(np.sum(np.abs(g - best_s_term(g, s))) / math.sqrt(s))


# -- support enumeration ------------------------------------------------------

def _fits(w2, s):
    # absorb rounding in sums of squared weights
    return w2 <= s * (1 + 1e-12)


def admissible_supports(omega, s, budget=None):
    """Yield every maximal support with weighted size ``<= s`` in lexicographic order.

    Subsets of a yielded support are never yielded: all quantities computed
    over supports here are monotone under inclusion.
    """
    w2 = omega.omega ** 2
    N = w2.size
    visited = 0
    stack = [((), 0.0, 0)]
    while stack:
        support, size, start = stack.pop()
        children = [j for j in range(start, N) if _fits(size + w2[j], s)]
        if not children:
            if not support:
                continue
            chosen = set(support)
            if any(j not in chosen and _fits(size + w2[j], s) for j in range(N)):
                continue
            visited += 1
            if budget is not None and visited > budget:
                raise ResourceError(f"support enumeration exceeds budget of {budget}")
            yield support
            continue
        for j in reversed(children):
            stack.append((support + (j,), size + w2[j], j + 1))


def count_admissible_supports(omega, s):
    """Number of maximal supports; closed form for uniform weights."""
    if omega.is_uniform:
        k = min(int(math.floor(s * (1 + 1e-12))), len(omega))
        return math.comb(len(omega), k) if k > 0 else 0
    return sum(1 for _ in admissible_supports(omega, s))


def random_support(omega, s, rng):
    """Random maximal support: greedy fill along a uniform random permutation.

    With uniform weights this is a uniformly distributed ``floor(s)``-subset.
    """
    w2 = omega.omega ** 2
    chosen, size = [], 0.0
    for j in rng.permutation(w2.size):
        if _fits(size + w2[j], s):
            chosen.append(int(j))
            size += w2[j]
    return tuple(sorted(chosen))


def support_image_basis(D, support, rank_tol=RANK_TOL):
    """Orthonormal basis (columns) of ``range(D_Lambda)`` from a thin SVD."""
    cols = D.entries[:, list(support)]
    if D.is_real:
        cols = cols.real
    U, sv, _ = np.linalg.svd(cols, full_matrices=False)
    if sv.size == 0 or sv[0] == 0:
        return U[:, :0]
    return U[:, sv > rank_tol * sv[0]]


# -- localization factor ------------------------------------------------------

def _ascend(M, w, c, steps):
    """Fixed-point ascent of ``c -> ||M c||_{w,1}`` on the unit sphere.

    Works on a batch: ``c`` has shape (r, B). The objective is convex, so the
    normalized supergradient step never decreases it.
    """
    for _ in range(steps):
        v = M @ c
        mag = np.abs(v)
        phase = np.divide(v, mag, out=np.zeros_like(v), where=mag > 0)
        g = M.conj().T @ (w[:, None] * phase)
        norms = np.linalg.norm(g, axis=0)
        ok = norms > 0
        c_new = c.copy()
        c_new[:, ok] = g[:, ok] / norms[ok]
        if np.max(np.abs(c_new - c)) < 1e-15:
            c = c_new
            break
        c = c_new
    return c


def _objective(M, w, c):
    return w @ np.abs(M @ c)


def _random_sphere(rng, r, count, real):
    c = rng.standard_normal((r, count))
    if not real:
        c = c + 1j * rng.standard_normal((r, count))
    return c / np.linalg.norm(c, axis=0)


def _fibonacci_sphere(count):
    i = np.arange(count) + 0.5
    polar = np.arccos(1 - 2 * i / count)
    azimuth = np.pi * (1 + 5**0.5) * i
    return polar, azimuth


def _exact_real_support(M, w, max_patterns):
    """Max over sign vectors of ``||M^T (w * sigma)||_2`` restricted to active rows."""
    active = np.linalg.norm(M, axis=1) > 1e-14
    A = w[active, None] * M[active]
    k = A.shape[0]
    if k == 0:
        return 0.0, 0
    patterns = 2 ** (k - 1)
    if patterns > max_patterns:
        raise ResourceError(
            f"exact enumeration needs 2^{k - 1} sign patterns per support; budget left {max_patterns}"
        )
    best = 0.0
    chunk = 1 << 15
    bits = np.arange(k - 1)
    for start in range(0, patterns, chunk):
        codes = np.arange(start, min(patterns, start + chunk))
        signs = np.ones((codes.size, k))
        signs[:, 1:] = 1 - 2 * ((codes[:, None] >> bits) & 1)
        vals = np.linalg.norm(signs @ A, axis=1)
        best = max(best, float(vals.max()))
    return best, patterns


def _exact_complex_support(M, w, grid_points):
    r = M.shape[1]
    if r == 1:
        return float(w @ np.abs(M[:, 0]))
    if r != 2:
        raise UnsupportedError(
            "exact localization factor for complex dictionaries is limited to supports of rank <= 2"
        )
    polar, azimuth = _fibonacci_sphere(grid_points)
    c = np.vstack([np.cos(polar / 2), np.exp(1j * azimuth) * np.sin(polar / 2)])
    vals = _objective(M, w, c)
    top = np.argsort(vals)[-16:]
    polished = _ascend(M, w, c[:, top], 2000)
    return float(max(vals.max(), _objective(M, w, polished).max()))


def closed_form_eta(D, s, omega=None):
    """Closed-form upper bounds for the built-in frames (unweighted only)."""
    w = as_weights(omega, D.N)
    if not w.is_uniform:
        raise UnsupportedError("closed-form localization bounds are unweighted only")
    if D.kind == "harmonic":
        L = D.params["L"]
        if L * s > D.N / 4:
            raise PreconditionError(
                f"harmonic bound needs L*s <= N/4, got L={L}, s={s}, N={D.N}"
            )
        return 1.0 + L * math.sqrt(2.0)
    if D.kind == "haar":
        return 1.0 + math.sqrt(3.0 * math.log2(D.n))
    raise UnsupportedError(f"no closed-form localization bound for {D.kind} dictionaries")


def localization_factor(D, s, omega=None, method=EXACT, budget=None, seed=None,
                        restarts=4, steps=50, grid_points=4096):
    """Estimate ``sup ||D* D z||_{omega,1} / sqrt(s)`` over ``||Dz||_2 = 1``, weighted ``s``-sparse ``z``.

    Parameters
    ----------
    method : {"exact", "mc", "bound"}
        ``exact`` enumerates every maximal support. Real dictionaries use
        sign-pattern enumeration (``budget`` caps the total number of sign
        patterns). Complex dictionaries are handled for supports of rank at
        most 2 through a dense search on the projective sphere followed by
        ascent. ``mc`` draws ``budget`` random supports and ascends from
        ``restarts`` random starting points each; the result is a lower bound.
        ``bound`` returns the closed form for harmonic/Haar frames.
    """
    if s <= 0 or s > D.N:
        raise InvalidArgumentError(f"need 0 < s <= N={D.N}, got {s}")
    w = as_weights(omega, D.N)
    if method == BOUND:
        return LocalizationEstimate(closed_form_eta(D, s, w), BOUND, s, 0, None)

    real = D.is_real
    Dh = D.entries.conj().T
    if real:
        Dh = Dh.real
    root_s = math.sqrt(s)

    if method == EXACT:
        max_patterns = 2**26 if budget is None else int(budget)
        best, count, used = 0.0, 0, 0
        for support in admissible_supports(w, s):
            count += 1
            M = Dh @ support_image_basis(D, support)
            if real:
                val, n_pat = _exact_real_support(M, w.omega, max_patterns - used)
                used += n_pat
            else:
                val = _exact_complex_support(M, w.omega, grid_points)
            best = max(best, val)
        return LocalizationEstimate(best / root_s, EXACT, s, count, None)

    if method == MONTE_CARLO:
        draws = 200 if budget is None else int(budget)
        rng = np.random.default_rng(seed)
        best = 0.0
        for _ in range(draws):
            support = random_support(w, s, rng)
            M = Dh @ support_image_basis(D, support)
            if M.shape[1] == 0:
                continue
            c = _ascend(M, w.omega, _random_sphere(rng, M.shape[1], restarts, real), steps)
            best = max(best, float(_objective(M, w.omega, c).max()))
        return LocalizationEstimate(best / root_s, MONTE_CARLO, s, draws, seed)

    raise InvalidArgumentError(f"unknown method {method!r}")
