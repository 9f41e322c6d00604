"""Bounded orthonormal measurement systems and their seeded subsamples.

An ensemble's rows are ``scale[i] * basis[i]`` where ``basis`` is an
orthonormal (unitary) matrix. The default scale ``sqrt(n)`` gives the
classical BOS under the uniform measure. Scales ``||kappa||_2 / kappa_i``
give the preconditioned variable-density system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError, ValidationError

__all__ = [
    "MeasurementEnsemble",
    "CoherenceProfile",
    "SampledOperator",
    "OrthonormalityReport",
    "PRNG_NAME",
    "build_ensemble",
    "unitary_dft",
    "coherence_profile",
    "fourier_haar_kappa",
    "powerlaw_measure",
    "measure_and_weights_from_kappa",
    "subsample",
    "full_sampling",
    "measure_apply",
    "verify_orthonormal_system",
]

PRNG_NAME = "numpy.PCG64"

FORWARD = "forward"
ADJOINT = "adjoint"


def _frozen(a, dtype=complex):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def unitary_dft(n):
    """Unitary DFT matrix, ``F[k, j] = exp(-2 pi i k j / n) / sqrt(n)``."""
    return np.fft.fft(np.eye(n), axis=0) / math.sqrt(n)


def _check_measure(measure, n):
    nu = np.asarray(measure, dtype=float)
    if nu.shape != (n,):
        raise InvalidArgumentError(f"measure must have length {n}, got shape {nu.shape}")
    if not np.all(np.isfinite(nu)) or np.any(nu < 0):
        raise InvalidArgumentError("measure entries must be finite and nonnegative")
    if abs(nu.sum() - 1.0) > 1e-12:
        raise InvalidArgumentError(f"measure sums to {nu.sum():.15g}, not 1")
    return nu


@dataclass(frozen=True, eq=False)
class MeasurementEnsemble:
    """Full row system ``rows[i] = scale[i] * basis[i]`` with sampling measure."""

    basis: np.ndarray
    scale: np.ndarray
    measure: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "basis", _frozen(self.basis))
        object.__setattr__(self, "scale", _frozen(self.scale, float))
        object.__setattr__(self, "measure", _frozen(self.measure, float))

    @property
    def n(self):
        return self.basis.shape[1]

    @property
    def rows(self):
        return self.scale[:, None] * self.basis

    @property
    def bound(self):
        """Uniform entry bound ``K`` (metadata only)."""
        return float(np.max(np.abs(self.rows)))


@dataclass(frozen=True)
class OrthonormalityReport:
    defect: float
    bound: float
    passed: bool


def build_ensemble(kind, n, measure="uniform", *, matrix=None, scale=None, tol=1e-6):
    """Build a measurement ensemble.

    Parameters
    ----------
    kind : {"dft", "standard", "custom"}
        ``dft`` and ``standard`` use the unitary DFT / identity as basis;
        ``custom`` takes the full row matrix from ``matrix``.
    n : int
    measure : "uniform" or array_like
    scale : array_like, optional
        Per-row scale for built-in kinds; defaults to ``sqrt(n)``.
    tol : float
        Orthonormality tolerance applied to custom matrices.
    """
    n = int(n)
    if n < 1:
        raise InvalidArgumentError(f"n must be positive, got {n}")
    if isinstance(measure, str):
        if measure != "uniform":
            raise InvalidArgumentError(f"unknown measure name {measure!r}")
        nu = np.full(n, 1.0 / n)
    else:
        nu = _check_measure(measure, n)

    if kind in ("dft", "standard"):
        basis = unitary_dft(n) if kind == "dft" else np.eye(n, dtype=complex)
        if scale is None:
            s = np.full(n, math.sqrt(n))
        else:
            s = np.asarray(scale, dtype=float)
            if s.shape != (n,) or np.any(s <= 0):
                raise InvalidArgumentError("scale must be a positive vector of length n")
        return MeasurementEnsemble(basis, s, nu, kind)
    if kind == "custom":
        if matrix is None:
            raise InvalidArgumentError("custom ensemble needs a matrix")
        R = np.asarray(matrix, dtype=complex)
        if R.shape != (n, n):
            raise InvalidArgumentError(f"custom matrix must be {n}x{n}, got {R.shape}")
        ens = MeasurementEnsemble(R, np.ones(n), nu, "custom")
        report = verify_orthonormal_system(ens, tol)
        if not report.passed:
            raise ValidationError(
                f"custom rows are not orthonormal for the measure (defect {report.defect:.3e})",
                defect=report.defect,
            )
        return ens
    raise InvalidArgumentError(f"unknown ensemble kind {kind!r}")


def verify_orthonormal_system(ensemble, tol=1e-8, precond=None):
    """Check ``sum_i r_k(i) conj(r_j(i)) nu_i = delta_jk``; also report max |entry|.

    With ``precond`` the rows are ``precond[i] * rows[i]``, i.e. the
    preconditioned system is checked.
    """
    R = ensemble.rows
    if precond is not None:
        w = np.asarray(precond, dtype=float)
        if w.shape != (ensemble.n,):
            raise InvalidArgumentError("precond must have one weight per ensemble row")
        R = w[:, None] * R
    M = R.T @ (ensemble.measure[:, None] * R.conj())
    defect = float(np.max(np.abs(M - np.eye(ensemble.n))))
    return OrthonormalityReport(defect, float(np.max(np.abs(R))), defect <= tol)


@dataclass(frozen=True, eq=False)
class CoherenceProfile:
    mu: float
    mu_loc: np.ndarray
    kappa: Optional[np.ndarray] = None


def coherence_profile(basis, D, kappa=None):
    """Local coherence ``mu_loc[i] = max_j |<b_i, d_j>|`` of basis rows vs dictionary columns.

    The pairing is the bilinear row-times-column product, the same one the
    measurement operator uses.
    """
    B = np.asarray(basis)
    if B.ndim != 2 or B.shape[1] != D.n:
        raise InvalidArgumentError(
            f"basis rows must have length {D.n}, got shape {B.shape}"
        )
    mu_loc = np.max(np.abs(B @ D.entries), axis=1)
    if kappa is not None:
        kappa = np.asarray(kappa, dtype=float)
        if kappa.shape != mu_loc.shape:
            raise InvalidArgumentError("kappa must have one entry per basis row")
    return CoherenceProfile(float(mu_loc.max()), _frozen(mu_loc, float),
                            None if kappa is None else _frozen(kappa, float))


def fourier_haar_kappa(n):
    """``3 sqrt(2 pi) / sqrt(k)`` for DFT rows in natural order, DC row has k = 1."""
    return 3.0 * math.sqrt(2.0 * math.pi) / np.sqrt(np.arange(1, n + 1))


def powerlaw_measure(n):
    """``nu(k) proportional to 1/k`` on 1-based frequencies in natural order."""
    w = 1.0 / np.arange(1, n + 1)
    return w / w.sum()


def measure_and_weights_from_kappa(kappa):
    """Sampling measure ``kappa^2 / ||kappa||^2`` and preconditioner ``||kappa|| / kappa``."""
    kappa = np.asarray(kappa, dtype=float)
    if kappa.ndim != 1 or kappa.size == 0:
        raise InvalidArgumentError("kappa must be a nonempty vector")
    if np.any(~np.isfinite(kappa)) or np.any(kappa <= 0):
        raise InvalidArgumentError("kappa entries must be finite and positive")
    norm = float(np.linalg.norm(kappa))
    measure = (kappa / norm) ** 2
    measure /= measure.sum()
    return measure, norm / kappa


@dataclass(frozen=True, eq=False)
class SampledOperator:
    """Rows ``i_1..i_m`` of an ensemble, scaled by ``1/sqrt(m)`` and ``precond``.

    ``forward(v)[l] = precond[i_l] * <rows[i_l], v> / sqrt(m)``.
    """

    ensemble: MeasurementEnsemble
    indices: np.ndarray
    precond: Optional[np.ndarray] = None
    seed: Optional[int] = None
    prng: str = PRNG_NAME

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64, copy=True)
        if idx.ndim != 1 or idx.size == 0:
            raise InvalidArgumentError("need at least one sampled index")
        if idx.min() < 0 or idx.max() >= self.ensemble.n:
            raise InvalidArgumentError("sampled index out of range")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        if self.precond is not None:
            w = np.asarray(self.precond, dtype=float)
            if w.shape != (self.ensemble.n,):
                raise InvalidArgumentError("precond must have one weight per ensemble row")
            object.__setattr__(self, "precond", _frozen(w, float))
        object.__setattr__(self, "_cache", {})

    @property
    def m(self):
        return self.indices.size

    @property
    def n(self):
        return self.ensemble.n

    @property
    def normalization(self):
        return 1.0 / math.sqrt(self.m)

    def row_weights(self):
        """Per-measurement multiplier: ``scale * precond / sqrt(m)``."""
        w = self.ensemble.scale[self.indices] * self.normalization
        if self.precond is not None:
            w = w * self.precond[self.indices]
        return w

    def matrix(self):
        """Dense m x n matrix of the operator (cached)."""
        cache = self._cache
        if "A" not in cache:
            A = self.row_weights()[:, None] * self.ensemble.basis[self.indices]
            A.setflags(write=False)
            cache["A"] = A
        return cache["A"]

    def forward(self, v):
        return measure_apply(self, v, FORWARD)

    def adjoint(self, g):
        return measure_apply(self, g, ADJOINT)

    def weight_data(self, raw):
        """Map unweighted basis measurements ``<b_i, f> + e`` to the operator's range.

        This is the ``(1/sqrt(m)) W y`` weighting of the preconditioned data.
        """
        raw = np.asarray(raw)
        if raw.shape != (self.m,):
            raise InvalidArgumentError(f"expected {self.m} raw measurements, got {raw.shape}")
        return self.row_weights() * raw


def _draw_indices(measure, m, rng):
    cdf = np.cumsum(measure)
    cdf /= cdf[-1]
    u = rng.random(m)
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, measure.size - 1)


def subsample(ensemble, m, seed, precond=None):
    """Draw ``m`` row indices i.i.d. from the ensemble measure (with replacement).

    Uses inverse-CDF sampling on a ``numpy`` PCG64 stream seeded by ``seed``.
    """
    m = int(m)
    if m < 1:
        raise InvalidArgumentError(f"m must be positive, got {m}")
    rng = np.random.default_rng(seed)
    idx = _draw_indices(ensemble.measure, m, rng)
    return SampledOperator(ensemble, idx, precond, seed)


def full_sampling(ensemble, precond=None):
    """Every row exactly once, in order (deterministic, ``m = n``)."""
    return SampledOperator(ensemble, np.arange(ensemble.n), precond, None)


def measure_apply(op, v, direction):
    """Apply the sampled operator (``forward``, input length n) or its adjoint (length m)."""
    v = np.asarray(v)
    if direction == FORWARD:
        if v.shape[0] != op.n:
            raise InvalidArgumentError(f"forward expects length {op.n}, got {v.shape[0]}")
        if op.ensemble.kind == "dft" and v.ndim == 1:
            spectrum = np.fft.fft(v) / math.sqrt(op.n)
            return op.row_weights() * spectrum[op.indices]
        return op.matrix() @ v
    if direction == ADJOINT:
        if v.shape[0] != op.m:
            raise InvalidArgumentError(f"adjoint expects length {op.m}, got {v.shape[0]}")
        if op.ensemble.kind == "dft" and v.ndim == 1:
            spectrum = np.zeros(op.n, dtype=complex)
            np.add.at(spectrum, op.indices, op.row_weights() * v)
            return np.fft.ifft(spectrum) * math.sqrt(op.n)
        return op.matrix().conj().T @ v
    raise InvalidArgumentError(f"unknown direction {direction!r}")
