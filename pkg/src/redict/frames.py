"""Parseval frames: harmonic, redundant Haar and user supplied dictionaries.

A :class:`Dictionary` stores its dense synthesis matrix ``D`` (n x N, complex).
The dense matrix is the source of truth; the harmonic (FFT) and Haar
(pyramid) transforms are accelerations that must agree with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, ResourceError

__all__ = [
    "Dictionary",
    "build_harmonic_frame",
    "build_redundant_haar_frame",
    "custom_dictionary",
    "identity_dictionary",
    "dict_apply",
    "gram",
    "parseval_defect",
    "frame_info",
    "parse_matrix",
    "format_matrix",
    "read_matrix",
    "write_matrix",
    "parse_dict_spec",
]

# Dense n x N complex storage cap (entries); 2**26 entries is 1 GiB.
MAX_DENSE_ENTRIES = 2**26

SYNTHESIS = "synthesis"
ANALYSIS = "analysis"


def _readonly(a):
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Synthesis matrix of a frame together with its construction metadata.

    Parameters
    ----------
    entries : ndarray, shape (n, N)
        Complex synthesis matrix; column ``j`` is the frame vector ``d_j``.
    kind : {"harmonic", "haar", "custom"}
    params : dict
        ``{"L": L}`` for harmonic frames, ``{"p": p}`` for Haar frames.
    """

    entries: np.ndarray
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", _readonly(self.entries))
        if self.entries.ndim != 2:
            raise InvalidArgumentError("dictionary entries must be a 2-d matrix")

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def N(self):
        return self.entries.shape[1]

    @property
    def is_real(self):
        return not np.any(self.entries.imag)

    @property
    def label(self):
        if self.kind == "harmonic":
            return f"harmonic:{self.n},{self.params['L']}"
        if self.kind == "haar":
            return f"haar:{self.params['p']}"
        return f"custom:{self.n}x{self.N}"

    def synthesis(self, z, fast=True):
        return dict_apply(self, z, SYNTHESIS, fast=fast)

    def analysis(self, f, fast=True):
        return dict_apply(self, f, ANALYSIS, fast=fast)


def _check_budget(n, N):
    if n * N > MAX_DENSE_ENTRIES:
        raise ResourceError(
            f"dense {n}x{N} dictionary exceeds budget of {MAX_DENSE_ENTRIES} entries"
        )


def build_harmonic_frame(n, L):
    """First ``n`` rows of the unitary ``(n+L)``-point DFT.

    Entries are ``exp(2 pi i j k / (n+L)) / sqrt(n+L)`` with the 1-based row
    index ``j = 1..n`` and column index ``k = 1..n+L``.
    """
    n, L = int(n), int(L)
    if n < 1 or L < 0:
        raise InvalidArgumentError(f"harmonic frame needs n >= 1 and L >= 0, got n={n}, L={L}")
    N = n + L
    if N >= 2**31:
        raise InvalidArgumentError(f"n + L = {N} overflows the phase index arithmetic")
    _check_budget(n, N)
    j = np.arange(1, n + 1, dtype=np.int64)[:, None]
    k = np.arange(1, N + 1, dtype=np.int64)[None, :]
    # reduce j*k mod N before scaling so large products keep full precision
    phase = (j * k) % N
    D = np.exp(2j * np.pi * phase / N) / math.sqrt(N)
    return Dictionary(D, "harmonic", {"L": L})


def _haar_vector(p, level, k):
    n = 2**p
    h = np.zeros(n)
    width = 2 ** (p - level)
    start = k * width
    amp = 2.0 ** ((level - p) / 2)
    h[start:start + width // 2] = amp
    h[start + width // 2:start + width] = -amp
    return h


def haar_basis(p):
    """Orthonormal Haar basis of R^(2^p) as columns, coarse to fine.

    Column order: ``h0``, then levels ``0..p-1`` with translates ascending.
    """
    n = 2**p
    cols = [np.full(n, 2.0 ** (-p / 2))]
    for level in range(p):
        for k in range(2**level):
            cols.append(_haar_vector(p, level, k))
    return np.column_stack(cols)


def build_redundant_haar_frame(p):
    """Haar basis united with its one-sample circular shift, scaled by 1/sqrt(2).

    Columns alternate basis vector / shifted vector:
    ``h0, h0~, h_{0,0}, h_{0,0}~, h_{1,0}, h_{1,0}~, ...`` where
    ``h~[j] = h[(j + 1) mod n]``.
    """
    p = int(p)
    if p < 1:
        raise InvalidArgumentError(f"Haar frame needs p >= 1, got {p}")
    if p > 30:
        raise ResourceError(f"Haar frame with p={p} cannot be stored densely")
    n = 2**p
    _check_budget(n, 2 * n)
    H = haar_basis(p)
    D = np.empty((n, 2 * n))
    D[:, 0::2] = H
    D[:, 1::2] = np.roll(H, -1, axis=0)
    return Dictionary(D / math.sqrt(2.0), "haar", {"p": p})


def custom_dictionary(matrix):
    M = np.asarray(matrix)
    if M.ndim != 2:
        raise InvalidArgumentError("custom dictionary must be a 2-d matrix")
    if not np.all(np.isfinite(M)):
        raise InvalidArgumentError("custom dictionary contains NaN or Inf")
    if M.shape[1] < M.shape[0]:
        raise InvalidArgumentError(
            f"dictionary needs at least as many columns as rows, got {M.shape}"
        )
    return Dictionary(M, "custom", {})


def identity_dictionary(n):
    return custom_dictionary(np.eye(int(n)))


# -- fast transforms ---------------------------------------------------------

def _harmonic_synthesis(D, z):
    n, N = D.n, D.N
    # column c carries frequency (c + 1) mod N
    spectrum = np.roll(z, 1)
    full = np.fft.ifft(spectrum) * N
    return full[np.arange(1, n + 1) % N] / math.sqrt(N)


def _harmonic_analysis(D, f):
    n, N = D.n, D.N
    padded = np.zeros(N, dtype=complex)
    padded[np.arange(1, n + 1) % N] = f
    return np.fft.fft(padded)[np.arange(1, N + 1) % N] / math.sqrt(N)


def _haar_forward(x):
    a = np.asarray(x, dtype=complex)
    details = []
    while a.size > 1:
        even, odd = a[0::2], a[1::2]
        details.append((even - odd) / math.sqrt(2.0))
        a = (even + odd) / math.sqrt(2.0)
    return np.concatenate([a] + details[::-1])


def _haar_inverse(c):
    c = np.asarray(c, dtype=complex)
    a = c[:1]
    pos = 1
    while pos < c.size:
        d = c[pos:pos + a.size]
        pos += a.size
        out = np.empty(2 * a.size, dtype=complex)
        out[0::2] = (a + d) / math.sqrt(2.0)
        out[1::2] = (a - d) / math.sqrt(2.0)
        a = out
    return a


def _haar_synthesis(D, z):
    basis_part = _haar_inverse(z[0::2])
    shifted_part = np.roll(_haar_inverse(z[1::2]), -1)
    return (basis_part + shifted_part) / math.sqrt(2.0)


def _haar_analysis(D, f):
    out = np.empty(D.N, dtype=complex)
    out[0::2] = _haar_forward(f)
    out[1::2] = _haar_forward(np.roll(f, 1))
    return out / math.sqrt(2.0)


_FAST = {
    ("harmonic", SYNTHESIS): _harmonic_synthesis,
    ("harmonic", ANALYSIS): _harmonic_analysis,
    ("haar", SYNTHESIS): _haar_synthesis,
    ("haar", ANALYSIS): _haar_analysis,
}


def dict_apply(D, v, direction, fast=True):
    """Apply ``D`` (synthesis, input length N) or ``D*`` (analysis, input length n).

    ``v`` may also be a 2-d array whose columns are transformed; the fast
    transforms are only used for 1-d input.
    """
    v = np.asarray(v)
    if direction == SYNTHESIS:
        expected = D.N
    elif direction == ANALYSIS:
        expected = D.n
    else:
        raise InvalidArgumentError(f"unknown direction {direction!r}")
    if v.shape[0] != expected:
        raise InvalidArgumentError(
            f"{direction} expects leading dimension {expected}, got {v.shape[0]}"
        )
    key = (D.kind, direction)
    if fast and v.ndim == 1 and key in _FAST:
        return _FAST[key](D, v)
    if direction == SYNTHESIS:
        return D.entries @ v
    return D.entries.conj().T @ v


def gram(D):
    """Gram matrix ``D* D`` (N x N, Hermitian)."""
    G = D.entries.conj().T @ D.entries
    G = (G + G.conj().T) / 2
    G.setflags(write=False)
    return G


def parseval_defect(D):
    """Max-entry deviation of ``D D*`` from the identity."""
    E = D.entries
    return float(np.max(np.abs(E @ E.conj().T - np.eye(D.n))))


def frame_info(D, zero_tol=1e-12):
    """Summary statistics printed by ``redict frame-info``."""
    G = gram(D)
    diag = np.real(np.diag(G))
    off = np.abs(G - np.diag(np.diag(G)))
    support = (np.abs(G) > zero_tol).sum(axis=0)
    return {
        "kind": D.kind,
        "label": D.label,
        "n": D.n,
        "N": D.N,
        "parseval_defect": parseval_defect(D),
        "gram_diag_min": float(diag.min()),
        "gram_diag_max": float(diag.max()),
        "gram_offdiag_max": float(off.max()) if D.N > 1 else 0.0,
        "gram_max_column_support": int(support.max()),
        "column_norm_min": float(np.linalg.norm(D.entries, axis=0).min()),
        "column_norm_max": float(np.linalg.norm(D.entries, axis=0).max()),
    }


# -- text matrix format ------------------------------------------------------

def _parse_entry(token, where):
    try:
        re_s, im_s = token.split(":")
        value = complex(float(re_s), float(im_s))
    except ValueError:
        raise InvalidArgumentError(f"malformed entry {token!r} at {where}") from None
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise InvalidArgumentError(f"non-finite entry {token!r} at {where}")
    return value


def parse_matrix(text):
    """Parse the ``complex-matrix <n> <N>`` text format into an ndarray."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidArgumentError("empty matrix file")
    header = lines[0].split()
    if len(header) != 3 or header[0] != "complex-matrix":
        raise InvalidArgumentError(f"bad header {lines[0]!r}")
    try:
        n, N = int(header[1]), int(header[2])
    except ValueError:
        raise InvalidArgumentError(f"bad header {lines[0]!r}") from None
    if n < 1 or N < 1:
        raise InvalidArgumentError(f"bad dimensions in header {lines[0]!r}")
    rows = lines[1:]
    if len(rows) != n:
        raise InvalidArgumentError(f"expected {n} rows, found {len(rows)}")
    M = np.empty((n, N), dtype=complex)
    for i, line in enumerate(rows):
        tokens = line.split()
        if len(tokens) != N:
            raise InvalidArgumentError(f"row {i + 1}: expected {N} entries, found {len(tokens)}")
        M[i] = [_parse_entry(t, f"row {i + 1}, column {j + 1}") for j, t in enumerate(tokens)]
    return M


def format_matrix(M):
    M = np.asarray(M, dtype=complex)
    out = [f"complex-matrix {M.shape[0]} {M.shape[1]}"]
    for row in M:
        out.append(" ".join(f"{float(v.real)!r}:{float(v.imag)!r}" for v in row))
    return "\n".join(out) + "\n"


def read_matrix(path):
    return parse_matrix(Path(path).read_text())


def write_matrix(path, M):
    Path(path).write_text(format_matrix(M))


def parse_dict_spec(spec):
    """Build a dictionary from ``harmonic:n,L``, ``haar:p``, ``identity:n`` or a file path."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "harmonic":
            n, L = (int(x) for x in arg.split(","))
            return build_harmonic_frame(n, L)
        if kind == "haar":
            return build_redundant_haar_frame(int(arg))
        if kind == "identity":
            return identity_dictionary(int(arg))
    except ValueError:
        raise InvalidArgumentError(f"bad dictionary spec {spec!r}") from None
    path = Path(spec)
    if not path.exists():
        raise InvalidArgumentError(f"unknown dictionary spec {spec!r}")
    return custom_dictionary(read_matrix(path))
