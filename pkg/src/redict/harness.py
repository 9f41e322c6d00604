"""Seeded recovery experiments, (m, s) phase sweeps and report emission."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
import xml.etree.ElementTree as ET
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import __version__
from .drip import drip_delta
from .errors import InvalidArgumentError, RedictError
from .frames import parse_dict_spec
from .sampling import (
    PRNG_NAME,
    build_ensemble,
    fourier_haar_kappa,
    full_sampling,
    measure_and_weights_from_kappa,
    powerlaw_measure,
    subsample,
)
from .solver import AnalysisProblem, SolverConfig, certify_solution, solve_analysis
from .sparsity import as_weights, closed_form_eta, localization_factor, random_support

__all__ = [
    "ExperimentConfig",
    "TrialRecord",
    "CellSummary",
    "PRESETS",
    "preset",
    "build_operator_factory",
    "generate_signal",
    "measure_signal",
    "run_recovery_experiment",
    "run_phase_sweep",
    "summarize",
    "calibrate_m",
    "records_to_csv",
    "parse_records_csv",
    "summary_to_csv",
    "parse_summary_csv",
    "emit_report",
    "render_svg",
    "logistic_slope",
    "fit_noise_constants",
    "worker_count",
]

EXACT_SPARSE = "exact"
COMPRESSIBLE = "compressible"
MEASURES = ("uniform", "powerlaw", "from-kappa")

# tags separating the random streams derived from one trial seed
_SIGNAL_TAG = 1
_NOISE_TAG = 2


@dataclass
class ExperimentConfig:
    """Everything that determines an experiment's output.

    ``ensemble`` holds ``kind`` (``dft``/``standard``), ``measure``
    (``uniform``/``powerlaw``/``from-kappa``) and optionally
    ``sampling: "full"`` (every row once, needs ``m = n``). Non-uniform
    measures get the matching preconditioner ``1/sqrt(nu)`` on unit-norm
    rows. ``outputs`` maps ``records``, ``summary`` and ``svg`` to file paths
    and does not enter the digest.
    """

    dictionary: str
    ensemble: dict
    m_values: list
    s_values: list
    epsilon_values: list = field(default_factory=lambda: [0.0])
    trials: int = 1
    base_seed: int = 0
    weights: Optional[list] = None
    signal: dict = field(default_factory=lambda: {"kind": EXACT_SPARSE})
    solver: dict = field(default_factory=dict)
    success_threshold: float = 1e-4
    eta_method: str = "bound"
    drip: Optional[dict] = None
    name: str = "custom"
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        for key in ("m_values", "s_values", "epsilon_values"):
            vals = list(getattr(self, key))
            if not vals:
                raise InvalidArgumentError(f"{key} must be nonempty")
            setattr(self, key, vals)
        if any(int(m) != m or m < 1 for m in self.m_values):
            raise InvalidArgumentError("m values must be positive integers")
        self.m_values = [int(m) for m in self.m_values]
        if any(s <= 0 for s in self.s_values):
            raise InvalidArgumentError("s values must be positive")
        self.s_values = [float(s) for s in self.s_values]
        if any(e < 0 for e in self.epsilon_values):
            raise InvalidArgumentError("epsilon values must be nonnegative")
        self.epsilon_values = [float(e) for e in self.epsilon_values]
        if int(self.trials) != self.trials or self.trials < 1:
            raise InvalidArgumentError("trials must be a positive integer")
        if int(self.base_seed) != self.base_seed or self.base_seed < 0:
            raise InvalidArgumentError("base_seed must be a nonnegative integer")
        if not isinstance(self.ensemble, dict) or "kind" not in self.ensemble:
            raise InvalidArgumentError("ensemble must be an object with a 'kind' key")
        if self.ensemble["kind"] not in ("dft", "standard"):
            raise InvalidArgumentError(f"unknown ensemble kind {self.ensemble['kind']!r}")
        if self.ensemble.get("sampling", "random") not in ("random", "full"):
            raise InvalidArgumentError("ensemble sampling must be 'random' or 'full'")
        if self.ensemble.get("measure", "uniform") not in MEASURES:
            raise InvalidArgumentError(f"measure must be one of {MEASURES}")
        if self.signal.get("kind", EXACT_SPARSE) not in (EXACT_SPARSE, COMPRESSIBLE):
            raise InvalidArgumentError(f"unknown signal kind {self.signal.get('kind')!r}")
        if self.eta_method not in ("bound", "mc", "none"):
            raise InvalidArgumentError("eta_method must be bound, mc or none")
        if not self.success_threshold > 0:
            raise InvalidArgumentError("success_threshold must be positive")
        SolverConfig.from_dict(self.solver)

    @classmethod
    def from_dict(cls, d):
        """Build from a JSON object; scalar ``m``, ``s``, ``epsilon``, ``seed`` are accepted."""
        d = dict(d)
        for single, grid in (("m", "m_values"), ("s", "s_values"), ("epsilon", "epsilon_values")):
            if single in d:
                if grid in d:
                    raise InvalidArgumentError(f"give either {single} or {grid}, not both")
                d[grid] = [d.pop(single)]
        if "seed" in d:
            d["base_seed"] = d.pop("seed")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidArgumentError(f"unknown config keys {sorted(unknown)}")
        missing = {"dictionary", "ensemble", "m_values", "s_values"} - set(d)
        if missing:
            raise InvalidArgumentError(f"missing config keys {sorted(missing)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"config is not valid JSON: {exc}") from None
        except TypeError as exc:
            raise InvalidArgumentError(f"bad config: {exc}") from None

    @classmethod
    def load(cls, path):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InvalidArgumentError(f"cannot read config {path}: {exc}") from None
        return cls.from_json(text)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def digest(self):
        d = self.to_dict()
        d.pop("outputs")
        canon = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def with_overrides(self, **kw):
        d = self.to_dict()
        d.update(kw)
        return ExperimentConfig.from_dict(d)


PRESETS = {
    "harmonic-time-samples": {
        "name": "harmonic-time-samples",
        "dictionary": "harmonic:64,1",
        "ensemble": {"kind": "standard", "measure": "uniform"},
        "m_values": [16, 32, 64, 128, 256, 512],
        "s_values": [3],
        "epsilon_values": [0.0],
        "trials": 50,
        "base_seed": 0,
    },
    "fourier-haar-vds": {
        "name": "fourier-haar-vds",
        "dictionary": "haar:6",
        "ensemble": {"kind": "dft", "measure": "from-kappa"},
        "m_values": [32, 64, 128, 256],
        "s_values": [3],
        "epsilon_values": [0.0],
        "trials": 50,
        "base_seed": 0,
    },
}


def preset(name, **overrides):
    if name not in PRESETS:
        raise InvalidArgumentError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    d = json.loads(json.dumps(PRESETS[name]))
    d.update(overrides)
    return ExperimentConfig.from_dict(d)


@dataclass
class TrialRecord:
    seed: int
    m: int
    s: float
    epsilon: float
    error_l2: float
    objective: float
    feasibility_gap: float
    iterations: int
    converged: bool
    trial: int
    eta_estimate: float
    delta_estimate: float
    success: bool
    error: str = ""
    wall_time: float = 0.0

    def cell(self):
        return (self.m, self.s, self.epsilon)


# -- building blocks -----------------------------------------------------------

@lru_cache(maxsize=8)
def _dictionary(spec):
    return parse_dict_spec(spec)


def _ensemble_and_precond(kind, measure, n):
    if measure == "uniform":
        return build_ensemble(kind, n), None
    if measure == "powerlaw":
        nu = powerlaw_measure(n)
        w = 1.0 / np.sqrt(nu)
    else:
        nu, w = measure_and_weights_from_kappa(fourier_haar_kappa(n))
    return build_ensemble(kind, n, nu, scale=np.ones(n)), w


def build_operator_factory(config):
    """``(D, make_op)`` with ``make_op(m, seed)`` the seeded sampled operator."""
    D = _dictionary(config.dictionary)
    n_cfg = config.ensemble.get("n")
    if n_cfg is not None and n_cfg != D.n:
        raise InvalidArgumentError(f"ensemble n={n_cfg} does not match dictionary n={D.n}")
    ens, w = _ensemble_and_precond(config.ensemble["kind"],
                                   config.ensemble.get("measure", "uniform"), D.n)
    full = config.ensemble.get("sampling", "random") == "full"

    def make_op(m, seed):
        if full:
            if m != D.n:
                raise InvalidArgumentError(f"full sampling needs m = n = {D.n}, got {m}")
            return full_sampling(ens, precond=w)
        return subsample(ens, m, seed, precond=w)

    return D, make_op


def _complex_normal(rng, size):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2.0)


def generate_signal(D, s, omega=None, kind=EXACT_SPARSE, seed=0, decay=1.0):
    """Random test signal ``f = D z`` with ``||f||_2 = 1``.

    ``exact``: uniform weights draw ``floor(s)`` distinct atoms uniformly,
    otherwise a random maximal support of weighted size ``<= s`` is built
    greedily; coefficients are complex standard normal.
    ``compressible``: magnitudes ``j**-decay`` on a random permutation with
    uniform random phases; ``support`` lists the ``floor(s)`` largest.

    Returns ``(f, z, support)``.
    """
    w = as_weights(omega, D.N)
    if s < float(np.min(w.omega)) ** 2:
        raise InvalidArgumentError(f"no admissible support of weighted size <= {s}")
    rng = np.random.default_rng([int(seed), _SIGNAL_TAG])
    z = np.zeros(D.N, dtype=complex)
    if kind == EXACT_SPARSE:
        if w.is_uniform:
            support = np.sort(rng.choice(D.N, size=min(int(s), D.N), replace=False))
        else:
            support = np.asarray(random_support(w, s, rng))
        z[support] = _complex_normal(rng, support.size)
    elif kind == COMPRESSIBLE:
        if decay <= 0:
            raise InvalidArgumentError("decay must be positive")
        perm = rng.permutation(D.N)
        mags = np.arange(1, D.N + 1, dtype=float) ** -decay
        z[perm] = mags * np.exp(2j * np.pi * rng.random(D.N))
        support = np.sort(perm[: min(int(s), D.N)])
    else:
        raise InvalidArgumentError(f"unknown signal kind {kind!r}")
    f = D.synthesis(z)
    norm = np.linalg.norm(f)
    if norm == 0:
        raise InvalidArgumentError("signal vanishes: support lies in the kernel of D")
    return f / norm, z / norm, support


def measure_signal(op, f, epsilon, seed):
    """``op(f) + e`` with ``e`` a seeded Gaussian direction scaled to ``||e||_2 = epsilon``.

    The noise lives in the operator's (preconditioned) output space, which is
    the norm the data constraint uses.
    """
    y = op.forward(f)
    if epsilon == 0:
        return y
    rng = np.random.default_rng([int(seed), _NOISE_TAG])
    e = _complex_normal(rng, op.m)
    return y + e * (epsilon / np.linalg.norm(e))


def _eta_for(config, D, s):
    if config.eta_method == "none":
        return math.nan
    try:
        if config.eta_method == "bound":
            return float(closed_form_eta(D, s, config.weights))
        return localization_factor(D, s, config.weights, method="mc", budget=20,
                                   seed=config.base_seed).value
    except RedictError:
        return math.nan


def _run_trial(config, m, s, epsilon, trial, eta):
    seed = config.base_seed + trial
    start = time.perf_counter()
    base = dict(seed=seed, m=m, s=s, epsilon=epsilon, trial=trial, eta_estimate=eta)
    try:
        D, make_op = build_operator_factory(config)
        op = make_op(m, seed)
        sig = config.signal
        f, _, _ = generate_signal(D, s, config.weights, sig.get("kind", EXACT_SPARSE), seed,
                                  sig.get("decay", 1.0))
        y = measure_signal(op, f, epsilon, seed)
        problem = AnalysisProblem(op, D, y, epsilon, config.weights)
        result = solve_analysis(problem, SolverConfig.from_dict(config.solver))
        cert = certify_solution(problem, result, f)
        delta = math.nan
        if config.drip:
            delta = drip_delta(op, D, 2 * s, config.weights,
                               method=config.drip.get("method", "random"),
                               budget=config.drip.get("budget", 20), seed=seed).delta
        return TrialRecord(
            error_l2=cert.error_l2, objective=result.objective,
            feasibility_gap=result.feasibility_gap, iterations=result.iterations,
            converged=result.converged, delta_estimate=delta,
            success=bool(cert.error_l2 <= config.success_threshold),
            wall_time=time.perf_counter() - start, **base)
    except (RedictError, ValueError, np.linalg.LinAlgError) as exc:
        return TrialRecord(
            error_l2=math.nan, objective=math.nan, feasibility_gap=math.nan,
            iterations=0, converged=False, delta_estimate=math.nan, success=False,
            error=f"{type(exc).__name__}: {exc}",
            wall_time=time.perf_counter() - start, **base)


def _run_chunk(args):
    config, tasks = args
    return [_run_trial(config, *t) for t in tasks]


def worker_count(requested=None):
    """Worker processes: ``requested`` or the CPU count, capped by ``REDICT_THREADS``."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("REDICT_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise InvalidArgumentError(f"REDICT_THREADS must be an integer, got {cap!r}") from None
    return max(1, n)


def run_recovery_experiment(config, workers=None):
    """Run every (m, s, epsilon) cell for ``config.trials`` trials.

    Trial ``t`` uses seed ``base_seed + t`` for the sampling pattern, the
    signal and the noise (separate streams), so a record does not depend on
    execution order. Per-trial failures are recorded in ``error``.
    Records come back sorted by cell then trial.
    """
    D = _dictionary(config.dictionary)
    etas = {s: _eta_for(config, D, s) for s in config.s_values}
    tasks = [(m, s, eps, t, etas[s])
             for m in config.m_values for s in config.s_values
             for eps in config.epsilon_values for t in range(config.trials)]
    nw = worker_count(workers)
    if nw == 1 or len(tasks) < 2:
        records = [_run_trial(config, *t) for t in tasks]
    else:
        chunks = [tasks[i::nw] for i in range(nw)]
        with ProcessPoolExecutor(max_workers=nw) as pool:
            records = [r for part in pool.map(_run_chunk, [(config, c) for c in chunks])
                       for r in part]
    records.sort(key=lambda r: (r.m, r.s, r.epsilon, r.trial))
    return records


@dataclass
class CellSummary:
    m: int
    s: float
    epsilon: float
    trials: int
    successes: int
    success_rate: float
    median_error_l2: float
    failed: int


def summarize(records):
    """Per-cell success rates and median errors, sorted by cell."""
    cells = {}
    for r in records:
        cells.setdefault(r.cell(), []).append(r)
    out = []
    for (m, s, eps), rs in sorted(cells.items()):
        errs = [r.error_l2 for r in rs if not math.isnan(r.error_l2)]
        succ = sum(r.success for r in rs)
        out.append(CellSummary(m, s, eps, len(rs), succ, succ / len(rs),
                               float(np.median(errs)) if errs else math.nan,
                               sum(bool(r.error) for r in rs)))
    return out


def run_phase_sweep(config, workers=None):
    """``(records, summary)`` over the (m, s, epsilon) grid."""
    records = run_recovery_experiment(config, workers)
    return records, summarize(records)


def calibrate_m(config, target=0.95, workers=None):
    """Smallest m of ``config.m_values`` whose success rate reaches ``target``.

    Uses the first s and epsilon of the grids. Returns ``(m or None, summary)``.
    """
    cfg = config.with_overrides(s_values=config.s_values[:1],
                                epsilon_values=config.epsilon_values[:1])
    _, summary = run_phase_sweep(cfg, workers)
    for cell in summary:
        if cell.success_rate >= target:
            return cell.m, summary
    return None, summary


# -- statistics ----------------------------------------------------------------

def logistic_slope(x, successes):
    """Slope ``b`` of the maximum-likelihood fit ``P(success) = 1/(1+exp(-(a + b x)))``.

    ``x`` is standardized internally; the returned slope is per unit of ``x``.
    """
    x = np.asarray(x, dtype=float)
    yv = np.asarray(successes, dtype=float)
    mu, sd = x.mean(), x.std() or 1.0
    u = (x - mu) / sd

    def nll(theta):
        t = theta[0] + theta[1] * u
        return float(np.sum(np.logaddexp(0.0, t) - yv * t)) + 1e-6 * float(theta @ theta)

    res = minimize(nll, np.zeros(2), method="BFGS")
    return float(res.x[1] / sd)


def fit_noise_constants(epsilons, errors):
    """Least-squares ``error ~ C1 * epsilon + C2``; returns ``(C1, C2)``."""
    eps = np.asarray(epsilons, dtype=float)
    err = np.asarray(errors, dtype=float)
    ok = ~np.isnan(err)
    if ok.sum() < 2 or np.unique(eps[ok]).size < 2:
        raise InvalidArgumentError("need errors at two or more distinct epsilon values")
    c1, c2 = np.polyfit(eps[ok], err[ok], 1)
    return float(c1), float(c2)


# -- CSV -----------------------------------------------------------------------

RECORD_COLUMNS = ["seed", "m", "s", "epsilon", "error_l2", "objective", "feasibility_gap",
                  "iterations", "converged", "trial", "eta_estimate", "delta_estimate",
                  "success", "error"]
RECOVER_COLUMNS = RECORD_COLUMNS[:9]
SUMMARY_COLUMNS = [f.name for f in fields(CellSummary)]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _metadata_lines(config):
    return [f"# tool=redict {__version__}", f"# config_digest={config.digest()}",
            f"# base_seed={config.base_seed}", f"# prng={PRNG_NAME}"]


def _to_csv(rows, columns, config, extra_columns=()):
    buf = io.StringIO()
    buf.write("\n".join(_metadata_lines(config)) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(columns) + list(extra_columns))
    for row in rows:
        d = asdict(row)
        writer.writerow([_fmt(d[c]) for c in list(columns) + list(extra_columns)])
    return buf.getvalue()


def records_to_csv(records, config, columns=RECORD_COLUMNS, timing=False):
    """Record CSV with a ``#`` metadata header. Wall time is opt-in (it is not reproducible)."""
    return _to_csv(records, columns, config, ("wall_time",) if timing else ())


def summary_to_csv(summary, config):
    return _to_csv(summary, SUMMARY_COLUMNS, config)


def _read_csv(text):
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = val
        elif line:
            body.append(line)
    rows = list(csv.DictReader(body))
    return meta, rows


def _convert(cls, row):
    kw = {}
    for f in fields(cls):
        if f.name not in row:
            continue
        raw = row[f.name]
        if f.type in ("bool", bool):
            kw[f.name] = raw == "true"
        elif f.type in ("int", int):
            kw[f.name] = int(raw)
        elif f.type in ("float", float):
            kw[f.name] = float(raw)
        else:
            kw[f.name] = raw
    return cls(**kw)


def parse_records_csv(text):
    """Inverse of :func:`records_to_csv`: ``(metadata, records)``."""
    meta, rows = _read_csv(text)
    try:
        return meta, [_convert(TrialRecord, r) for r in rows]
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"malformed record CSV: {exc}") from None


def parse_summary_csv(text):
    meta, rows = _read_csv(text)
    try:
        return meta, [_convert(CellSummary, r) for r in rows]
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"malformed summary CSV: {exc}") from None


# -- SVG -----------------------------------------------------------------------

_W, _H, _PAD = 360, 280, 50


def _fmt_num(v):
    return f"{v:.4g}"


def _axes(parent, x0, y0, title, xlabel, ylabel):
    g = ET.SubElement(parent, "g", transform=f"translate({x0},{y0})")
    ET.SubElement(g, "text", x=str(_W // 2), y="18", attrib={"text-anchor": "middle"}).text = title
    ET.SubElement(g, "text", x=str(_W // 2), y=str(_H - 8),
                  attrib={"text-anchor": "middle", "class": "xlabel"}).text = xlabel
    ET.SubElement(g, "text", x="12", y=str(_H // 2),
                  attrib={"text-anchor": "middle", "class": "ylabel",
                          "transform": f"rotate(-90 12 {_H // 2})"}).text = ylabel
    return g


def _heatmap(svg, summary, x0, y0, eps):
    cells = [c for c in summary if c.epsilon == eps]
    ms = sorted({c.m for c in cells})
    ss = sorted({c.s for c in cells})
    g = _axes(svg, x0, y0, f"success rate, epsilon={_fmt_num(eps)}", "m", "s")
    cw = (_W - 2 * _PAD) / len(ms)
    ch = (_H - 2 * _PAD) / len(ss)
    rate = {(c.m, c.s): c.success_rate for c in cells}
    for i, m in enumerate(ms):
        ET.SubElement(g, "text", x=_fmt_num(_PAD + (i + 0.5) * cw), y=str(_H - _PAD + 14),
                      attrib={"text-anchor": "middle", "font-size": "9"}).text = str(m)
        for j, s in enumerate(ss):
            r = rate[(m, s)]
            shade = int(round(255 * (1 - r)))
            rect = ET.SubElement(g, "rect", x=_fmt_num(_PAD + i * cw),
                                 y=_fmt_num(_H - _PAD - (j + 1) * ch),
                                 width=_fmt_num(cw), height=_fmt_num(ch),
                                 fill=f"rgb({shade},{shade},255)",
                                 attrib={"class": "cell", "data-m": str(m),
                                         "data-s": _fmt_num(s), "data-rate": _fmt_num(r)})
            ET.SubElement(rect, "title").text = f"m={m} s={_fmt_num(s)} rate={_fmt_num(r)}"
    for j, s in enumerate(ss):
        ET.SubElement(g, "text", x=str(_PAD - 6), y=_fmt_num(_H - _PAD - (j + 0.5) * ch),
                      attrib={"text-anchor": "end", "font-size": "9"}).text = _fmt_num(s)


def _error_plot(svg, summary, x0, y0):
    eps_all = sorted({c.epsilon for c in summary})
    g = _axes(svg, x0, y0, "median error vs epsilon", "epsilon", "median error_l2")
    pts = [c for c in summary if c.epsilon > 0 and c.median_error_l2 > 0
           and not math.isnan(c.median_error_l2)]
    if not pts:
        ET.SubElement(g, "text", x=str(_W // 2), y=str(_H // 2),
                      attrib={"text-anchor": "middle"}).text = "no positive epsilon cells"
        return
    lx = np.log10([c.epsilon for c in pts])
    ly = np.log10([c.median_error_l2 for c in pts])
    xlo, xhi = lx.min() - 0.5, lx.max() + 0.5
    ylo, yhi = ly.min() - 0.5, ly.max() + 0.5

    def px(v):
        return _PAD + (v - xlo) / (xhi - xlo) * (_W - 2 * _PAD)

    def py(v):
        return _H - _PAD - (v - ylo) / (yhi - ylo) * (_H - 2 * _PAD)

    ET.SubElement(g, "rect", x=str(_PAD), y=str(_PAD), width=str(_W - 2 * _PAD),
                  height=str(_H - 2 * _PAD), fill="none", stroke="black")
    for e in eps_all:
        if e > 0:
            ET.SubElement(g, "text", x=_fmt_num(px(math.log10(e))), y=str(_H - _PAD + 14),
                          attrib={"text-anchor": "middle", "font-size": "9"}).text = _fmt_num(e)
    series = {}
    for c in pts:
        series.setdefault((c.m, c.s), []).append(c)
    for (m, s), cs in sorted(series.items()):
        cs.sort(key=lambda c: c.epsilon)
        path = " ".join(f"{px(math.log10(c.epsilon)):.2f},{py(math.log10(c.median_error_l2)):.2f}"
                        for c in cs)
        line = ET.SubElement(g, "polyline", points=path, fill="none", stroke="black",
                             attrib={"class": "series", "data-m": str(m), "data-s": _fmt_num(s)})
        ET.SubElement(line, "title").text = f"m={m} s={_fmt_num(s)}"


def render_svg(summary, config):
    """Success-rate heatmaps (one per epsilon) plus an error-vs-epsilon panel."""
    if not summary:
        raise InvalidArgumentError("cannot render an empty summary")
    eps_vals = sorted({c.epsilon for c in summary})
    panels = len(eps_vals) + 1
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                     width=str(_W * panels), height=str(_H),
                     viewBox=f"0 0 {_W * panels} {_H}")
    meta = ET.SubElement(svg, "metadata")
    for key, val in (("tool", f"redict {__version__}"), ("config_digest", config.digest()),
                     ("base_seed", str(config.base_seed)), ("prng", PRNG_NAME)):
        ET.SubElement(meta, "entry", key=key).text = val
    ET.SubElement(svg, "desc").text = (
        f"redict {__version__} config_digest={config.digest()} "
        f"base_seed={config.base_seed} prng={PRNG_NAME}")
    for i, eps in enumerate(eps_vals):
        _heatmap(svg, summary, i * _W, 0, eps)
    _error_plot(svg, summary, len(eps_vals) * _W, 0)
    ET.indent(svg)
    return ET.tostring(svg, encoding="unicode") + "\n"


def emit_report(records, config, formats=("csv", "svg"), out_dir=None):
    """Write record CSV, summary CSV and/or SVG; returns ``{name: path}``.

    Paths come from ``config.outputs`` (keys ``records``, ``summary``, ``svg``)
    or default to ``<name>.records.csv`` etc. inside ``out_dir``.
    """
    if not records:
        raise InvalidArgumentError("no records to report")
    unknown = set(formats) - {"csv", "svg"}
    if unknown:
        raise InvalidArgumentError(f"unknown report formats {sorted(unknown)}")
    base = Path(out_dir or ".")
    summary = summarize(records)
    targets = {}
    if "csv" in formats:
        targets["records"] = records_to_csv(records, config)
        targets["summary"] = summary_to_csv(summary, config)
    if "svg" in formats:
        targets["svg"] = render_svg(summary, config)
    suffix = {"records": "records.csv", "summary": "summary.csv", "svg": "svg"}
    written = {}
    for key, text in targets.items():
        path = Path(config.outputs.get(key) or base / f"{config.name}.{suffix[key]}")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {key} report to {path}: {exc}") from exc
        written[key] = path
    return written
