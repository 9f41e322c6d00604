"""Command-line interface: ``redict <subcommand> ...``.

Exit codes: 0 success, 2 configuration or argument error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .drip import drip_delta
from .errors import InvalidArgumentError, PreconditionError, ResourceError, UnsupportedError
from .frames import frame_info, parse_dict_spec, read_matrix
from .harness import (
    RECOVER_COLUMNS,
    ExperimentConfig,
    build_operator_factory,
    emit_report,
    fit_noise_constants,
    parse_records_csv,
    preset,
    records_to_csv,
    render_svg,
    run_phase_sweep,
    run_recovery_experiment,
    summarize,
)
from .sampling import coherence_profile, unitary_dft
from .sparsity import localization_factor

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _load_weights(path, N):
    if path is None:
        return None
    try:
        w = np.loadtxt(path, dtype=float, ndmin=1)
    except (OSError, ValueError) as exc:
        raise InvalidArgumentError(f"cannot read weights from {path}: {exc}") from None
    if w.shape != (N,):
        raise InvalidArgumentError(f"weights file has {w.size} entries, dictionary has {N}")
    return w


def _basis(spec, n):
    if spec == "dft":
        return unitary_dft(n)
    if spec == "standard":
        return np.eye(n, dtype=complex)
    return read_matrix(spec)


def cmd_frame_info(args):
    info = frame_info(parse_dict_spec(args.dict))
    _write(json.dumps(info, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_coherence(args):
    D = parse_dict_spec(args.dict)
    prof = coherence_profile(_basis(args.basis, D.n), D)
    if args.local:
        rows = [(i, repr(float(v))) for i, v in enumerate(prof.mu_loc)]
        _write(_csv_text(["index", "mu_loc"], rows), args.out)
    else:
        _write(f"mu={prof.mu!r}\n", args.out)
    return EXIT_OK


def cmd_eta(args):
    D = parse_dict_spec(args.dict)
    omega = _load_weights(args.weights, D.N)
    est = localization_factor(D, args.s, omega, method=args.method, budget=args.budget,
                              seed=args.seed)
    seed = "" if est.seed is None else est.seed
    _write(_csv_text(["method", "s", "value", "trials", "seed"],
                     [(est.method, args.s, repr(est.value), est.trials, seed)]), args.out)
    return EXIT_OK


def _ensemble_config(spec, measure):
    if spec in ("dft", "standard"):
        return {"kind": spec, "measure": measure}
    try:
        d = json.loads(Path(spec).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidArgumentError(f"cannot read ensemble config {spec}: {exc}") from None
    return d


def cmd_drip(args):
    ens = _ensemble_config(args.ensemble, args.measure)
    seed = ens.pop("seed", args.seed)
    cfg = ExperimentConfig.from_dict({"dictionary": args.dict, "ensemble": ens,
                                      "m": args.m, "s": args.s})
    D, make_op = build_operator_factory(cfg)
    op = make_op(args.m, 0 if seed is None else seed)
    omega = _load_weights(args.weights, D.N)
    est = drip_delta(op, D, args.s, omega, method=args.method, budget=args.budget,
                     seed=args.seed, per_support=args.per_support is not None)
    if args.per_support:
        rows = [(" ".join(map(str, sup)), repr(v)) for sup, v in est.per_support_max]
        Path(args.per_support).write_text(_csv_text(["support", "delta"], rows))
    out_seed = "" if est.seed is None else est.seed
    _write(_csv_text(["method", "s", "m", "delta", "supports_examined", "seed"],
                     [(est.method, args.s, args.m, repr(est.delta), est.supports_examined,
                       out_seed)]), args.out)
    return EXIT_OK


def cmd_recover(args):
    cfg = ExperimentConfig.load(args.config)
    records = run_recovery_experiment(cfg, workers=1)
    _write(records_to_csv(records, cfg, columns=RECOVER_COLUMNS), args.out)
    bad = [r for r in records if r.error or not r.converged]
    for r in bad:
        print(f"trial {r.trial} (seed {r.seed}): "
              f"{r.error or 'solver did not converge'}", file=sys.stderr)
    return EXIT_NUMERICAL if bad else EXIT_OK


def _sweep_config(args):
    if args.preset:
        cfg = preset(args.preset)
        if args.trials:
            cfg = cfg.with_overrides(trials=args.trials)
        return cfg
    cfg = ExperimentConfig.load(args.config)
    if args.trials:
        cfg = cfg.with_overrides(trials=args.trials)
    return cfg


def cmd_sweep(args):
    cfg = _sweep_config(args)
    records, summary = run_phase_sweep(cfg, workers=args.workers)
    paths = emit_report(records, cfg, formats=("csv", "svg"), out_dir=args.out_dir)
    for key, path in sorted(paths.items()):
        print(f"{key}: {path}")
    for c in summary:
        print(f"m={c.m} s={c.s:g} epsilon={c.epsilon:g} success_rate={c.success_rate:.3f} "
              f"median_error_l2={c.median_error_l2:.3e} failed={c.failed}")
    noisy = [c for c in summary if c.epsilon > 0]
    if len({c.epsilon for c in noisy}) >= 2:
        c1, c2 = fit_noise_constants([c.epsilon for c in noisy],
                                     [c.median_error_l2 for c in noisy])
        print(f"fitted error ~ C1*epsilon + C2: C1={c1:.4g} C2={c2:.4g}")
    return EXIT_NUMERICAL if any(c.failed for c in summary) else EXIT_OK


def cmd_report(args):
    try:
        text = Path(args.records).read_text()
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read {args.records}: {exc}") from None
    _, records = parse_records_csv(text)
    if not records:
        raise InvalidArgumentError(f"{args.records} holds no records")
    cfg = ExperimentConfig.load(args.config)
    if args.format == "svg":
        _write(render_svg(summarize(records), cfg), args.out)
    else:
        _write(records_to_csv(records, cfg), args.out)
    return EXIT_OK


def build_parser():
    p = _ArgumentParser(prog="redict", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"redict {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    s = sub.add_parser("frame-info", help="frame bounds and Gram statistics of a dictionary")
    s.add_argument("--dict", required=True, help="harmonic:n,L | haar:p | identity:n | file")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_frame_info)

    s = sub.add_parser("coherence", help="(local) coherence of a basis against a dictionary")
    s.add_argument("--basis", required=True, help="dft | standard | file")
    s.add_argument("--dict", required=True)
    s.add_argument("--local", action="store_true", help="emit the per-row profile as CSV")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_coherence)

    s = sub.add_parser("eta", help="localization factor")
    s.add_argument("--dict", required=True)
    s.add_argument("--s", type=float, required=True)
    s.add_argument("--weights", default=None, help="text file with one weight per atom")
    s.add_argument("--method", choices=["exact", "mc", "bound"], default="exact")
    s.add_argument("--budget", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_eta)

    s = sub.add_parser("drip", help="empirical D-RIP constant of a seeded subsample")
    s.add_argument("--dict", required=True)
    s.add_argument("--ensemble", required=True, help="dft | standard | ensemble JSON file")
    s.add_argument("--measure", choices=["uniform", "powerlaw", "from-kappa"], default="uniform")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--s", type=float, required=True)
    s.add_argument("--weights", default=None)
    s.add_argument("--method", choices=["exact", "random"], default="exact")
    s.add_argument("--budget", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--per-support", default=None, metavar="CSV")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_drip)

    s = sub.add_parser("recover", help="solve recovery trials described by a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_recover)

    s = sub.add_parser("sweep", help="(m, s, epsilon) phase sweep with CSV and SVG reports")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--preset", choices=["harmonic-time-samples", "fourier-haar-vds"])
    s.add_argument("--trials", type=int, default=None, help="override trials per cell")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("report", help="re-render a record CSV")
    s.add_argument("--records", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--format", choices=["svg", "csv"], default="svg")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidArgumentError, PreconditionError, ResourceError, UnsupportedError,
            ValueError, OSError) as exc:
        print(f"redict: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"redict: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
