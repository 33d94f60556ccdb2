"""Command-line interface.

Subcommands: `separate` (run the pursuit on files), `experiment` (reproduce
the spline separation tests), `dict-gen` (emit sampled dictionaries), and
`verify` (run the randomized property suites).

Every flag default can be overridden through an environment variable with
the ``OBLMP_`` prefix (e.g. ``OBLMP_DELTA``, ``OBLMP_SEED``); an explicit
flag always wins.

Exit codes: 0 success, 1 usage error (including an empty dictionary),
2 I/O or parse failure, 3 numerical failure (dimension mismatch, singular
Gram), 4 verification failure.
"""

import argparse
import json
import os
import sys

from .dictionaries import GridSpec, SplineSpec, background_family, bspline_dictionary
from .errors import DependentAtomError, DimensionMismatchError, SingularGramError
from .experiments import DOUBLE_SUPPORT_MIN_OVERLAP, ExperimentConfig, run_experiment
from .io import ParseError, read_atoms, read_signal, write_matrix, write_report
from .oblique import BackgroundModel
from .pursuit import PursuitConfig, oblmp
from .verify import run_property_checks

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3
EXIT_VERIFICATION = 4


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2 for I/O."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env(name, cast, fallback):
    raw = os.environ.get(f"OBLMP_{name}")
    if raw is None:
        return fallback
    return cast(raw)


def build_parser():
    parser = _Parser(prog="oblmp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sep = sub.add_parser("separate", parents=[], help="separate one signal",
                         description="Run the pursuit on a signal file against "
                                     "a dictionary file, annihilating the span "
                                     "of an optional background file.")
    sep.add_argument("signal_file")
    sep.add_argument("dict_file")
    sep.add_argument("background_file", nargs="?", default=None,
                     help="columnar file spanning the background subspace; "
                          "omit for plain orthogonal pursuit")
    sep.add_argument("--delta", type=float,
                     default=_env("DELTA", float, 1e-8),
                     help="relative stopping tolerance on the selection value")
    sep.add_argument("--max-iters", type=int,
                     default=_env("MAX_ITERS", int, None))
    sep.add_argument("--m-cap", type=int, default=_env("M_CAP", int, None),
                     help="cap on the background model size")
    sep.add_argument("--out", default=_env("OUT", str, None),
                     help="result file (default: stdout)")

    exp = sub.add_parser("experiment", help="reproduce a separation experiment")
    exp.add_argument("test_id", type=int, choices=(1, 2))
    exp.add_argument("--n-signals", type=int,
                     default=_env("N_SIGNALS", int, 100))
    exp.add_argument("--seed", type=int, default=_env("SEED", int, 0))
    exp.add_argument("--delta", type=float, default=_env("DELTA", float, 1e-8))
    exp.add_argument("--max-iters", type=int,
                     default=_env("MAX_ITERS", int, None))
    exp.add_argument("--m-cap", type=int, default=_env("M_CAP", int, 3))
    exp.add_argument("--success-threshold", type=float,
                     default=_env("SUCCESS_THRESHOLD", float, 1e-2))
    exp.add_argument("--grid-points", type=int,
                     default=_env("GRID_POINTS", int, 2049))
    exp.add_argument("--plot-data", metavar="DIR",
                     default=_env("PLOT_DATA", str, None),
                     help="write per-signal curve files and figures here")
    exp.add_argument("--out", default=_env("OUT", str, None),
                     help="report file (default: experiment<ID>_report.json)")

    gen = sub.add_parser("dict-gen", help="emit a sampled atom matrix")
    gen.add_argument("kind", choices=("bspline", "bspline2x", "background"))
    gen.add_argument("--grid-points", type=int,
                     default=_env("GRID_POINTS", int, 2049))
    gen.add_argument("--knot-step", type=float, default=0.065)
    gen.add_argument("--n-background", type=int, default=50)
    gen.add_argument("--out", default=_env("OUT", str, None))

    ver = sub.add_parser("verify", help="run the randomized property suites")
    ver.add_argument("--seed", type=int, default=_env("SEED", int, 20260810))
    ver.add_argument("--inject-fault", action="store_true",
                     help="flip a sign in the dual update; the "
                          "biorthogonality suite must then fail")
    return parser


def cmd_separate(args):
    signal, _ = read_signal(args.signal_file)
    atoms, _ = read_atoms(args.dict_file)
    if atoms.shape[1] == 0:
        print("oblmp separate: error: empty dictionary", file=sys.stderr)
        return EXIT_USAGE
    if args.background_file is not None:
        sources, _ = read_atoms(args.background_file)
        if sources.shape[0] != atoms.shape[0]:
            raise DimensionMismatchError(
                f"background rows {sources.shape[0]} vs dictionary rows "
                f"{atoms.shape[0]}")
        bg = BackgroundModel.from_sources(sources, max_vectors=args.m_cap)
    else:
        bg = BackgroundModel.empty(atoms.shape[0])

    cfg = PursuitConfig(delta=args.delta, max_iters=args.max_iters)
    result = oblmp(atoms, bg, signal, cfg)
    doc = {
        "selected_indices": [int(j) for j in result.selected_indices],
        "coefficients": [float(c) for c in result.coeffs],
        "reconstruction": [float(v) for v in result.reconstruction],
        "iterations": result.iterations,
        "stop_reason": result.stop_reason,
        "diagnostics": {
            "first_step_value": result.diagnostics["first_step_value"],
            "final_max_value": result.diagnostics["final_max_value"],
            "delta_abs": result.diagnostics["delta_abs"],
            "background_model_size": bg.size,
            "dictionary_size": int(atoms.shape[1]),
        },
        "config": {"delta": args.delta, "max_iters": args.max_iters,
                   "m_cap": args.m_cap},
    }
    if args.out:
        write_report(args.out, doc)
    else:
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        print()
    return EXIT_OK


def cmd_experiment(args):
    cfg = ExperimentConfig(
        test_id=args.test_id,
        n_signals=args.n_signals,
        seed=args.seed,
        delta=args.delta,
        max_iters=args.max_iters,
        m_cap=args.m_cap,
        success_threshold=args.success_threshold,
        grid_points=args.grid_points,
    )
    report = run_experiment(cfg, plot_dir=args.plot_data)
    out = args.out or f"experiment{args.test_id}_report.json"
    write_report(out, report)
    print(f"test {report['test_id']}: {report['n_success']}/"
          f"{report['n_signals']} separated "
          f"(threshold {cfg.success_threshold:g}); report -> {out}")
    return EXIT_OK


def cmd_dict_gen(args):
    grid = GridSpec(0.0, 4.0, args.grid_points)
    if args.kind == "background":
        matrix = background_family(grid, args.n_background)
        meta = {"kind": "background", "a": grid.a, "b": grid.b,
                "n_points": grid.n_points, "n_functions": args.n_background,
                "exponent_step": 0.05}
        names = [f"eta_{i + 1:02d}" for i in range(matrix.shape[1])]
    else:
        scale = 1 if args.kind == "bspline" else 2
        overlap = 0.0 if scale == 1 else DOUBLE_SUPPORT_MIN_OVERLAP
        d = bspline_dictionary(grid, SplineSpec(args.knot_step,
                                                support_scale=scale,
                                                min_overlap_steps=overlap))
        matrix = d.atoms
        meta = {"kind": d.kind, "a": grid.a, "b": grid.b,
                "n_points": grid.n_points, "knot_step": args.knot_step,
                "support_scale": scale, "min_overlap_steps": overlap,
                "n_atoms": d.n_atoms}
        names = [f"atom_{j:03d}" for j in range(matrix.shape[1])]
    out = args.out or f"{args.kind}.csv"
    write_matrix(out, matrix, names, meta=meta, x=grid.points())
    print(f"{args.kind}: {matrix.shape[1]} columns x {matrix.shape[0]} rows -> {out}")
    return EXIT_OK


def cmd_verify(args):
    results = run_property_checks(seed=args.seed,
                                  inject_fault=args.inject_fault)
    all_ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: {r.detail} [seed {args.seed}]")
        all_ok &= r.passed
    if args.inject_fault:
        print("fault injection active: failures above are expected")
    return EXIT_OK if all_ok else EXIT_VERIFICATION


def main(argv=None):
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
    except ValueError as exc:  # bad OBLMP_* environment value
        print(f"oblmp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    handlers = {
        "separate": cmd_separate,
        "experiment": cmd_experiment,
        "dict-gen": cmd_dict_gen,
        "verify": cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except ParseError as exc:
        print(f"oblmp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"oblmp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DimensionMismatchError as exc:
        print(f"oblmp {args.command}: error: dimension mismatch: {exc}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    except (SingularGramError, DependentAtomError) as exc:
        print(f"oblmp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"oblmp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
