"""Command-line entry point: ``randlu <subcommand> ...``."""
import argparse
import json
import os
import sys
from dataclasses import asdict

from . import __version__, io
from .analysis import GAMMA_3SIGMA, analyze, replay_reference
from .bounds import DEFAULT_GRID
from .errors import (
    IncompleteInputError,
    InconsistentInvariantsError,
    InconsistentRegionError,
    InsufficientSetError,
    InsufficientShotsError,
    InvalidStateError,
    NonPhysicalInvariantsError,
    NonPhysicalStateError,
)
from .haar import certify
from .invariants import compute_all
from .simulate import ExperimentConfig, resolve_state, simulate_experiment

EXIT_OK, EXIT_INVALID, EXIT_INCONSISTENT = 0, 2, 3

INVALID = (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError, InvalidStateError,
           IncompleteInputError, InsufficientShotsError, InsufficientSetError)
INCONSISTENT = (NonPhysicalStateError, NonPhysicalInvariantsError, InconsistentInvariantsError, InconsistentRegionError)


def resolve_seed(seed):
    """--seed, else $RANDLU_SEED, else 0."""
    if seed is not None:
        return seed
    env = os.environ.get("RANDLU_SEED")
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ValueError(f"RANDLU_SEED must be an integer, got {env!r}") from None


def _emit(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _gamma(s):
    g = float(s)
    if not 0 < g < 1:
        raise argparse.ArgumentTypeError("gamma must lie in (0, 1)")
    return g


# --- subcommands ---------------------------------------------------------------------------

def cmd_simulate(args):
    cfg = io.load_config(args.config) if args.config else {}
    cfg.pop("grid", None)
    for key in ("state", "M", "K", "runs", "visibility", "gamma", "method"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    if args.misalignment:
        cfg["misalignment"] = True
    if args.bases:
        cfg["bases"] = tuple(b.strip().upper() for b in args.bases.split(","))
    cfg["seed"] = resolve_seed(args.seed if args.seed is not None else cfg.get("seed"))
    state = cfg.pop("state", "singlet")
    config = ExperimentConfig(state=state, **cfg)
    runs = simulate_experiment(config)
    lines = "".join(line + "\n" for line in io.dataset_lines(runs))
    _emit(lines, args.out)


def _read_dataset_args(paths):
    if not paths or paths == ["-"]:
        return io.read_datasets(sys.stdin)
    return io.load_datasets(paths)


def cmd_analyze(args):
    datasets = _read_dataset_args(args.datasets)
    report = analyze(datasets, gamma=args.gamma, method=args.method, grid=args.grid)
    d = report.as_dict()
    _emit(io.render_report(d) if args.format == "text" else io.dumps(d), args.out)


def cmd_invariants(args):
    if args.preset:
        rho = resolve_state(args.preset)
    elif args.state_file:
        rho = io.load_state(sys.stdin if args.state_file == "-" else args.state_file)
    else:
        raise ValueError("give a state file or --preset")
    _emit(io.dumps(io.invariants_to_obj(compute_all(rho))), args.out)


def cmd_certify_randomness(args):
    x = io.load_set(sys.stdin if args.set_file == "-" else args.set_file)
    verdicts = [asdict(certify(x, t, confidence=args.confidence)) for t in args.t]
    _emit(io.dumps({"verdicts": verdicts, "passed": all(v["pass_2s"] for v in verdicts)}), args.out)


def cmd_replay(args):
    report = replay_reference(gamma=args.gamma, method=args.method, grid=args.grid)
    d = report.as_dict()
    _emit(io.render_report(d) if args.format == "text" else io.dumps(d), args.out)


def cmd_report(args):
    if args.report_file in (None, "-"):
        d = json.load(sys.stdin)
    else:
        with open(args.report_file) as fh:
            d = json.load(fh)
    _emit(io.render_report(d), args.out)


# --- parser ------------------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="randlu", description="Local-unitary invariants from randomized measurements.")
    p.add_argument("--version", action="version", version=f"randlu {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False, stats=False):
        sp.add_argument("--out", "-o", default=None, help="output path (default stdout)")
        if seed:
            sp.add_argument("--seed", type=int, default=None, help="RNG seed (fallback: $RANDLU_SEED, then 0)")
        if stats:
            sp.add_argument("--gamma", type=_gamma, default=GAMMA_3SIGMA, help="confidence per interval")
            sp.add_argument("--method", choices=("gauss", "hoeffding"), default="gauss")
            sp.add_argument("--grid", type=int, default=DEFAULT_GRID, help="lattice points per singular value")
            sp.add_argument("--format", choices=("json", "text"), default="json")

    s = sub.add_parser("simulate", help="simulate randomized-measurement count data (JSONL)")
    common(s, seed=True)
    s.add_argument("--state", default=None, help="preset: singlet, mixed, paper-source, werner(p), bell(phi+), schmidt(c)")
    s.add_argument("--M", type=int, default=None, help="settings per run")
    s.add_argument("--K", type=int, default=None, help="shots per basis and setting")
    s.add_argument("--runs", type=int, default=None)
    s.add_argument("--visibility", type=float, default=None)
    s.add_argument("--bases", default=None, help="comma-separated subset of ZZ,XX,YY")
    s.add_argument("--misalignment", action="store_true", help="insert a fixed unknown local frame rotation")
    s.add_argument("--gamma", type=_gamma, default=None, help=argparse.SUPPRESS)
    s.add_argument("--method", choices=("gauss", "hoeffding"), default=None, help=argparse.SUPPRESS)
    s.add_argument("--config", default=None, help="flat key = value config file")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="certify bounds from count datasets")
    common(a, stats=True)
    a.add_argument("datasets", nargs="*", help="JSONL files ('-' or none for stdin)")
    a.set_defaults(func=cmd_analyze)

    i = sub.add_parser("invariants", help="LU invariants of a two-qubit state")
    common(i)
    i.add_argument("state_file", nargs="?", default=None)
    i.add_argument("--preset", default=None)
    i.set_defaults(func=cmd_invariants)

    c = sub.add_parser("certify-randomness", help="frame-potential test of a unitary or state set")
    common(c)
    c.add_argument("set_file")
    c.add_argument("--t", type=int, nargs="+", default=[2, 4])
    c.add_argument("--confidence", type=_gamma, default=None, help="single Cantelli confidence (default 1 and 2 sigma)")
    c.set_defaults(func=cmd_certify_randomness)

    r = sub.add_parser("replay-paper", help="bounds from the built-in reference invariant intervals")
    common(r, stats=True)
    r.set_defaults(func=cmd_replay)

    t = sub.add_parser("report", help="human-readable summary of a JSON report")
    common(t)
    t.add_argument("report_file", nargs="?", default=None)
    t.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except INCONSISTENT as e:
        print(f"randlu: inconsistent data: {e}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except INVALID as e:
        print(f"randlu: invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
