"""Command-line front end: ``almathieu <command> [flags]``.

Exit codes: 0 success, 1 invalid parameters or no result, 2 a measured
deviation exceeds ``--tol``.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import re
import sys

import numpy as np

from . import __version__
from . import io as aio
from .cocycle import CocycleParams
from .frequency import Frequency
from .gaps import butterfly_grid, scan_gaps, spectrum_membership, ten_biggest
from .localization import (
    DualSolutionError,
    diagonalize_truncation,
    dual_solution,
    interior,
    median_beta,
    most_localized,
    verify_duality,
)
from .reducibility import ReductionError, collapsed_test, dichotomy_report, edge_candidates, reduce_eigenpair
from .rotation import check_relations, ids
from .torus import schrodinger_map

GAP_COLUMNS = ["k", "left", "right", "width", "ids_value", "collapsed"]
EIGEN_COLUMNS = ["index", "eigenvalue", "beta", "center"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # accept values such as -1e-3 and -4,0,4 without the --flag=value form
    _NEGATIVE = re.compile(r"^-(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?(,[-+.\deE]*)*$")

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self._negative_number_matcher = self._NEGATIVE

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_omega(text: str) -> Frequency:
    if text == "golden":
        return Frequency.golden()
    try:
        value = float(text)
    except ValueError:
        raise UsageError(f"omega must be 'golden' or a decimal, got {text!r}") from None
    try:
        return Frequency.from_value(value)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _count(text: str) -> int:
    return int(float(text))


def _common(p: argparse.ArgumentParser, fmt: str, tol: float | None) -> None:
    p.add_argument("--omega", default="golden", help="'golden' or a decimal in (0, 1)")
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    p.add_argument("--format", choices=["csv", "json"], default=fmt)
    p.add_argument("--tol", type=float, default=tol, help="deviation threshold for exit code 2")
    p.add_argument("--workers", type=int, default=1, help="threads for parameter sweeps")
    p.add_argument("--config", default=None, help="key=value file merged under the flags")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="almathieu", description="Almost Mathieu operator toolkit.")
    parser.add_argument("--version", action="version", version=f"almathieu {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rotation", help="Sturmian, fibered and IDS rotation numbers")
    _common(p, "json", 5e-3)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--N", type=_count, default=1_000_000)
    p.add_argument("--L", type=_count, default=10_000)
    p.add_argument("--phases", type=int, default=16)

    p = sub.add_parser("ids", help="integrated density of states at given energies")
    _common(p, "csv", None)
    p.add_argument("--a", type=_floats, default=None, help="comma-separated energies")
    p.add_argument("--a-range", type=_pair, default=None, help="lo,hi (used with --na)")
    p.add_argument("--na", type=int, default=101)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--L", type=_count, default=10_000)
    p.add_argument("--phases", type=int, default=16)

    p = sub.add_parser("gaps", help="labelled spectral gaps")
    _common(p, "csv", None)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--kmax", type=int, default=12)
    p.add_argument("--top", type=int, default=0, help="keep the TOP widest upper-half labels")
    p.add_argument("--method", choices=["approximant", "truncation"], default="approximant")
    p.add_argument("--resolution", type=float, default=1e-12)
    p.add_argument("--L", type=_count, default=1 << 14, help="truncation method only")
    p.add_argument("--failures", default=None, help="sidecar file for unresolved labels")

    p = sub.add_parser("butterfly", help="IDS on an energy x coupling grid (gnuplot matrix)")
    _common(p, "csv", None)
    p.add_argument("--a-range", type=_pair, default=(-4.0, 4.0))
    p.add_argument("--b-range", type=_pair, default=(0.0, 4.0))
    p.add_argument("--na", type=int, default=200)
    p.add_argument("--nb", type=int, default=50)
    p.add_argument("--L", type=_count, default=2000)
    p.add_argument("--phases", type=int, default=8)

    p = sub.add_parser("duality", help="max |rot(a,b) - rot(2a/b,4/b)|")
    _common(p, "json", 3e-3)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--N", type=_count, default=1_000_000)
    p.add_argument("--phi", type=float, default=0.0)

    p = sub.add_parser("localize", help="eigenpairs and decay exponents of a centered truncation")
    _common(p, "csv", 0.1)
    p.add_argument("--b", type=float, default=4.0)
    p.add_argument("--L", type=_count, default=2001)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--top", type=int, default=3, help="json: dual residuals of the TOP most localized pairs")

    p = sub.add_parser("reduce", help="Floquet reduction of the dual cocycle at an eigenvalue")
    _common(p, "json", None)
    p.add_argument("--b", type=float, default=4.0)
    p.add_argument("--L", type=_count, default=2001)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--eigen-index", type=int, default=0, help="index among isolated interior eigenpairs, by eigenvalue")
    p.add_argument("--with-z", action="store_true", help="include the Fourier coefficients of Z")

    p = sub.add_parser("dichotomy", help="numerical exponential dichotomy of the Schroedinger cocycle")
    _common(p, "json", None)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.0, help="energy offset added to a")
    p.add_argument("--N", type=_count, default=100_000)
    p.add_argument("--grid", type=int, default=32)
    return parser


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise UsageError(f"config line without '=': {raw.strip()!r}")
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse argv; values from --config become defaults so explicit flags win."""
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, val in read_config(args.config).items():
        act = actions.get(key)
        if act is None or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        if act.type is not None:
            try:
                defaults[key] = act.type(val)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config {key}: {exc}") from None
        elif isinstance(act, argparse._StoreTrueAction):
            defaults[key] = val.lower() in ("1", "true", "yes")
        else:
            defaults[key] = val
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _params(args: argparse.Namespace, omega: Frequency) -> dict:
    skip = {"out", "config", "func", "workers"}
    out = {}
    for k, v in vars(args).items():
        if k in skip:
            continue
        if isinstance(v, (tuple, list)):
            v = ",".join(repr(float(x)) for x in v)
        out[k] = v
    out["omega_value"] = omega.value
    return out


@contextlib.contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit(args, meta, records, columns=None):
    with _open_out(args.out) as fh:
        if args.format == "csv":
            aio.write_csv(fh, meta, columns or list(records[0].keys()), records)
        else:
            aio.write_jsonl(fh, meta, records)


def _over(value: float, tol: float | None) -> bool:
    return tol is not None and not value <= tol


def cmd_rotation(args, omega) -> int:
    p = CocycleParams(args.a, args.b, omega.value, args.phi)
    rep = check_relations(p, args.N, args.L, args.phases)
    rec = {"a": args.a, "b": args.b, "omega": omega.value, "phi": args.phi}
    rec.update(rep.as_dict())
    _emit(args, aio.provenance("rotation", _params(args, omega)), [rec])
    return 2 if _over(rep.max_deviation, args.tol) else 0


def cmd_ids(args, omega) -> int:
    if args.a is not None:
        a = np.asarray(args.a, dtype=float)
    elif args.a_range is not None:
        a = np.linspace(args.a_range[0], args.a_range[1], args.na)
    else:
        raise UsageError("ids needs --a or --a-range")
    if a.size == 0:
        raise UsageError("no energies given")
    vals = np.atleast_1d(ids(a, args.b, omega.value, args.L, args.phases))
    recs = [{"a": float(x), "ids": float(v), "rot": 0.5 * (1.0 - float(v))} for x, v in zip(a, vals)]
    _emit(args, aio.provenance("ids", _params(args, omega)), recs, ["a", "ids", "rot"])
    return 0


def _failure_path(args) -> str:
    if args.failures:
        return args.failures
    return "gaps.failures.csv" if args.out == "-" else args.out + ".failures.csv"


def cmd_gaps(args, omega) -> int:
    if args.kmax < 1:
        raise UsageError("--kmax must be at least 1")
    failures: list = []
    kw = {"method": args.method, "resolution": args.resolution}
    if args.method == "truncation":
        kw["L"] = args.L
    gaps = scan_gaps(args.b, omega, args.kmax, failures, workers=args.workers, **kw)
    if args.top > 0:
        gaps = ten_biggest(gaps, omega, args.top)
    meta = aio.provenance("gaps", _params(args, omega))
    recs = [g.as_row() for g in gaps]
    if args.format == "csv":
        with _open_out(args.out) as fh:
            aio.write_csv(fh, meta, GAP_COLUMNS, recs)
    else:
        _emit(args, meta, recs)
    if failures:
        with open(_failure_path(args), "w", newline="") as fh:
            aio.write_csv(fh, meta, ["k", "reason"], [{"k": k, "reason": r} for k, r in failures])
        print(f"{len(failures)} unresolved labels written to {_failure_path(args)}", file=sys.stderr)
    return 0


def cmd_butterfly(args, omega) -> int:
    if args.na < 2 or args.nb < 2:
        raise UsageError("--na and --nb must be at least 2")
    grid = butterfly_grid(args.b_range, args.a_range, args.nb, args.na, omega, args.L, args.phases, workers=args.workers)
    meta = aio.provenance("butterfly", _params(args, omega))
    with _open_out(args.out) as fh:
        aio.write_grid(fh, meta, args.a_range, args.b_range, grid)
    return 0


def cmd_duality(args, omega) -> int:
    if args.b == 0:
        raise UsageError("duality needs --b != 0")
    dev = verify_duality(args.b, args.samples, omega, args.N, args.phi)
    rec = {"b": args.b, "dual_b": 4.0 / args.b, "samples": args.samples, "N": args.N, "max_deviation": dev}
    _emit(args, aio.provenance("duality", _params(args, omega)), [rec])
    return 2 if _over(dev, args.tol) else 0


def cmd_localize(args, omega) -> int:
    pairs = diagonalize_truncation(args.b, args.phi, omega, args.L)
    meta = aio.provenance("localize", _params(args, omega))
    med = median_beta(pairs)
    target = math.log(abs(args.b) / 2.0) if abs(args.b) > 2 else 0.0
    if args.format == "csv":
        recs = [{"index": i, "eigenvalue": p.eigenvalue, "beta": p.beta, "center": p.center} for i, p in enumerate(pairs)]
        with _open_out(args.out) as fh:
            aio.write_csv(fh, meta, EIGEN_COLUMNS, recs)
    else:
        recs = []
        for p in most_localized(pairs, args.top):
            try:
                res = dual_solution(p).residual
            except (DualSolutionError, ValueError) as exc:
                print(f"eigenvalue {p.eigenvalue!r}: {exc}", file=sys.stderr)
                res = math.nan
            recs.append({"b": args.b, "omega": omega.value, "a_k": p.eigenvalue, "residual": res, "L": args.L})
        _emit(args, meta, recs)
    print(f"median beta {med:.6f} over {len(interior(pairs))} interior pairs; log(|b|/2) = {target:.6f}", file=sys.stderr)
    if target > 0 and _over(abs(med / target - 1.0), args.tol):
        return 2
    return 0


def cmd_reduce(args, omega) -> int:
    if abs(args.b) <= 2:
        raise UsageError("reduction of the dual cocycle needs |b| > 2")
    cands = edge_candidates(args.b, args.phi, omega, args.L)
    if not 0 <= args.eigen_index < len(cands):
        raise UsageError(f"--eigen-index must lie in [0, {len(cands)})")
    e = cands[args.eigen_index]
    f = reduce_eigenpair(e, omega)
    rec = f.as_record()
    a2, b2 = 2.0 * e.eigenvalue / args.b, 4.0 / args.b
    rec.update(
        {
            "eigenvalue": e.eigenvalue,
            "center": e.center,
            "dual_a": a2,
            "dual_b": b2,
            "sign": f.sign,
            "B": f.B.to_array().tolist(),
            "c_nonzero": not collapsed_test(f),
        }
    )
    if args.with_z:
        rec["Z"] = f.Z.to_dict()
    _emit(args, aio.provenance("reduce", _params(args, omega)), [rec])
    return 0


def cmd_dichotomy(args, omega) -> int:
    a = args.a + args.alpha
    rep = dichotomy_report(schrodinger_map(a, args.b), omega, args.N, grid=args.grid)
    rec = {
        "a": args.a,
        "alpha": args.alpha,
        "b": args.b,
        "lyapunov": rep.lyapunov,
        "threshold": rep.threshold,
        "min_angle": rep.min_angle,
        "hyperbolic": rep.hyperbolic,
        "in_spectrum": spectrum_membership(a, args.b, omega),
    }
    _emit(args, aio.provenance("dichotomy", _params(args, omega)), [rec])
    return 0


COMMANDS = {
    "rotation": cmd_rotation,
    "ids": cmd_ids,
    "gaps": cmd_gaps,
    "butterfly": cmd_butterfly,
    "duality": cmd_duality,
    "localize": cmd_localize,
    "reduce": cmd_reduce,
    "dichotomy": cmd_dichotomy,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        try:
            args = _apply_config(parser, argv)
        except SystemExit as exc:  # argparse: usage errors exit 1, --help exits 0
            return int(exc.code or 0)
        if args.tol is not None and not args.tol > 0:
            raise UsageError("--tol must be positive")
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        omega = parse_omega(args.omega)
        return COMMANDS[args.command](args, omega)
    except (UsageError, ValueError, OSError, ReductionError, DualSolutionError) as exc:
        print(f"almathieu: error: {exc}", file=sys.stderr)
        return 1
