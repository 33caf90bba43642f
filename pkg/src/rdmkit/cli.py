"""Command-line front end: ``contract``, ``xi``, ``verify`` and ``sweep``.

Exit codes: 0 success, 1 computation error or failed verification, 2 usage
error, 3 input/output error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import io
from .asymptotics import SweepConfig, records_to_csv, records_to_json, run_sweep
from .contraction import Path, contract, xi_table
from .errors import RdmError
from .symmetry import Sector
from .verify import run_verify

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_USAGE = 2
EXIT_IO = 3


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not out or any(x < 1 for x in out):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return out


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rdmkit", description="Reduced density operators of product states.")
    sub = parser.add_subparsers(dest="command", required=True)
    sectors = [s.value for s in Sector]

    p = sub.add_parser("contract", help="k-particle contraction of a product state")
    p.add_argument("--state", required=True, help="matrix JSON file for rho")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--k", type=_positive, required=True)
    p.add_argument("--sector", choices=sectors, required=True)
    p.add_argument("--path", choices=[x.value for x in Path], default=Path.EXPLICIT.value)
    p.add_argument("--normalized", action="store_true")
    p.add_argument("--out", help="output JSON (stdout when omitted)")

    p = sub.add_parser("xi", help="normalisation coefficients xi_0..xi_N")
    p.add_argument("--state", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--sector", choices=sectors, required=True)
    p.add_argument("--out")

    p = sub.add_parser("verify", help="three-path oracle suite on random states")
    p.add_argument("--dims", type=_int_list, default=[2, 3])
    p.add_argument("--n-max", type=_positive, default=5)
    p.add_argument("--k-max", type=_positive, default=3)
    p.add_argument("--seeds", type=_positive, default=10)
    p.add_argument("--report", help="report JSON")

    p = sub.add_parser("sweep", help="thermodynamic-limit sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-json")
    p.add_argument("--deterministic", action="store_true")
    return parser


def _emit(obj: dict, out: str | None) -> None:
    if out:
        io.write_json(out, obj)
    else:
        sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def cmd_contract(args) -> int:
    state = io.read_state(args.state)
    res = contract(state, args.n, args.k, args.sector, args.path, normalized=args.normalized)
    _emit({**io.matrix_to_dict(res.matrix), **res.metadata()}, args.out)
    print(f"contract: n={res.n} k={res.k} {res.sector.value} {res.path.value} "
          f"dim={res.dim} trace={res.trace:.12g}")
    return EXIT_OK


def cmd_xi(args) -> int:
    if args.N < 0:
        raise UsageError(f"--N must be nonnegative, got {args.N}")
    state = io.read_state(args.state)
    table = xi_table(state, args.N, args.sector)
    _emit({"sector": table.sector.value, "N": table.N, "xi": table.values.tolist()}, args.out)
    print(f"xi: {table.sector.value} N={table.N} xi_N={table[table.N]:.12g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    report = run_verify(args.dims, args.n_max, args.k_max, args.seeds)
    if args.report:
        io.write_json(args.report, report)
    s = report["summary"]
    print(f"verify: {s['passed']}/{s['total']} passed, max deviation {s['max_deviation']}")
    return EXIT_OK if s["failed"] == 0 else EXIT_COMPUTE


def cmd_sweep(args) -> int:
    try:
        config = SweepConfig.from_json(args.config)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, json.JSONDecodeError):
            raise
        raise UsageError(f"invalid sweep config: {exc}") from None
    records = run_sweep(config, deterministic=args.deterministic)
    io.write_text(args.out_csv, records_to_csv(records, config.k_max))
    if args.out_json:
        io.write_text(args.out_json, records_to_json(records, config.k_max))
    failed = sum(r.failed for r in records)
    print(f"sweep: {len(records)} points, {failed} failed, {config.sector.value}")
    return EXIT_OK


COMMANDS = {"contract": cmd_contract, "xi": cmd_xi, "verify": cmd_verify, "sweep": cmd_sweep}


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"io error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO
    except RdmError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
