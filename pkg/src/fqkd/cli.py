"""Command-line interface: ``fqkd {bases,keyrate,estimate,matrix,simulate}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 estimation unavailable.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import estimation
from .config import ConfigError, load_config
from .hilbert import BasisId, DomainError, basis_states
from .matrixio import MatrixFile, MatrixFormatError, format_number, read_matrix, write_matrix
from .protocol import EstimationUnavailable, ProtocolStats, run_protocol

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_UNAVAILABLE = 4

log = logging.getLogger("fqkd")


class UsageError(Exception):
    pass


def format_complex(z: complex) -> str:
    re_, im = format_number(z.real), format_number(abs(z.imag))
    sign = "-" if z.imag < 0 and im != "0" else "+"
    return f"{re_}{sign}{im}i"


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_bases(args) -> int:
    try:
        states = basis_states(args.d, BasisId.parse(args.basis))
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "json":
        rows = [{"label": lab, "amplitudes": [format_complex(z) for z in s.amplitudes]} for lab, s in states]
        sys.stdout.write(_dump_json({"d": args.d, "basis": args.basis, "states": rows}))
    else:
        for lab, s in states:
            print(",".join([lab] + [format_complex(z) for z in s.amplitudes]))
    return EXIT_OK


def cmd_keyrate(args) -> int:
    try:
        report = estimation.secret_key_rate(args.d, args.ed, args.ephase)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    sys.stdout.write(_dump_json(report.to_dict()))
    return EXIT_OK


def cmd_estimate(args) -> int:
    mf = read_matrix(args.matrix)
    if mf.kind == "counts":
        M = estimation.normalize_counts(mf.rows, mf.d)
    elif mf.kind == "fq":
        M = mf.rows
    else:
        raise UsageError(f"estimate needs kind=fq or kind=counts, got kind={mf.kind}")
    fit = estimation.fit_physical_transition(M, tol=args.tol, max_iter=args.max_iter)
    out = {
        "d": mf.d,
        "transition": fit.transition.tolist(),
        "objective": fit.objective,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "phase_error": fit.phase_error,
    }
    sys.stdout.write(_dump_json(out))
    return EXIT_OK


def cmd_matrix(args) -> int:
    mf = read_matrix(args.input)
    if args.op == "forward":
        if mf.kind != "fourier":
            raise UsageError(f"forward needs kind=fourier input, got kind={mf.kind}")
        try:
            result = MatrixFile("fq", mf.d, estimation.forward_map(mf.rows))
        except DomainError as exc:
            raise estimation.DataError(f"{args.input}: {exc}") from None
    else:
        if mf.kind != "fq":
            raise UsageError(f"invert needs kind=fq input, got kind={mf.kind}")
        P = estimation.invert_map(mf.rows)
        if not estimation.is_physical(P):
            log.warning(
                "reconstructed transition matrix is unphysical (entries in [%s, %s])",
                format_number(P.min()),
                format_number(P.max()),
            )
        result = MatrixFile("fourier", mf.d, P)
    write_matrix(args.output, result)
    return EXIT_OK


def _write_simulation(outputs: dict[str, Path], stats: ProtocolStats) -> None:
    d = stats.dim
    write_matrix(outputs["computational"], MatrixFile("computational", d, stats.computational_confusion))
    write_matrix(outputs["fqubit"], MatrixFile("counts", d, stats.fqubit_confusion))
    outputs["stats"].parent.mkdir(parents=True, exist_ok=True)
    outputs["stats"].write_text(_dump_json(stats.to_dict()), encoding="utf-8")
    if stats.report is not None:
        outputs["report"].write_text(_dump_json(stats.report.to_dict()), encoding="utf-8")
        write_matrix(outputs["transition"], MatrixFile("fourier", d, stats.fit.transition))


def cmd_simulate(args) -> int:
    try:
        run = load_config(args.config)
    except ConfigError as exc:
        raise UsageError(f"config error at {exc}") from None
    config = run.protocol
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        config = dataclasses.replace(config, threads=args.threads)
    try:
        stats = run_protocol(config)
    except EstimationUnavailable as exc:
        _write_simulation(run.outputs, exc.stats)
        print(f"estimation unavailable: {exc}", file=sys.stderr)
        return EXIT_UNAVAILABLE
    _write_simulation(run.outputs, stats)
    r = stats.report
    print(f"d={r.dim} E_d={format_number(r.dit_error)} E'_d={format_number(r.phase_error)} R={format_number(r.key_rate)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fqkd", description="F-qubit high-dimensional QKD toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bases", help="print the states of a basis family")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--basis", required=True, choices=[b.value for b in BasisId])
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_bases)

    p = sub.add_parser("keyrate", help="secret key rate from dit and phase error rates")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--ed", type=float, required=True, help="dit error rate E_d")
    p.add_argument("--ephase", type=float, required=True, help="phase error rate E'_d")
    p.set_defaults(func=cmd_keyrate)

    p = sub.add_parser("estimate", help="fit a Fourier transition matrix to F-qubit data")
    p.add_argument("matrix", help="matrix file of kind fq or counts")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("matrix", help="apply the forward or inverse map to a matrix file")
    p.add_argument("op", choices=["forward", "invert"])
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("simulate", help="run the Monte Carlo protocol from a TOML config")
    p.add_argument("config")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # warnings go to whatever stderr is current for this call
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.addHandler(handler)
    handler.setLevel(logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fqkd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MatrixFormatError, estimation.DataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    finally:
        log.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
