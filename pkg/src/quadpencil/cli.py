"""Command line interface: check | analyze | solve | verify | generate.

Exit codes: 0 success/PASS, 1 usage or parse or hypothesis failure,
2 real-insolvable, 3 oracle budget/external failure, 4 precision cap,
5 verification FAIL.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .balls import DEFAULT_POLICY, PrecisionPolicy
from .errors import (
    HypothesisError,
    OracleBudgetError,
    OracleExternalError,
    PrecisionExhaustedError,
    PreconditionError,
    QuadPencilError,
    RealInsolvableError,
)
from .instances import (
    InstanceFile,
    ParseError,
    emit_certificate_text,
    emit_instance,
    generate_instance,
    parse_certificate_text,
    parse_instance,
    verify_certificate,
)
from .linalg import pencil_det_poly
from .oracle import DEFAULT_BUDGET, Oracle
from .pencil import check_hypothesis_h, find_balanced_lambda, is_real_solvable, signature_profile
from .roots import degree
from .solve import solve_pair

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REAL_INSOLVABLE = 2
EXIT_ORACLE_BUDGET = 3
EXIT_PRECISION = 4
EXIT_VERIFY_FAIL = 5


def _load_instance(path: str, as_json: bool) -> InstanceFile:
    return parse_instance(Path(path).read_text(), as_json=as_json)


def cmd_check(args) -> int:
    inst = _load_instance(args.instance, args.json)
    rep = check_hypothesis_h(inst.q0, inst.q1)
    if not rep.ok:
        print(f"H: FAIL {rep.reason}")
        return EXIT_OK
    print("H: OK")
    delta = pencil_det_poly(inst.q0, inst.q1)
    print(f"deg Delta = {degree(delta)}")
    prof = signature_profile(inst.q0, inst.q1)
    print(f"m = {prof.m}")
    print("profile:")
    for seg in prof.segments:
        left = "-inf" if seg.left_root is None else f"r{seg.left_root + 1}"
        right = "+inf" if seg.right_root is None else f"r{seg.right_root + 1}"
        print(f"  ({left}, {right}): [{seg.sig.r},{seg.sig.s}]  sample {seg.sample}")
    for i, sig in enumerate(prof.at_roots):
        print(f"  at r{i + 1}: [{sig.r},{sig.s}]")
    return EXIT_OK


def cmd_analyze(args) -> int:
    inst = _load_instance(args.instance, args.json)
    rep = is_real_solvable(inst.q0, inst.q1)
    if not rep.hypothesis_h:
        print(f"H: FAIL {rep.hypothesis_reason}")
        return EXIT_USAGE
    if rep.solvable_over_R:
        print("REAL-SOLVABLE")
    else:
        sig = rep.definite_signature
        print(
            f"REAL-INSOLVABLE, witness lambda = {rep.definite_lambda}, "
            f"signature [{sig.r},{sig.s}]"
        )
    lam = find_balanced_lambda(inst.q0, inst.q1)
    print(f"balanced lambda = {lam}")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance, args.json)
    oracle = Oracle(budget=args.budget, external_cmd=args.oracle_cmd)
    policy = DEFAULT_POLICY
    if args.precision_bits:
        policy = PrecisionPolicy(initial_bits=args.precision_bits, max_bits=max(args.precision_bits, DEFAULT_POLICY.max_bits))
    cert = solve_pair(inst.q0, inst.q1, oracle=oracle, rng_seed=args.seed, policy=policy)
    out = args.output or (args.instance + ".cert")
    Path(out).write_text(emit_certificate_text(cert, inst.n))
    print(f"SOLVED x = {' '.join(str(e) for e in cert.x)}")
    print(f"certificate written to {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = _load_instance(args.instance, args.json)
    cert = parse_certificate_text(Path(args.certificate).read_text())
    if cert.n != inst.n:
        print("FAIL dimension mismatch")
        return EXIT_VERIFY_FAIL
    ok, r0, r1 = verify_certificate(inst, cert.x)
    if ok:
        print("PASS")
        return EXIT_OK
    print(f"FAIL residues q0(x) = {r0}, q1(x) = {r1}")
    return EXIT_VERIFY_FAIL


def cmd_generate(args) -> int:
    if args.n < 13:
        print("error: generator requires n >= 13", file=sys.stderr)
        return EXIT_USAGE
    if args.bound < 1:
        print("error: entry bound must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    inst = generate_instance(args.n, args.bound, args.seed, require_solvable=args.require_solvable)
    text = emit_instance(inst, as_json=args.json)
    if args.output:
        Path(args.output).write_text(text)
        print(f"instance written to {args.output}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="quadpencil",
        description="Decide and certify rational solvability of a smooth pair of quadratic forms.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="hypothesis and signature profile report")
    p.add_argument("instance")
    p.add_argument("--json", action="store_true", help="read the instance as JSON")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("analyze", help="real solvability verdict and balanced member")
    p.add_argument("instance")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("solve", help="compute and certify a rational solution")
    p.add_argument("instance")
    p.add_argument("-o", "--output", default=None, help="certificate path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--precision-bits", type=int, default=0)
    p.add_argument("--oracle-cmd", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="independently verify a certificate")
    p.add_argument("instance")
    p.add_argument("certificate")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", help="generate a random smooth instance")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-B", "--bound", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--require-solvable", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_generate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HypothesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RealInsolvableError as exc:
        print(
            f"REAL-INSOLVABLE, witness lambda = {exc.witness}, "
            f"signature [{exc.signature.r},{exc.signature.s}]"
        )
        return EXIT_REAL_INSOLVABLE
    except (OracleBudgetError, OracleExternalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE_BUDGET
    except PrecisionExhaustedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except QuadPencilError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
