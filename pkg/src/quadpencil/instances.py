"""Instance and certificate files: line-oriented plain text (the same
shape as the oracle wire format) with a JSON alternative, plus the seeded
generator of smooth test instances."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import PreconditionError, QuadPencilError
from .linalg import Matrix, RatVec, evaluate_form, sym_matrix
from .oracle import _fmt_rat
from .pencil import check_hypothesis_h, is_real_solvable
from .solve import SolutionCertificate


class ParseError(QuadPencilError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"parse error{where}: {message}")
        self.line = line


@dataclass(frozen=True)
class InstanceFile:
    n: int
    q0: Matrix
    q1: Matrix
    meta: tuple[str, ...] = ()


def parse_rational(tok: str, line: int | None = None) -> Fraction:
    try:
        f = Fraction(tok)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad rational {tok!r}: {exc}", line) from exc
    return f


def parse_instance_text(text: str) -> InstanceFile:
    meta: list[str] = []
    rows: list[list[Fraction]] = []
    n = None
    lineno = 0
    for raw in text.splitlines():
        lineno += 1
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            meta.append(raw)
            continue
        if n is None:
            try:
                n = int(line)
            except ValueError as exc:
                raise ParseError(f"expected dimension, got {line!r}", lineno) from exc
            if n < 1:
                raise ParseError("dimension must be positive", lineno)
            continue
        toks = line.split()
        if len(toks) != n:
            raise ParseError(f"expected {n} entries, got {len(toks)}", lineno)
        rows.append([parse_rational(t, lineno) for t in toks])
    if n is None:
        raise ParseError("missing dimension line")
    if len(rows) != 2 * n:
        raise ParseError(f"expected {2 * n} matrix rows, found {len(rows)}")
    q0 = sym_matrix(rows[:n])
    q1 = sym_matrix(rows[n:])
    return InstanceFile(n, q0, q1, tuple(meta))


def emit_instance_text(inst: InstanceFile) -> str:
    lines = list(inst.meta)
    lines.append(str(inst.n))
    for M in (inst.q0, inst.q1):
        for row in M:
            lines.append(" ".join(_fmt_rat(e) for e in row))
    return "\n".join(lines) + "\n"


def parse_instance_json(text: str) -> InstanceFile:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from exc
    try:
        n = int(obj["n"])
        q0 = sym_matrix([[parse_rational(str(e)) for e in row] for row in obj["q0"]])
        q1 = sym_matrix([[parse_rational(str(e)) for e in row] for row in obj["q1"]])
        meta = tuple(obj.get("meta", []))
    except KeyError as exc:
        raise ParseError(f"missing field {exc}") from exc
    if len(q0) != n or len(q1) != n:
        raise ParseError("matrix dimensions disagree with n")
    return InstanceFile(n, q0, q1, meta)


def emit_instance_json(inst: InstanceFile) -> str:
    obj = {
        "n": inst.n,
        "meta": list(inst.meta),
        "q0": [[_fmt_rat(e) for e in row] for row in inst.q0],
        "q1": [[_fmt_rat(e) for e in row] for row in inst.q1],
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=1) + "\n"


def parse_instance(text: str, as_json: bool = False) -> InstanceFile:
    return parse_instance_json(text) if as_json else parse_instance_text(text)


def emit_instance(inst: InstanceFile, as_json: bool = False) -> str:
    return emit_instance_json(inst) if as_json else emit_instance_text(inst)


# ----------------------------------------------------------------------
# certificates
# ----------------------------------------------------------------------


def emit_certificate_text(cert: SolutionCertificate, n: int) -> str:
    lines = [
        "# quadpencil certificate v1",
        str(n),
        "x: " + " ".join(_fmt_rat(e) for e in cert.x),
        f"residue0: {_fmt_rat(cert.residue0)}",
        f"residue1: {_fmt_rat(cert.residue1)}",
        f"digest: {cert.digest()}",
    ]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CertificateFile:
    n: int
    x: RatVec
    residue0: Fraction
    residue1: Fraction
    digest: str


def parse_certificate_text(text: str) -> CertificateFile:
    n = None
    x = None
    res = {}
    digest = ""
    lineno = 0
    for raw in text.splitlines():
        lineno += 1
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n is None:
            try:
                n = int(line)
            except ValueError as exc:
                raise ParseError("expected dimension line", lineno) from exc
            continue
        if ":" not in line:
            raise ParseError(f"expected 'key: value', got {line!r}", lineno)
        key, _, val = line.partition(":")
        key = key.strip()
        val = val.strip()
        if key == "x":
            toks = val.split()
            if len(toks) != n:
                raise ParseError(f"solution vector has {len(toks)} entries, expected {n}", lineno)
            x = tuple(parse_rational(t, lineno) for t in toks)
        elif key in ("residue0", "residue1"):
            res[key] = parse_rational(val, lineno)
        elif key == "digest":
            digest = val
    if n is None or x is None:
        raise ParseError("certificate lacks a dimension or solution vector")
    return CertificateFile(n, x, res.get("residue0", Fraction(0)), res.get("residue1", Fraction(0)), digest)


def verify_certificate(inst: InstanceFile, x: RatVec) -> tuple[bool, Fraction, Fraction]:
    """Recompute both residues exactly from the instance alone."""
    if len(x) != inst.n:
        raise PreconditionError("solution vector dimension mismatch")
    r0 = evaluate_form(inst.q0, x)
    r1 = evaluate_form(inst.q1, x)
    ok = r0 == 0 and r1 == 0 and any(e != 0 for e in x)
    return ok, r0, r1


# ----------------------------------------------------------------------
# generator
# ----------------------------------------------------------------------


def generate_instance(
    n: int,
    bound: int,
    seed: int,
    require_solvable: bool = False,
    max_attempts: int = 1000,
) -> InstanceFile:
    """Random symmetric integer pair satisfying the smoothness hypothesis,
    deterministic per seed; optionally conditioned on real solvability."""
    if bound < 1:
        raise PreconditionError("entry bound must be at least 1")
    if n < 2:
        raise PreconditionError("dimension must be at least 2")
    rng = random.Random(seed)
    for attempt in range(1, max_attempts + 1):
        q0 = _random_sym(rng, n, bound)
        q1 = _random_sym(rng, n, bound)
        if not check_hypothesis_h(q0, q1).ok:
            continue
        if require_solvable and not is_real_solvable(q0, q1).solvable_over_R:
            continue
        meta = (
            "# generator: quadpencil",
            f"# seed: {seed}",
            f"# bound: {bound}",
            f"# attempts: {attempt}",
        )
        return InstanceFile(n, q0, q1, meta)
    raise PreconditionError(f"no admissible instance found in {max_attempts} attempts")


def _random_sym(rng: random.Random, n: int, bound: int) -> Matrix:
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            v = Fraction(rng.randint(-bound, bound))
            rows[i][j] = v
            rows[j][i] = v
    return tuple(tuple(r) for r in rows)
