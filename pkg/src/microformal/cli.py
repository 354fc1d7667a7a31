"""Command-line frontend: morphism files, pullbacks, composition, verification.

Morphism file format (line oriented, `#` starts a comment):

    dims <n1> <n2>
    trunc M=<m> J=<j> K=<k> [D=<d>]
    S = <expression in x1.., q1.., h>
    w: amp=<expression in y1.., h> phase=<expression in y1.., h>

Exit codes: 0 success, 1 a check failed, 2 parse or validation error.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import DimensionError, MicroformalError, ParseError
from .exactring import Context, coords
from .biseries import BiSeries, Truncation
from .genfun import GenFun, classical_pullback
from .quantum import (
    WaveFunction,
    WaveTerm,
    compose,
    exponent_extract,
    linear_change,
    quantum_pullback,
)
from .parsing import eval_constant, eval_series, parse_expression
from .verify import Sizes, _wave_discrepancy, run_all_checks


@dataclass
class MorphismFile:
    """Parsed morphism file: dimensions, truncation, S, optional wave terms."""

    n1: int
    n2: int
    trunc: Truncation
    genfun: GenFun
    waves: list[WaveTerm]

    def wave_function(self) -> WaveFunction:
        if not self.waves:
            raise ParseError("morphism file declares no wave functions (w: lines)")
        yctx = self.waves[0].amplitude.ctx
        return WaveFunction(self.trunc, yctx, self.waves)


def _series_to_genfun(series: BiSeries, n1: int, n2: int, trunc: Truncation,
                      xctx: Context, qctx: Context) -> GenFun:
    qpos = [series.ctx.index(name) for name in qctx.names]
    xpos = [series.ctx.index(name) for name in xctx.names]
    grouped: dict[tuple[int, ...], dict[tuple[int, int], dict]] = {}
    for mj, p in series.coeffs.items():
        for exps, c in p.iter_terms():
            alpha = tuple(exps[i] for i in qpos)
            xexps = tuple(exps[i] for i in xpos)
            grouped.setdefault(alpha, {}).setdefault(mj, {})[xexps] = c
    coeffs = {}
    for alpha, by_grade in grouped.items():
        from .exactring import Poly
        coeffs[alpha] = BiSeries(trunc, xctx,
                                 {mj: Poly(xctx, terms) for mj, terms in by_grade.items()})
    return GenFun(n1, n2, trunc, xctx, coeffs)


_TRUNC_ITEM = re.compile(r"([MJKD])\s*=\s*(\d+)")


def load_morphism(path: str | Path) -> MorphismFile:
    text = Path(path).read_text(encoding="utf-8")
    dims: tuple[int, int] | None = None
    trunc: Truncation | None = None
    s_expr: str | None = None
    wave_specs: list[tuple[int, str, str]] = []

    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("dims"):
            parts = line.split()
            if len(parts) != 3 or not all(p.isdigit() for p in parts[1:]):
                raise ParseError(f"line {ln}: expected 'dims <n1> <n2>'")
            dims = (int(parts[1]), int(parts[2]))
            if dims[0] < 1 or dims[1] < 1:
                raise ParseError(f"line {ln}: dimensions must be positive")
        elif line.startswith("trunc"):
            fields = dict((k, int(v)) for k, v in _TRUNC_ITEM.findall(line))
            unknown = re.sub(_TRUNC_ITEM, "", line[len("trunc"):]).strip()
            if unknown or not {"M", "J", "K"} <= set(fields):
                raise ParseError(f"line {ln}: expected 'trunc M=<m> J=<j> K=<k> [D=<d>]'")
            trunc = Truncation(fields["M"], fields["J"], fields["K"], fields.get("D"))
        elif line.startswith("S"):
            rest = line[1:].lstrip()
            if not rest.startswith("="):
                raise ParseError(f"line {ln}: expected 'S = <expression>'")
            if s_expr is not None:
                raise ParseError(f"line {ln}: S defined twice")
            s_expr = rest[1:].strip()
        elif line.startswith("w:"):
            body = line[2:]
            m = re.match(r"\s*amp\s*=(.*)\bphase\s*=(.*)$", body)
            if not m:
                raise ParseError(f"line {ln}: expected 'w: amp=<expr> phase=<expr>'")
            wave_specs.append((ln, m.group(1).strip(), m.group(2).strip()))
        else:
            raise ParseError(f"line {ln}: unrecognized directive {line.split()[0]!r}")

    if dims is None:
        raise ParseError("missing 'dims' line")
    if trunc is None:
        raise ParseError("missing 'trunc' line")
    if s_expr is None:
        raise ParseError("missing 'S =' line")
    n1, n2 = dims
    xctx = coords("x", n1)
    qctx = coords("q", n2)
    sctx = xctx.union(qctx)
    series = eval_series(parse_expression(s_expr), sctx, trunc)
    gf = _series_to_genfun(series, n1, n2, trunc, xctx, qctx)

    yctx = coords("y", n2)
    waves = []
    for ln, amp_text, phase_text in wave_specs:
        try:
            amp = eval_series(parse_expression(amp_text), yctx, trunc)
            phase = eval_series(parse_expression(phase_text), yctx, trunc)
        except MicroformalError as exc:
            raise ParseError(f"line {ln}: {exc}") from None
        waves.append(WaveTerm(amp, phase))
    return MorphismFile(n1, n2, trunc, gf, waves)


def parse_matrix(text: str, n: int):
    rows = [r for r in text.split(";")]
    if len(rows) != n:
        raise ParseError(f"matrix must have {n} rows separated by ';'")
    out = []
    for row in rows:
        entries = row.split(",")
        if len(entries) != n:
            raise ParseError(f"matrix rows must have {n} entries separated by ','")
        out.append([eval_constant(e.strip()) for e in entries])
    return out


# -- subcommands ---------------------------------------------------------------

def _cmd_pullback(args) -> int:
    mf = load_morphism(args.file)
    result = quantum_pullback(mf.genfun, mf.wave_function())
    for k, term in enumerate(result.terms, 1):
        print(f"term {k} amplitude: {term.amplitude}")
        print(f"term {k} phase: {term.phase}")
    if args.exponent:
        print(f"exponent: {exponent_extract(result)}")
    return 0


def _cmd_classical(args) -> int:
    mf = load_morphism(args.file)
    if len(mf.waves) != 1:
        raise ParseError("classical pullback needs exactly one w: line")
    term = mf.waves[0]
    one = BiSeries.one(mf.trunc, term.amplitude.ctx)
    if term.amplitude != one:
        raise ParseError("classical pullback needs amplitude 1 (a pure phase)")
    g = term.phase.coefficient(0, 0)
    if term.phase != BiSeries.from_poly(mf.trunc, g):
        raise ParseError("classical pullback needs an h-free phase")
    result = classical_pullback(mf.genfun.classical_limit(), g, mf.trunc)
    print(result)
    return 0


def _cmd_compose(args) -> int:
    first = load_morphism(args.file1)
    second = load_morphism(args.file2)
    if first.n2 != second.n1:
        raise DimensionError(
            f"cannot chain {first.n1}->{first.n2} with {second.n1}->{second.n2}")
    if first.trunc != second.trunc:
        raise ParseError("the two files declare different truncations")
    composed = compose(first.genfun, second.genfun)
    t = first.trunc
    print(f"dims {composed.n1} {composed.n2}")
    line = f"trunc M={t.M} J={t.J} K={t.K}"
    if t.D is not None:
        line += f" D={t.D}"
    print(line)
    print(f"S = {composed.render()}")
    return 0


def _cmd_verify(args) -> int:
    sizes = Sizes()
    if args.corrupt:
        from .verify import ALL_CHECKS
        verdicts = [check(args.seed, sizes=sizes, mutate=True)
                    for check in ALL_CHECKS.values()]
    else:
        verdicts = run_all_checks(args.seed, cases=args.cases, sizes=sizes)
    for v in verdicts:
        print(v.render())
    return 0 if all(v.passed for v in verdicts) else 1


def _cmd_covariance(args) -> int:
    mf = load_morphism(args.file)
    matrix = parse_matrix(args.matrix, mf.n2)
    wave = mf.wave_function()
    lhs = quantum_pullback(mf.genfun, wave)
    rhs = quantum_pullback(linear_change(mf.genfun, matrix),
                           wave.linear_substitute(matrix, nvars=mf.n2))
    witness = _wave_discrepancy(lhs, rhs)
    if witness:
        print(f"FAIL covariance witness={witness}")
        return 1
    print("PASS covariance")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microformal",
        description="Exact engine for microformal morphisms acting on oscillatory waves.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pullback", help="apply a morphism to the file's wave functions")
    p.add_argument("file")
    p.add_argument("--exponent", action="store_true",
                   help="also print the extracted exponent (single-term results)")
    p.set_defaults(fn=_cmd_pullback)

    p = sub.add_parser("classical", help="classical pullback of the file's pure phase")
    p.add_argument("file")
    p.set_defaults(fn=_cmd_classical)

    p = sub.add_parser("compose", help="compose two morphisms (FILE1 then FILE2)")
    p.add_argument("file1")
    p.add_argument("file2")
    p.set_defaults(fn=_cmd_compose)

    p = sub.add_parser("verify", help="run all self-checks; exit 0 iff all pass")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=3,
                   help="instances per check (default 3)")
    p.add_argument("--corrupt", action="store_true",
                   help="diagnostic: run the mutated variants, which must fail")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("covariance", help="check invariance under a linear change")
    p.add_argument("file")
    p.add_argument("--matrix", required=True, help="rows 'a,b;c,d' of exact rationals")
    p.set_defaults(fn=_cmd_covariance)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MicroformalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
