"""Oracle drivers pitting independent computations of one quantity against each other.

Every check draws a random instance from an explicit seed, runs two
independent routes to the same answer, and returns a machine-readable Verdict
whose witness names the first discrepant bigrade and coefficient.  All
comparisons are exact equality in the truncated ring; there is no tolerance
logic anywhere.

Each check also has a built-in mutation mode that corrupts one side of a
fixed, nondegenerate instance.  A healthy build must fail under mutation;
this is the detectability proof for the check itself.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import MicroformalError
from .exactring import Context, GaussRat, Poly, coords
from .biseries import BiSeries, Truncation
from .genfun import ClassicalGenFun, GenFun, classical_pullback, gateaux_derivative
from .quantum import (
    MorphismOperator,
    WaveFunction,
    WaveTerm,
    apply_operator,
    compose_operators,
    exponent_extract,
    quantum_pullback,
)


@dataclass(frozen=True)
class Verdict:
    """Outcome of one check; the witness is nonempty exactly when it failed."""

    name: str
    passed: bool
    witness: str
    seed: int

    def __post_init__(self):
        if self.passed and self.witness:
            raise ValueError("passing verdicts carry no witness")
        if not self.passed and not self.witness:
            raise ValueError("failing verdicts must carry a witness")

    def render(self) -> str:
        line = f"{'PASS' if self.passed else 'FAIL'} {self.name} seed={self.seed}"
        if self.witness:
            line += f" witness={self.witness}"
        return line


@dataclass(frozen=True)
class Sizes:
    """Instance size bounds; the defaults are also the allowed maxima."""

    n1: int = 2
    n2: int = 2
    n3: int = 2
    degree: int = 3

    def __post_init__(self):
        if not (1 <= self.n1 <= 2 and 1 <= self.n2 <= 2 and 1 <= self.n3 <= 2):
            raise ValueError("dimensions must be 1 or 2")
        if not (1 <= self.degree <= 3):
            raise ValueError("degree bound must be between 1 and 3")


def default_truncation() -> Truncation:
    return Truncation(M=4, J=4, K=4)


def first_discrepancy(a: BiSeries, b: BiSeries) -> str | None:
    """Render the earliest bigrade/coefficient where two series differ."""
    if a == b:
        return None
    if a.ctx != b.ctx or a.trunc != b.trunc:
        return "context or truncation mismatch"
    for mj in sorted(set(a.coeffs) | set(b.coeffs)):
        pa = a.coefficient(*mj)
        pb = b.coefficient(*mj)
        if pa == pb:
            continue
        diff = pa - pb
        exps, _ = next(diff.sorted_terms())
        from .exactring import monomial_str
        mono = monomial_str(a.ctx, exps) or "1"
        ca = pa.coefficient(exps)
        cb = pb.coefficient(exps)
        m, j = mj
        return f"l^{m}*h^{j}:{mono}: {ca} != {cb}"
    return "no differing bigrade found"


class InstanceGen:
    """Seeded generator of small exact instances.

    Coefficients are rationals with numerator and denominator at most 9;
    polynomials are sparse so that exact-arithmetic growth stays bounded.
    """

    def __init__(self, seed, imag_chance: int = 4):
        self.rng = random.Random(repr(seed))
        self.imag_chance = imag_chance

    def fraction(self, nonzero: bool = False) -> Fraction:
        num = self.rng.randint(-9, 9)
        while nonzero and num == 0:
            num = self.rng.randint(-9, 9)
        return Fraction(num, self.rng.randint(1, 9))

    def gaussrat(self, nonzero: bool = False) -> GaussRat:
        re = self.fraction()
        im = self.fraction() if self.rng.randrange(self.imag_chance) == 0 else Fraction(0)
        if nonzero and re == 0 and im == 0:
            re = self.fraction(nonzero=True)
        return GaussRat(re, im)

    def exponents(self, nvars: int, degree: int) -> tuple[int, ...]:
        total = self.rng.choice([0, 1, 1, 2, 2, degree])
        exps = [0] * nvars
        for _ in range(min(total, degree)):
            exps[self.rng.randrange(nvars)] += 1
        return tuple(exps)

    def poly(self, ctx: Context, degree: int, max_terms: int = 2,
             nonzero: bool = False) -> Poly:
        terms = {}
        for _ in range(self.rng.randint(1, max_terms)):
            terms[self.exponents(len(ctx), degree)] = self.gaussrat()
        p = Poly(ctx, terms)
        if nonzero and p.is_zero:
            exps = [0] * len(ctx)
            if len(ctx):
                exps[self.rng.randrange(len(ctx))] = 1
            p = Poly(ctx, {tuple(exps): self.gaussrat(nonzero=True)})
        return p

    def hbar_series(self, trunc: Truncation, ctx: Context, degree: int,
                    jmax: int = 1, nonzero: bool = False) -> BiSeries:
        coeffs = {(0, 0): self.poly(ctx, degree, nonzero=nonzero)}
        for j in range(1, min(jmax, trunc.J) + 1):
            if self.rng.randrange(2) == 0:
                coeffs[(0, j)] = self.poly(ctx, degree)
        return BiSeries(trunc, ctx, coeffs)

    def genfun(self, trunc: Truncation, n1: int, n2: int, degree: int,
               xctx: Context | None = None) -> GenFun:
        xctx = xctx or coords("x", n1)
        coeffs: dict[tuple[int, ...], BiSeries] = {}
        if self.rng.randrange(2) == 0:
            coeffs[(0,) * n2] = self.hbar_series(trunc, xctx, degree)
        for i in range(n2):
            alpha = [0] * n2
            alpha[i] = 1
            coeffs[tuple(alpha)] = self.hbar_series(trunc, xctx, degree, nonzero=True)
        for _ in range(self.rng.randint(1, 2)):
            total = self.rng.choice([2, 2, 3, min(4, trunc.K)])
            alpha = [0] * n2
            for _ in range(total):
                alpha[self.rng.randrange(n2)] += 1
            coeffs[tuple(alpha)] = self.hbar_series(trunc, xctx, degree, nonzero=True)
        return GenFun(n1, n2, trunc, xctx, coeffs)

    def classical_genfun(self, n1: int, n2: int, degree: int,
                         xctx: Context | None = None) -> ClassicalGenFun:
        xctx = xctx or coords("x", n1)
        coeffs: dict[tuple[int, ...], Poly] = {}
        if self.rng.randrange(2) == 0:
            coeffs[(0,) * n2] = self.poly(xctx, degree)
        for i in range(n2):
            alpha = [0] * n2
            alpha[i] = 1
            coeffs[tuple(alpha)] = self.poly(xctx, degree, nonzero=True)
        for _ in range(self.rng.randint(1, 2)):
            total = self.rng.choice([2, 2, 3])
            alpha = [0] * n2
            for _ in range(total):
                alpha[self.rng.randrange(n2)] += 1
            coeffs[tuple(alpha)] = self.poly(xctx, degree, nonzero=True)
        return ClassicalGenFun(n1, n2, xctx, coeffs)

    def wave(self, trunc: Truncation, ctx: Context, degree: int,
             max_terms: int = 2) -> WaveFunction:
        terms = []
        for _ in range(self.rng.randint(1, max_terms)):
            if self.rng.randrange(2) == 0:
                amp = BiSeries.one(trunc, ctx)
            else:
                amp = self.hbar_series(trunc, ctx, degree, nonzero=True)
            phase = {(0, 0): self.poly(ctx, degree)}
            if self.rng.randrange(3) == 0:
                phase[(0, 1)] = self.poly(ctx, degree)
            terms.append(WaveTerm(amp, BiSeries(trunc, ctx, phase)))
        return WaveFunction(trunc, ctx, terms)


def _golden_quadratic(trunc: Truncation) -> tuple[GenFun, Poly]:
    """S = x1 q1 + q1^2/2 over one variable, with g = y1^2/2."""
    xctx = coords("x", 1)
    yctx = coords("y", 1)
    x1 = Poly.variable(xctx, "x1")
    s = GenFun(1, 1, trunc, xctx, {
        (1,): BiSeries.from_poly(trunc, x1),
        (2,): BiSeries.const(trunc, xctx, Fraction(1, 2)),
    })
    g = Poly.variable(yctx, "y1") ** 2 * Fraction(1, 2)
    return s, g


def check_classical_limit(seed, sizes: Sizes | None = None,
                          trunc: Truncation | None = None,
                          mutate: bool = False) -> Verdict:
    """Pure-phase pullback: the exponent is hbar-regular and its hbar-zero part
    equals the critical-value construction, grade by grade.

    Mutation mode corrupts one quadratic coefficient of the classical side
    of the fixed golden instance.
    """
    sizes = sizes or Sizes()
    trunc = trunc or default_truncation()
    name = "classical_limit"
    if mutate:
        s, g = _golden_quadratic(trunc)
    else:
        gen = InstanceGen(("classical_limit", seed))
        n1 = gen.rng.randint(1, sizes.n1)
        n2 = gen.rng.randint(1, sizes.n2)
        s = gen.genfun(trunc, n1, n2, sizes.degree)
        g = gen.poly(coords("y", n2), sizes.degree, max_terms=3)
    w = WaveFunction.from_phase(trunc, g)
    f = exponent_extract(quantum_pullback(s, w))
    if not f.is_hbar_regular():
        bad = min(mj for mj in f.coeffs if mj[1] < 0)
        return Verdict(name, False, f"negative hbar power at l^{bad[0]}*h^{bad[1]}", seed)
    s0 = s.classical_limit()
    if mutate:
        corrupted = dict(s0.coeffs)
        alpha = (2,) + (0,) * (s0.n2 - 1)
        corrupted[alpha] = corrupted.get(alpha, Poly.zero(s0.xctx)) + 1
        s0 = ClassicalGenFun(s0.n1, s0.n2, s0.xctx, corrupted)
    classical = classical_pullback(s0, g, trunc)
    witness = first_discrepancy(f.hbar_zero_part(), classical)
    if witness:
        return Verdict(name, False, witness, seed)
    return Verdict(name, True, "", seed)


def check_derivative_homomorphism(seed, sizes: Sizes | None = None,
                                  trunc: Truncation | None = None,
                                  mutate: bool = False) -> Verdict:
    """The derivative of the pullback at g is multiplicative and unital.

    Mutation mode compares the derivative of a product against the sum of
    derivatives on the fixed golden instance, which must not agree.
    """
    sizes = sizes or Sizes()
    trunc = trunc or default_truncation()
    name = "derivative_homomorphism"
    if mutate:
        s0 = _golden_quadratic(trunc)[0].classical_limit()
        yctx = coords("y", 1)
        g = Poly.variable(yctx, "y1") ** 2 * Fraction(1, 2)
        u = v = Poly.variable(yctx, "y1")
    else:
        gen = InstanceGen(("derivative_homomorphism", seed))
        n1 = gen.rng.randint(1, sizes.n1)
        n2 = gen.rng.randint(1, sizes.n2)
        s0 = gen.classical_genfun(n1, n2, sizes.degree)
        yctx = coords("y", n2)
        g = gen.poly(yctx, sizes.degree, max_terms=3)
        u = gen.poly(yctx, sizes.degree, nonzero=True)
        v = gen.poly(yctx, sizes.degree, nonzero=True)
    t_u = gateaux_derivative(s0, g, u, trunc)
    t_v = gateaux_derivative(s0, g, v, trunc)
    t_uv = gateaux_derivative(s0, g, u * v, trunc)
    lhs = t_uv
    rhs = (t_u + t_v) if mutate else (t_u * t_v)
    witness = first_discrepancy(lhs, rhs)
    if witness:
        return Verdict(name, False, witness, seed)
    t_one = gateaux_derivative(s0, g, Poly.const(g.ctx, 1), trunc)
    witness = first_discrepancy(t_one, BiSeries.one(trunc, s0.xctx))
    if witness:
        return Verdict(name, False, f"unit: {witness}", seed)
    return Verdict(name, True, "", seed)


def _wave_discrepancy(a: WaveFunction, b: WaveFunction) -> str | None:
    if len(a.terms) != len(b.terms):
        return f"term count {len(a.terms)} != {len(b.terms)}"
    for k, (ta, tb) in enumerate(zip(a.terms, b.terms)):
        w = first_discrepancy(ta.phase, tb.phase)
        if w:
            return f"term {k} phase {w}"
        w = first_discrepancy(ta.amplitude, tb.amplitude)
        if w:
            return f"term {k} amplitude {w}"
    return None


def check_composition_coherence(seed, sizes: Sizes | None = None,
                                trunc: Truncation | None = None,
                                mutate: bool = False, nwaves: int = 10) -> Verdict:
    """Composed-then-applied equals applied-then-applied, grade by grade.

    The sequential pullback is the oracle for the composite.  Mutation mode
    adds one to a quadratic coefficient of the composite before applying it.
    """
    sizes = sizes or Sizes()
    trunc = trunc or default_truncation()
    name = "composition_coherence"
    gen = InstanceGen(("composition_coherence", seed))
    if mutate:
        s_phi = _golden_quadratic(trunc)[0]
        yctx = coords("y", 1)
        s_psi = GenFun(1, 1, trunc, yctx, {
            (1,): BiSeries.from_poly(trunc, Poly.variable(yctx, "y1")),
            (2,): BiSeries.const(trunc, yctx, Fraction(1, 2)),
        })
        n1 = n2 = n3 = 1
    else:
        n1 = gen.rng.randint(1, sizes.n1)
        n2 = gen.rng.randint(1, sizes.n2)
        n3 = gen.rng.randint(1, sizes.n3)
        s_phi = gen.genfun(trunc, n1, n2, sizes.degree)
        s_psi = gen.genfun(trunc, n2, n3, sizes.degree, xctx=coords("y", n2))
    op_phi = MorphismOperator.from_genfun(s_phi)
    op_psi = MorphismOperator.from_genfun(s_psi)
    composed = compose_operators(op_phi, op_psi)
    if mutate:
        corrupted = dict(composed.ops)
        alpha = (2,) + (0,) * (n3 - 1)
        bump = BiSeries(trunc, composed.xctx, {(1, 0): Poly.const(composed.xctx, 1)})
        corrupted[alpha] = corrupted.get(alpha, BiSeries.zero(trunc, composed.xctx)) + bump
        composed = MorphismOperator(composed.n1, composed.n2, trunc, composed.xctx,
                                    composed.phase0, composed.targets, corrupted)
    zctx = coords("z", n3)
    for k in range(nwaves):
        w = gen.wave(trunc, zctx, sizes.degree) if not mutate else \
            WaveFunction.from_phase(trunc, Poly.variable(zctx, "z1") ** 2 * Fraction(1, 2))
        lhs = apply_operator(composed, w, target_vars=zctx.names)
        rhs = apply_operator(op_phi,
                             apply_operator(op_psi, w, target_vars=zctx.names))
        witness = _wave_discrepancy(lhs, rhs)
        if witness:
            return Verdict(name, False, f"wave {k}: {witness}", seed)
        if mutate:
            break
    return Verdict(name, True, "", seed)


ALL_CHECKS = {
    "classical_limit": check_classical_limit,
    "derivative_homomorphism": check_derivative_homomorphism,
    "composition_coherence": check_composition_coherence,
}


def run_all_checks(seed: int = 0, cases: int = 3,
                   sizes: Sizes | None = None,
                   trunc: Truncation | None = None) -> list[Verdict]:
    """Run every check on `cases` seeded instances plus its negative control."""
    verdicts = []
    for name, check in ALL_CHECKS.items():
        for k in range(cases):
            verdicts.append(check(seed + k, sizes=sizes, trunc=trunc))
        try:
            raw = check(seed, sizes=sizes, trunc=trunc, mutate=True)
            detected = not raw.passed
        except MicroformalError:
            detected = True  # corrupting the instance may also trip a validator
        verdicts.append(Verdict(
            f"negative_control_{name}",
            detected,
            "" if detected else "mutation went undetected",
            seed,
        ))
    return verdicts
