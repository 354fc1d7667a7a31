"""Oscillatory wave functions and the pullback as a formal differential operator.

A wave function is a finite sum of terms A * exp((i/h) b) with a series
amplitude A and an hbar-regular, coupling-free series phase b.  Pulling such a
term back along a generating function S = S0 + phi.q + S+ works entirely by
amplitude transport: a single derivative acts on a term as

    d/dy_i (A, b)  =  (dA/dy_i + (i/h) A db/dy_i, b),

so the operator exp((i/h) S+(x, (h/i) d/dy)) never leaves the polynomial ring.
A momentum monomial q^alpha of S+ contributes its coefficient times
(i/h)(h/i)^|alpha| and an alpha-fold transport; the exponential is a finite
sum because every insertion of the higher part carries one coupling grade.
After the operator, y is replaced by phi(x) in amplitude and phase and S0 is
added to the phase.

Internally a morphism is held in operator normalization: the weight (i/h) and
the coupling mark are folded into each higher coefficient once and for all
(MorphismOperator).  Composition then needs no renormalization at all: the
pullback of exp((i/h) S2(y, r)), with the target momenta r inert, yields the
composite's phase and substitution parts as the output phase and the
composite's operator coefficients as the log of the output amplitude.  Since
no step ever divides by h, every pipeline is plain arithmetic in the
truncated ring, which is why composed-then-applied agrees with sequential
application grade by grade.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import (
    CompositionError,
    ContextError,
    DimensionError,
    GradingError,
    MatrixError,
    TruncationError,
    ValuationError,
)
from .exactring import Context, GaussRat, I, MINUS_I, ONE, Poly, ZERO, coords
from .biseries import BiSeries, Truncation, series_eval
from .genfun import GenFun


@dataclass(frozen=True)
class WaveTerm:
    """One summand A * exp((i/h) b); the phase is coupling-free and hbar-regular."""

    amplitude: BiSeries
    phase: BiSeries

    def __post_init__(self):
        if self.amplitude.trunc != self.phase.trunc or self.amplitude.ctx != self.phase.ctx:
            raise ContextError("amplitude and phase must share context and truncation")
        if any(m != 0 or j < 0 for m, j in self.phase.coeffs):
            raise GradingError("phases must be coupling-free with nonnegative hbar powers")


class WaveFunction:
    """Finite formal sum of oscillatory terms over one context."""

    __slots__ = ("trunc", "ctx", "terms")

    def __init__(self, trunc: Truncation, ctx: Context, terms: Sequence[WaveTerm] = ()):
        for t in terms:
            if t.amplitude.trunc != trunc or t.amplitude.ctx != ctx:
                raise ContextError("term in wrong context or truncation")
        self.trunc = trunc
        self.ctx = ctx
        self.terms = tuple(terms)

    @classmethod
    def zero(cls, trunc: Truncation, ctx: Context) -> "WaveFunction":
        return cls(trunc, ctx)

    @classmethod
    def from_phase(cls, trunc: Truncation, phase: Poly | BiSeries) -> "WaveFunction":
        """Pure-phase wave exp((i/h) g) with unit amplitude."""
        if isinstance(phase, Poly):
            phase = BiSeries.from_poly(trunc, phase)
        one = BiSeries.one(trunc, phase.ctx)
        return cls(trunc, phase.ctx, (WaveTerm(one, phase),))

    @classmethod
    def from_amplitude(cls, trunc: Truncation, amplitude: Poly | BiSeries) -> "WaveFunction":
        """Zero-phase wave: just an amplitude."""
        if isinstance(amplitude, Poly):
            amplitude = BiSeries.from_poly(trunc, amplitude)
        zero = BiSeries.zero(trunc, amplitude.ctx)
        return cls(trunc, amplitude.ctx, (WaveTerm(amplitude, zero),))

    def __add__(self, other: "WaveFunction") -> "WaveFunction":
        if not isinstance(other, WaveFunction):
            return NotImplemented
        if other.trunc != self.trunc or other.ctx != self.ctx:
            raise ContextError("cannot add waves over different contexts")
        return WaveFunction(self.trunc, self.ctx, self.terms + other.terms)

    def scale(self, value) -> "WaveFunction":
        """Multiply every amplitude by an hbar-series scalar (or a constant)."""
        if isinstance(value, BiSeries):
            factor = value
        else:
            factor = BiSeries.const(self.trunc, self.ctx, value)
        if factor.is_zero:
            return WaveFunction.zero(self.trunc, self.ctx)
        return WaveFunction(self.trunc, self.ctx,
                            tuple(WaveTerm(t.amplitude * factor, t.phase)
                                  for t in self.terms))

    def truncate(self, trunc: Truncation) -> "WaveFunction":
        return WaveFunction(trunc, self.ctx,
                            tuple(WaveTerm(t.amplitude.truncate(trunc),
                                           t.phase.truncate(trunc))
                                  for t in self.terms))

    def linear_substitute(self, matrix: Sequence[Sequence], nvars: int | None = None) -> "WaveFunction":
        """Precompose coordinates with a linear map: y_i -> sum_j a[i][j] y_j."""
        n = nvars if nvars is not None else len(matrix)
        names = self.ctx.names[:n]
        images = {}
        for i, name in enumerate(names):
            img = Poly.zero(self.ctx)
            for j, entry in enumerate(matrix[i]):
                img = img + Poly.variable(self.ctx, names[j]) * GaussRat.coerce(entry)
            images[name] = img
        for name in self.ctx.names[n:]:
            images[name] = Poly.variable(self.ctx, name)

        def sub_series(b: BiSeries) -> BiSeries:
            return BiSeries(b.trunc, b.ctx,
                            {mj: p.substitute(images, self.ctx) for mj, p in b.coeffs.items()})

        return WaveFunction(self.trunc, self.ctx,
                            tuple(WaveTerm(sub_series(t.amplitude), sub_series(t.phase))
                                  for t in self.terms))

    def __eq__(self, other):
        if not isinstance(other, WaveFunction):
            return NotImplemented
        return (self.trunc == other.trunc and self.ctx == other.ctx
                and self.terms == other.terms)

    __hash__ = None

    def __str__(self):
        if not self.terms:
            return "0"
        return " (+) ".join(f"[{t.amplitude}] * e^((i/h)({t.phase}))" for t in self.terms)

    def __repr__(self):
        return f"WaveFunction({self})"


# A pulled-back wave has exactly the same shape, just over source coordinates.
PulledBack = WaveFunction


class MorphismOperator:
    """A morphism ready to act on waves, in operator normalization.

    phase0 and targets are the coupling-free constant and linear parts of the
    generating function (an hbar-regular phase shift and the substitution
    images).  ops maps each momentum multi-index to the fully weighted
    operator coefficient (i/h) * l * S_alpha; every entry carries coupling
    grade at least one, so exponentiating the operator is a finite sum.
    """

    __slots__ = ("n1", "n2", "trunc", "xctx", "phase0", "targets", "ops")

    def __init__(self, n1: int, n2: int, trunc: Truncation, xctx: Context,
                 phase0: BiSeries, targets: Sequence[BiSeries],
                 ops: Mapping[tuple[int, ...], BiSeries]):
        if len(targets) != n2:
            raise DimensionError(f"need {n2} substitution images, got {len(targets)}")
        for b in (phase0, *targets):
            if b.trunc != trunc or b.ctx != xctx:
                raise ContextError("phase/target series in wrong context or truncation")
            if any(m != 0 or j < 0 for m, j in b.coeffs):
                raise GradingError("phase and substitution parts must be coupling-free"
                                   " with nonnegative hbar powers")
        clean = {}
        for alpha, c in ops.items():
            if len(alpha) != n2 or any(a < 0 for a in alpha):
                raise DimensionError(f"bad momentum multi-index {alpha}")
            if c.is_zero:
                continue
            if c.trunc != trunc or c.ctx != xctx:
                raise ContextError("operator coefficient in wrong context or truncation")
            if c.coupling_valuation() < 1:
                raise GradingError("operator coefficients must carry the coupling grade")
            clean[alpha] = c
        self.n1 = n1
        self.n2 = n2
        self.trunc = trunc
        self.xctx = xctx
        self.phase0 = phase0
        self.targets = tuple(targets)
        self.ops = clean

    @classmethod
    def from_genfun(cls, s: GenFun) -> "MorphismOperator":
        """Weight each higher coefficient by (i/h) and one coupling grade."""
        if not s.is_coupling_free():
            raise GradingError("expected an ungraded generating function")
        s0, phi, higher = s.decompose()
        ops = {alpha: c.shift(1, -1).scale(I) for alpha, c in higher.coeffs.items()}
        return cls(s.n1, s.n2, s.trunc, s.xctx, s0, phi, ops)

    def rename_source(self, ctx: Context) -> "MorphismOperator":
        """Positionally relabel the source coordinates."""
        if len(ctx) != len(self.xctx):
            raise ContextError("rename requires equal arity")

        def move(b: BiSeries) -> BiSeries:
            return BiSeries(b.trunc, ctx, {mj: p.rename(ctx) for mj, p in b.coeffs.items()})

        return MorphismOperator(self.n1, self.n2, self.trunc, ctx,
                                move(self.phase0), [move(t) for t in self.targets],
                                {a: move(c) for a, c in self.ops.items()})


def _transport_exp(op: MorphismOperator, amplitude: BiSeries, phase: BiSeries,
                   target_vars: Sequence[str], joint: Context) -> BiSeries:
    """exp of the weighted operator applied to one amplitude, for a fixed phase."""
    trunc = op.trunc
    ops = [(alpha, c.embed(joint), c.coupling_valuation())
           for alpha, c in op.ops.items()]
    db = [phase.diff(v) for v in target_vars]
    nvars = len(target_vars)
    budget = trunc.M

    def transport(a: BiSeries, i: int) -> BiSeries:
        # scaled single derivative (h/i) d/dv_i acting on (a, phase)
        return a.diff(target_vars[i]).shift(0, 1).scale(MINUS_I) + a * db[i]

    def one_insertion(a: BiSeries) -> BiSeries:
        room = budget - a.coupling_valuation()
        viable = [(alpha, c, val) for alpha, c, val in ops if val <= room]
        if not viable:
            return BiSeries.zero(trunc, joint)
        total = BiSeries.zero(trunc, joint)
        # group by coupling valuation: an op at valuation v only sees the
        # amplitude slice with grade <= M - v, and transports preserve the
        # grade (phase gradients are grade-free), so deep derivative chains
        # run on small slices
        by_val: dict[int, list[tuple[tuple[int, ...], BiSeries]]] = {}
        for alpha, c, val in viable:
            by_val.setdefault(val, []).append((alpha, c))
        for val, group in by_val.items():
            cap = budget - val
            sliced = a.part(lambda m, j: m <= cap)
            if sliced.is_zero:
                continue
            needed = sorted({beta for alpha, _ in group for beta in _sub_indices(alpha)},
                            key=lambda b: (sum(b), b))
            table = {(0,) * nvars: sliced}
            for beta in needed:
                if beta in table:
                    continue
                i = next(k for k, e in enumerate(beta) if e)
                prev = list(beta)
                prev[i] -= 1
                table[beta] = transport(table[tuple(prev)], i)
            for alpha, c in group:
                total = total + c * table[alpha]
        return total

    acc = amplitude
    cur = amplitude
    for p in range(1, trunc.M + 1):
        cur = one_insertion(cur).scale(Fraction(1, p))
        if cur.is_zero:
            break
        acc = acc + cur
    return acc


def _sub_indices(alpha: tuple[int, ...]):
    """All componentwise-lower multi-indices of alpha, including alpha itself."""
    if not alpha:
        yield ()
        return
    head = alpha[0]
    for rest in _sub_indices(alpha[1:]):
        for k in range(head + 1):
            yield (k,) + rest


def apply_operator(op: MorphismOperator, w: WaveFunction,
                   target_vars: Sequence[str] | None = None) -> WaveFunction:
    """Act on a wave: transport-exponential, substitution, phase shift."""
    trunc = op.trunc
    if w.trunc != trunc:
        raise TruncationError("wave and morphism use different truncations")
    n2 = op.n2
    if target_vars is None:
        target_vars = w.ctx.names[:n2]
    target_vars = tuple(target_vars)
    if len(target_vars) != n2:
        raise DimensionError(
            f"target dimension {n2} needs {n2} transport variables, got {len(target_vars)}")
    for v in target_vars:
        if v not in w.ctx:
            raise ContextError(f"transport variable {v!r} absent from wave context")
        if v in op.xctx:
            raise ContextError(f"transport variable {v!r} collides with a source coordinate")

    extras = [n for n in w.ctx.names if n not in target_vars]
    out_ctx = op.xctx
    for name in extras:
        out_ctx = out_ctx.extend(name, w.ctx.caps[w.ctx.index(name)])
    joint = op.xctx.union(w.ctx)

    values = {name: BiSeries.from_poly(trunc, Poly.variable(out_ctx, name))
              for name in op.xctx.names}
    for name in extras:
        values[name] = BiSeries.from_poly(trunc, Poly.variable(out_ctx, name))
    for v, t in zip(target_vars, op.targets):
        values[v] = t.embed(out_ctx)

    phase0_out = op.phase0.embed(out_ctx)
    out_terms = []
    cache: dict = {}  # shared monomial products; same values for every term
    for term in w.terms:
        amp = term.amplitude.embed(joint)
        phase = term.phase.embed(joint)
        moved = _transport_exp(op, amp, phase, target_vars, joint)
        amp_out = series_eval(moved, values, trunc, out_ctx, cache)
        phase_out = series_eval(phase, values, trunc, out_ctx, cache) + phase0_out
        out_terms.append(WaveTerm(amp_out, phase_out))
    return WaveFunction(trunc, out_ctx, out_terms)


def apply_higher_operator(s: GenFun, term: WaveTerm,
                          target_vars: Sequence[str]) -> WaveTerm:
    """Apply exp of the higher-part operator of s to one term, by transport.

    No substitution and no phase factor happen here; the source coordinates
    are adjoined to the term's context for the result.
    """
    op = MorphismOperator.from_genfun(s)
    joint = op.xctx.union(term.amplitude.ctx)
    amp = term.amplitude.embed(joint)
    phase = term.phase.embed(joint)
    return WaveTerm(_transport_exp(op, amp, phase, tuple(target_vars), joint), phase)


def quantum_pullback(s: GenFun, w: WaveFunction,
                     target_vars: Sequence[str] | None = None) -> PulledBack:
    """Pullback of a wave function along a generating function.

    Equivalent to the phase factor exp((i/h) S0), the operator
    exp((i/h) S+(x, (h/i) d/dy)) applied by amplitude transport, and the
    substitution y = phi(x); linear over terms.
    """
    return apply_operator(MorphismOperator.from_genfun(s), w, target_vars)


def exponent_extract(w: PulledBack) -> BiSeries:
    """Total exponent of a single-term wave whose amplitude is 1 + O(coupling).

    Returns phase + (h/i) log(amplitude).  The result may carry negative hbar
    powers; regularity holds for genuine pullbacks and is asserted by callers
    that rely on it.
    """
    if len(w.terms) != 1:
        raise ValuationError("exponent extraction needs exactly one term")
    t = w.terms[0]
    return t.phase + t.amplitude.log().scale(MINUS_I).shift(0, 1)


def wave_from_exponent(exponent: BiSeries) -> WaveFunction:
    """Inverse of exponent extraction: grade-zero part becomes the phase."""
    phase = exponent.grade_zero_part()
    rest = exponent.grade_positive_part()
    amp = BiSeries.one(exponent.trunc, exponent.ctx)
    if not rest.is_zero:
        amp = rest.scale(I).shift(0, -1).exp()
    return WaveFunction(exponent.trunc, exponent.ctx, (WaveTerm(amp, phase),))


def _fresh_coords(base: str, n: int, forbidden: Iterable[str]) -> Context:
    forbidden = set(forbidden)
    prefix = base
    while any(f"{prefix}{k}" in forbidden for k in range(1, n + 1)):
        prefix += base
    return coords(prefix, n)


def compose_operators(first: MorphismOperator, second: MorphismOperator) -> MorphismOperator:
    """Composite morphism, computed without leaving the truncated ring.

    Builds the single-exponential wave of the second morphism (target momenta
    as inert formal variables), acts with the first, and reads the composite
    off the result: its phase and substitution parts are the coupling-free
    output phase, its operator coefficients are the log of the output
    amplitude.  Asserts that the composite's generating function would be
    hbar-regular (operator coefficients no worse than a simple pole).
    """
    if first.n2 != second.n1:
        raise DimensionError(
            f"cannot chain {first.n1}->{first.n2} with {second.n1}->{second.n2}")
    if first.trunc != second.trunc:
        raise TruncationError("mismatched truncations")
    if len(second.xctx) != second.n1:
        raise ContextError("intermediate morphism has extra source variables")
    trunc = first.trunc
    yctx = _fresh_coords("y", second.n1, first.xctx.names)
    rctx = _fresh_coords("r", second.n2, tuple(first.xctx.names) + yctx.names)
    wctx = yctx.union(rctx)
    s2 = second.rename_source(yctx)

    def rmono(alpha: tuple[int, ...]) -> Poly:
        mono = Poly.const(wctx, 1)
        for i, a in enumerate(alpha):
            if a:
                mono = mono * Poly.variable(wctx, rctx.names[i]) ** a
        return mono

    phase = s2.phase0.embed(wctx)
    for i, t in enumerate(s2.targets):
        phase = phase + t.embed(wctx) * Poly.variable(wctx, rctx.names[i])
    logamp = BiSeries.zero(trunc, wctx)
    for alpha, c in s2.ops.items():
        logamp = logamp + c.embed(wctx) * rmono(alpha)
    wave = WaveFunction(trunc, wctx, (WaveTerm(logamp.exp(), phase),))

    pulled = apply_operator(first, wave, target_vars=yctx.names)
    term = pulled.terms[0]
    out_ctx = pulled.ctx
    rpos = [out_ctx.index(name) for name in rctx.names]
    xpos = [out_ctx.index(name) for name in first.xctx.names]
    zero_alpha = (0,) * second.n2

    def organize(series: BiSeries) -> dict[tuple[int, ...], BiSeries]:
        grouped: dict[tuple[int, ...], dict[tuple[int, int], dict]] = {}
        for mj, p in series.coeffs.items():
            for exps, cval in p.iter_terms():
                alpha = tuple(exps[i] for i in rpos)
                xexps = tuple(exps[i] for i in xpos)
                grouped.setdefault(alpha, {}).setdefault(mj, {})[xexps] = cval
        return {alpha: BiSeries(trunc, first.xctx,
                                {mj: Poly(first.xctx, terms) for mj, terms in by.items()})
                for alpha, by in grouped.items()}

    phase_parts = organize(term.phase)
    for alpha in phase_parts:
        if sum(alpha) > 1:
            raise CompositionError("composite phase has higher momentum terms")
    ops = organize(term.amplitude.log())
    for alpha, c in ops.items():
        if any(j < -1 for _, j in c.coeffs):
            raise CompositionError(
                "composite operator coefficient has a pole deeper than 1/h; "
                "the composed generating function would not be hbar-regular")
    phase0 = phase_parts.get(zero_alpha, BiSeries.zero(trunc, first.xctx))
    targets = []
    for i in range(second.n2):
        e = [0] * second.n2
        e[i] = 1
        targets.append(phase_parts.get(tuple(e), BiSeries.zero(trunc, first.xctx)))
    return MorphismOperator(first.n1, second.n2, trunc, first.xctx,
                            phase0, targets, ops)


def compose(s1: GenFun, s2: GenFun) -> GenFun:
    """Composite generating function, truncated at momentum degree K.

    The coupling grades of the composite are collapsed, so the result is
    exact only as far as the coupling truncation reaches.
    """
    comp = compose_operators(MorphismOperator.from_genfun(s1),
                             MorphismOperator.from_genfun(s2))
    t = s1.trunc
    out: dict[tuple[int, ...], BiSeries] = {}

    def put(alpha, series):
        if sum(alpha) > t.K:
            return  # documented momentum-degree truncation of the composite
        if series.is_zero:
            return
        out[alpha] = out[alpha] + series if alpha in out else series

    put((0,) * comp.n2, comp.phase0)
    for i, tgt in enumerate(comp.targets):
        e = [0] * comp.n2
        e[i] = 1
        put(tuple(e), tgt)
    for alpha, c in comp.ops.items():
        # back to generating-function normalization: (h/i) * operator coefficient
        put(alpha, c.scale(MINUS_I).shift(0, 1).collapse_coupling())
    return GenFun(s1.n1, s2.n2, t, s1.xctx, out)


def matrix_inverse(matrix: Sequence[Sequence]) -> list[list[GaussRat]]:
    """Exact inverse by Gauss-Jordan elimination; raises MatrixError if singular."""
    n = len(matrix)
    aug = []
    for i, row in enumerate(matrix):
        if len(row) != n:
            raise MatrixError("matrix must be square")
        aug.append([GaussRat.coerce(v) for v in row]
                   + [ONE if k == i else ZERO for k in range(n)])
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col]), None)
        if pivot is None:
            raise MatrixError("singular matrix")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = aug[col][col].inverse()
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def linear_change(s: GenFun, matrix: Sequence[Sequence]) -> GenFun:
    """Target-coordinate change y = A y': the momenta transform by (A^-1)^T."""
    n = s.n2
    if len(matrix) != n or any(len(row) != n for row in matrix):
        raise MatrixError(f"matrix must be {n}x{n}")
    inv = matrix_inverse(matrix)
    cmat = [[inv[j][i] for j in range(n)] for i in range(n)]  # (A^-1)^T
    qctx = coords("q", n)
    images = []
    for i in range(n):
        img = Poly.zero(qctx)
        for j in range(n):
            img = img + Poly.variable(qctx, qctx.names[j]) * cmat[i][j]
        images.append(img)
    out: dict[tuple[int, ...], BiSeries] = {}
    for alpha, c in s.coeffs.items():
        expansion = Poly.const(qctx, 1)
        for i, a in enumerate(alpha):
            if a:
                expansion = expansion * images[i] ** a
        for exps, coeff in expansion.iter_terms():
            scaled = c.scale(coeff)
            out[exps] = out[exps] + scaled if exps in out else scaled
    out = {alpha: c for alpha, c in out.items() if not c.is_zero}
    return GenFun(s.n1, s.n2, s.trunc, s.xctx, out, q_bound=None)
