"""Truncated series in a coupling grade and in hbar, with polynomial coefficients.

A BiSeries is a finite sum of terms l^m * h^j * p(vars) where l tracks the
coupling grade (one power per insertion of the higher part of a generating
function), h is Planck's constant, and p is an exact Poly.  The grade support
is bounded by the shared Truncation: 0 <= m <= M and -m <= j <= J - m.
Negative hbar powers are allowed but the pole depth never exceeds the
coupling grade, which is enforced on every constructor; hbar-regularity of
final exponents is a theorem to be checked, not a type constraint.

The hbar ceiling descends with the coupling grade for the same reason the
pole bound ascends with it: the discarded grades {j > J - m} are then closed
under multiplication by every legal element (whose hbar valuation is at least
minus its coupling grade), i.e. they form an ideal.  Quotienting by an ideal
is what makes truncated multiplication associative and evaluation-order
independent; with a flat ceiling at J, a product could overflow the ceiling
and be discarded even though a later pole factor would have brought it back
into range, and parenthesization would change the answer.  Truncation is a
ring congruence: computing at larger orders and then discarding agrees with
computing in the truncated ring throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .errors import (
    ContextError,
    DegreeGuardError,
    GradingError,
    TruncationError,
    ValuationError,
)
from .exactring import Context, GaussRat, ONE, Poly, join_terms, monomial_str


@dataclass(frozen=True)
class Truncation:
    """Shared truncation orders: coupling grade M, hbar order J, momentum degree K.

    D, when set, caps the total degree of every coefficient polynomial;
    exceeding it raises DegreeGuardError rather than silently truncating.
    """

    M: int
    J: int
    K: int = 1
    D: int | None = None

    def __post_init__(self):
        if self.M < 0 or self.J < 0:
            raise TruncationError("truncation orders must be nonnegative")
        if self.K < 1:
            raise TruncationError("momentum degree bound K must be at least 1")
        if self.D is not None and self.D < 0:
            raise TruncationError("degree guard D must be nonnegative")


class BiSeries:
    """Finite bigraded sum with Poly coefficients; immutable after construction."""

    __slots__ = ("trunc", "ctx", "coeffs")

    def __init__(self, trunc: Truncation, ctx: Context,
                 coeffs: Mapping[tuple[int, int], Poly] | None = None):
        clean: dict[tuple[int, int], Poly] = {}
        for (m, j), p in (coeffs or {}).items():
            if p.ctx != ctx:
                raise ContextError("coefficient polynomial in wrong context")
            if p.is_zero:
                continue
            if m < 0 or m > trunc.M or j > trunc.J - m:
                continue  # beyond the retained grades
            if j < -m:
                raise GradingError(f"bigrade (m={m}, j={j}) violates the pole bound j >= -m")
            if trunc.D is not None and p.degree() > trunc.D:
                raise DegreeGuardError(
                    f"coefficient degree {p.degree()} exceeds guard D={trunc.D}")
            clean[(m, j)] = p
        self.trunc = trunc
        self.ctx = ctx
        self.coeffs = clean

    # -- constructors ------------------------------------------------------

    @staticmethod
    def _make(trunc: Truncation, ctx: Context, coeffs: dict) -> "BiSeries":
        # fast path: grades in range, no zero polys, pole bound holds by construction
        if trunc.D is not None:
            for p in coeffs.values():
                if p.degree() > trunc.D:
                    raise DegreeGuardError(
                        f"coefficient degree {p.degree()} exceeds guard D={trunc.D}")
        b = object.__new__(BiSeries)
        b.trunc = trunc
        b.ctx = ctx
        b.coeffs = coeffs
        return b

    @classmethod
    def zero(cls, trunc: Truncation, ctx: Context) -> "BiSeries":
        return cls(trunc, ctx)

    @classmethod
    def const(cls, trunc: Truncation, ctx: Context, value) -> "BiSeries":
        return cls(trunc, ctx, {(0, 0): Poly.const(ctx, value)})

    @classmethod
    def one(cls, trunc: Truncation, ctx: Context) -> "BiSeries":
        return cls.const(trunc, ctx, 1)

    @classmethod
    def from_poly(cls, trunc: Truncation, p: Poly, m: int = 0, j: int = 0) -> "BiSeries":
        return cls(trunc, p.ctx, {(m, j): p})

    @classmethod
    def hbar(cls, trunc: Truncation, ctx: Context, j: int = 1) -> "BiSeries":
        return cls(trunc, ctx, {(0, j): Poly.const(ctx, 1)})

    @classmethod
    def coupling(cls, trunc: Truncation, ctx: Context, m: int = 1) -> "BiSeries":
        return cls(trunc, ctx, {(m, 0): Poly.const(ctx, 1)})

    # -- predicates and accessors ------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def coefficient(self, m: int, j: int) -> Poly:
        return self.coeffs.get((m, j), Poly.zero(self.ctx))

    def support(self) -> list[tuple[int, int]]:
        return sorted(self.coeffs)

    def is_hbar_regular(self) -> bool:
        """True when no negative hbar powers occur."""
        return all(j >= 0 for _, j in self.coeffs)

    def coupling_valuation(self) -> int:
        """Smallest coupling grade present; M + 1 for the zero series."""
        return min((m for m, _ in self.coeffs), default=self.trunc.M + 1)

    # -- grade filtering -----------------------------------------------------

    def part(self, keep: Callable[[int, int], bool]) -> "BiSeries":
        return BiSeries(self.trunc, self.ctx,
                        {mj: p for mj, p in self.coeffs.items() if keep(*mj)})

    def grade_zero_part(self) -> "BiSeries":
        return self.part(lambda m, j: m == 0)

    def grade_positive_part(self) -> "BiSeries":
        return self.part(lambda m, j: m > 0)

    def hbar_zero_part(self) -> "BiSeries":
        return self.part(lambda m, j: j == 0)

    def collapse_coupling(self) -> "BiSeries":
        """Set the coupling grade to 1, summing all m into m = 0.

        Only legal for hbar-regular series (otherwise poles would land at
        grade zero, which the ring cannot hold).
        """
        if not self.is_hbar_regular():
            raise GradingError("cannot collapse an hbar-irregular series")
        out: dict[tuple[int, int], Poly] = {}
        for (m, j), p in self.coeffs.items():
            key = (0, j)
            out[key] = out[key] + p if key in out else p
        return BiSeries(self.trunc, self.ctx, out)

    def truncate(self, trunc: Truncation) -> "BiSeries":
        """Re-truncate to different orders (used to test the ring congruence)."""
        return BiSeries(trunc, self.ctx,
                        {(m, j): p for (m, j), p in self.coeffs.items()
                         if m <= trunc.M and j <= trunc.J - m})

    def embed(self, ctx: Context) -> "BiSeries":
        """Re-express every coefficient in a larger context."""
        if ctx == self.ctx:
            return self
        return BiSeries(self.trunc, ctx,
                        {mj: p.embed(ctx) for mj, p in self.coeffs.items()})

    def project(self, ctx: Context) -> "BiSeries":
        return BiSeries(self.trunc, ctx,
                        {mj: p.project(ctx) for mj, p in self.coeffs.items()})

    # -- arithmetic ----------------------------------------------------------

    def _check(self, other: "BiSeries"):
        if self.trunc != other.trunc:
            raise TruncationError("mismatched truncations")
        if self.ctx != other.ctx:
            raise ContextError("mismatched contexts")

    def __add__(self, other):
        if not isinstance(other, BiSeries):
            other = BiSeries.const(self.trunc, self.ctx, other)
        self._check(other)
        out = dict(self.coeffs)
        for mj, p in other.coeffs.items():
            if mj in out:
                s = out[mj] + p
                if s.terms:
                    out[mj] = s
                else:
                    del out[mj]
            else:
                out[mj] = p
        return BiSeries._make(self.trunc, self.ctx, out)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, BiSeries):
            other = BiSeries.const(self.trunc, self.ctx, other)
        return self + (-other)

    def __neg__(self):
        return BiSeries._make(self.trunc, self.ctx,
                              {mj: -p for mj, p in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, Poly):
            other = BiSeries.from_poly(self.trunc, other)
        if not isinstance(other, BiSeries):
            return self.scale(other)
        self._check(other)
        M, J = self.trunc.M, self.trunc.J
        # fused accumulation: per-bigrade buckets of packed monomial keys
        buckets: dict[tuple[int, int], dict[int, GaussRat]] = {}
        for (m1, j1), p1 in self.coeffs.items():
            t1 = p1.terms
            for (m2, j2), p2 in other.coeffs.items():
                m = m1 + m2
                if m > M:
                    continue
                j = j1 + j2
                if j > J - m:
                    continue
                bucket = buckets.get((m, j))
                if bucket is None:
                    bucket = buckets[(m, j)] = {}
                for k1, c1 in t1.items():
                    for k2, c2 in p2.terms.items():
                        k = k1 + k2
                        prev = bucket.get(k)
                        bucket[k] = c1 * c2 if prev is None else prev + c1 * c2
        cap_items = self.ctx._cap_items
        out: dict[tuple[int, int], Poly] = {}
        for mj, bucket in buckets.items():
            if cap_items:
                from .exactring import _BITS, _MASK
                bucket = {k: c for k, c in bucket.items()
                          if all((k >> (_BITS * i)) & _MASK <= cap for i, cap in cap_items)}
            clean = {k: c for k, c in bucket.items() if c.re or c.im}
            if clean:
                out[mj] = Poly._make(self.ctx, clean)
        return BiSeries._make(self.trunc, self.ctx, out)

    __rmul__ = __mul__

    def scale(self, value) -> "BiSeries":
        c = GaussRat.coerce(value)
        if not c:
            return BiSeries.zero(self.trunc, self.ctx)
        return BiSeries._make(self.trunc, self.ctx,
                              {mj: p * c for mj, p in self.coeffs.items()})

    def shift(self, dm: int, dj: int) -> "BiSeries":
        """Multiply by l^dm * h^dj; grades pushed past the ceiling are discarded."""
        out = {}
        for (m, j), p in self.coeffs.items():
            m2, j2 = m + dm, j + dj
            if m2 > self.trunc.M or j2 > self.trunc.J - m2:
                continue
            if j2 < -m2:
                raise GradingError(
                    f"shift to (m={m2}, j={j2}) violates the pole bound j >= -m")
            out[(m2, j2)] = p
        return BiSeries._make(self.trunc, self.ctx, out)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("series powers must be nonnegative integers")
        out = BiSeries.one(self.trunc, self.ctx)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def diff(self, name: str) -> "BiSeries":
        out = {}
        for mj, p in self.coeffs.items():
            d = p.diff(name)
            if d.terms:
                out[mj] = d
        return BiSeries._make(self.trunc, self.ctx, out)

    def __eq__(self, other):
        if not isinstance(other, BiSeries):
            return NotImplemented
        return (self.trunc == other.trunc and self.ctx == other.ctx
                and self.coeffs == other.coeffs)

    __hash__ = None

    # -- exponential and logarithm -------------------------------------------

    def exp(self) -> "BiSeries":
        """Sum of self**m / m! for m <= M; requires coupling valuation >= 1."""
        if self.coupling_valuation() < 1:
            raise ValuationError("exp requires coupling valuation >= 1 (no grade-0 terms)")
        acc = BiSeries.one(self.trunc, self.ctx)
        term = acc
        for p in range(1, self.trunc.M + 1):
            term = (term * self).scale(Fraction(1, p))
            if term.is_zero:
                break
            acc = acc + term
        return acc

    def log(self) -> "BiSeries":
        """Mercator series of 1 + X with X of coupling valuation >= 1."""
        x = self - BiSeries.one(self.trunc, self.ctx)
        if x.coupling_valuation() < 1:
            raise ValuationError("log requires constant term 1 plus coupling valuation >= 1")
        acc = BiSeries.zero(self.trunc, self.ctx)
        power = BiSeries.one(self.trunc, self.ctx)
        for p in range(1, self.trunc.M + 1):
            power = power * x
            if power.is_zero:
                break
            acc = acc + power.scale(Fraction((-1) ** (p + 1), p))
        return acc

    # -- rendering -----------------------------------------------------------

    def render(self) -> str:
        """Canonical form: terms sorted by (m, j, graded-lex monomial)."""
        items = []
        for (m, j) in sorted(self.coeffs):
            grades = []
            if m:
                grades.append("l" if m == 1 else f"l^{m}")
            if j:
                grades.append("h" if j == 1 else f"h^{j}")
            for exps, c in self.coeffs[(m, j)].sorted_terms():
                items.append((c, grades, monomial_str(self.ctx, exps)))
        return join_terms(items)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"BiSeries({self.render()})"


def _eval_into(p: Poly, dm: int, dj: int, values: Mapping[str, BiSeries],
               trunc: Truncation, ctx: Context, cache: dict,
               acc: dict[tuple[int, int], dict]) -> None:
    """Accumulate l^dm h^dj * p(values) into per-bigrade coefficient buckets."""
    from .exactring import _BITS, _MASK
    M, J = trunc.M, trunc.J

    def monomial(key: int) -> BiSeries:
        got = cache.get(key)
        if got is not None:
            return got
        # strip the lowest live variable and recurse on the remainder
        i = 0
        k = key
        while not (k & _MASK):
            k >>= _BITS
            i += 1
        e = k & _MASK
        base = values[p.ctx.names[i]]
        if e == 1 and key == e << (_BITS * i):
            out = base
        else:
            out = monomial(key - (1 << (_BITS * i))) * base
        cache[key] = out
        return out

    for key, c in p.terms.items():
        if key == 0:
            if dm > M or dj > J - dm:
                continue
            bucket = acc.get((dm, dj))
            if bucket is None:
                bucket = acc[(dm, dj)] = {}
            prev = bucket.get(0)
            bucket[0] = c if prev is None else prev + c
            continue
        for (m, j), poly in monomial(key).coeffs.items():
            m2, j2 = m + dm, j + dj
            if m2 > M or j2 > J - m2:
                continue
            bucket = acc.get((m2, j2))
            if bucket is None:
                bucket = acc[(m2, j2)] = {}
            for k2, c2 in poly.terms.items():
                prev = bucket.get(k2)
                v = c * c2
                bucket[k2] = v if prev is None else prev + v


def _build_from_buckets(trunc: Truncation, ctx: Context,
                        acc: dict[tuple[int, int], dict]) -> BiSeries:
    cap_items = ctx._cap_items
    out = {}
    for mj, bucket in acc.items():
        if cap_items:
            from .exactring import _BITS, _MASK
            bucket = {k: c for k, c in bucket.items()
                      if all((k >> (_BITS * i)) & _MASK <= cap for i, cap in cap_items)}
        clean = {k: c for k, c in bucket.items() if c.re or c.im}
        if clean:
            out[mj] = Poly._make(ctx, clean)
    return BiSeries._make(trunc, ctx, out)


def _check_values(p: Poly, values: Mapping[str, BiSeries], trunc: Truncation,
                  ctx: Context) -> None:
    for name in p.ctx.names:
        if name not in values:
            raise ContextError(f"no value supplied for variable {name!r}")
        v = values[name]
        if v.trunc != trunc or v.ctx != ctx:
            raise ContextError(f"value for {name!r} has wrong context or truncation")


def poly_eval(p: Poly, values: Mapping[str, BiSeries], trunc: Truncation,
              ctx: Context, cache: dict | None = None) -> BiSeries:
    """Evaluate a polynomial at BiSeries values, one per variable of its context.

    This is the ring homomorphism defined on generators; it is how polynomial
    data is pushed through substitutions whose images are series.  A cache
    dict may be shared across evaluations against the same values and context;
    it memoizes whole monomial products.
    """
    _check_values(p, values, trunc, ctx)
    if cache is None:
        cache = {}
    acc: dict[tuple[int, int], dict] = {}
    _eval_into(p, 0, 0, values, trunc, ctx, cache, acc)
    return _build_from_buckets(trunc, ctx, acc)


def series_eval(b: BiSeries, values: Mapping[str, BiSeries], trunc: Truncation,
                ctx: Context, cache: dict | None = None) -> BiSeries:
    """Evaluate every coefficient of b and reattach its l^m h^j prefactor."""
    if cache is None:
        cache = {}
    acc: dict[tuple[int, int], dict] = {}
    for (m, j), p in b.coeffs.items():
        _check_values(p, values, trunc, ctx)
        _eval_into(p, m, j, values, trunc, ctx, cache, acc)
    return _build_from_buckets(trunc, ctx, acc)


def identity_values(ctx: Context, trunc: Truncation) -> dict[str, BiSeries]:
    """Each variable mapped to itself, as series values."""
    return {name: BiSeries.from_poly(trunc, Poly.variable(ctx, name))
            for name in ctx.names}
