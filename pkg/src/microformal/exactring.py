"""Exact coefficient field and sparse multivariate polynomials.

Coefficients are Gaussian rationals (re + i*im with Fraction parts), so the
imaginary unit lives directly in the ground field.  Polynomials are sparse
dicts over an explicit, ordered variable context; exponent vectors are packed
into single integers (16 bits per variable) so that monomial products are
integer additions.  All values are immutable after construction and results
are always canonical: no zero coefficients are stored and printing uses a
fixed graded-lexicographic term order, so equal values print identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .errors import ContextError

try:  # gmpy2's C-implemented rationals are 10-30x faster than Fraction
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover - exercised only without gmpy2
    _Q = Fraction

_F0 = _Q(0)

# exponent packing: variable i occupies bits [16*i, 16*(i+1))
_BITS = 16
_MASK = (1 << _BITS) - 1

_RAT_TYPES = (int, Fraction, type(_F0))


class GaussRat:
    """Gaussian rational re + i*im, with exact rational components."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is type(_F0) else _Q(re)
        self.im = im if type(im) is type(_F0) else _Q(im)

    @staticmethod
    def _new(re, im) -> "GaussRat":
        g = object.__new__(GaussRat)
        g.re = re
        g.im = im
        return g

    @staticmethod
    def coerce(value) -> "GaussRat":
        if isinstance(value, GaussRat):
            return value
        if isinstance(value, _RAT_TYPES):
            return GaussRat(value)
        raise TypeError(f"cannot coerce {value!r} to GaussRat")

    def conjugate(self) -> "GaussRat":
        return GaussRat._new(self.re, -self.im)

    def inverse(self) -> "GaussRat":
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("division by zero GaussRat")
        return GaussRat._new(self.re / n, -self.im / n)

    def __add__(self, other):
        o = other if isinstance(other, GaussRat) else GaussRat.coerce(other)
        return GaussRat._new(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = other if isinstance(other, GaussRat) else GaussRat.coerce(other)
        return GaussRat._new(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussRat.coerce(other) - self

    def __mul__(self, other):
        o = other if isinstance(other, GaussRat) else GaussRat.coerce(other)
        a, b = self.re, self.im
        c, d = o.re, o.im
        if not b:  # frequent special shapes: avoid needless rational work
            if not d:
                return GaussRat._new(a * c, _F0)
            return GaussRat._new(a * c, a * d)
        if not d:
            return GaussRat._new(a * c, b * c)
        return GaussRat._new(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * GaussRat.coerce(other).inverse()

    def __rtruediv__(self, other):
        return GaussRat.coerce(other) * self.inverse()

    def __neg__(self):
        return GaussRat._new(-self.re, -self.im)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("GaussRat powers must be nonnegative integers")
        out = ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        try:
            o = GaussRat.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __repr__(self):
        return f"GaussRat({self.re}, {self.im})"

    def __str__(self):
        return coeff_str(self)


ZERO = GaussRat(0)
ONE = GaussRat(1)
I = GaussRat(0, 1)
MINUS_I = GaussRat(0, -1)


def _imag_str(r) -> str:
    if r == 1:
        return "i"
    if r == -1:
        return "-i"
    return f"{r}i"


def coeff_str(c: GaussRat) -> str:
    """Canonical rendering: `3/2`, `-2`, `i`, `1/2i`, `(3/2 + 1/2i)`, `(3/2 - i)`."""
    if c.im == 0:
        return str(c.re)
    if c.re == 0:
        return _imag_str(c.im)
    sign = " + " if c.im > 0 else " - "
    return f"({c.re}{sign}{_imag_str(abs(c.im))})"


@dataclass(frozen=True)
class Context:
    """Ordered set of variable names, with optional per-variable degree caps.

    Caps realize nilpotent extensions (a variable capped at 1 squares to zero);
    monomials exceeding a cap are dropped during canonicalization.
    """

    names: tuple[str, ...]
    caps: tuple[int | None, ...] = ()

    def __post_init__(self):
        if not self.caps:
            object.__setattr__(self, "caps", (None,) * len(self.names))
        if len(self.caps) != len(self.names):
            raise ContextError("caps and names must have equal length")
        if len(set(self.names)) != len(self.names):
            raise ContextError(f"duplicate variable names in {self.names}")
        object.__setattr__(self, "_cap_items",
                           tuple((i, c) for i, c in enumerate(self.caps) if c is not None))

    def __len__(self):
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ContextError(f"unknown variable {name!r} in context {self.names}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def extend(self, name: str, cap: int | None = None) -> "Context":
        return Context(self.names + (name,), self.caps + (cap,))

    def union(self, other: "Context") -> "Context":
        names = list(self.names)
        caps = list(self.caps)
        for n, c in zip(other.names, other.caps):
            if n not in names:
                names.append(n)
                caps.append(c)
        return Context(tuple(names), tuple(caps))

    def without(self, drop: Iterable[str]) -> "Context":
        dropset = set(drop)
        keep = [(n, c) for n, c in zip(self.names, self.caps) if n not in dropset]
        return Context(tuple(n for n, _ in keep), tuple(c for _, c in keep))


def coords(prefix: str, n: int) -> Context:
    """Context of n numbered coordinates: coords('x', 2) -> x1, x2."""
    return Context(tuple(f"{prefix}{k}" for k in range(1, n + 1)))


def _grlex_key(exps: tuple[int, ...]):
    # descending graded-lex: higher total degree first, then lexicographic
    return (-sum(exps), tuple(-e for e in exps))


def monomial_str(ctx: Context, exps: tuple[int, ...]) -> str:
    parts = []
    for name, e in zip(ctx.names, exps):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def join_terms(terms: Iterable[tuple[GaussRat, list[str], str]]) -> str:
    """Render a sum of terms, each given as (coefficient, grade factors, monomial).

    The sign of purely real or purely imaginary coefficients is pulled out into
    the joining +/- so output reads like ordinary algebra.
    """
    rendered = []
    for c, grades, mono in terms:
        neg = (c.im == 0 and c.re < 0) or (c.re == 0 and c.im < 0)
        mag = -c if neg else c
        parts = list(grades)
        if mag != ONE or (not parts and not mono):
            parts.append(coeff_str(mag))
        if mono:
            parts.append(mono)
        rendered.append((neg, "*".join(parts)))
    if not rendered:
        return "0"
    first_neg, first_body = rendered[0]
    out = ("-" if first_neg else "") + first_body
    for neg, body in rendered[1:]:
        out += (" - " if neg else " + ") + body
    return out


def pack_exponents(exps: Iterable[int]) -> int:
    key = 0
    shift = 0
    for e in exps:
        key |= e << shift
        shift += _BITS
    return key


def unpack_exponents(key: int, nvars: int) -> tuple[int, ...]:
    return tuple((key >> (_BITS * i)) & _MASK for i in range(nvars))


class Poly:
    """Sparse multivariate polynomial over GaussRat in a fixed context.

    Terms are stored as a dict from packed exponent keys to coefficients;
    use iter_terms()/sorted_terms() for decoded exponent tuples.
    """

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: Context, terms: Mapping[tuple[int, ...], GaussRat] | None = None):
        clean: dict[int, GaussRat] = {}
        nvars = len(ctx)
        caps = ctx.caps
        for exps, c in (terms or {}).items():
            if len(exps) != nvars:
                raise ContextError(f"exponent tuple {exps} has wrong arity for {ctx.names}")
            if any(e < 0 for e in exps):
                raise ContextError(f"negative exponent in {exps}")
            c = GaussRat.coerce(c)
            if not c:
                continue
            if any(cap is not None and e > cap for e, cap in zip(exps, caps)):
                continue  # nilpotent variable: monomial is zero in the quotient
            key = pack_exponents(exps)
            prev = clean.get(key)
            c = c if prev is None else prev + c
            if c:
                clean[key] = c
            elif key in clean:
                del clean[key]
        self.ctx = ctx
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @staticmethod
    def _make(ctx: Context, terms: dict) -> "Poly":
        # fast path: terms already packed and canonical
        p = object.__new__(Poly)
        p.ctx = ctx
        p.terms = terms
        return p

    @classmethod
    def zero(cls, ctx: Context) -> "Poly":
        return cls._make(ctx, {})

    @classmethod
    def const(cls, ctx: Context, value) -> "Poly":
        c = GaussRat.coerce(value)
        return cls._make(ctx, {0: c} if c else {})

    @classmethod
    def variable(cls, ctx: Context, name: str) -> "Poly":
        idx = ctx.index(name)
        return cls._make(ctx, {1 << (_BITS * idx): ONE})

    # -- predicates --------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self) -> bool:
        return all(k == 0 for k in self.terms)

    def constant_value(self) -> GaussRat:
        return self.terms.get(0, ZERO)

    def coefficient(self, exps: tuple[int, ...]) -> GaussRat:
        return self.terms.get(pack_exponents(exps), ZERO)

    def degree(self) -> int:
        """Total degree; 0 for the zero polynomial."""
        nvars = len(self.ctx)
        return max((sum(unpack_exponents(k, nvars)) for k in self.terms), default=0)

    # -- arithmetic --------------------------------------------------------

    def _check(self, other: "Poly"):
        if self.ctx != other.ctx:
            raise ContextError(f"mismatched contexts {self.ctx.names} vs {other.ctx.names}")

    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(self.ctx, other)
        self._check(other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            prev = out.get(key)
            if prev is None:
                out[key] = c
                continue
            s = prev + c
            if s.re or s.im:
                out[key] = s
            else:
                del out[key]
        return Poly._make(self.ctx, out)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(self.ctx, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Poly._make(self.ctx, {k: -c for k, c in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Poly):
            c = GaussRat.coerce(other)
            if not c:
                return Poly._make(self.ctx, {})
            return Poly._make(self.ctx, {k: v * c for k, v in self.terms.items()})
        self._check(other)
        out: dict[int, GaussRat] = {}
        t2 = other.terms
        for k1, c1 in self.terms.items():
            for k2, c2 in t2.items():
                k = k1 + k2
                prev = out.get(k)
                out[k] = c1 * c2 if prev is None else prev + c1 * c2
        cap_items = self.ctx._cap_items
        if cap_items:
            out = {k: c for k, c in out.items()
                   if all((k >> (_BITS * i)) & _MASK <= cap for i, cap in cap_items)}
        return Poly._make(self.ctx, {k: c for k, c in out.items() if c.re or c.im})

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        out = Poly.const(self.ctx, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    __hash__ = None  # mutable dict inside; polynomials are not dict keys

    # -- calculus and substitution ----------------------------------------

    def diff(self, name: str) -> "Poly":
        """Exact formal partial derivative."""
        shift = _BITS * self.ctx.index(name)
        out: dict[int, GaussRat] = {}
        for key, c in self.terms.items():
            k = (key >> shift) & _MASK
            if k == 0:
                continue
            out[key - (1 << shift)] = c * k
        return Poly._make(self.ctx, out)

    def substitute(self, images: Mapping[str, "Poly"], ctx: Context | None = None) -> "Poly":
        """Evaluate under variable -> Poly images (a ring homomorphism).

        Every variable actually occurring must have an image; all images must
        share the target context.
        """
        if ctx is None:
            if not images:
                raise ContextError("substitution needs images or an explicit target context")
            ctx = next(iter(images.values())).ctx
        for name, img in images.items():
            if img.ctx != ctx:
                raise ContextError(f"image of {name!r} lives in a different context")
        nvars = len(self.ctx)
        live = {i for k in self.terms for i in range(nvars) if (k >> (_BITS * i)) & _MASK}
        missing = [self.ctx.names[i] for i in sorted(live) if self.ctx.names[i] not in images]
        if missing:
            raise ContextError(f"missing substitution image for {missing}")
        powers: dict[tuple[int, int], Poly] = {}

        def power(i: int, k: int) -> Poly:
            cached = powers.get((i, k))
            if cached is None:
                cached = images[self.ctx.names[i]] ** k
                powers[(i, k)] = cached
            return cached

        out = Poly.zero(ctx)
        for key, c in self.terms.items():
            term = Poly.const(ctx, c)
            i = 0
            k = key
            while k:
                e = k & _MASK
                if e:
                    term = term * power(i, e)
                k >>= _BITS
                i += 1
            out = out + term
        return out

    # -- context plumbing --------------------------------------------------

    def _remap(self, ctx: Context, pos: list[int]) -> "Poly":
        nvars = len(self.ctx)
        out = {}
        for key, c in self.terms.items():
            nk = 0
            i = 0
            k = key
            while k:
                e = k & _MASK
                if e:
                    nk |= e << (_BITS * pos[i])
                k >>= _BITS
                i += 1
            out[nk] = c
        return Poly._make(ctx, out)

    def embed(self, ctx: Context) -> "Poly":
        """Re-express in a larger context containing all my variables (by name)."""
        if ctx == self.ctx:
            return self
        return self._remap(ctx, [ctx.index(name) for name in self.ctx.names])

    def project(self, ctx: Context) -> "Poly":
        """Drop variables absent from ctx; they must not occur in any term."""
        pos = []
        for i, name in enumerate(self.ctx.names):
            if name in ctx:
                pos.append(ctx.index(name))
            else:
                shift = _BITS * i
                if any((k >> shift) & _MASK for k in self.terms):
                    raise ContextError(f"variable {name!r} still occurs; cannot project")
                pos.append(0)  # unused slot; exponent is always zero
        return self._remap(ctx, pos)

    def rename(self, ctx: Context) -> "Poly":
        """Positional relabeling onto a context of the same arity."""
        if len(ctx) != len(self.ctx):
            raise ContextError("rename requires equal arity")
        return Poly._make(ctx, dict(self.terms))

    def coeff_of(self, name: str, k: int) -> "Poly":
        """Coefficient of name**k, as a polynomial in the remaining variables."""
        idx = self.ctx.index(name)
        shift = _BITS * idx
        sub = self.ctx.without([name])
        pos = [sub.index(n) if n in sub else 0 for n in self.ctx.names]
        out = {}
        for key, c in self.terms.items():
            if (key >> shift) & _MASK != k:
                continue
            rest = key & ~(_MASK << shift)
            nk = 0
            i = 0
            kk = rest
            while kk:
                e = kk & _MASK
                if e:
                    nk |= e << (_BITS * pos[i])
                kk >>= _BITS
                i += 1
            out[nk] = c
        return Poly._make(sub, out)

    # -- rendering ---------------------------------------------------------

    def iter_terms(self) -> Iterator[tuple[tuple[int, ...], GaussRat]]:
        nvars = len(self.ctx)
        for key, c in self.terms.items():
            yield unpack_exponents(key, nvars), c

    def sorted_terms(self) -> Iterator[tuple[tuple[int, ...], GaussRat]]:
        nvars = len(self.ctx)
        decoded = {unpack_exponents(k, nvars): c for k, c in self.terms.items()}
        for exps in sorted(decoded, key=_grlex_key):
            yield exps, decoded[exps]

    def __str__(self):
        return join_terms(
            (c, [], monomial_str(self.ctx, exps)) for exps, c in self.sorted_terms()
        )

    def __repr__(self):
        return f"Poly[{','.join(self.ctx.names)}]({self})"
