"""Generating functions of morphisms and the classical (hbar -> 0) pullback.

A generating function S(x, q) is stored by momentum multi-index: the
coefficient of q^alpha is an hbar-series of polynomials in the source
coordinates.  Decomposing by momentum degree gives the constant part S0(x),
the map part phi(x) (degree one), and the higher part (degree >= 2) whose
insertions carry the coupling grade.

The classical pullback of g along S solves the critical-point system

    q_i = dg/dy_i(y),    y_i = dS/dq_i(x, q)

by fixed-point iteration in the coupling-adic topology, with one factor of l
attached to every occurrence of the higher part, and returns the critical
value of S(x, q) + g(y) - y.q.
"""

from __future__ import annotations

from typing import Mapping

from .errors import (
    ConsistencyError,
    ContextError,
    DimensionError,
    GradingError,
    ValuationError,
)
from .exactring import Context, GaussRat, ONE, Poly, coords
from .biseries import BiSeries, Truncation, poly_eval


def _zero_alpha(n: int) -> tuple[int, ...]:
    return (0,) * n


class GenFun:
    """Quantum generating function: momentum multi-index -> hbar-series coefficient.

    Coefficients are BiSeries over the source-coordinate context with only
    nonnegative hbar powers.  User-level generating functions are free of the
    coupling grade; graded coefficients appear internally when the higher part
    is marked for insertion counting or when morphisms are composed.
    """

    __slots__ = ("n1", "n2", "trunc", "xctx", "coeffs")

    def __init__(self, n1: int, n2: int, trunc: Truncation, xctx: Context,
                 coeffs: Mapping[tuple[int, ...], BiSeries],
                 q_bound: int | str | None = "K"):
        if len(xctx) < n1:
            raise DimensionError(f"source context {xctx.names} smaller than n1={n1}")
        bound = trunc.K if q_bound == "K" else q_bound
        clean: dict[tuple[int, ...], BiSeries] = {}
        for alpha, c in coeffs.items():
            if len(alpha) != n2 or any(a < 0 for a in alpha):
                raise DimensionError(f"bad momentum multi-index {alpha} for n2={n2}")
            if bound is not None and sum(alpha) > bound:
                raise ValuationError(
                    f"momentum degree {sum(alpha)} exceeds bound K={bound}")
            if c.is_zero:
                continue
            if c.trunc != trunc or c.ctx != xctx:
                raise ContextError("coefficient series in wrong context or truncation")
            if not c.is_hbar_regular():
                raise GradingError("generating-function coefficients must be hbar-regular")
            clean[alpha] = c
        self.n1 = n1
        self.n2 = n2
        self.trunc = trunc
        self.xctx = xctx
        self.coeffs = clean

    # -- basic structure -----------------------------------------------------

    def is_coupling_free(self) -> bool:
        return all(m == 0 for c in self.coeffs.values() for m, _ in c.coeffs)

    def coefficient(self, alpha: tuple[int, ...]) -> BiSeries:
        return self.coeffs.get(alpha, BiSeries.zero(self.trunc, self.xctx))

    def decompose(self) -> tuple[BiSeries, tuple[BiSeries, ...], "GenFun"]:
        """Split into (constant part, map part, higher part), exactly."""
        zero = _zero_alpha(self.n2)
        s0 = self.coefficient(zero)
        phi = []
        for i in range(self.n2):
            e = [0] * self.n2
            e[i] = 1
            phi.append(self.coefficient(tuple(e)))
        higher = {a: c for a, c in self.coeffs.items() if sum(a) >= 2}
        return s0, tuple(phi), GenFun(self.n1, self.n2, self.trunc, self.xctx,
                                      higher, q_bound=None)

    def mark_higher(self) -> "GenFun":
        """Attach one coupling grade to every higher-part coefficient."""
        out = {}
        for alpha, c in self.coeffs.items():
            out[alpha] = c.shift(1, 0) if sum(alpha) >= 2 else c
        return GenFun(self.n1, self.n2, self.trunc, self.xctx, out, q_bound=None)

    def truncate(self, trunc: Truncation) -> "GenFun":
        """Re-truncate every coefficient (used to move to a working truncation)."""
        return GenFun(self.n1, self.n2, trunc, self.xctx,
                      {a: c.truncate(trunc) for a, c in self.coeffs.items()},
                      q_bound=None)

    def classical_limit(self) -> "ClassicalGenFun":
        """Drop all positive hbar powers; requires a coupling-free input."""
        if not self.is_coupling_free():
            raise GradingError("classical limit applies to ungraded generating functions")
        out = {}
        for alpha, c in self.coeffs.items():
            p = c.coefficient(0, 0)
            if not p.is_zero:
                out[alpha] = p
        return ClassicalGenFun(self.n1, self.n2, self.xctx, out)

    def __eq__(self, other):
        if not isinstance(other, GenFun):
            return NotImplemented
        return (self.n1 == other.n1 and self.n2 == other.n2
                and self.trunc == other.trunc and self.xctx == other.xctx
                and self.coeffs == other.coeffs)

    __hash__ = None

    def as_series(self, qprefix: str = "q") -> BiSeries:
        """The whole function as one series over coordinates plus momenta."""
        qctx = coords(qprefix, self.n2)
        joint = self.xctx.union(qctx)
        total = BiSeries.zero(self.trunc, joint)
        for alpha, c in self.coeffs.items():
            qmono = Poly.const(joint, 1)
            for i, a in enumerate(alpha):
                if a:
                    qmono = qmono * Poly.variable(joint, qctx.names[i]) ** a
            lifted = BiSeries(self.trunc, joint,
                              {mj: p.embed(joint) for mj, p in c.coeffs.items()})
            total = total + lifted * qmono
        return total

    def render(self, qprefix: str = "q") -> str:
        return self.as_series(qprefix).render()

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"GenFun({self.n1}->{self.n2}: {self.render()})"


def identity_genfun(n: int, trunc: Truncation, xctx: Context | None = None) -> GenFun:
    """The identity morphism: S(x, q) = x1 q1 + ... + xn qn."""
    xctx = xctx or coords("x", n)
    coeffs = {}
    for i in range(n):
        alpha = [0] * n
        alpha[i] = 1
        coeffs[tuple(alpha)] = BiSeries.from_poly(trunc, Poly.variable(xctx, xctx.names[i]))
    return GenFun(n, n, trunc, xctx, coeffs)


class ClassicalGenFun:
    """hbar-free generating function: momentum multi-index -> Poly coefficient."""

    __slots__ = ("n1", "n2", "xctx", "coeffs")

    def __init__(self, n1: int, n2: int, xctx: Context,
                 coeffs: Mapping[tuple[int, ...], Poly]):
        clean = {}
        for alpha, p in coeffs.items():
            if len(alpha) != n2 or any(a < 0 for a in alpha):
                raise DimensionError(f"bad momentum multi-index {alpha} for n2={n2}")
            if p.is_zero:
                continue
            if p.ctx != xctx:
                raise ContextError("coefficient polynomial in wrong context")
            clean[alpha] = p
        self.n1 = n1
        self.n2 = n2
        self.xctx = xctx
        self.coeffs = clean

    def coefficient(self, alpha: tuple[int, ...]) -> Poly:
        return self.coeffs.get(alpha, Poly.zero(self.xctx))

    def decompose(self) -> tuple[Poly, tuple[Poly, ...], dict[tuple[int, ...], Poly]]:
        s0 = self.coefficient(_zero_alpha(self.n2))
        phi = []
        for i in range(self.n2):
            e = [0] * self.n2
            e[i] = 1
            phi.append(self.coefficient(tuple(e)))
        higher = {a: p for a, p in self.coeffs.items() if sum(a) >= 2}
        return s0, tuple(phi), higher

    def extend_ctx(self, ctx: Context) -> "ClassicalGenFun":
        return ClassicalGenFun(self.n1, self.n2, ctx,
                               {a: p.embed(ctx) for a, p in self.coeffs.items()})

    def __eq__(self, other):
        if not isinstance(other, ClassicalGenFun):
            return NotImplemented
        return (self.n1 == other.n1 and self.n2 == other.n2
                and self.xctx == other.xctx and self.coeffs == other.coeffs)

    __hash__ = None

    def __str__(self):
        trunc = Truncation(0, 0, K=max((sum(a) for a in self.coeffs), default=1))
        lifted = {a: BiSeries.from_poly(trunc, p) for a, p in self.coeffs.items()}
        return GenFun(self.n1, self.n2, trunc, self.xctx, lifted, q_bound=None).render()


class _QPowers:
    """Cache of powers of the current momentum values during iteration."""

    def __init__(self, qvals: list[BiSeries]):
        self.qvals = qvals
        self.cache: dict[tuple[int, int], BiSeries] = {}

    def power(self, i: int, k: int) -> BiSeries:
        if k == 0:
            raise ValueError("zero power not cached")
        key = (i, k)
        if key not in self.cache:
            self.cache[key] = self.qvals[i] if k == 1 else self.power(i, k - 1) * self.qvals[i]
        return self.cache[key]

    def monomial(self, alpha: tuple[int, ...], trunc, ctx) -> BiSeries:
        out = BiSeries.one(trunc, ctx)
        for i, a in enumerate(alpha):
            if a:
                out = out * self.power(i, a)
        return out


def _eval_higher(higher: Mapping[tuple[int, ...], Poly], qp: _QPowers,
                 trunc: Truncation, ctx: Context) -> BiSeries:
    out = BiSeries.zero(trunc, ctx)
    for alpha, c in higher.items():
        out = out + qp.monomial(alpha, trunc, ctx) * c
    return out


def _eval_higher_gradient(higher: Mapping[tuple[int, ...], Poly], qp: _QPowers,
                          i: int, trunc: Truncation, ctx: Context) -> BiSeries:
    out = BiSeries.zero(trunc, ctx)
    for alpha, c in higher.items():
        a = alpha[i]
        if not a:
            continue
        down = list(alpha)
        down[i] -= 1
        out = out + qp.monomial(tuple(down), trunc, ctx) * (c * a)
    return out


def classical_pullback(s: ClassicalGenFun, g: Poly, trunc: Truncation) -> BiSeries:
    """Critical value of S(x, q) + g(y) - y.q, as a coupling-graded series.

    The first n2 variables of g's context are the target coordinates; any
    extras (such as a nilpotent direction) must exist by name in the source
    context and ride along untouched.  Iterates the critical-point system for
    M + 1 steps, updating y from the previous momenta and the momenta from the
    fresh y; each step is exact one grade higher, so the final step must be a
    no-op in the truncated ring.
    """
    n2 = s.n2
    ynames = g.ctx.names[:n2]
    if len(g.ctx) < n2:
        raise DimensionError(f"g has {len(g.ctx)} variables but target dimension is {n2}")
    extras = g.ctx.names[n2:]
    for name in extras:
        if name not in s.xctx:
            raise ContextError(f"extra variable {name!r} absent from source context")
    xctx = s.xctx
    s0, phi, higher = s.decompose()

    phi_bs = [BiSeries.from_poly(trunc, p.embed(xctx)) for p in phi]
    gdiff = [g.diff(name) for name in ynames]

    def momenta(yvals: list[BiSeries]) -> list[BiSeries]:
        values = {name: yv for name, yv in zip(ynames, yvals)}
        for name in extras:
            values[name] = BiSeries.from_poly(trunc, Poly.variable(xctx, name))
        cache: dict = {}
        return [poly_eval(d, values, trunc, xctx, cache) for d in gdiff]

    y = list(phi_bs)
    q = momenta(y)
    stable = False
    for _ in range(trunc.M + 1):
        qp = _QPowers(q)
        y_new = [phi_bs[i] + _eval_higher_gradient(higher, qp, i, trunc, xctx).shift(1, 0)
                 for i in range(n2)]
        q_new = momenta(y_new)
        if y_new == y and q_new == q:
            stable = True
            break
        y, q = y_new, q_new
    if not stable:
        raise ConsistencyError(
            "critical-point iteration did not stabilize within M + 1 steps")

    qp = _QPowers(q)
    values = {name: yv for name, yv in zip(ynames, y)}
    for name in extras:
        values[name] = BiSeries.from_poly(trunc, Poly.variable(xctx, name))
    f = BiSeries.from_poly(trunc, s0.embed(xctx))
    for i in range(n2):
        f = f + phi_bs[i] * q[i]
    f = f + _eval_higher(higher, qp, trunc, xctx).shift(1, 0)
    f = f + poly_eval(g, values, trunc, xctx)
    for i in range(n2):
        f = f - y[i] * q[i]
    return f


def gateaux_derivative(s: ClassicalGenFun, g: Poly, u: Poly,
                       trunc: Truncation) -> BiSeries:
    """Directional derivative of the pullback at g in direction u.

    Runs the pullback over the ring extended by a square-zero direction eps on
    input g + eps*u and reads off the eps coefficient.
    """
    if u.ctx != g.ctx:
        raise ContextError("direction must share g's context")
    if "eps" in g.ctx or "eps" in s.xctx:
        raise ContextError("variable name 'eps' is reserved for the derivative probe")
    yctx_e = g.ctx.extend("eps", cap=1)
    xctx_e = s.xctx.extend("eps", cap=1)
    eps = Poly.variable(yctx_e, "eps")
    ge = g.embed(yctx_e) + eps * u.embed(yctx_e)
    res = classical_pullback(s.extend_ctx(xctx_e), ge, trunc)
    out = {}
    for mj, p in res.coeffs.items():
        c = p.coeff_of("eps", 1)
        if not c.is_zero:
            out[mj] = c
    return BiSeries(trunc, s.xctx, out)
