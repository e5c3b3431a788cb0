"""Truncated polynomial rings on even-degree generators with exact rational coefficients.

Every characteristic-class expression in the package is a :class:`GradedPoly`.
Generators carry a cohomological degree (always even, so the ring is
commutative) and every ring has a truncation degree above which monomials are
discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .expr import ExprError, evaluate, format_fraction, parse_expr

DEFAULT_TRUNCATION = 16

Scalar = Union[int, Fraction]
Exponents = tuple[int, ...]


class RingMismatchError(ValueError):
    pass


class GradingError(ValueError):
    pass


class NotAUnitError(ValueError):
    pass


@dataclass(frozen=True)
class Generator:
    name: str
    degree: int

    def __post_init__(self):
        if not self.name.isidentifier():
            raise ValueError(f"generator name {self.name!r} is not an identifier")
        if self.degree < 2 or self.degree % 2:
            raise GradingError(
                f"generator {self.name} has degree {self.degree}; need even degree >= 2"
            )


class GradedRing:
    """Polynomial ring over Q on named generators, truncated above ``truncation``.

    >>> R = GradedRing([("x", 2)], truncation=4)
    >>> str((R.one() + R.gen("x")) ** 2)
    '1 + 2*x + x^2'
    """

    def __init__(
        self,
        generators: Iterable[Union[Generator, tuple[str, int]]],
        truncation: int = DEFAULT_TRUNCATION,
    ):
        gens = tuple(g if isinstance(g, Generator) else Generator(*g) for g in generators)
        names = [g.name for g in gens]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate generator names in {names}")
        if truncation < 0:
            raise ValueError("truncation degree must be non-negative")
        self.generators = gens
        self.truncation = truncation
        self.degrees = tuple(g.degree for g in gens)
        self._index = {g.name: i for i, g in enumerate(gens)}

    def __eq__(self, other):
        return (
            isinstance(other, GradedRing)
            and self.generators == other.generators
            and self.truncation == other.truncation
        )

    def __hash__(self):
        return hash((self.generators, self.truncation))

    def __repr__(self):
        gens = ", ".join(f"{g.name}:{g.degree}" for g in self.generators)
        return f"GradedRing([{gens}], truncation={self.truncation})"

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.generators)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"no generator named {name!r} in {self!r}") from None

    def has(self, name: str) -> bool:
        return name in self._index

    def degree_of(self, exps: Exponents) -> int:
        return sum(e * d for e, d in zip(exps, self.degrees))

    def zero(self) -> "GradedPoly":
        return GradedPoly(self, {})

    def one(self) -> "GradedPoly":
        return self.const(1)

    def const(self, value: Scalar) -> "GradedPoly":
        return GradedPoly(self, {(0,) * len(self.generators): Fraction(value)})

    def gen(self, name: str) -> "GradedPoly":
        exps = [0] * len(self.generators)
        exps[self.index(name)] = 1
        return GradedPoly(self, {tuple(exps): Fraction(1)})

    def gens(self) -> list["GradedPoly"]:
        return [self.gen(n) for n in self.names]

    def monomial(self, exponents: Mapping[str, int], coeff: Scalar = 1) -> "GradedPoly":
        exps = [0] * len(self.generators)
        for name, e in exponents.items():
            exps[self.index(name)] = e
        return GradedPoly(self, {tuple(exps): Fraction(coeff)})

    def parse(self, text: str) -> "GradedPoly":
        """Parse ``text`` such as ``"c1^2 - 2*c2"`` into a polynomial of this ring."""

        def name(ident: str, col: int) -> GradedPoly:
            if ident not in self._index:
                raise ExprError(f"unknown generator {ident!r}", col)
            return self.gen(ident)

        return evaluate(parse_expr(text), self.const, name)

    def with_truncation(self, truncation: int) -> "GradedRing":
        return GradedRing(self.generators, truncation)


class GradedPoly:
    """Element of a :class:`GradedRing`; immutable, zero coefficients never stored."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: GradedRing, terms: Mapping[Exponents, Scalar]):
        clean = {}
        for exps, c in terms.items():
            if len(exps) != len(ring.generators):
                raise ValueError("exponent vector length does not match ring")
            if c and ring.degree_of(exps) <= ring.truncation:
                clean[tuple(exps)] = Fraction(c)
        self.ring = ring
        self.terms = clean

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> "GradedPoly":
        if isinstance(other, GradedPoly):
            if other.ring != self.ring:
                raise RingMismatchError(f"{self.ring!r} vs {other.ring!r}")
            return other
        if isinstance(other, (int, Fraction)):
            return self.ring.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return GradedPoly(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return GradedPoly(self.ring, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return GradedPoly(self.ring, {m: c * other for m, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return multiply(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        result = self.ring.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ring.const(other)
        if not isinstance(other, GradedPoly):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    def __hash__(self):
        return hash((self.ring, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    # -- structure --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * len(self.ring.generators), Fraction(0))

    def degrees(self) -> set[int]:
        return {self.ring.degree_of(m) for m in self.terms}

    def lowest_degree(self) -> int | None:
        return min(self.degrees(), default=None)

    def is_homogeneous(self, degree: int) -> bool:
        return all(self.ring.degree_of(m) == degree for m in self.terms)

    def homogeneous_part(self, degree: int) -> "GradedPoly":
        return homogeneous_part(self, degree)

    def coefficient(self, exponents: Mapping[str, int]) -> Fraction:
        exps = [0] * len(self.ring.generators)
        for name, e in exponents.items():
            exps[self.ring.index(name)] = e
        return self.terms.get(tuple(exps), Fraction(0))

    def support(self) -> set[str]:
        names = self.ring.names
        return {names[i] for m in self.terms for i, e in enumerate(m) if e}

    def sorted_terms(self) -> list[tuple[Exponents, Fraction]]:
        """Graded lexicographic order: ascending degree, then generator declaration order."""
        deg = self.ring.degree_of
        return sorted(self.terms.items(), key=lambda mc: (deg(mc[0]), tuple(-e for e in mc[0])))

    # -- rendering --------------------------------------------------------

    def _monomial_str(self, exps: Exponents) -> str:
        parts = []
        for name, e in zip(self.ring.names, exps):
            if e == 1:
                parts.append(name)
            elif e > 1:
                parts.append(f"{name}^{e}")
        return "*".join(parts)

    def _render(self, terms: Sequence[tuple[Exponents, Fraction]]) -> str:
        if not terms:
            return "0"
        out = []
        for i, (m, c) in enumerate(terms):
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            mono = self._monomial_str(m)
            if not mono:
                body = format_fraction(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{format_fraction(mag)}*{mono}"
            if i == 0:
                out.append(body if sign == "+" else f"-{body}")
            else:
                out.append(f" {sign} {body}")
        return "".join(out)

    def render(self) -> str:
        """Canonical text: sorted monomials, coefficients written ``a/b``."""
        return self._render(self.sorted_terms())

    def render_common_denominator(self) -> str:
        """Render as ``(integral polynomial)/D``; plain :meth:`render` when D is 1."""
        den = math.lcm(*(c.denominator for c in self.terms.values())) if self.terms else 1
        if den == 1:
            return self.render()
        scaled = [(m, c * den) for m, c in self.sorted_terms()]
        return f"({self._render(scaled)})/{den}"

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"GradedPoly({self.render()!r})"


def _check_same_ring(p: GradedPoly, q: GradedPoly) -> None:
    if p.ring != q.ring:
        raise RingMismatchError(f"{p.ring!r} vs {q.ring!r}")


def multiply(p: GradedPoly, q: GradedPoly) -> GradedPoly:
    """Product of ``p`` and ``q`` with monomials above the truncation dropped."""
    _check_same_ring(p, q)
    ring = p.ring
    trunc = ring.truncation
    degrees = ring.degrees
    qdeg = [(m, c, ring.degree_of(m)) for m, c in q.terms.items()]
    out: dict[Exponents, Fraction] = {}
    for m1, c1 in p.terms.items():
        d1 = sum(e * d for e, d in zip(m1, degrees))
        for m2, c2, d2 in qdeg:
            if d1 + d2 > trunc:
                continue
            m = tuple(a + b for a, b in zip(m1, m2))
            out[m] = out.get(m, 0) + c1 * c2
    return GradedPoly(ring, out)


def invert_unit(p: GradedPoly) -> GradedPoly:
    """Inverse of a polynomial with constant term 1, via the geometric series."""
    if p.constant_term() != 1:
        raise NotAUnitError(f"degree-0 part of {p} is {p.constant_term()}, not 1")
    nilpotent = p - 1
    result = p.ring.one()
    power = p.ring.one()
    # every factor raises the degree by >= 2, so this stops by truncation
    while True:
        power = power * (-nilpotent)
        if power.is_zero():
            return result
        result = result + power


def homogeneous_part(p: GradedPoly, degree: int) -> GradedPoly:
    deg = p.ring.degree_of
    return GradedPoly(p.ring, {m: c for m, c in p.terms.items() if deg(m) == degree})


def substitute(
    p: GradedPoly,
    bindings: Mapping[str, Union[GradedPoly, Scalar]],
    ring: GradedRing | None = None,
) -> GradedPoly:
    """Simultaneously replace generators of ``p`` by polynomials.

    The target ring is ``ring`` if given, else the ring of the polynomial
    bindings, else ``p.ring``.  Unbound generators map to the same-named
    generator of the target ring.  Each binding must not lower degree: its
    lowest degree is at least the generator's degree (zero is always allowed).
    """
    source = p.ring
    if ring is None:
        rings = {v.ring for v in bindings.values() if isinstance(v, GradedPoly)}
        if len(rings) > 1:
            raise RingMismatchError("bindings live in different rings")
        ring = rings.pop() if rings else source
    images: list[GradedPoly] = []
    for g in source.generators:
        if g.name in bindings:
            v = bindings[g.name]
            if not isinstance(v, GradedPoly):
                v = ring.const(v)
            elif v.ring != ring:
                raise RingMismatchError(f"binding for {g.name} is in another ring")
            low = v.lowest_degree()
            if low is not None and low < g.degree:
                raise GradingError(
                    f"binding {g.name} -> {v} has a part of degree {low} < {g.degree}"
                )
            images.append(v)
        else:
            if not ring.has(g.name):
                raise RingMismatchError(f"generator {g.name} has no image in target ring")
            if ring.generators[ring.index(g.name)].degree != g.degree:
                raise GradingError(f"generator {g.name} changes degree in target ring")
            images.append(ring.gen(g.name))
    unknown = set(bindings) - set(source.names)
    if unknown:
        raise KeyError(f"bindings for unknown generators {sorted(unknown)}")

    power_cache: dict[tuple[int, int], GradedPoly] = {}

    def power(i: int, e: int) -> GradedPoly:
        key = (i, e)
        if key not in power_cache:
            power_cache[key] = images[i] ** e
        return power_cache[key]

    result = ring.zero()
    for m, c in p.terms.items():
        term = ring.const(c)
        for i, e in enumerate(m):
            if e:
                term = term * power(i, e)
                if term.is_zero():
                    break
        result = result + term
    return result
