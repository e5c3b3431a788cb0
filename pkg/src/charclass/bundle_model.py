"""Finitely generated cohomology groups, integral classes and vector bundles over a base.

A base space is described by user-supplied presentations
``H^d = Z^r + Z/n_1 + ... + Z/n_s`` with named generators, and optionally a
partial cup-product table.  Classes are coordinate vectors in these
presentations, which is enough to tell ``p_2 = 0`` apart from ``p_2/6 = 0``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from sympy import Matrix, ZZ
from sympy.matrices.normalforms import invariant_factors

from .char_calc import (
    ClassKind,
    TotalClass,
    Validity,
    whitney_sum,
)
from .graded_ring import GradedPoly, GradedRing, invert_unit


class BaseMismatchError(ValueError):
    pass


class MissingClassError(KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "missing class"


class UndeterminedProductError(ValueError):
    """A cup product was needed that the base space does not declare."""


def _prime_factors(n: int) -> set[int]:
    out, p = set(), 2
    while p * p <= n:
        while n % p == 0:
            out.add(p)
            n //= p
        p += 1
    if n > 1:
        out.add(n)
    return out


def _strip_primes(n: int, primes: Iterable[int]) -> int:
    for p in primes:
        if p > 1:
            while n % p == 0:
                n //= p
    return n


@dataclass(frozen=True)
class GroupPresentation:
    """``Z^free_rank + Z/n_1 + ...`` with generator names (free ones first).

    ``inverted`` lists primes that are units in the coefficient ring, so free
    coordinates may carry those primes in their denominators.
    """

    free_rank: int
    torsion_orders: tuple[int, ...] = ()
    names: tuple[str, ...] = ()
    inverted: frozenset[int] = frozenset()

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("free rank must be non-negative")
        if any(n < 2 for n in self.torsion_orders):
            raise ValueError(f"torsion orders must be >= 2, got {self.torsion_orders}")
        size = self.free_rank + len(self.torsion_orders)
        if not self.names:
            object.__setattr__(self, "names", tuple(f"g{i}" for i in range(size)))
        elif len(self.names) != size:
            raise ValueError(f"{len(self.names)} names for {size} generators")

    @property
    def rank(self) -> int:
        return self.free_rank + len(self.torsion_orders)

    def is_zero_group(self) -> bool:
        return self.rank == 0

    def zero(self, degree: int) -> "CohClass":
        return CohClass(degree, (0,) * self.free_rank, (0,) * len(self.torsion_orders), self)

    def generator(self, degree: int, name: str) -> "CohClass":
        i = self.names.index(name)
        coords = [0] * self.rank
        coords[i] = 1
        return CohClass(degree, tuple(coords[: self.free_rank]), tuple(coords[self.free_rank :]), self)

    def allows_denominator(self, den: int) -> bool:
        return _strip_primes(den, self.inverted) == 1

    def torsion_subgroup_size(self, m: int) -> int:
        """Order of the m-torsion subgroup (free part is torsion-free)."""
        return math.prod(math.gcd(m, n) for n in self.torsion_orders)

    def render(self) -> str:
        if self.is_zero_group():
            return "0"
        parts = []
        for i in range(self.free_rank):
            parts.append(f"Z<{self.names[i]}>")
        for j, n in enumerate(self.torsion_orders):
            parts.append(f"Z/{n}<{self.names[self.free_rank + j]}>")
        out = " + ".join(parts)
        if self.inverted:
            out += " [" + ",".join(f"1/{p}" for p in sorted(self.inverted)) + "]"
        return out


@dataclass(frozen=True)
class CohClass:
    """Element of ``H^degree``: free coordinates and torsion residues."""

    degree: int
    free: tuple[Fraction, ...]
    torsion: tuple[int, ...]
    group: GroupPresentation

    def __post_init__(self):
        g = self.group
        if len(self.free) != g.free_rank or len(self.torsion) != len(g.torsion_orders):
            raise ValueError("coordinate vector does not match group presentation")
        free = tuple(Fraction(x) for x in self.free)
        for x in free:
            if not g.allows_denominator(x.denominator):
                raise ValueError(f"coordinate {x} is not in the coefficient ring")
        object.__setattr__(self, "free", free)
        object.__setattr__(
            self, "torsion", tuple(int(t) % n for t, n in zip(self.torsion, g.torsion_orders))
        )

    def _check(self, other: "CohClass") -> None:
        if self.degree != other.degree or self.group != other.group:
            raise ValueError(f"classes live in different groups (H^{self.degree} vs H^{other.degree})")

    def __add__(self, other: "CohClass") -> "CohClass":
        self._check(other)
        return CohClass(
            self.degree,
            tuple(a + b for a, b in zip(self.free, other.free)),
            tuple(a + b for a, b in zip(self.torsion, other.torsion)),
            self.group,
        )

    def __neg__(self) -> "CohClass":
        return CohClass(self.degree, tuple(-a for a in self.free), tuple(-a for a in self.torsion), self.group)

    def __sub__(self, other: "CohClass") -> "CohClass":
        return self + (-other)

    def __mul__(self, m: int) -> "CohClass":
        if not isinstance(m, int):
            if isinstance(m, Fraction) and m.denominator == 1:
                m = int(m)
            else:
                return NotImplemented
        return CohClass(self.degree, tuple(a * m for a in self.free), tuple(a * m for a in self.torsion), self.group)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not any(self.free) and not any(self.torsion)

    def is_torsion(self) -> bool:
        return not any(self.free)

    def coords(self) -> dict[str, Fraction | int]:
        names = self.group.names
        out: dict[str, Fraction | int] = {}
        for i, x in enumerate(self.free):
            if x:
                out[names[i]] = x
        for j, t in enumerate(self.torsion):
            if t:
                out[names[self.group.free_rank + j]] = t
        return out

    def render(self) -> str:
        terms = []
        for name, c in self.coords().items():
            c = Fraction(c)
            mag = abs(c)
            coef = "" if mag == 1 else (f"{mag.numerator}" if mag.denominator == 1 else f"{mag.numerator}/{mag.denominator}") + "*"
            terms.append(("-" if c < 0 else "+", f"{coef}{name}"))
        if not terms:
            return "0"
        out = terms[0][1] if terms[0][0] == "+" else "-" + terms[0][1]
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return out

    def sort_key(self):
        return (self.free, self.torsion)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"CohClass(H^{self.degree}: {self.render()})"


def divide_class(x: CohClass, m: int) -> tuple[CohClass, ...]:
    """All ``y`` with ``m*y = x``, sorted; empty when ``x`` is not divisible by ``m``.

    Free part: unique quotient when every coordinate divides (in the
    coefficient ring).  Each ``Z/n`` factor: ``m*t = x_t mod n`` has
    ``gcd(m, n)`` solutions when ``gcd(m, n)`` divides ``x_t``, none otherwise.
    """
    if m <= 0:
        raise ValueError("divisor must be positive")
    g = x.group
    free = []
    for a in x.free:
        q = a / m
        if not g.allows_denominator(q.denominator):
            return ()
        free.append(q)
    per_factor: list[list[int]] = []
    for t, n in zip(x.torsion, g.torsion_orders):
        d = math.gcd(m, n)
        if t % d:
            return ()
        # m/d is a unit mod n/d
        base = (t // d) * pow(m // d, -1, n // d) % (n // d) if n // d > 1 else 0
        per_factor.append([base + k * (n // d) for k in range(d)])
    sols = [CohClass(x.degree, tuple(free), tuple(ts), g) for ts in itertools.product(*per_factor)]
    return tuple(sorted(sols, key=CohClass.sort_key))


def division_count(x: CohClass, m: int) -> int:
    """Number of solutions of ``m*y = x``: 0 or the order of the m-torsion subgroup."""
    if m <= 0:
        raise ValueError("divisor must be positive")
    g = x.group
    for a in x.free:
        if not g.allows_denominator((a / m).denominator):
            return 0
    for t, n in zip(x.torsion, g.torsion_orders):
        if t % math.gcd(m, n):
            return 0
    return g.torsion_subgroup_size(m)


@dataclass(frozen=True)
class RationalClass:
    """A rational combination of integral classes, stored as ``scale * value = scaled``.

    Its possible integral values are ``divide_class(scaled, scale)``: empty
    when the combination is not integral, several when torsion makes the
    division ambiguous.
    """

    scale: int
    scaled: CohClass

    @property
    def degree(self) -> int:
        return self.scaled.degree

    @classmethod
    def exact(cls, x: CohClass) -> "RationalClass":
        return cls(1, x)

    def solutions(self) -> tuple[CohClass, ...]:
        return divide_class(self.scaled, self.scale)

    def solution_count(self) -> int:
        """|divide_class(scaled, scale)| without enumerating the torsor."""
        return division_count(self.scaled, self.scale)

    def may_vanish(self) -> bool:
        """Zero is among the possible values exactly when ``scaled`` is zero."""
        return self.scaled.is_zero()

    def free_coords(self) -> tuple[Fraction, ...]:
        return tuple(a / self.scale for a in self.scaled.free)

    def unique(self) -> CohClass | None:
        sols = self.solutions()
        return sols[0] if len(sols) == 1 else None

    def __add__(self, other: "RationalClass") -> "RationalClass":
        s = math.lcm(self.scale, other.scale)
        return RationalClass(s, self.scaled * (s // self.scale) + other.scaled * (s // other.scale))

    def __neg__(self):
        return RationalClass(self.scale, -self.scaled)

    def __sub__(self, other):
        return self + (-other)

    def render(self) -> str:
        if self.scale == 1 or self.scaled.is_zero():
            return self.scaled.render()
        return f"({self.scaled.render()})/{self.scale}"


@dataclass(frozen=True)
class BaseSpace:
    """Base space given by its integral cohomology groups in degrees 1..dimension."""

    name: str
    dimension: int
    groups: Mapping[int, GroupPresentation] = field(default_factory=dict)
    cup: Mapping[tuple[str, str], CohClass] = field(default_factory=dict)

    def __post_init__(self):
        groups = dict(self.groups)
        for d in groups:
            if d < 0 or d > self.dimension:
                raise ValueError(f"H^{d} outside degrees 0..{self.dimension}")
        h0 = groups.get(0)
        if h0 is not None and (h0.free_rank != 1 or h0.torsion_orders):
            raise ValueError("H^0 must be Z")
        seen: dict[str, int] = {}
        for d, g in groups.items():
            for n in g.names:
                if n in seen:
                    raise ValueError(f"generator {n} declared in H^{seen[n]} and H^{d}")
                seen[n] = d
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "_gen_degree", seen)
        cup = {}
        for (a, b), value in dict(self.cup).items():
            for n in (a, b):
                if n not in seen:
                    raise ValueError(f"cup product mentions undeclared generator {n}")
            if value.degree != seen[a] + seen[b]:
                raise ValueError(f"cup {a}*{b} should have degree {seen[a] + seen[b]}")
            for n in (a, b):
                order = self._order_of(n)
                if order and not (value * order).is_zero():
                    raise ValueError(f"cup {a}*{b} = {value} is not killed by the order of {n}")
            cup[(a, b)] = value
            cup[(b, a)] = value
        object.__setattr__(self, "cup", cup)

    def _order_of(self, name: str) -> int:
        g = self.group(self._gen_degree[name])
        i = g.names.index(name)
        return 0 if i < g.free_rank else g.torsion_orders[i - g.free_rank]

    def group(self, degree: int) -> GroupPresentation:
        if degree == 0:
            return self.groups.get(0, GroupPresentation(1, (), ("1",)))
        if degree < 0 or degree > self.dimension:
            return GroupPresentation(0)
        return self.groups.get(degree, GroupPresentation(0))

    def zero(self, degree: int) -> CohClass:
        return self.group(degree).zero(degree)

    def generator(self, name: str) -> CohClass:
        if name not in self._gen_degree:
            raise KeyError(f"no generator named {name!r} on {self.name}")
        d = self._gen_degree[name]
        return self.group(d).generator(d, name)

    def generator_degree(self, name: str) -> int:
        return self._gen_degree[name]

    def generator_names(self) -> list[str]:
        return list(self._gen_degree)

    def cup_product(self, x: CohClass, y: CohClass) -> CohClass:
        degree = x.degree + y.degree
        result = self.zero(degree)
        if x.is_zero() or y.is_zero():
            return result
        for a, ca in x.coords().items():
            for b, cb in y.coords().items():
                if (a, b) not in self.cup:
                    raise UndeterminedProductError(
                        f"cup product {a}*{b} is not declared on {self.name}"
                    )
                prod = ca * cb
                if prod.denominator != 1:
                    raise UndeterminedProductError("cup product of non-integral coordinates")
                result = result + self.cup[(a, b)] * int(prod)
        return result

    def render(self) -> str:
        lines = [f"{self.name}: dimension {self.dimension}"]
        for d in range(1, self.dimension + 1):
            g = self.group(d)
            if not g.is_zero_group():
                lines.append(f"  H^{d} = {g.render()}")
        return "\n".join(lines)


def evaluate_polynomial(
    poly: GradedPoly,
    assignment: Mapping[str, CohClass],
    base: BaseSpace,
    degree: int | None = None,
    fractional: Iterable[str] = (),
) -> RationalClass:
    """Evaluate a homogeneous rational polynomial on integral classes.

    Monomials containing a generator assigned the zero class are dropped
    before the common denominator is taken, so ``(c1^2 - 2*c2)/2`` with
    ``c1 = 0`` evaluates exactly to ``-c2``.  The exception is a monomial
    that is a single generator listed in ``fractional``: ``p2/6`` with
    ``p2 = 0`` keeps its denominator, because p2 = 0 does not decide p2/6.
    Products of nonzero classes use the base's cup-product table.
    """
    names = poly.ring.names
    fractional = frozenset(fractional)
    live = []
    for m, c in poly.terms.items():
        used = [(name, e) for name, e in zip(names, m) if e]
        linear_fractional = len(used) == 1 and used[0][1] == 1 and used[0][0] in fractional
        if not linear_fractional and any(
            name in assignment and assignment[name].is_zero() for name, _ in used
        ):
            continue
        factors = []
        for name, e in used:
            if name not in assignment:
                raise MissingClassError(f"no class assigned to {name}")
            factors.extend([assignment[name]] * e)
        live.append((factors, c, poly.ring.degree_of(m)))
    degs = {d for _, _, d in live}
    if degree is None:
        degree = degs.pop() if len(degs) == 1 else poly.lowest_degree() or 0
    elif degs - {degree}:
        raise ValueError(f"polynomial is not homogeneous of degree {degree}")
    scale = math.lcm(*(c.denominator for _, c, _ in live)) if live else 1
    total = base.zero(degree)
    for factors, c, _ in live:
        if not factors:
            raise ValueError("constant term cannot be evaluated in positive degree")
        value = factors[0]
        for f in factors[1:]:
            value = base.cup_product(value, f)
        total = total + value * int(c * scale)
    return RationalClass(scale, total)


class FieldKind(enum.Enum):
    REAL = "real"
    COMPLEX = "complex"


# designated fractional classes a bundle may carry, with (multiplier, source class)
FRACTIONAL = {"half_p1": (2, "p1"), "sixth_p2": (6, "p2")}
SPIN_DESIGNATED = ("Q2",)


@dataclass(frozen=True)
class Bundle:
    """Vector bundle datum: rank, characteristic classes and Stiefel-Whitney vanishing data.

    ``w1``/``w2`` are ``True`` (vanishes), ``False`` (nonzero) or ``None``
    (unknown).  Real bundles carry ``p1, p2, ...``; complex ones ``c1, c2, ...``.
    ``designated`` holds user-chosen fractional classes (``half_p1``,
    ``sixth_p2``, ``Q2``).
    """

    name: str
    base: BaseSpace
    field_kind: FieldKind
    rank: int
    classes: Mapping[str, CohClass] = field(default_factory=dict)
    w1: bool | None = None
    w2: bool | None = None
    designated: Mapping[str, CohClass] = field(default_factory=dict)
    validity: Validity = Validity.EXACT
    w2_class: str | None = None
    designated_validity: Validity = Validity.EXACT

    def __post_init__(self):
        prefix = self.prefix
        for key, x in self.classes.items():
            if not key.startswith(prefix) or not key[1:].isdigit() or int(key[1:]) < 1:
                raise ValueError(f"{self.field_kind.value} bundle {self.name} cannot carry {key}")
            if x.degree != self.class_degree(int(key[1:])):
                raise ValueError(f"{key} must have degree {self.class_degree(int(key[1:]))}")
            if x.group != self.base.group(x.degree):
                raise BaseMismatchError(f"{key} of {self.name} is not a class on {self.base.name}")
        for key, x in self.designated.items():
            if key in FRACTIONAL:
                m, src = FRACTIONAL[key]
                if self.field_kind is not FieldKind.REAL:
                    raise ValueError(f"{key} only makes sense for real bundles")
                if src in self.classes and x * m != self.classes[src]:
                    raise ValueError(f"designated {key} = {x} but {m}*{key} != {src}")
            elif key == "Q2":
                if x.degree != 8:
                    raise ValueError("Q2 must have degree 8")
            else:
                raise ValueError(f"unknown designated class {key}")

    @property
    def prefix(self) -> str:
        return "p" if self.field_kind is FieldKind.REAL else "c"

    def class_degree(self, i: int) -> int:
        return 4 * i if self.field_kind is FieldKind.REAL else 2 * i

    def top_index(self) -> int:
        return self.base.dimension // (4 if self.field_kind is FieldKind.REAL else 2)

    def cls(self, i: int) -> CohClass:
        """The i-th Pontrjagin/Chern class; zero when H^degree vanishes."""
        key = f"{self.prefix}{i}"
        if key in self.classes:
            return self.classes[key]
        d = self.class_degree(i)
        if self.base.group(d).is_zero_group():
            return self.base.zero(d)
        raise MissingClassError(f"bundle {self.name} has no {key}")

    def assignment(self, tag: str = "") -> dict[str, CohClass]:
        """Known classes keyed by ``tag + name`` (zero groups filled in)."""
        out = {}
        for i in range(1, self.top_index() + 1):
            try:
                out[f"{tag}{self.prefix}{i}"] = self.cls(i)
            except MissingClassError:
                pass
        return out

    def total_symbolic(self, tag: str, ring: GradedRing) -> TotalClass:
        kind = ClassKind.PONTRJAGIN if self.field_kind is FieldKind.REAL else ClassKind.CHERN
        comps = [ring.gen(f"{tag}{self.prefix}{i}") for i in range(1, self.top_index() + 1)]
        return TotalClass.from_components(kind, comps, ring=ring, validity=self.validity)

    def validity_of(self, key: str) -> Validity:
        """Validity of one stored class.

        Designated spin classes combine through the exact multiplicativity of
        the total Q class, so they keep their own flag; p- and c-classes carry
        the bundle-wide flag.
        """
        if key in self.designated:
            return self.designated_validity
        return self.validity

    def half_p1(self) -> RationalClass:
        if "half_p1" in self.designated:
            return RationalClass.exact(self.designated["half_p1"])
        return RationalClass(2, self.cls(1))

    def sixth_p2(self) -> RationalClass:
        if "sixth_p2" in self.designated:
            return RationalClass.exact(self.designated["sixth_p2"])
        return RationalClass(6, self.cls(2))

    def spin_q2(self) -> RationalClass:
        """Q_2 = p_2/2 - (p_1/2)^2/2, or the designated value."""
        if "Q2" in self.designated:
            return RationalClass.exact(self.designated["Q2"])
        q1 = self.half_p1().unique()
        if q1 is None:
            raise MissingClassError(f"Q1 of {self.name} is not determined")
        p2 = self.cls(2)
        if q1.is_zero():
            return RationalClass(2, p2)
        sq = self.base.cup_product(q1, q1)
        return RationalClass(2, p2 - sq)

    def with_changes(self, **kw) -> "Bundle":
        data = dict(
            name=self.name,
            base=self.base,
            field_kind=self.field_kind,
            rank=self.rank,
            classes=self.classes,
            w1=self.w1,
            w2=self.w2,
            designated=self.designated,
            validity=self.validity,
            w2_class=self.w2_class,
        )
        data.update(kw)
        return Bundle(**data)


def trivial_bundle(base: BaseSpace, field_kind: FieldKind, rank: int, name: str = "trivial") -> Bundle:
    b = Bundle(name, base, field_kind, rank, {}, True, True)
    classes = {f"{b.prefix}{i}": base.zero(b.class_degree(i)) for i in range(1, b.top_index() + 1)}
    designated = {}
    if field_kind is FieldKind.REAL:
        designated = {"half_p1": base.zero(4), "sixth_p2": base.zero(8), "Q2": base.zero(8)}
    return b.with_changes(classes=classes, designated=designated)


def _check_pair(e: Bundle, f: Bundle) -> None:
    if e.base != f.base:
        raise BaseMismatchError(f"{e.name} and {f.name} live over different bases")
    if e.field_kind is not f.field_kind:
        raise ValueError(f"{e.name} and {f.name} have different field kinds")


def _combine_classes(e: Bundle, f: Bundle, total: TotalClass) -> dict[str, CohClass]:
    assignment = {**e.assignment("E_"), **f.assignment("F_")}
    out = {}
    for i in range(1, e.top_index() + 1):
        part = total.component(i)
        try:
            value = evaluate_polynomial(part, assignment, e.base, e.class_degree(i))
        except (MissingClassError, UndeterminedProductError):
            continue
        # total classes have integer coefficients, so the scale is 1
        out[f"{e.prefix}{i}"] = value.scaled
    return out


def _symbolic_ring(e: Bundle) -> GradedRing:
    step = 4 if e.field_kind is FieldKind.REAL else 2
    gens = [(f"{t}{e.prefix}{i}", step * i) for t in ("E_", "F_") for i in range(1, e.top_index() + 1)]
    return GradedRing(gens, truncation=e.base.dimension)


def _sum_w(a: bool | None, b: bool | None) -> bool | None:
    # w(E+F) = w(E) w(F): both vanishing gives vanishing, otherwise unknown
    # (w2 also picks up w1(E) w1(F), which vanishes when both w1 do)
    if a is True and b is True:
        return True
    return None


def _designated_sum(e: Bundle, f: Bundle, sign: int) -> dict[str, CohClass]:
    base = e.base
    out: dict[str, CohClass] = {}
    if e.field_kind is not FieldKind.REAL or base.dimension < 4:
        return out
    qe, qf = e.half_p1().unique(), f.half_p1().unique()
    if qe is None or qf is None:
        return out
    out["half_p1"] = qe + qf * sign
    if base.dimension < 8:
        return out
    try:
        q2e, q2f = e.spin_q2().unique(), f.spin_q2().unique()
        if q2e is not None and q2f is not None:
            # Q(E+F) = Q(E)Q(F); Q(E-F) = Q(E)Q(F)^{-1}
            if sign > 0:
                cross = base.cup_product(qe, qf)
            else:
                cross = base.cup_product(qf, qf) - base.cup_product(qe, qf)
            out["Q2"] = q2e + q2f * sign + cross
    except (MissingClassError, UndeterminedProductError):
        pass
    if qe.is_zero() and qf.is_zero():
        se, sf = e.sixth_p2().unique(), f.sixth_p2().unique()
        if se is not None and sf is not None:
            out["sixth_p2"] = se + sf * sign
    return out


def direct_sum(e: Bundle, f: Bundle) -> Bundle:
    """Whitney sum.  Pontrjagin classes of the result are valid modulo 2-torsion."""
    _check_pair(e, f)
    ring = _symbolic_ring(e)
    kind = ClassKind.PONTRJAGIN if e.field_kind is FieldKind.REAL else ClassKind.CHERN
    total, validity = whitney_sum(kind, e.total_symbolic("E_", ring), f.total_symbolic("F_", ring))
    classes = _combine_classes(e, f, total)
    designated = _designated_sum(e, f, +1)
    return Bundle(
        f"{e.name}+{f.name}",
        e.base,
        e.field_kind,
        e.rank + f.rank,
        classes,
        _sum_w(e.w1, f.w1),
        _sum_w(e.w2, f.w2),
        _consistent_designated(designated, classes),
        validity,
        designated_validity=e.designated_validity.combine(f.designated_validity),
    )


def _consistent_designated(designated: dict[str, CohClass], classes: Mapping[str, CohClass]) -> dict[str, CohClass]:
    # drop fractional designations that disagree with classes computed mod 2-torsion
    out = {}
    for key, x in designated.items():
        if key in FRACTIONAL:
            m, src = FRACTIONAL[key]
            if src in classes and x * m != classes[src]:
                continue
        out[key] = x
    return out


def virtual_difference(e: Bundle, f: Bundle) -> Bundle:
    """Virtual bundle ``E - F``: total class ``total(E) * total(F)^-1``; rank may go negative."""
    _check_pair(e, f)
    ring = _symbolic_ring(e)
    te, tf = e.total_symbolic("E_", ring), f.total_symbolic("F_", ring)
    value = te.value * invert_unit(tf.value)
    validity = te.validity.combine(tf.validity)
    if e.field_kind is FieldKind.REAL:
        validity = Validity.MOD_2_TORSION
    total = TotalClass(te.kind, value, validity)
    classes = _combine_classes(e, f, total)
    designated = _designated_sum(e, f, -1)
    return Bundle(
        f"{e.name}-{f.name}",
        e.base,
        e.field_kind,
        e.rank - f.rank,
        classes,
        _sum_w(e.w1, f.w1),
        _sum_w(e.w2, f.w2),
        _consistent_designated(designated, classes),
        validity,
        designated_validity=e.designated_validity.combine(f.designated_validity),
    )


def complexify(v: Bundle) -> Bundle:
    """``V (x) C``: c_{2j} = (-1)^j p_j; odd Chern classes (2-torsion) are set to 0."""
    if v.field_kind is not FieldKind.REAL:
        raise ValueError(f"{v.name} is not a real bundle")
    base = v.base
    classes = {}
    for i in range(1, base.dimension // 2 + 1):
        d = 2 * i
        if i % 2:
            classes[f"c{i}"] = base.zero(d)
            continue
        j = i // 2
        try:
            p = v.cls(j)
        except MissingClassError:
            continue
        classes[f"c{i}"] = p if j % 2 == 0 else -p
    return Bundle(f"{v.name}_C", base, FieldKind.COMPLEX, v.rank, classes, True, None, {}, Validity.MOD_2_TORSION)


def conjugate(w: Bundle) -> Bundle:
    """Complex conjugate bundle: c_i -> (-1)^i c_i."""
    if w.field_kind is not FieldKind.COMPLEX:
        raise ValueError(f"{w.name} is not a complex bundle")
    classes = {k: (x if int(k[1:]) % 2 == 0 else -x) for k, x in w.classes.items()}
    return w.with_changes(name=f"{w.name}_bar", classes=classes)


def realify(w: Bundle) -> Bundle:
    """Underlying real bundle: p_j = (-1)^j c_{2j}(W + conj W), modulo 2-torsion."""
    if w.field_kind is not FieldKind.COMPLEX:
        raise ValueError(f"{w.name} is not a complex bundle")
    doubled = direct_sum(w, conjugate(w))
    classes = {}
    for j in range(1, w.base.dimension // 4 + 1):
        key = f"c{2 * j}"
        if key in doubled.classes:
            x = doubled.classes[key]
            classes[f"p{j}"] = x if j % 2 == 0 else -x
    return Bundle(f"{w.name}_R", w.base, FieldKind.REAL, 2 * w.rank, classes, True, None, {}, Validity.MOD_2_TORSION)


def localize(x: BaseSpace, primes: Iterable[int]) -> BaseSpace:
    """Invert ``primes``: strip them from every torsion order and drop trivial factors."""
    primes = frozenset(primes)
    for p in primes:
        if p < 2 or _prime_factors(p) != {p}:
            raise ValueError(f"{p} is not a prime")
    groups = {}
    kept_names: dict[str, tuple[int, int]] = {}
    for d, g in x.groups.items():
        names = list(g.names[: g.free_rank])
        orders = []
        for j, n in enumerate(g.torsion_orders):
            n2 = _strip_primes(n, primes)
            if n2 > 1:
                orders.append(n2)
                names.append(g.names[g.free_rank + j])
        groups[d] = GroupPresentation(g.free_rank, tuple(orders), tuple(names), g.inverted | primes)
    new = BaseSpace(x.name, x.dimension, groups, {})
    cup = {}
    for (a, b), value in x.cup.items():
        if a in new._gen_degree and b in new._gen_degree and a <= b:
            cup[(a, b)] = localize_class(value, new)
    return BaseSpace(x.name, x.dimension, groups, cup)


def localize_class(x: CohClass, target: BaseSpace) -> CohClass:
    """Image of ``x`` under the localization map into ``target``."""
    g = target.group(x.degree)
    coords = x.coords()
    free = tuple(Fraction(coords.get(n, 0)) for n in g.names[: g.free_rank])
    torsion = tuple(int(coords.get(n, 0)) for n in g.names[g.free_rank :])
    return CohClass(x.degree, free, torsion, g)


def quotient_group(g: GroupPresentation, subgroup: Sequence[CohClass]) -> GroupPresentation:
    """``g / <subgroup>`` in invariant-factor form (generators renamed ``q0, q1, ...``)."""
    if g.inverted:
        raise ValueError("quotients are computed over the integers only")
    ncols = g.rank
    rows = []
    for j, n in enumerate(g.torsion_orders):
        row = [0] * ncols
        row[g.free_rank + j] = n
        rows.append(row)
    for x in subgroup:
        if x.group != g:
            raise ValueError("subgroup element is not in the group")
        rows.append([int(a) for a in x.free] + list(x.torsion))
    if ncols == 0:
        return GroupPresentation(0)
    if not rows:
        return GroupPresentation(ncols, (), tuple(f"q{i}" for i in range(ncols)))
    factors = [int(f) for f in invariant_factors(Matrix(rows), domain=ZZ)]
    nonzero = [abs(f) for f in factors if f != 0]
    free_rank = ncols - len(nonzero)
    torsion = tuple(sorted(f for f in nonzero if f > 1))
    return GroupPresentation(free_rank, torsion, tuple(f"q{i}" for i in range(free_rank + len(torsion))))
