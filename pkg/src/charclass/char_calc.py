"""Symbolic characteristic-class calculus on top of :mod:`charclass.graded_ring`.

Chern characters come from Newton's identities; an independent splitting-
principle oracle recomputes them from explicit Chern roots.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

from .graded_ring import GradedPoly, GradedRing, GradingError


class ClassKind(enum.Enum):
    CHERN = "chern"
    PONTRJAGIN = "pontrjagin"
    CHERN_CHARACTER = "chern_character"
    SPIN_Q = "spin_Q"


class Validity(enum.Enum):
    EXACT = "exact"
    MOD_2_TORSION = "mod_2_torsion"

    def combine(self, other: "Validity") -> "Validity":
        if Validity.MOD_2_TORSION in (self, other):
            return Validity.MOD_2_TORSION
        return Validity.EXACT


# degree step between consecutive components of a total class
_STEP = {
    ClassKind.CHERN: 2,
    ClassKind.PONTRJAGIN: 4,
    ClassKind.CHERN_CHARACTER: 2,
    ClassKind.SPIN_Q: 4,
}

_MULTIPLICATIVE = {ClassKind.CHERN, ClassKind.PONTRJAGIN, ClassKind.SPIN_Q}


class KindMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class TotalClass:
    """Total characteristic class: ``1 + x_1 + x_2 + ...`` or ``rank + ch_1 + ...``."""

    kind: ClassKind
    value: GradedPoly
    validity: Validity = Validity.EXACT
    rank: int | None = None

    def __post_init__(self):
        step = _STEP[self.kind]
        for d in self.value.degrees():
            if d % step:
                raise GradingError(f"{self.kind.value} class has a component in degree {d}")
        if self.kind is ClassKind.CHERN and self.rank is not None:
            top = max(self.value.degrees(), default=0)
            if top > 2 * max(self.rank, 0):
                raise GradingError(f"chern class of rank {self.rank} has degree {top} part")

    @classmethod
    def from_components(
        cls,
        kind: ClassKind,
        components: Sequence[GradedPoly],
        rank: int | None = None,
        validity: Validity = Validity.EXACT,
        ring: GradedRing | None = None,
    ) -> "TotalClass":
        """Assemble from ``[x_1, x_2, ...]`` (component i in degree step*i)."""
        ring = ring or components[0].ring
        if kind is ClassKind.CHERN_CHARACTER:
            value = ring.const(rank or 0)
        else:
            value = ring.one()
        for x in components:
            value = value + x
        return cls(kind, value, validity, rank)

    def component(self, i: int) -> GradedPoly:
        return self.value.homogeneous_part(_STEP[self.kind] * i)

    def components(self, n: int) -> list[GradedPoly]:
        return [self.component(i) for i in range(1, n + 1)]


def chern_ring(n: int, truncation: int | None = None) -> GradedRing:
    """Ring Q[c_1..c_n]; default truncation keeps everything up to c_n's degree."""
    return GradedRing([(f"c{i}", 2 * i) for i in range(1, n + 1)], truncation or max(2 * n, 2))


def _check_pure(xs: Sequence[GradedPoly], step: int, what: str) -> None:
    for i, x in enumerate(xs, start=1):
        if not x.is_homogeneous(step * i):
            raise GradingError(f"{what}_{i} = {x} is not homogeneous of degree {step * i}")


def power_sums(c: Sequence[GradedPoly], k: int) -> list[GradedPoly]:
    """Power sums s_0..s_k of the Chern roots via Newton's identities.

    s_k = c_1 s_{k-1} - c_2 s_{k-2} + ... + (-1)^(k-1) k c_k, with c_i = 0 for i > n.
    s_0 is left as 0; callers supply the rank themselves.
    """
    ring = c[0].ring
    s = [ring.zero()]
    for m in range(1, k + 1):
        acc = ring.zero()
        for i in range(1, m):
            if i <= len(c) and not c[i - 1].is_zero():
                term = c[i - 1] * s[m - i]
                acc = acc + term if i % 2 else acc - term
        if m <= len(c):
            acc = acc + (m if m % 2 else -m) * c[m - 1]
        s.append(acc)
    return s


def ch_from_chern(
    c: Sequence[GradedPoly],
    k: int,
    rank: int | None = None,
    ring: GradedRing | None = None,
) -> GradedPoly:
    """Degree-2k component of the Chern character written in Chern classes.

    ``c`` lists c_1..c_n; ``ch_0`` is the rank, which defaults to ``len(c)``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if not c:
        if ring is None:
            raise ValueError("need a ring when no Chern classes are given")
        return ring.const(rank or 0) if k == 0 else ring.zero()
    _check_pure(c, 2, "c")
    if k == 0:
        return c[0].ring.const(len(c) if rank is None else rank)
    return power_sums(c, k)[k] / math.factorial(k)


def splitting_oracle(roots: Sequence[GradedPoly], k: int) -> tuple[list[GradedPoly], GradedPoly]:
    """Chern classes and ch_k of a sum of line bundles with the given first Chern classes.

    Independent of :func:`ch_from_chern`: the c_i are read off the expanded
    product of ``(1 + x_j)`` and ch_k is the power sum divided by ``k!``.
    """
    if not roots:
        raise ValueError("need at least one root")
    ring = roots[0].ring
    for x in roots:
        if not x.is_homogeneous(2):
            raise GradingError(f"root {x} is not of pure degree 2")
    total = ring.one()
    for x in roots:
        total = total * (1 + x)
    chern = [total.homogeneous_part(2 * i) for i in range(1, len(roots) + 1)]
    if k == 0:
        return chern, ring.const(len(roots))
    s = ring.zero()
    for x in roots:
        s = s + x**k
    return chern, s / math.factorial(k)


def pontrjagin_from_complexification(c_of_complexified: Sequence[GradedPoly]) -> list[GradedPoly]:
    """p_j = (-1)^j c_{2j}; odd Chern classes are 2-torsion and ignored here."""
    c = c_of_complexified
    return [c[2 * j - 1] if j % 2 == 0 else -c[2 * j - 1] for j in range(1, len(c) // 2 + 1)]


def whitney_sum(kind: ClassKind, a: TotalClass, b: TotalClass) -> tuple[TotalClass, Validity]:
    """Total class of a direct sum and whether the identity is exact or holds mod 2-torsion."""
    if a.kind is not kind or b.kind is not kind:
        raise KindMismatchError(f"cannot combine {a.kind.value} and {b.kind.value} as {kind.value}")
    if kind in _MULTIPLICATIVE:
        value = a.value * b.value
    else:
        value = a.value + b.value
    validity = a.validity.combine(b.validity)
    if kind is ClassKind.PONTRJAGIN:
        validity = Validity.MOD_2_TORSION
    rank = None if a.rank is None or b.rank is None else a.rank + b.rank
    return TotalClass(kind, value, validity, rank), validity


def spin_classes(p1: GradedPoly, p2: GradedPoly) -> tuple[GradedPoly, GradedPoly]:
    """Rational solution of p_1 = 2 Q_1, p_2 = Q_1^2 + 2 Q_2."""
    if not p1.is_homogeneous(4):
        raise GradingError(f"p1 = {p1} is not of degree 4")
    if not p2.is_homogeneous(8):
        raise GradingError(f"p2 = {p2} is not of degree 8")
    q1 = p1 / 2
    q2 = p2 / 2 - (p1 * p1) / 8
    return q1, q2


def generator_pairing_constant(k: int) -> int:
    """Value of c_k on a generator of pi_{2k}(BU), namely (k-1)!.

    Read off from the Newton engine: with c_1..c_{k-1} = 0 the Chern
    character is ch_k = (-1)^(k-1) c_k / (k-1)!.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ring = chern_ring(k)
    c = [ring.zero()] * (k - 1) + [ring.gen(f"c{k}")]
    coeff = ch_from_chern(c, k).coefficient({f"c{k}": 1})
    value = 1 / abs(coeff)
    if value.denominator != 1 or value != math.factorial(k - 1):
        raise ArithmeticError(f"Newton coefficient {coeff} disagrees with ({k}-1)!")
    sign = 1 if k % 2 else -1
    if coeff * sign < 0:
        raise ArithmeticError(f"Newton coefficient {coeff} has the wrong sign")
    return int(value)


def ch_expansion(k: int, truncation: int | None = None) -> GradedPoly:
    """ch_k (k >= 1) as a polynomial in c_1..c_k of a generic bundle."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ring = chern_ring(k, truncation or 2 * k)
    return ch_from_chern(ring.gens(), k)


def total_ch(c: Sequence[GradedPoly], rank: int) -> GradedPoly:
    """rank + ch_1 + ch_2 + ... up to the ring truncation."""
    ring = c[0].ring
    top = ring.truncation // 2
    s = power_sums(c, top)
    out = ring.const(rank)
    for m in range(1, top + 1):
        out = out + s[m] / math.factorial(m)
    return out

