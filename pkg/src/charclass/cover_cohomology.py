"""Rational cohomology of Whitehead-tower stages of BU and BSO.

Each stage kills one rational homotopy group.  Rationally the fibre is an
odd-degree exterior algebra whose generator transgresses onto the lowest
polynomial generator, so the Leray-Serre spectral sequence is a Koszul
complex and the stage's cohomology is the quotient by that generator.  Every
quotient step is checked by computing the cohomology of the full Koszul
complex through ``max_degree``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .graded_ring import GradedRing

SERIES = ("BU", "BSO")

# named stages X<n>: the cover with homotopy killed through pi_{n-1}
NAMED_STAGES = {
    "BU": {"u": 1, "su": 4},
    "BSO": {"o": 1, "so": 2, "spin": 4, "string": 8, "fivebrane": 9},
}


class InvalidStageError(ValueError):
    pass


class DegreeError(ValueError):
    pass


# -- Koszul-type complexes ------------------------------------------------

Monomial = tuple[frozenset[str], tuple[int, ...]]


class KoszulModel:
    """Free graded-commutative algebra Lambda(odd gens) (x) Q[even gens] with a derivation.

    ``differential`` maps a generator to ``(coefficient, target)`` where the
    target generator has degree one higher and is itself closed.
    """

    def __init__(
        self,
        exterior: Sequence[tuple[str, int]],
        polynomial: Sequence[tuple[str, int]],
        differential: Mapping[str, tuple[Fraction | int, str]],
    ):
        self.exterior = tuple(exterior)
        self.polynomial = tuple(polynomial)
        self.ext_names = [n for n, _ in self.exterior]
        self.poly_names = [n for n, _ in self.polynomial]
        degrees = dict(self.exterior) | dict(self.polynomial)
        if len(degrees) != len(self.exterior) + len(self.polynomial):
            raise DegreeError("duplicate generator names")
        for n, d in self.exterior:
            if d % 2 == 0 or d < 1:
                raise DegreeError(f"exterior generator {n} needs odd positive degree, got {d}")
        for n, d in self.polynomial:
            if d % 2 or d < 2:
                raise DegreeError(f"polynomial generator {n} needs even positive degree, got {d}")
        self.degrees = degrees
        self.differential = {}
        for src, (coef, tgt) in differential.items():
            if src not in degrees or tgt not in degrees:
                raise DegreeError(f"differential {src} -> {tgt} mentions an unknown generator")
            if degrees[tgt] != degrees[src] + 1:
                raise DegreeError(
                    f"d({src}) = {tgt}: degree {degrees[tgt]} is not {degrees[src]} + 1"
                )
            self.differential[src] = (Fraction(coef), tgt)
        for src, (_, tgt) in self.differential.items():
            if tgt in self.differential and self.differential[tgt][0]:
                raise DegreeError(f"target {tgt} of d({src}) must be closed")

    def degree(self, mono: Monomial) -> int:
        ext, exps = mono
        return sum(self.degrees[n] for n in ext) + sum(
            e * d for e, (_, d) in zip(exps, self.polynomial)
        )

    def basis(self, degree: int) -> list[Monomial]:
        out = []
        for r in range(len(self.exterior) + 1):
            for subset in itertools.combinations(self.ext_names, r):
                rest = degree - sum(self.degrees[n] for n in subset)
                if rest < 0:
                    continue
                for exps in _compositions(rest, [d for _, d in self.polynomial]):
                    out.append((frozenset(subset), exps))
        return sorted(out, key=lambda m: (sorted(m[0]), m[1]))

    def _wedge_sign(self, subset: frozenset[str], t: str) -> int | None:
        # x_S ^ x_t = sign * x_{S+t} in sorted order; None if t in S
        if t in subset:
            return None
        pos = self.ext_names.index(t)
        after = sum(1 for n in subset if self.ext_names.index(n) > pos)
        return -1 if after % 2 else 1

    def d(self, mono: Monomial) -> dict[Monomial, Fraction]:
        """Differential of a basis monomial (x_S in declaration order, then the polynomial part)."""
        ext, exps = mono
        out: dict[Monomial, Fraction] = {}

        def add(m: Monomial, c: Fraction):
            out[m] = out.get(m, 0) + c
            if not out[m]:
                del out[m]

        ordered = [n for n in self.ext_names if n in ext]
        for i, n in enumerate(ordered):
            if n not in self.differential:
                continue
            coef, tgt = self.differential[n]
            sign = -1 if i % 2 else 1
            rest = frozenset(ext - {n})
            if tgt in self.poly_names:
                j = self.poly_names.index(tgt)
                new = list(exps)
                new[j] += 1
                # move the even target back to the polynomial part: no sign
                add((rest, tuple(new)), sign * coef)
            else:
                # odd target replaces n in place
                s = self._replace_sign(ordered, i, tgt)
                if s is not None:
                    add((frozenset(rest | {tgt}), exps), sign * coef * s)
        ext_sign = -1 if len(ext) % 2 else 1
        for j, n in enumerate(self.poly_names):
            k = exps[j]
            if not k or n not in self.differential:
                continue
            coef, tgt = self.differential[n]
            new = list(exps)
            new[j] -= 1
            if tgt in self.ext_names:
                s = self._wedge_sign(ext, tgt)
                if s is None:
                    continue
                add((frozenset(ext | {tgt}), tuple(new)), ext_sign * s * k * coef)
            else:
                new2 = list(new)
                new2[self.poly_names.index(tgt)] += 1
                add((ext, tuple(new2)), ext_sign * k * coef)
        return out

    def _replace_sign(self, ordered: list[str], i: int, tgt: str) -> int | None:
        if tgt in ordered:
            return None
        word = ordered[:i] + [tgt] + ordered[i + 1 :]
        return _sort_sign([self.ext_names.index(n) for n in word])

    def cohomology(self, max_degree: int) -> dict[int, int]:
        """Dimension of cohomology in each degree 0..max_degree."""
        bases = {n: self.basis(n) for n in range(max_degree + 2)}
        ranks = {}
        for n in range(max_degree + 1):
            ranks[n] = _rank(self._matrix(bases[n], bases[n + 1]))
        out = {}
        for n in range(max_degree + 1):
            incoming = ranks[n - 1] if n >= 1 else 0
            out[n] = len(bases[n]) - ranks[n] - incoming
        return out

    def _matrix(self, src: list[Monomial], dst: list[Monomial]) -> list[list[Fraction]]:
        index = {m: i for i, m in enumerate(dst)}
        rows = []
        for m in src:
            row = [Fraction(0)] * len(dst)
            for t, c in self.d(m).items():
                row[index[t]] += c
            rows.append(row)
        return rows


def _sort_sign(perm: list[int]) -> int:
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        for j in range(len(p) - 1 - i):
            if p[j] > p[j + 1]:
                p[j], p[j + 1] = p[j + 1], p[j]
                sign = -sign
    return sign


def _compositions(total: int, degrees: list[int]) -> list[tuple[int, ...]]:
    if not degrees:
        return [()] if total == 0 else []
    out = []
    d = degrees[0]
    for k in range(total // d + 1):
        for rest in _compositions(total - k * d, degrees[1:]):
            out.append((k,) + rest)
    return out


def _rank(rows: list[list[Fraction]]) -> int:
    m = [list(r) for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(m)) if m[r][col]), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pv = m[rank][col]
        for r in range(len(m)):
            if r != rank and m[r][col]:
                f = m[r][col] / pv
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


@dataclass(frozen=True)
class SerreCheck:
    betti: dict[int, int]
    max_degree: int

    @property
    def concentrated_in_degree_zero(self) -> bool:
        return self.betti.get(0) == 1 and all(v == 0 for d, v in self.betti.items() if d)

    def render(self) -> str:
        nonzero = {d: b for d, b in self.betti.items() if b}
        if self.concentrated_in_degree_zero:
            return f"cohomology Q in degree 0 only, through degree {self.max_degree}"
        parts = ", ".join(f"b{d}={b}" for d, b in sorted(nonzero.items()))
        return f"cohomology through degree {self.max_degree}: {parts or 'zero'}"


def serre_page_check(
    exterior_gens: Sequence[int],
    transgression: Mapping[str, str | tuple[Fraction | int, str]],
    max_degree: int = 8,
    polynomial_gens: Sequence[tuple[str, int]] = (("y", 2),),
) -> SerreCheck:
    """Cohomology of Lambda(x_a, x_b, ...) (x) Q[y] with d extended by the Leibniz rule.

    Exterior generators are named ``x<degree>`` (``x3, x5, ...``).  The
    default polynomial part is a single ``y`` of degree 2, the E_3 page of a
    K(Z, 2)-fibration; ``transgression={"y": "x3"}`` gives
    ``d(z y^k) = k x3 z y^(k-1)``.
    """
    names = []
    for d in exterior_gens:
        if d % 2 == 0:
            raise DegreeError(f"exterior generator degree {d} is even")
        names.append((f"x{d}", d))
    diff = {}
    for src, tgt in transgression.items():
        diff[src] = tgt if isinstance(tgt, tuple) else (1, tgt)
    model = KoszulModel(names, polynomial_gens, diff)
    return SerreCheck(model.cohomology(max_degree), max_degree)


# -- covers ---------------------------------------------------------------


@dataclass(frozen=True)
class KillStep:
    homotopy_degree: int
    removed: str
    check: SerreCheck


@dataclass(frozen=True)
class CoverRing:
    series: str
    kill_level: int
    generators: tuple[tuple[str, int], ...]
    max_degree: int
    steps: tuple[KillStep, ...] = field(default=())

    def ring(self) -> GradedRing:
        return GradedRing(self.generators, truncation=self.max_degree)

    def label(self) -> str:
        return f"({self.series})<{self.kill_level}>"

    def render(self) -> str:
        gens = ", ".join(n for n, _ in self.generators)
        more = ", ..." if self.generators else "..."
        return f"H*({self.label()}; Q) = P[{gens}{more}]"


def _parse_stage(series: str, stage) -> int:
    if isinstance(stage, int):
        n = stage
    else:
        text = str(stage).strip().lower()
        if text in NAMED_STAGES[series]:
            n = NAMED_STAGES[series][text]
        elif text.isdigit():
            n = int(text)
        else:
            raise InvalidStageError(f"unknown stage {stage!r} for {series}")
    if n < 1:
        raise InvalidStageError(f"stage must be >= 1, got {n}")
    return n


def _full_generators(series: str, max_degree: int) -> list[tuple[str, int]]:
    if series == "BU":
        return [(f"c{i}", 2 * i) for i in range(1, max_degree // 2 + 1)]
    return [(f"p{j}", 4 * j) for j in range(1, max_degree // 4 + 1)]


def rational_cover_cohomology(series: str, kill_level, max_degree: int) -> CoverRing:
    """Surviving polynomial generators of H*(X<kill_level>; Q) up to ``max_degree``.

    X is BU (rational homotopy in every even degree) or BSO (degrees 4j).
    Starting from the polynomial ring on all Chern or Pontrjagin classes,
    each killed homotopy group in degree n < kill_level removes the
    generator of degree n.
    """
    series = series.upper()
    if series not in SERIES:
        raise InvalidStageError(f"unknown series {series!r}; expected BU or BSO")
    stage = _parse_stage(series, kill_level)
    if max_degree < 0:
        raise ValueError("max_degree must be non-negative")
    gens = _full_generators(series, max_degree)
    steps = []
    for name, deg in list(gens):
        if deg >= stage:
            break
        check = _verify_kill(gens, name, max_degree)
        expected = betti_numbers([g for g in gens if g[0] != name], max_degree)
        if check.betti != expected:
            raise ArithmeticError(f"Koszul check disagrees with the quotient when killing {name}")
        gens = [g for g in gens if g[0] != name]
        steps.append(KillStep(deg, name, check))
    return CoverRing(series, stage, tuple(gens), max_degree, tuple(steps))


def _verify_kill(gens: list[tuple[str, int]], name: str, max_degree: int) -> SerreCheck:
    """Cohomology of Lambda(e) (x) P[gens] with d(e) = the killed generator."""
    deg = dict(gens)[name]
    fibre = (f"e{deg - 1}", deg - 1)
    model = KoszulModel([fibre], gens, {fibre[0]: (1, name)})
    return SerreCheck(model.cohomology(max_degree), max_degree)


def betti_numbers(generators: Sequence[tuple[str, int]], up_to: int) -> dict[int, int]:
    counts = [0] * (up_to + 1)
    counts[0] = 1
    for _, d in generators:
        for n in range(d, up_to + 1):
            counts[n] += counts[n - d]
    return {n: counts[n] for n in range(up_to + 1)}


def betti_table(ring: CoverRing, up_to: int) -> dict[int, int]:
    """Number of monomials in each degree 0..up_to of the free polynomial algebra."""
    if up_to > ring.max_degree:
        raise ValueError(f"up_to={up_to} exceeds the ring's max_degree={ring.max_degree}")
    return betti_numbers(ring.generators, up_to)
