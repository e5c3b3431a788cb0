"""Spin -> String -> Fivebrane obstruction ladder and the Green-Schwarz type anomaly polynomials."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .bundle_model import (
    BaseSpace,
    Bundle,
    CohClass,
    FieldKind,
    GroupPresentation,
    MissingClassError,
    RationalClass,
    UndeterminedProductError,
    divide_class,
    evaluate_polynomial,
    quotient_group,
)
from .char_calc import Validity, ch_from_chern
from .graded_ring import GradedPoly, GradedRing, substitute

ANOMALY_RING = GradedRing([("p1", 4), ("p2", 8), ("ch2", 4), ("ch4", 8)], truncation=16)


class AnomalyModel(enum.Enum):
    HETEROTIC_GS = "heterotic_GS"
    TYPE_IIA_DUAL = "type_IIA_dual"
    HETEROTIC_DUAL = "heterotic_dual"
    REDUCED = "reduced"


MODEL_ALIASES = {
    "gs": AnomalyModel.HETEROTIC_GS,
    "heterotic_gs": AnomalyModel.HETEROTIC_GS,
    "iia": AnomalyModel.TYPE_IIA_DUAL,
    "type_iia_dual": AnomalyModel.TYPE_IIA_DUAL,
    "heterotic": AnomalyModel.HETEROTIC_DUAL,
    "heterotic_dual": AnomalyModel.HETEROTIC_DUAL,
    "reduced": AnomalyModel.REDUCED,
}


class UnknownModelError(ValueError):
    pass


class NonIntegralError(ArithmeticError):
    def __init__(self, message: str, witness: RationalClass):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class Normalization:
    """Prefactor bookkeeping: the stored polynomial times ``rational * (2 pi)^two_pi_power``."""

    rational: Fraction = Fraction(1)
    two_pi_power: int = 0

    def render(self) -> str:
        parts = []
        if self.rational != 1:
            parts.append(str(self.rational))
        if self.two_pi_power == 1:
            parts.append("2pi")
        elif self.two_pi_power:
            parts.append(f"(2pi)^{self.two_pi_power}")
        return "*".join(parts) or "1"


@dataclass(frozen=True)
class AnomalyPolynomial:
    model: AnomalyModel
    value: GradedPoly
    normalization: Normalization = field(default_factory=Normalization)

    @property
    def degree(self) -> int:
        return 4 if self.model is AnomalyModel.HETEROTIC_GS else 8


def _model(model) -> AnomalyModel:
    if isinstance(model, AnomalyModel):
        return model
    key = str(model).lower().replace("-", "_")
    if key in MODEL_ALIASES:
        return MODEL_ALIASES[key]
    for m in AnomalyModel:
        if m.value.lower() == key:
            return m
    raise UnknownModelError(f"unknown anomaly model {model!r}")


def anomaly_polynomial(model) -> AnomalyPolynomial:
    """The anomaly polynomial of ``model`` in p1, p2, ch2, ch4 (characteristic-class normalization)."""
    model = _model(model)
    R = ANOMALY_RING
    p1, p2, ch2, ch4 = R.gens()
    if model is AnomalyModel.HETEROTIC_GS:
        return AnomalyPolynomial(model, ch2 - p1 / 2)
    if model is AnomalyModel.TYPE_IIA_DUAL:
        return AnomalyPolynomial(model, (p2 - (p1 / 2) ** 2) / 48)
    if model is AnomalyModel.HETEROTIC_DUAL:
        value = ch4 - p1 * ch2 / 48 + p1**2 / 64 - p2 / 48
        return AnomalyPolynomial(model, value, Normalization(Fraction(1), 1))
    return AnomalyPolynomial(model, ch4 - p2 / 48, Normalization(Fraction(1), 1))


def strip_decomposables(poly: AnomalyPolynomial) -> AnomalyPolynomial:
    """Drop every product of two or more positive-degree classes."""
    kept = {m: c for m, c in poly.value.terms.items() if sum(m) <= 1}
    return AnomalyPolynomial(poly.model, GradedPoly(poly.value.ring, kept), poly.normalization)


# -- evaluation on bundles ------------------------------------------------


def _bundle_ring() -> GradedRing:
    gens = [("T_p1", 4), ("T_p2", 8), ("T_h", 4), ("T_s", 8)]
    gens += [(f"E_c{i}", 2 * i) for i in range(1, 5)]
    return GradedRing(gens, truncation=16)


def _check_inputs(tx: Bundle, e: Bundle | None) -> None:
    if tx.field_kind is not FieldKind.REAL:
        raise ValueError(f"tangent bundle {tx.name} must be real")
    if e is not None:
        if e.field_kind is not FieldKind.COMPLEX:
            raise ValueError(f"gauge bundle {e.name} must be complex")
        if e.base != tx.base:
            from .bundle_model import BaseMismatchError

            raise BaseMismatchError(f"{tx.name} and {e.name} live over different bases")


def evaluate_on_bundles(
    poly: GradedPoly,
    tx: Bundle,
    e: Bundle | None,
    degree: int,
    use_designated: bool = False,
) -> RationalClass:
    """Evaluate a polynomial in p1, p2, ch2, ch4 on the classes of (TX, E).

    ch_k(E) is expanded in the Chern classes of E.  With ``use_designated``
    the designated fractional classes of TX replace p1 = 2*half_p1 and
    p2 = 6*sixth_p2.
    """
    _check_inputs(tx, e)
    R = _bundle_ring()
    bindings: dict[str, GradedPoly] = {}
    half = tx.designated.get("half_p1") if use_designated else None
    sixth = tx.designated.get("sixth_p2") if use_designated else None
    bindings["p1"] = 2 * R.gen("T_h") if half is not None else R.gen("T_p1")
    bindings["p2"] = 6 * R.gen("T_s") if sixth is not None else R.gen("T_p2")
    if e is None:
        bindings["ch2"] = R.zero()
        bindings["ch4"] = R.zero()
    else:
        c = [R.gen(f"E_c{i}") for i in range(1, 5)]
        bindings["ch2"] = ch_from_chern(c, 2)
        bindings["ch4"] = ch_from_chern(c, 4)
    expr = substitute(poly, bindings, ring=R)

    base = tx.base
    assignment: dict[str, CohClass] = {}
    for key, gen in (("T_p1", 1), ("T_p2", 2)):
        try:
            assignment[key] = tx.cls(gen)
        except MissingClassError:
            pass
    if half is not None:
        assignment["T_h"] = half
    if sixth is not None:
        assignment["T_s"] = sixth
    if e is not None:
        for i in range(1, 5):
            try:
                assignment[f"E_c{i}"] = e.cls(i)
            except MissingClassError:
                pass
    return evaluate_polynomial(expr, assignment, base, degree, fractional=("T_p1", "T_p2"))


def evaluate_anomaly(model, tx: Bundle, e: Bundle | None = None, coerce: bool = False):
    """Anomaly polynomial of ``model`` evaluated in H^4 or H^8 of the base.

    Returns a :class:`RationalClass`; with ``coerce=True`` returns the
    integral class and raises :class:`NonIntegralError` when there is none.
    """
    ap = anomaly_polynomial(model)
    value = evaluate_on_bundles(ap.value, tx, e, ap.degree)
    if not coerce:
        return value
    sols = value.solutions()
    if not sols:
        raise NonIntegralError(
            f"anomaly is not integral: {value.scale} * anomaly = {value.scaled.render()}", value
        )
    if len(sols) > 1:
        raise NonIntegralError(f"anomaly is ambiguous up to {len(sols)} torsion classes", value)
    return sols[0]


def refine_division_by_8(sixth_p2: CohClass) -> tuple[CohClass, ...]:
    """Classes x with 8x = sixth_p2; nonempty iff the mod-8 reduction of sixth_p2 vanishes."""
    if sixth_p2.degree != 8:
        raise ValueError("expected a class in H^8")
    return divide_class(sixth_p2, 8)


# -- structures -----------------------------------------------------------


class Verdict(enum.Enum):
    OBSTRUCTED = "obstructed"
    UNDETERMINED = "undetermined"
    ADMITS = "admits"

    def cap(self, lower: "Verdict") -> "Verdict":
        order = [Verdict.OBSTRUCTED, Verdict.UNDETERMINED, Verdict.ADMITS]
        return order[min(order.index(self), order.index(lower))]


class Mode(enum.Enum):
    MANIFOLD = "manifold"
    PAIR = "pair"


class FivebraneNormalization(enum.Enum):
    SIX = "six"
    FORTYEIGHT = "fortyeight"


LEVELS = ("oriented", "spin", "string", "fivebrane")


class MissingDegreeError(ValueError):
    pass


@dataclass(frozen=True)
class TorsorDescription:
    level: str
    degree: int
    group: GroupPresentation
    quotient_applied: bool

    @property
    def unique(self) -> bool:
        return self.group.is_zero_group()

    def render(self) -> str:
        if self.unique:
            lower = "string" if self.level == "fivebrane" else "spin"
            qualifier = "" if self.quotient_applied else " (acting group H^%d = 0)" % self.degree
            return f"unique {self.level} structure per {lower} structure{qualifier}"
        text = f"torsor over {self.group.render()}"
        if not self.quotient_applied:
            text += f" = H^{self.degree}(X; Z) (upper bound; quotient undetermined)"
        return text


def count_structures(
    x: BaseSpace,
    level: str,
    quotient_image: Sequence[CohClass] | None = None,
) -> TorsorDescription:
    """Group acting freely and transitively on the lifts at ``level``.

    The acting group is a quotient of H^3 (string) or H^7 (fivebrane); without
    ``quotient_image`` the full group is returned as an upper bound.
    """
    degrees = {"string": 3, "fivebrane": 7}
    if level not in degrees:
        raise ValueError(f"level must be 'string' or 'fivebrane', got {level!r}")
    d = degrees[level]
    if d > x.dimension or d not in x.groups:
        raise MissingDegreeError(f"H^{d} of {x.name} is not presented")
    g = x.group(d)
    if quotient_image is None:
        return TorsorDescription(level, d, g, False)
    return TorsorDescription(level, d, quotient_group(g, quotient_image), True)


@dataclass(frozen=True)
class LevelResult:
    level: str
    verdict: Verdict
    obstruction: RationalClass | None = None
    obstruction_class: CohClass | None = None
    solutions: int | None = None
    note: str = ""


@dataclass(frozen=True)
class ObstructionReport:
    mode: Mode
    normalization: FivebraneNormalization
    levels: tuple[LevelResult, ...]
    string_torsor: TorsorDescription | None = None
    fivebrane_torsor: TorsorDescription | None = None
    validity: Validity = Validity.EXACT

    def __post_init__(self):
        # a level may admit only if every lower level admits
        seen_non_admit = False
        for lv in self.levels:
            if seen_non_admit and lv.verdict is Verdict.ADMITS:
                raise AssertionError(f"non-monotone report at level {lv.level}")
            if lv.verdict is not Verdict.ADMITS:
                seen_non_admit = True

    def level(self, name: str) -> LevelResult:
        for lv in self.levels:
            if lv.level == name:
                return lv
        raise KeyError(name)

    def verdict(self, name: str) -> Verdict:
        return self.level(name).verdict

    def any_obstructed(self) -> bool:
        return any(lv.verdict is Verdict.OBSTRUCTED for lv in self.levels)

    def key_values(self) -> list[tuple[str, str]]:
        out = [("mode", self.mode.value), ("normalization", self.normalization.value)]
        for lv in self.levels:
            out.append((f"{lv.level}", lv.verdict.value))
            if lv.obstruction is not None:
                out.append((f"{lv.level}.obstruction", lv.obstruction.render()))
            if lv.obstruction_class is not None:
                out.append((f"{lv.level}.class", lv.obstruction_class.render()))
            if lv.solutions is not None:
                out.append((f"{lv.level}.solutions", str(lv.solutions)))
        for t in (self.string_torsor, self.fivebrane_torsor):
            if t is not None:
                out.append((f"{t.level}.torsor", t.group.render()))
                out.append((f"{t.level}.torsor_exact", "true" if t.quotient_applied else "false"))
        out.append(("validity", self.validity.value))
        return out

    def render(self) -> str:
        lines = [f"structure ladder ({self.mode.value} mode, fivebrane normalization {self.normalization.value})"]
        for lv in self.levels:
            line = f"  {lv.level:<10} {lv.verdict.value}"
            if lv.obstruction is not None:
                line += f"   obstruction {lv.obstruction.render()}"
            if lv.solutions is not None:
                line += f"   [{lv.solutions} solution{'s' if lv.solutions != 1 else ''}]"
            lines.append(line)
            if lv.obstruction_class is not None and lv.verdict is Verdict.OBSTRUCTED:
                lines.append(f"             obstruction class = {lv.obstruction_class.render()}")
            if lv.note:
                lines.append(f"             note: {lv.note}")
        for t in (self.string_torsor, self.fivebrane_torsor):
            if t is not None:
                lines.append(f"  {t.level} structures: {t.render()}")
        if self.validity is Validity.MOD_2_TORSION:
            lines.append("  classes combined by Whitney sums hold modulo 2-torsion")
        return "\n".join(lines)


def _w_level(name: str, vanishes: bool | None, what: str) -> LevelResult:
    if vanishes is True:
        return LevelResult(name, Verdict.ADMITS)
    if vanishes is False:
        return LevelResult(name, Verdict.OBSTRUCTED, note=f"{what} does not vanish")
    return LevelResult(name, Verdict.UNDETERMINED, note=f"{what} unknown")


def _fractional_level(name: str, obstruction: RationalClass, lower: Verdict) -> LevelResult:
    count = obstruction.solution_count()
    unique = obstruction.unique() if count == 1 else None
    note = ""
    if count == 0:
        own = Verdict.OBSTRUCTED
        note = f"not integral: {obstruction.scale} * obstruction = {obstruction.scaled.render()}"
    elif not obstruction.may_vanish():
        own = Verdict.OBSTRUCTED
    elif count == 1:
        own = Verdict.ADMITS
    else:
        own = Verdict.UNDETERMINED
        note = "division is ambiguous on torsion; designate the fractional class to decide"
    verdict = own.cap(lower)
    if verdict is not own:
        note = (note + "; " if note else "") + "capped by lower level"
    return LevelResult(name, verdict, obstruction, unique, count, note)


def _string_polynomial() -> GradedPoly:
    p1, _, ch2, _ = ANOMALY_RING.gens()
    return p1 / 2 - ch2


def _fivebrane_polynomial(mode: Mode, normalization: FivebraneNormalization) -> GradedPoly:
    if mode is Mode.MANIFOLD:
        poly = anomaly_polynomial(AnomalyModel.TYPE_IIA_DUAL).value
    else:
        poly = -anomaly_polynomial(AnomalyModel.HETEROTIC_DUAL).value
    if normalization is FivebraneNormalization.SIX:
        poly = poly * 8
    return poly


def structure_ladder(
    x: BaseSpace,
    tx: Bundle,
    e: Bundle | None = None,
    mode: Mode | str = Mode.MANIFOLD,
    normalization: FivebraneNormalization | str | None = None,
) -> ObstructionReport:
    """Decide orientability, spin, string and fivebrane structures for TX (or the pair (TX, E)).

    string: ``p1/2 - ch2(E)`` must vanish (manifold mode ignores E).
    fivebrane: ``p2/6`` (normalization six) or ``p2/48`` (fortyeight) must
    vanish in manifold mode; in pair mode the heterotic dual anomaly
    ``p2/48 - ch4 + p1 ch2/48 - p1^2/64``, times 8 for normalization six.
    Divisions that are ambiguous on torsion give ``undetermined`` unless TX
    designates ``half_p1`` / ``sixth_p2``.
    """
    mode = Mode(mode)
    if normalization is None:
        normalization = FivebraneNormalization.SIX if mode is Mode.MANIFOLD else FivebraneNormalization.FORTYEIGHT
    normalization = FivebraneNormalization(normalization)
    if tx.base != x:
        raise ValueError(f"{tx.name} does not live over {x.name}")
    gauge = e if mode is Mode.PAIR else None
    _check_inputs(tx, gauge)

    oriented = _w_level("oriented", tx.w1, "w1")
    spin = _w_level("spin", tx.w2, "w2")
    spin = LevelResult("spin", spin.verdict.cap(oriented.verdict), note=spin.note)

    levels = [oriented, spin]
    try:
        obs = evaluate_on_bundles(_string_polynomial(), tx, gauge, 4, use_designated=True)
        string = _fractional_level("string", obs, spin.verdict)
    except (MissingClassError, UndeterminedProductError) as err:
        string = LevelResult("string", Verdict.UNDETERMINED.cap(spin.verdict), note=str(err))
    levels.append(string)

    if string.verdict is Verdict.OBSTRUCTED:
        five = LevelResult("fivebrane", Verdict.OBSTRUCTED, note="no string structure to lift")
    else:
        try:
            obs = evaluate_on_bundles(
                _fivebrane_polynomial(mode, normalization), tx, gauge, 8, use_designated=True
            )
            five = _fractional_level("fivebrane", obs, string.verdict)
        except (MissingClassError, UndeterminedProductError) as err:
            five = LevelResult("fivebrane", Verdict.UNDETERMINED.cap(string.verdict), note=str(err))
    levels.append(five)

    string_torsor = fivebrane_torsor = None
    if 3 in x.groups and x.dimension >= 3:
        string_torsor = count_structures(x, "string")
    if 7 in x.groups and x.dimension >= 7:
        fivebrane_torsor = count_structures(x, "fivebrane")
    validity = tx.validity if gauge is None else tx.validity.combine(gauge.validity)
    return ObstructionReport(mode, normalization, tuple(levels), string_torsor, fivebrane_torsor, validity)
