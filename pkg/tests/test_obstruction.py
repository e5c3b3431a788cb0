import random

import pytest

from charclass.bundle_model import BaseSpace, Bundle, FieldKind, GroupPresentation, trivial_bundle
from charclass.graded_ring import substitute
from charclass.obstruction import (
    ANOMALY_RING,
    LEVELS,
    AnomalyModel,
    Mode,
    MissingDegreeError,
    NonIntegralError,
    UnknownModelError,
    Verdict,
    anomaly_polynomial,
    count_structures,
    evaluate_anomaly,
    refine_division_by_8,
    strip_decomposables,
    structure_ladder,
)

from generators import random_bundles, random_space

R = ANOMALY_RING
p1, p2, ch2, ch4 = R.gens()


def free_space(dim=8, h4=True) -> BaseSpace:
    groups = {8: GroupPresentation(1, (), ("u",))}
    if h4:
        groups[4] = GroupPresentation(1, (), ("a",))
    return BaseSpace("X", dim, groups)


def test_anomaly_polynomials():
    assert anomaly_polynomial("gs").value == ch2 - p1 / 2
    assert anomaly_polynomial("iia").value == (p2 - p1 * p1 / 4) / 48
    het = anomaly_polynomial("heterotic")
    assert het.value == ch4 - p1 * ch2 / 48 + p1 * p1 / 64 - p2 / 48
    assert het.normalization.render() == "2pi"
    assert anomaly_polynomial(AnomalyModel.REDUCED).value == ch4 - p2 / 48
    with pytest.raises(UnknownModelError):
        anomaly_polynomial("m-theory")


def test_substitution_reductions():
    het = anomaly_polynomial("heterotic").value
    assert substitute(het, {"p1": 0, "ch2": 0}) == anomaly_polynomial("reduced").value
    assert substitute(anomaly_polynomial("iia").value, {"p1": 0}) == p2 / 48
    assert substitute(het, {"p1": 0, "ch2": 0, "ch4": 0}) == -p2 / 48


def test_strip_decomposables():
    het = strip_decomposables(anomaly_polynomial("heterotic"))
    assert het.value == ch4 - p2 / 48


def pair(p2_coeff: int, c4_coeff: int, x=None):
    x = x or free_space(h4=False)
    u = x.generator("u")
    tx = Bundle("TX", x, FieldKind.REAL, 8, {"p1": x.zero(4), "p2": u * p2_coeff}, True, True)
    chern = {f"c{i}": x.zero(2 * i) for i in range(1, 4)}
    chern["c4"] = u * c4_coeff
    return x, tx, Bundle("E", x, FieldKind.COMPLEX, 4, chern)


def test_evaluate_anomaly_examples():
    x, tx, e = pair(48, -6)
    assert evaluate_anomaly("reduced", tx, e).scaled.is_zero()
    x, tx, _ = pair(0, 0)
    assert evaluate_anomaly("reduced", tx).scaled.is_zero()
    x, tx, _ = pair(6, 0)
    value = evaluate_anomaly("reduced", tx)
    assert value.render() == "(-6*u)/48"
    with pytest.raises(NonIntegralError) as info:
        evaluate_anomaly("reduced", tx, coerce=True)
    assert info.value.witness == value


def test_refine_division_by_8():
    g = GroupPresentation(1, (8,), ("u", "t"))
    x = BaseSpace("Y", 8, {8: g})
    assert len(refine_division_by_8(x.zero(8))) == 8
    assert x.generator("u") in refine_division_by_8(x.generator("u") * 8)
    assert refine_division_by_8(x.generator("t")) == ()


def test_ladder_on_sphere_like_data():
    x = BaseSpace("S10", 10, {10: GroupPresentation(1, (), ("v",))})
    tx = Bundle("TX", x, FieldKind.REAL, 10, {"p1": x.zero(4), "p2": x.zero(8)}, True, True)
    report = structure_ladder(x, tx)
    assert [report.verdict(lv) for lv in LEVELS] == [Verdict.ADMITS] * 4


def test_string_obstructed():
    x = free_space()
    tx = Bundle("TX", x, FieldKind.REAL, 8, {"p1": x.generator("a") * 2}, True, True)
    report = structure_ladder(x, tx)
    assert report.verdict("string") is Verdict.OBSTRUCTED
    assert report.level("string").obstruction_class == x.generator("a")
    assert report.verdict("fivebrane") is Verdict.OBSTRUCTED


def test_pair_mode_cancellation():
    x, tx, e = pair(48, -6)
    for norm in ("fortyeight", "six"):
        report = structure_ladder(x, tx, e, "pair", norm)
        assert report.verdict("fivebrane") is Verdict.ADMITS
    # without the gauge bundle the manifold check sees p2/6 = 8u
    report = structure_ladder(x, tx, e, "manifold")
    assert report.verdict("fivebrane") is Verdict.OBSTRUCTED
    assert report.level("fivebrane").obstruction_class == x.generator("u") * 8


def test_torsion_makes_fivebrane_undetermined():
    g = GroupPresentation(1, (2, 3), ("u", "t2", "t3"))
    x = BaseSpace("T", 8, {4: GroupPresentation(0), 8: g})
    tx = Bundle("TX", x, FieldKind.REAL, 8, {"p1": x.zero(4), "p2": x.zero(8)}, True, True)
    report = structure_ladder(x, tx)
    assert report.verdict("fivebrane") is Verdict.UNDETERMINED
    assert report.level("fivebrane").solutions == 6
    chosen = tx.with_changes(designated={"sixth_p2": x.generator("t2")})
    assert structure_ladder(x, chosen).verdict("fivebrane") is Verdict.OBSTRUCTED
    zero = tx.with_changes(designated={"sixth_p2": x.zero(8)})
    assert structure_ladder(x, zero).verdict("fivebrane") is Verdict.ADMITS


def test_w_data():
    x = free_space()
    tx = Bundle("TX", x, FieldKind.REAL, 8, {"p1": x.zero(4), "p2": x.zero(8)}, False, True)
    report = structure_ladder(x, tx)
    assert report.verdict("oriented") is Verdict.OBSTRUCTED
    assert all(report.verdict(lv) is not Verdict.ADMITS for lv in LEVELS)
    unknown = tx.with_changes(w1=True, w2=None)
    report = structure_ladder(x, unknown)
    assert report.verdict("spin") is Verdict.UNDETERMINED
    assert report.verdict("string") is Verdict.UNDETERMINED


def test_pair_equals_manifold_with_trivial_gauge_bundle():
    rng = random.Random(7)
    for _ in range(100):
        x = random_space(rng)
        tx, _ = random_bundles(rng, x)
        e = trivial_bundle(x, FieldKind.COMPLEX, 4)
        for norm in ("six", "fortyeight"):
            a = structure_ladder(x, tx, None, "manifold", norm)
            b = structure_ladder(x, tx, e, "pair", norm)
            assert [a.verdict(lv) for lv in LEVELS] == [b.verdict(lv) for lv in LEVELS]


def test_ladder_monotone_on_random_inputs():
    rng = random.Random(11)
    for _ in range(300):
        x = random_space(rng)
        tx, e = random_bundles(rng, x)
        mode = rng.choice(list(Mode))
        report = structure_ladder(x, tx, e, mode, rng.choice(("six", "fortyeight")))
        verdicts = [report.verdict(lv) for lv in LEVELS]
        for i, v in enumerate(verdicts):
            if v is Verdict.ADMITS:
                assert all(w is Verdict.ADMITS for w in verdicts[:i])


def test_count_structures():
    g7 = GroupPresentation(1, (2,), ("b", "s"))
    x = BaseSpace("Y", 8, {3: GroupPresentation(1, (), ("a",)), 7: g7})
    five = count_structures(x, "fivebrane")
    assert five.group == g7 and not five.quotient_applied
    assert "upper bound" in five.render()
    assert count_structures(x, "string").group.free_rank == 1
    quotient = count_structures(x, "fivebrane", [x.generator("b")])
    assert quotient.group.torsion_orders == (2,) and quotient.quotient_applied
    trivial = BaseSpace("Z", 8, {7: GroupPresentation(0)})
    assert count_structures(trivial, "fivebrane").render().startswith("unique fivebrane structure")
    with pytest.raises(MissingDegreeError):
        count_structures(trivial, "string")


def test_report_key_values_are_single_line():
    x, tx, e = pair(48, -6)
    report = structure_ladder(x, tx, e, "pair")
    kv = dict(report.key_values())
    assert kv["fivebrane"] == "admits"
    assert all("\n" not in v for v in kv.values())
