import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from charclass.char_calc import (
    ClassKind,
    KindMismatchError,
    TotalClass,
    Validity,
    ch_expansion,
    ch_from_chern,
    chern_ring,
    generator_pairing_constant,
    pontrjagin_from_complexification,
    spin_classes,
    splitting_oracle,
    total_ch,
    whitney_sum,
)
from charclass.graded_ring import GradedRing, GradingError

from oracles import newton_by_solving, sympy_ch_from_roots


def test_low_chern_characters():
    c1, c2, c3 = chern_ring(3).gens()
    assert ch_from_chern([c1, c2, c3], 1) == c1
    assert ch_from_chern([c1, c2, c3], 2) == (c1**2 - 2 * c2) / 2
    assert ch_from_chern([c1, c2, c3], 3) == (c1**3 - 3 * c1 * c2 + 3 * c3) / 6
    assert ch_from_chern([c1, c2, c3], 0) == c1.ring.const(3)


def test_ch4_text():
    assert ch_expansion(4).render_common_denominator() == "(c1^4 - 4*c1^2*c2 + 4*c1*c3 + 2*c2^2 - 4*c4)/24"


@pytest.mark.parametrize("k", range(1, 7))
def test_newton_matches_symmetric_reduction(k):
    ours = ch_expansion(k)
    theirs = newton_by_solving(k)
    assert {m: c for m, c in ours.terms.items()} == theirs


def test_pairing_constants():
    assert [generator_pairing_constant(k) for k in range(1, 7)] == [math.factorial(k - 1) for k in range(1, 7)]


def test_spin_classes_invert_definition():
    R = GradedRing([("p1", 4), ("p2", 8)], truncation=8)
    p1, p2 = R.gens()
    q1, q2 = spin_classes(p1, p2)
    assert 2 * q1 == p1
    assert q1 * q1 + 2 * q2 == p2
    with pytest.raises(GradingError):
        spin_classes(p2, p2)


def test_whitney_sum_validity():
    R = GradedRing([("a1", 4), ("b1", 4)], truncation=8)
    a = TotalClass(ClassKind.PONTRJAGIN, 1 + R.gen("a1"))
    b = TotalClass(ClassKind.PONTRJAGIN, 1 + R.gen("b1"))
    total, validity = whitney_sum(ClassKind.PONTRJAGIN, a, b)
    assert validity is Validity.MOD_2_TORSION
    assert total.component(2) == R.gen("a1") * R.gen("b1")

    C = GradedRing([("x", 2), ("y", 2)], truncation=4)
    ca = TotalClass(ClassKind.CHERN, 1 + C.gen("x"))
    cb = TotalClass(ClassKind.CHERN, 1 + C.gen("y"))
    _, validity = whitney_sum(ClassKind.CHERN, ca, cb)
    assert validity is Validity.EXACT
    with pytest.raises(KindMismatchError):
        whitney_sum(ClassKind.CHERN, ca, a)


def test_pontrjagin_sign_convention():
    R = chern_ring(4)
    c = R.gens()
    assert pontrjagin_from_complexification(c) == [-c[1], c[3]]


def test_total_ch_is_additive_on_line_bundles():
    R = GradedRing([("x", 2), ("y", 2)], truncation=8)
    x, y = R.gens()
    chern, _ = splitting_oracle([x, y], 1)
    both = total_ch(chern, 2)
    one = total_ch([x], 1) + total_ch([y], 1)
    assert both == one


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(-3, 3), min_size=3, max_size=3), min_size=1, max_size=4), st.integers(1, 6))
def test_splitting_oracle_against_sympy(roots, k):
    R = GradedRing([("u", 2), ("v", 2), ("w", 2)], truncation=2 * max(k, len(roots)))
    gens = R.gens()
    ours = [sum((c * g for c, g in zip(r, gens)), R.zero()) for r in roots]
    chern, ch = splitting_oracle(ours, k)
    u, v, w = sympy.symbols("u v w")
    sroots = [r[0] * u + r[1] * v + r[2] * w for r in roots]
    elem, sch = sympy_ch_from_roots(sroots, k)
    back = {"u": u, "v": v, "w": w}

    def to_sympy(p):
        return sympy.expand(
            sum(
                sympy.Rational(c.numerator, c.denominator) * sympy.Mul(*(back[n] ** e for n, e in zip(R.names, m)))
                for m, c in p.terms.items()
            )
        )

    assert [to_sympy(c) for c in chern] == elem
    assert to_sympy(ch) == sch
    assert ch_from_chern(chern, k) == ch
