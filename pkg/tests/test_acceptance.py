"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (the lines are repeated in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
The parser fuzz budget defaults to 60 seconds and can be changed with
``CHARCLASS_FUZZ_SECONDS``.
"""

from __future__ import annotations

import io
import os
import random
import sys
import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from charclass.bundle_model import BaseSpace, Bundle, CohClass, FieldKind, GroupPresentation, direct_sum, divide_class
from charclass.char_calc import Validity, ch_from_chern, spin_classes, splitting_oracle
from charclass.cli import EXIT_INTERNAL, main, run
from charclass.cover_cohomology import betti_table, rational_cover_cohomology, serre_page_check
from charclass.cs_forms import (
    chern_character_form,
    cs_transgression,
    curvature,
    gauge_transform,
    power,
    pure_gauge,
    random_connection,
    random_gauge,
    trace,
    verify_transgression,
)
from charclass.document import ParseError, parse, render
from charclass.graded_ring import GradedRing, substitute
from charclass.obstruction import ANOMALY_RING, LEVELS, Mode, Verdict, anomaly_polynomial, structure_ladder

from generators import random_bundles, random_space
from oracles import generating_function_betti

SAMPLES = sorted((Path(__file__).resolve().parent.parent / "samples").glob("*.txt"))
FUZZ_SECONDS = float(os.environ.get("CHARCLASS_FUZZ_SECONDS", "60"))

RESULTS: list[str] = []


@contextmanager
def criterion(number: int, title: str, limit: float | None = None):
    """Record a PASS/FAIL line for the enclosed block, including its runtime."""
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        line = f"FAIL  {number:>2}. {title} ({time.perf_counter() - start:.2f}s): {type(exc).__name__}: {exc}"
        RESULTS.append(line)
        print(line)
        raise
    elapsed = time.perf_counter() - start
    if limit is not None and elapsed >= limit:
        line = f"FAIL  {number:>2}. {title} ({elapsed:.2f}s, limit {limit:g}s)"
        RESULTS.append(line)
        print(line)
        raise AssertionError(f"runtime {elapsed:.2f}s exceeds {limit:g}s")
    line = f"PASS  {number:>2}. {title} ({elapsed:.2f}s)"
    RESULTS.append(line)
    print(line)


def cli(*argv: str) -> tuple[int, str]:
    out = io.StringIO()
    status = main(list(argv), out, io.StringIO())
    return status, out.getvalue()


def test_01_ch4_identity():
    with criterion(1, "ch-expand --k=4 gives the ch4 identity", limit=1.0):
        status, out = cli("ch-expand", "--k=4", "--format=text")
        assert status == 0
        assert out.strip() == "ch4 = (c1^4 - 4*c1^2*c2 + 4*c1*c3 + 2*c2^2 - 4*c4)/24"


def test_02_newton_against_splitting_oracle():
    with criterion(2, "ch_from_chern agrees with the splitting oracle", limit=10.0):
        rng = random.Random(2)
        ring = GradedRing([(f"x{i}", 2) for i in range(1, 7)], truncation=16)
        gens = ring.gens()
        for _ in range(200):
            length = rng.randint(1, 6)
            roots = [rng.randint(-4, 4) * rng.choice(gens) for _ in range(length)]
            chern, _ = splitting_oracle(roots, 0)
            for k in range(0, 9):
                _, expected = splitting_oracle(roots, k)
                assert ch_from_chern(chern, k) == expected, (roots, k)


def test_03_fractional_class_discriminator():
    with criterion(3, "division by 6 on Z + Z/2 + Z/3"):
        h8 = GroupPresentation(1, (2, 3), ("u", "t2", "t3"))
        x = BaseSpace("X", 8, {8: h8})
        zero_sixths = divide_class(x.zero(8), 6)
        assert len(zero_sixths) == 6
        assert len(set(zero_sixths)) == 6
        assert divide_class(x.generator("u"), 6) == ()


def test_04_anomaly_reduction():
    with criterion(4, "anomaly polynomial substitutions"):
        p1, p2, ch2, ch4 = ANOMALY_RING.gens()
        het = anomaly_polynomial("heterotic").value
        assert substitute(het, {"p1": 0, "ch2": 0}) == ch4 - p2 / 48
        iia = anomaly_polynomial("iia").value
        assert substitute(iia, {"p1": 0}) == p2 / 48


def test_05_ladder_monotonicity():
    with criterion(5, "structure ladder monotone on 1000 random inputs"):
        rng = random.Random(5)
        for _ in range(1000):
            x = random_space(rng)
            tx, e = random_bundles(rng, x)
            mode = rng.choice(list(Mode))
            report = structure_ladder(x, tx, e, mode, rng.choice(("six", "fortyeight")))
            verdicts = [report.verdict(lv) for lv in LEVELS]
            for i, v in enumerate(verdicts):
                if v is Verdict.ADMITS:
                    assert all(w is Verdict.ADMITS for w in verdicts[:i]), verdicts


def test_06_cover_cohomology():
    with criterion(6, "rational cohomology of BU<6> and BString", limit=1.0):
        status, out = cli("covers", "--series=bu", "--stage=6", "--format=text")
        assert status == 0
        assert "P[c3, c4, c5, c6" in out.splitlines()[0]
        status, out = cli("covers", "--series=bso", "--stage=string", "--maxdeg=16", "--format=text")
        assert status == 0
        assert out.splitlines()[0].endswith("P[p2, p3, p4, ...]")
        ring = rational_cover_cohomology("bso", "string", 16)
        betti = betti_table(ring, 16)
        assert (betti[8], betti[12], betti[16]) == (1, 1, 2)
        assert betti == generating_function_betti([d for _, d in ring.generators], 16)


def _transgression_run(j: int, count: int, dim: int, limit: float) -> None:
    rng = random.Random(70 + j)
    start = time.perf_counter()
    nontrivial = 0
    for i in range(count):
        a = random_connection(rng, dim, 1 + i % 3, 2)
        check = verify_transgression(a, j)
        assert check.exact, (j, i)
        nontrivial += not check.rhs.is_zero()
    assert nontrivial > 0
    elapsed = time.perf_counter() - start
    assert elapsed < limit, f"j={j} took {elapsed:.2f}s"


def test_07_transgression():
    with criterion(7, "d T_(2j-1) = Tr(F^j) for j = 1..4, 20 connections each"):
        for j in (1, 2, 3):
            _transgression_run(j, 20, 2 * j + 1, 5.0)
        _transgression_run(4, 20, 8, 300.0)


def test_08_pure_gauge():
    with criterion(8, "pure gauge: F = 0 and T3 = -Tr(A^3)/3"):
        rng = random.Random(8)
        for i in range(12):
            g, g_inv = random_gauge(rng, 4, 1 + i % 3, 2, 2)
            a = pure_gauge(g, g_inv)
            assert curvature(a).is_zero()
            t3 = cs_transgression(a, 2).unnormalized_form
            assert t3 == trace(power(a, 3)).scale(Fraction(-1, 3))


def test_09_gauge_invariance():
    with criterion(9, "Tr(F^j) gauge invariant for j = 1..4"):
        rng = random.Random(9)
        for j in (1, 2, 3, 4):
            dim = max(2 * j, 4)
            for i in range(6):
                m = 1 + i % 2 if j == 4 else 1 + i % 3
                a = random_connection(rng, dim, m, 1)
                g, g_inv = random_gauge(rng, dim, m, 1, 1)
                ag = gauge_transform(a, g, g_inv)
                lhs = chern_character_form(curvature(ag), j).form
                assert lhs == chern_character_form(curvature(a), j).form, (j, i)


def test_10_spin_class_arithmetic():
    with criterion(10, "spin classes invert and Q2 is additive"):
        ring = GradedRing([("p1", 4), ("p2", 8)], truncation=8)
        p1, p2 = ring.gens()
        q1, q2 = spin_classes(p1, p2)
        assert 2 * q1 == p1 and q1 * q1 + 2 * q2 == p2

        h4 = GroupPresentation(1, (), ("a",))
        h8 = GroupPresentation(1, (2, 3), ("u", "t2", "t3"))
        x = BaseSpace("X", 8, {4: h4, 8: h8})

        def cls(free, t2=0, t3=0):
            return CohClass(8, (Fraction(free),), (t2, t3), h8)

        def real(name, q2):
            p2_value = q2 * 2
            return Bundle(
                name, x, FieldKind.REAL, 8, {"p1": x.zero(4), "p2": p2_value}, True, True,
                {"half_p1": x.zero(4), "Q2": q2},
            )

        e, f = real("E", cls(1, 1)), real("F", cls(2, 0, 1))
        s = direct_sum(e, f)
        assert s.designated["Q2"] == e.designated["Q2"] + f.designated["Q2"]
        assert s.validity_of("Q2") is Validity.EXACT


def test_11_serre_page_check():
    with criterion(11, "Serre page complex concentrated in degree 0"):
        check = serre_page_check([3], {"y": "x3"}, max_degree=8)
        assert check.concentrated_in_degree_zero
        assert check.betti == {0: 1, **{d: 0 for d in range(1, 9)}}


PIECES = [
    "[space X]", "[bundle E]", "[patch P]", "[connection A]", "[result]", "dim = 4", "dim = 8",
    "H4 = Z<u>", "H8 = Z<v> + Z/2<t>", "p1 = 2*u", "p2 = 6*v + t", "sixth_p2 = v", "space = X",
    "kind = real", "kind = complex", "rank = 3", "c2 = u", "A1 = [[x1]]", "A2 = [[x1, 0], [x2^2, x3]]",
    "size = 2", "patch = P", "w1 = 0", "w2 = unknown", "#", "=", "[", "]", "(", ")", "*", "^", "-", "/",
    "9" * 40, "<", ">", ",", "\n", "\r\n", "\t", " ", "\x00", "é", "﻿",
]


def _mutate(rng: random.Random, corpus: list[str]) -> str | bytes:
    choice = rng.random()
    if choice < 0.1:
        return bytes(rng.randrange(256) for _ in range(rng.randint(0, 200)))
    if choice < 0.4:
        return "\n".join(rng.choice(PIECES) + rng.choice(["", " ", rng.choice(PIECES)]) for _ in range(rng.randint(0, 25)))
    text = rng.choice(corpus)
    for _ in range(rng.randint(1, 6)):
        pos = rng.randint(0, len(text))
        op = rng.random()
        if op < 0.4:
            text = text[:pos] + rng.choice(PIECES) + text[pos:]
        elif op < 0.7:
            text = text[:pos] + text[pos + rng.randint(1, 8) :]
        else:
            lines = text.split("\n")
            rng.shuffle(lines)
            text = "\n".join(lines)
    return text


def test_12_parser_robustness():
    with criterion(12, f"parser fuzz for {FUZZ_SECONDS:g}s and corpus round trip"):
        corpus = [p.read_text() for p in SAMPLES]
        for text in corpus:
            doc = parse(text)
            again = parse(render(doc))
            assert again == doc and again.model == doc.model
        rng = random.Random(12)
        deadline = time.perf_counter() + FUZZ_SECONDS
        cases = accepted = 0
        while time.perf_counter() < deadline:
            data = _mutate(rng, corpus)
            cases += 1
            try:
                doc = parse(data)
            except ParseError as err:
                text = data.decode("utf-8", "replace") if isinstance(data, bytes) else data
                assert 1 <= err.line <= text.count("\n") + 2, (err, data)
                assert err.column >= 1
                continue
            accepted += 1
            assert parse(render(doc)) == doc
            if accepted % 10 == 0:
                flags = {"report_only": True}
                for command in ("check", "count"):
                    result = run(command, dict(flags, level="string"), doc)
                    assert result.status != EXIT_INTERNAL, result.text
        assert cases > 0


if __name__ == "__main__":
    import pytest

    sys.exit(pytest.main([__file__, "-q"]))
