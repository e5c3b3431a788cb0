import random
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charclass.document import (
    InputDocument,
    ParseError,
    document_from_model,
    parse,
    parse_syntax,
    render,
)
from charclass.obstruction import Verdict, structure_ladder

from generators import random_bundles, random_space

SAMPLES = sorted((Path(__file__).resolve().parent.parent / "samples").glob("*.txt"))

MINIMAL = """
[space X]
dim = 4
H4 = Z<u>

[bundle TX]
space = X
kind = real
rank = 4
w1 = 0
w2 = 0
p1 = 0
"""

EIGHT = """[space X]
dim = 8
H4 = Z<u4>
H8 = Z<u8> + Z/2<t2>

[bundle TX]
space = X
kind = real
rank = 8
{line}
"""


def error_of(text: str) -> ParseError:
    with pytest.raises(ParseError) as info:
        parse(text)
    return info.value


def test_minimal_document_runs_ladder():
    doc = parse(MINIMAL)
    tx = doc.model.bundles["TX"]
    report = structure_ladder(tx.base, tx)
    assert report.verdict("string") is Verdict.ADMITS


def test_class_expression_coordinates():
    doc = parse(EIGHT.format(line="p2 = 6*u8 + t2"))
    p2 = doc.model.bundles["TX"].classes["p2"]
    assert p2.free == (Fraction(6),) and p2.torsion == (1,)


def test_degree_mismatch_points_at_generator():
    err = error_of(EIGHT.format(line="p1 = u8"))
    assert err.line == 10
    assert err.column == 6
    assert "degree mismatch" in err.message


@pytest.mark.parametrize(
    "line, column, fragment",
    [
        ("p1 = 2*q4", 8, "undeclared generator"),
        ("p1 = u4/2", 6, "not an integer"),
        ("p1 = u4*u4", 9, "products of classes"),
        ("p1 = 1", 6, "constant term"),
        ("p1 = (u4", 9, "expected ')'"),
        ("c1 = 0", 1, "carries p-classes"),
        ("colour = red", 1, "unknown key"),
        ("w2 = maybe", 6, "must be one of"),
        ("p1 =", 5, "empty value"),
        ("p1 u4", 4, "expected '='"),
    ],
)
def test_positioned_diagnostics(line, column, fragment):
    err = error_of(EIGHT.format(line=line))
    assert (err.line, err.column) == (10, column)
    assert fragment in err.message


def test_structural_errors():
    assert error_of("p1 = 0\n").message == "entry outside of any section"
    assert error_of("[space]\n").message == "[space] section needs a name"
    assert "unknown section kind" in error_of("[manifold M]\n").message
    assert "duplicate section" in error_of("[space X]\ndim = 1\n[space X]\ndim = 1\n").message
    assert "duplicate key" in error_of("[space X]\ndim = 1\ndim = 2\n").message
    assert "missing required key 'dim'" in error_of("[space X]\n").message
    err = error_of("[bundle E]\nspace = Y\nkind = real\nrank = 1\n")
    assert (err.line, err.column) == (2, 9) and "undeclared space" in err.message
    err = error_of("[space X]\ndim = 4\nH4 = Z<u> + Z/1<t>\n")
    assert (err.line, err.column) == (3, 15)


def test_invalid_utf8_is_positioned():
    err = error_of(b"[space X]\ndim = \xff\n")
    assert (err.line, err.column) == (2, 7)


def test_connection_parsing():
    text = "[patch P]\ndim = 3\nsize = 2\n[connection A]\npatch = P\nA2 = [[x1, 0], [x3^2, -x2]]\n"
    doc = parse(text)
    form = doc.model.connections["A"].form
    assert form.m == 2 and form.degree == 1
    assert set(form.comps) == {(1,)}
    err = error_of(text.replace("x3^2", "x9"))
    assert (err.line, err.column) == (6, 17)
    err = error_of(text.replace("[[x1, 0], [x3^2, -x2]]", "[[x1, 0]]"))
    assert "2x2" in err.message


def test_comments_and_crlf():
    doc = parse("# header\r\n[space X]   # trailing\r\ndim = 4 # four\r\n")
    assert doc.section("space", "X").get("dim").value == "4"


@pytest.mark.parametrize("path", SAMPLES, ids=lambda p: p.name)
def test_samples_round_trip(path):
    doc = parse(path.read_bytes())
    again = parse(render(doc))
    assert again == doc
    assert again.model == doc.model


def test_model_serialization_round_trip():
    rng = random.Random(21)
    for _ in range(50):
        x = random_space(rng)
        tx, e = random_bundles(rng, x)
        doc = document_from_model([x], [tx, e])
        back = parse(render(doc))
        assert back.model.spaces["X"] == x
        assert back.model.bundles["TX"].classes == tx.classes
        assert back.model.bundles["E"].classes == e.classes
        assert back.model.bundles["TX"].designated == tx.designated


GRAMMAR_PIECES = st.sampled_from(
    ["[space X]", "[bundle E]", "[patch P]", "[connection A]", "[result]", "dim = 4", "H4 = Z<u>",
     "p1 = 2*u", "space = X", "kind = real", "rank = 3", "A1 = [[x1]]", "size = 1", "patch = P",
     "#", "=", "[", "]", "(", ")", "*", "^", "9" * 30, "\n", "\r\n", " ", "\x00", "é"]
)


@settings(max_examples=300, deadline=None)
@given(st.lists(GRAMMAR_PIECES, max_size=40))
def test_parser_total_on_grammar_soup(pieces):
    text = "".join(pieces)
    try:
        doc = parse(text)
    except ParseError as err:
        assert err.line >= 1 and err.column >= 1
    else:
        assert isinstance(doc, InputDocument)
        assert parse_syntax(render(doc)) == doc


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=300))
def test_parser_total_on_bytes(data):
    try:
        parse(data)
    except ParseError as err:
        assert err.line >= 1 and err.column >= 1
