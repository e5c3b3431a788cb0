"""Plain-text input format: parsing, validation against the algebra types, rendering.

Grammar, applied line by line (lines end at ``\\n``; a trailing ``\\r`` is dropped)::

    line    := blank | comment | header | entry
    comment := '#' anything            (a '#' anywhere starts a comment)
    header  := '[' KIND (WS NAME)? ']'  (NAME is required except for 'result')
    entry   := KEY WS* '=' WS* VALUE    (VALUE is non-empty, surrounding space dropped)
    KIND    := space | bundle | patch | connection | result
    NAME    := [A-Za-z_][A-Za-z0-9_]*
    KEY     := NAME ('.' NAME)*

Section keys:

``[space X]``
    ``dim = N`` (0..64), ``H<d> = 0`` or ``Z<u> + Z/2<t> + ...``,
    ``cup.<a>.<b> = <class expression>``.
``[bundle E]``
    ``space = X``, ``kind = real|complex``, ``rank = N``,
    ``w1``/``w2 = 0|nonzero|unknown``, ``w2_class = NAME``,
    ``p<j>``/``c<i> = <class expression>``, ``half_p1`` (alias ``Q1``),
    ``sixth_p2``, ``Q2``, ``validity = exact|mod_2_torsion``.
``[patch P]``
    ``dim = N`` (1..12), ``size = M`` (1..4), ``coords = x y z ...``.
``[connection A]``
    ``patch = P``, ``A<k> = [[p, p], [p, p]]`` (a bare polynomial when M = 1),
    the matrix multiplying ``dx_k``.
``[result]``
    free-form ``key = value`` lines; written by the CLI, never validated.

Class expressions are integer combinations of declared generators of the
slot's degree, e.g. ``p2 = 6*u8 + t2``.  Every error carries a 1-based line
and column.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .bundle_model import (
    FRACTIONAL,
    BaseSpace,
    Bundle,
    CohClass,
    FieldKind,
    GroupPresentation,
)
from .char_calc import Validity
from .cs_forms import MatrixPolyForm, parse_poly
from .expr import ExprError, evaluate, parse_expr

KINDS = ("space", "bundle", "patch", "connection", "result")
MAX_SPACE_DIM = 64
MAX_PATCH_DIM = 12
MAX_MATRIX_SIZE = 4
MAX_CONNECTION_DEGREE = 4
MAX_TORSION_ORDER = 10**9
MAX_GENERATORS = 32
MAX_RANK = 10**6

_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_HEADER = re.compile(rf"\[\s*({_NAME})\s*(?:\s({_NAME})\s*)?\]$")
_KEY = re.compile(rf"{_NAME}(?:\.(?:{_NAME}|[0-9]+))*")
_NAME_RE = re.compile(rf"{_NAME}$")
_GROUP_TERM = re.compile(rf"\s*Z(?:\s*/\s*(\d+))?\s*<\s*({_NAME})\s*>\s*$")


class ParseError(ValueError):
    """Diagnostic at a 1-based ``line`` and ``column``."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self):
        return f"{self.line}:{self.column}: {self.message}"


@dataclass(frozen=True)
class Entry:
    key: str
    value: str
    line: int = field(default=0, compare=False)
    key_col: int = field(default=1, compare=False)
    value_col: int = field(default=1, compare=False)

    def error(self, message: str, offset: int | None = None) -> ParseError:
        """Diagnostic pointing into the value (``offset`` is 0-based) or at the key."""
        if offset is None:
            return ParseError(message, self.line, self.key_col)
        return ParseError(message, self.line, self.value_col + offset)


@dataclass
class Section:
    kind: str
    name: str
    entries: list[Entry] = field(default_factory=list)
    line: int = field(default=0, compare=False)

    def get(self, key: str) -> Entry | None:
        for e in self.entries:
            if e.key == key:
                return e
        return None

    def error(self, message: str) -> ParseError:
        return ParseError(f"[{self.kind} {self.name}]: {message}", self.line, 1)

    def require(self, key: str) -> Entry:
        e = self.get(key)
        if e is None:
            raise self.error(f"missing required key '{key}'")
        return e


@dataclass(frozen=True)
class Patch:
    name: str
    dim: int
    size: int
    coords: tuple[str, ...]


@dataclass(frozen=True)
class Connection:
    name: str
    patch: Patch
    form: MatrixPolyForm


@dataclass
class Model:
    spaces: dict[str, BaseSpace] = field(default_factory=dict)
    bundles: dict[str, Bundle] = field(default_factory=dict)
    patches: dict[str, Patch] = field(default_factory=dict)
    connections: dict[str, Connection] = field(default_factory=dict)


@dataclass
class InputDocument:
    sections: list[Section] = field(default_factory=list)
    model: Model = field(default_factory=Model, compare=False, repr=False)

    def section(self, kind: str, name: str = "") -> Section | None:
        for s in self.sections:
            if s.kind == kind and s.name == name:
                return s
        return None

    def of_kind(self, kind: str) -> list[Section]:
        return [s for s in self.sections if s.kind == kind]


# -- syntax -------------------------------------------------------------------


def _decode(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as err:
        before = data[: err.start]
        line = before.count(b"\n") + 1
        col = err.start - (before.rfind(b"\n") + 1) + 1
        raise ParseError("invalid UTF-8 byte", line, col) from None


def parse_syntax(text: str | bytes) -> InputDocument:
    """Split text into sections and entries without interpreting values."""
    if isinstance(text, (bytes, bytearray)):
        text = _decode(bytes(text))
    doc = InputDocument()
    current: Section | None = None
    seen: set[tuple[str, str]] = set()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        if raw.endswith("\r"):
            raw = raw[:-1]
        hash_at = raw.find("#")
        content = raw if hash_at < 0 else raw[:hash_at]
        stripped = content.strip()
        if not stripped:
            continue
        indent = len(content) - len(content.lstrip())
        col = indent + 1
        if stripped.startswith("["):
            m = _HEADER.match(stripped)
            if m is None:
                raise ParseError("malformed section header; expected '[kind name]'", lineno, col)
            kind, name = m.group(1), m.group(2) or ""
            if kind not in KINDS:
                raise ParseError(f"unknown section kind '{kind}'", lineno, col + m.start(1))
            if not name and kind != "result":
                raise ParseError(f"[{kind}] section needs a name", lineno, col)
            if (kind, name) in seen:
                raise ParseError(f"duplicate section [{kind} {name}]", lineno, col)
            seen.add((kind, name))
            current = Section(kind, name, [], lineno)
            doc.sections.append(current)
            continue
        m = _KEY.match(stripped)
        if m is None:
            raise ParseError("expected 'key = value' or a section header", lineno, col)
        rest = stripped[m.end() :]
        ws = len(rest) - len(rest.lstrip())
        if not rest[ws:].startswith("="):
            raise ParseError("expected '=' after key", lineno, col + m.end() + ws)
        after = rest[ws + 1 :]
        value = after.strip()
        value_off = m.end() + ws + 1 + (len(after) - len(after.lstrip()))
        if not value:
            raise ParseError("empty value", lineno, col + value_off)
        if current is None:
            raise ParseError("entry outside of any section", lineno, col)
        key = m.group(0)
        if current.get(key) is not None:
            raise ParseError(f"duplicate key '{key}'", lineno, col)
        current.entries.append(Entry(key, value, lineno, col, col + value_off))
    return doc


def render(doc: InputDocument) -> str:
    """Canonical text of ``doc``; ``parse_syntax(render(d)) == d``."""
    blocks = []
    for s in doc.sections:
        head = f"[{s.kind} {s.name}]" if s.name else f"[{s.kind}]"
        blocks.append("\n".join([head] + [f"{e.key} = {e.value}" for e in s.entries]))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def render_result(entries: Iterable[tuple[str, str]]) -> str:
    """``[result]`` block in the input grammar; values are kept on one line."""
    doc = InputDocument([Section("result", "", [Entry(k, _one_line(v)) for k, v in entries])])
    return render(doc)


def _one_line(value: str) -> str:
    value = " ".join(str(value).replace("#", "no.").split())
    return value or "none"


# -- values ---------------------------------------------------------------------


def _int_value(entry: Entry, lo: int, hi: int) -> int:
    v = entry.value
    if not re.fullmatch(r"[+-]?\d+", v):
        raise entry.error(f"'{entry.key}' must be an integer", 0)
    n = int(v) if len(v) <= 20 else hi + 1
    if not lo <= n <= hi:
        raise entry.error(f"'{entry.key}' must lie in {lo}..{hi}", 0)
    return n


def _name_value(entry: Entry) -> str:
    if not _NAME_RE.match(entry.value):
        raise entry.error(f"'{entry.key}' must be a name", 0)
    return entry.value


def _choice(entry: Entry, options: Mapping[str, object]):
    if entry.value not in options:
        raise entry.error(f"'{entry.key}' must be one of {', '.join(options)}", 0)
    return options[entry.value]


class _Linear:
    """Rational linear combination of generator names plus a constant."""

    __slots__ = ("coeffs", "const", "cols")

    def __init__(self, coeffs=None, const=Fraction(0), cols=None):
        self.coeffs: dict[str, Fraction] = coeffs or {}
        self.const = const
        self.cols: dict[str, int] = cols or {}

    def _combine(self, other: "_Linear", sign: int) -> "_Linear":
        coeffs = dict(self.coeffs)
        for k, v in other.coeffs.items():
            coeffs[k] = coeffs.get(k, 0) + sign * v
        return _Linear(coeffs, self.const + sign * other.const, {**other.cols, **self.cols})

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return _Linear({k: -v for k, v in self.coeffs.items()}, -self.const, self.cols)

    def _scaled(self, c: Fraction) -> "_Linear":
        return _Linear({k: c * v for k, v in self.coeffs.items()}, c * self.const, self.cols)

    def is_constant(self) -> bool:
        return not any(self.coeffs.values())

    def __mul__(self, other: "_Linear"):
        if other.is_constant():
            return self._scaled(other.const)
        if self.is_constant():
            return other._scaled(self.const)
        raise ExprError("products of classes are not allowed here", min(other.cols.values()))

    def __pow__(self, e: int):
        if e == 1:
            return self
        if self.is_constant():
            return _Linear({}, self.const**e)
        raise ExprError("powers of classes are not allowed here", min(self.cols.values()))


def class_expression(entry: Entry, space: BaseSpace, degree: int) -> CohClass:
    """Evaluate ``entry.value`` as an integral class in ``H^degree`` of ``space``."""
    try:
        lin = evaluate(
            parse_expr(entry.value),
            lambda q: _Linear({}, q),
            lambda ident, col: _Linear({ident: Fraction(1)}, Fraction(0), {ident: col}),
        )
    except ExprError as err:
        raise entry.error(err.message, err.column) from None
    if lin.const != 0:
        raise entry.error(f"constant term in a class of degree {degree}", 0)
    result = space.zero(degree)
    for ident, c in lin.coeffs.items():
        col = lin.cols.get(ident, 0)
        if ident not in space.generator_names():
            raise entry.error(f"undeclared generator '{ident}' in space {space.name}", col)
        gdeg = space.generator_degree(ident)
        if gdeg != degree:
            raise entry.error(
                f"degree mismatch: '{ident}' has degree {gdeg}, '{entry.key}' needs degree {degree}", col
            )
        if c.denominator != 1:
            raise entry.error(f"coefficient {c} of '{ident}' is not an integer", col)
        if c:
            result = result + space.generator(ident) * int(c)
    return result


def group_expression(entry: Entry) -> GroupPresentation:
    """``0`` or ``Z<u> + Z/n<t> + ...``; free generators are listed first."""
    if entry.value == "0":
        return GroupPresentation(0)
    free, torsion = [], []
    offset = 0
    for piece in entry.value.split("+"):
        m = _GROUP_TERM.match(piece)
        if m is None:
            raise entry.error("expected 'Z<name>' or 'Z/n<name>'", offset + len(piece) - len(piece.lstrip()))
        if m.group(1) is None:
            free.append(m.group(2))
        else:
            n = int(m.group(1)) if len(m.group(1)) <= 12 else MAX_TORSION_ORDER + 1
            if not 2 <= n <= MAX_TORSION_ORDER:
                raise entry.error(f"torsion order must lie in 2..{MAX_TORSION_ORDER}", offset + m.start(1))
            torsion.append((n, m.group(2)))
        offset += len(piece) + 1
    names = free + [t for _, t in torsion]
    if len(names) > MAX_GENERATORS:
        raise entry.error(f"more than {MAX_GENERATORS} generators", 0)
    if len(set(names)) != len(names):
        raise entry.error("repeated generator name", 0)
    return GroupPresentation(len(free), tuple(n for n, _ in torsion), tuple(names))


def _matrix_rows(entry: Entry, size: int) -> list[list[tuple[str, int]]]:
    """Split ``[[a, b], [c, d]]`` into entry texts with their 0-based value offsets."""
    text = entry.value
    if not text.startswith("["):
        if size != 1:
            raise entry.error(f"expected a {size}x{size} matrix '[[...], ...]'", 0)
        return [[(text, 0)]]
    rows: list[list[tuple[str, int]]] = []
    depth, start, row = 0, 0, None
    for i, ch in enumerate(text):
        if ch == "[":
            depth += 1
            if depth == 2:
                row, start = [], i + 1
            elif depth > 2:
                raise entry.error("matrices nest two brackets deep", i)
        elif ch == "]":
            if depth == 2:
                row.append((text[start:i], start))
                rows.append(row)
                row = None
            depth -= 1
            if depth < 0:
                raise entry.error("unbalanced ']'", i)
            if depth == 0 and text[i + 1 :].strip():
                raise entry.error("trailing text after matrix", i + 1)
        elif ch == "," and depth == 2:
            row.append((text[start:i], start))
            start = i + 1
        elif depth == 1 and not (ch.isspace() or ch == ","):
            raise entry.error("expected '[' to start a row", i)
        elif depth == 0 and not ch.isspace():
            raise entry.error("unexpected text", i)
    if depth != 0:
        raise entry.error("unbalanced '['", len(text) - 1)
    if len(rows) != size or any(len(r) != size for r in rows):
        raise entry.error(f"expected a {size}x{size} matrix", 0)
    return rows


# -- semantic model -----------------------------------------------------------


def _build_space(s: Section) -> BaseSpace:
    dim = _int_value(s.require("dim"), 0, MAX_SPACE_DIM)
    groups: dict[int, GroupPresentation] = {}
    where: dict[str, Entry] = {}
    for e in s.entries:
        m = re.fullmatch(r"H(\d+)", e.key)
        if e.key == "dim" or e.key.startswith("cup."):
            continue
        if m is None:
            raise e.error(f"unknown key '{e.key}' in a space section")
        d = int(m.group(1)) if len(m.group(1)) <= 3 else MAX_SPACE_DIM + 1
        if d > dim:
            raise e.error(f"H^{d} lies above the dimension {dim}")
        g = group_expression(e)
        if d == 0 and (g.free_rank != 1 or g.torsion_orders):
            raise e.error("H0 must be Z<name>", 0)
        for n in g.names:
            if n in where:
                raise e.error(f"generator '{n}' already declared on line {where[n].line}", 0)
            where[n] = e
        groups[d] = g
    space = BaseSpace(s.name, dim, groups)
    cup: dict[tuple[str, str], CohClass] = {}
    for e in s.entries:
        if not e.key.startswith("cup."):
            continue
        parts = e.key.split(".")
        if len(parts) != 3:
            raise e.error("cup products are written 'cup.<a>.<b>'")
        a, b = parts[1], parts[2]
        for n in (a, b):
            if n not in where:
                raise e.error(f"undeclared generator '{n}' in cup product")
        d = space.generator_degree(a) + space.generator_degree(b)
        value = class_expression(e, space, d)
        if (a, b) in cup or (b, a) in cup:
            raise e.error(f"cup product {a}*{b} given twice")
        cup[(a, b)] = value
        try:
            BaseSpace(s.name, dim, groups, {(a, b): value})
        except ValueError as err:
            raise e.error(str(err), 0) from None
    return BaseSpace(s.name, dim, groups, cup) if cup else space


_W = {"0": True, "nonzero": False, "unknown": None}
_KIND = {"real": FieldKind.REAL, "complex": FieldKind.COMPLEX}
_VALIDITY = {v.value: v for v in Validity}


def _build_bundle(s: Section, spaces: Mapping[str, BaseSpace]) -> Bundle:
    space_entry = s.require("space")
    space_name = _name_value(space_entry)
    if space_name not in spaces:
        raise space_entry.error(f"undeclared space '{space_name}'", 0)
    space = spaces[space_name]
    kind = _choice(s.require("kind"), _KIND)
    rank = _int_value(s.require("rank"), -MAX_RANK, MAX_RANK)
    prefix = "p" if kind is FieldKind.REAL else "c"
    step = 4 if kind is FieldKind.REAL else 2
    classes: dict[str, CohClass] = {}
    designated: dict[str, tuple[CohClass, Entry]] = {}
    kw: dict[str, object] = {}
    for e in s.entries:
        if e.key in ("space", "kind", "rank"):
            continue
        if e.key in ("w1", "w2"):
            kw[e.key] = _choice(e, _W)
            continue
        if e.key == "w2_class":
            kw["w2_class"] = _name_value(e)
            continue
        if e.key == "validity":
            kw["validity"] = _choice(e, _VALIDITY)
            continue
        m = re.fullmatch(r"([pc])(\d+)", e.key)
        if m is not None:
            if m.group(1) != prefix:
                raise e.error(f"a {kind.value} bundle carries {prefix}-classes, not '{e.key}'")
            i = int(m.group(2)) if len(m.group(2)) <= 3 else MAX_SPACE_DIM
            if not 1 <= i <= MAX_SPACE_DIM // step:
                raise e.error(f"class index out of range in '{e.key}'")
            classes[e.key] = class_expression(e, space, step * i)
            continue
        key = "half_p1" if e.key == "Q1" else e.key
        if key in FRACTIONAL or key == "Q2":
            if kind is not FieldKind.REAL:
                raise e.error(f"'{e.key}' only applies to real bundles")
            if key in designated:
                raise e.error("half_p1 and Q1 name the same class; give only one")
            degree = 4 if key == "half_p1" else 8
            designated[key] = (class_expression(e, space, degree), e)
            continue
        raise e.error(f"unknown key '{e.key}' in a bundle section")
    for key, (x, e) in designated.items():
        if key in FRACTIONAL:
            m, src = FRACTIONAL[key]
            if src in classes and x * m != classes[src]:
                raise e.error(f"{m}*{key} = {(x * m).render()} but {src} = {classes[src].render()}", 0)
    try:
        return Bundle(
            s.name, space, kind, rank, classes,
            designated={k: x for k, (x, _) in designated.items()}, **kw,
        )
    except ValueError as err:
        raise s.error(str(err)) from None


def _build_patch(s: Section) -> Patch:
    dim = _int_value(s.require("dim"), 1, MAX_PATCH_DIM)
    size = _int_value(s.require("size"), 1, MAX_MATRIX_SIZE)
    coords = tuple(f"x{i + 1}" for i in range(dim))
    for e in s.entries:
        if e.key in ("dim", "size"):
            continue
        if e.key != "coords":
            raise e.error(f"unknown key '{e.key}' in a patch section")
        names = e.value.replace(",", " ").split()
        if len(names) != dim:
            raise e.error(f"expected {dim} coordinate names", 0)
        for n in names:
            if not _NAME_RE.match(n):
                raise e.error(f"'{n}' is not a valid coordinate name", e.value.find(n))
        if len(set(names)) != dim:
            raise e.error("repeated coordinate name", 0)
        coords = tuple(names)
    return Patch(s.name, dim, size, coords)


def _build_connection(s: Section, patches: Mapping[str, Patch]) -> Connection:
    pe = s.require("patch")
    pname = _name_value(pe)
    if pname not in patches:
        raise pe.error(f"undeclared patch '{pname}'", 0)
    patch = patches[pname]
    n, m = patch.dim, patch.size
    comps: dict[tuple[int, ...], list] = {}
    for e in s.entries:
        if e.key == "patch":
            continue
        km = re.fullmatch(r"A(\d+)", e.key)
        if km is None:
            raise e.error(f"unknown key '{e.key}' in a connection section")
        k = int(km.group(1)) if len(km.group(1)) <= 3 else n + 1
        if not 1 <= k <= n:
            raise e.error(f"'{e.key}' refers to a coordinate outside 1..{n}")
        mat = []
        for row in _matrix_rows(e, m):
            for text, off in row:
                lead = len(text) - len(text.lstrip())
                try:
                    p = parse_poly(text.strip(), n, patch.coords, MAX_CONNECTION_DEGREE)
                except ExprError as err:
                    raise e.error(err.message, off + lead + err.column) from None
                mat.append(p.terms)
        comps[(k - 1,)] = mat
    return Connection(s.name, patch, MatrixPolyForm(n, m, 1, comps))


def build_model(doc: InputDocument) -> Model:
    """Validate every section and attach the typed objects to ``doc.model``."""
    model = Model()
    for s in doc.of_kind("space"):
        model.spaces[s.name] = _build_space(s)
    for s in doc.of_kind("bundle"):
        model.bundles[s.name] = _build_bundle(s, model.spaces)
    for s in doc.of_kind("patch"):
        model.patches[s.name] = _build_patch(s)
    for s in doc.of_kind("connection"):
        model.connections[s.name] = _build_connection(s, model.patches)
    doc.model = model
    return model


def parse(text: str | bytes) -> InputDocument:
    """Parse and validate a document; raises :class:`ParseError` on any problem."""
    doc = parse_syntax(text)
    try:
        build_model(doc)
    except ParseError:
        raise
    except ExprError as err:  # pragma: no cover - every path converts these itself
        raise ParseError(err.message, 1, 1) from None
    return doc


# -- serialization of model objects ---------------------------------------------


def space_section(x: BaseSpace) -> Section:
    """Section describing ``x`` in the input grammar."""
    entries = [Entry("dim", str(x.dimension))]
    for d in sorted(x.groups):
        entries.append(Entry(f"H{d}", x.groups[d].render()))
    done = set()
    for (a, b), value in sorted(x.cup.items()):
        if (b, a) in done:
            continue
        done.add((a, b))
        entries.append(Entry(f"cup.{a}.{b}", value.render()))
    return Section("space", x.name, entries)


def bundle_section(b: Bundle) -> Section:
    """Section describing ``b``; classes are written in the base's generators."""
    inv = {v: k for k, v in _W.items()}
    entries = [
        Entry("space", b.base.name),
        Entry("kind", b.field_kind.value),
        Entry("rank", str(b.rank)),
    ]
    for key in ("w1", "w2"):
        value = getattr(b, key)
        if value is not None:
            entries.append(Entry(key, inv[value]))
    if b.w2_class:
        entries.append(Entry("w2_class", b.w2_class))
    for key in sorted(b.classes, key=lambda k: int(k[1:])):
        entries.append(Entry(key, b.classes[key].render()))
    for key in sorted(b.designated):
        entries.append(Entry(key, b.designated[key].render()))
    if b.validity is not Validity.EXACT:
        entries.append(Entry("validity", b.validity.value))
    return Section("bundle", b.name, entries)


def document_from_model(spaces: Iterable[BaseSpace], bundles: Iterable[Bundle]) -> InputDocument:
    return InputDocument([space_section(x) for x in spaces] + [bundle_section(b) for b in bundles])


__all__ = [
    "Connection",
    "Entry",
    "InputDocument",
    "Model",
    "ParseError",
    "Patch",
    "Section",
    "build_model",
    "bundle_section",
    "class_expression",
    "document_from_model",
    "group_expression",
    "parse",
    "parse_syntax",
    "render",
    "render_result",
    "space_section",
]
