"""Command-line front end.

Usage: ``charclass <command> [FILE | --all DIR] [flags]``.  Commands:

``check``      structure ladder for a real bundle TX (and a gauge bundle E in pair mode)
``anomaly``    evaluate an anomaly polynomial on (TX, E)
``covers``     rational cohomology of a connected cover of BU or BSO
``cs-verify``  check d(T_{2j-1}) = Tr(F^j) for a connection of the document
``ch-expand``  ch_k in terms of Chern classes
``count``      group acting on string or fivebrane structures

Exit status: 0 ok, 1 obstructed (``check`` without ``--report-only``),
2 input error, 3 internal invariant violation.  Output is a human report
followed by a ``[result]`` block in the input grammar.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .bundle_model import Bundle, FieldKind, RationalClass
from .char_calc import ch_expansion
from .cover_cohomology import NAMED_STAGES, betti_table, rational_cover_cohomology
from .cs_forms import cs_transgression, verify_transgression
from .document import Entry, InputDocument, ParseError, class_expression, parse, render_result
from .obstruction import (
    anomaly_polynomial,
    count_structures,
    evaluate_anomaly,
    structure_ladder,
)

EXIT_OK = 0
EXIT_OBSTRUCTED = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

DOCUMENT_SUFFIX = ".txt"


class CliInputError(ValueError):
    """Flag or document content that a command cannot work with."""


@dataclass(frozen=True)
class CommandResult:
    status: int
    text: str
    machine: tuple[tuple[str, str], ...]

    def render(self, fmt: str = "both") -> str:
        parts = []
        if fmt in ("both", "text"):
            parts.append(self.text.rstrip("\n") + "\n")
        if fmt in ("both", "kv"):
            parts.append(render_result(self.machine))
        return "\n".join(parts)


def _flags(flags) -> dict:
    return dict(flags) if isinstance(flags, Mapping) else dict(vars(flags))


def _pick(items: Mapping, name: str | None, what: str, keep: Callable = lambda _: True):
    """The item called ``name``, or the only candidate when ``name`` is omitted."""
    if name is not None:
        if name not in items or not keep(items[name]):
            raise CliInputError(f"no {what} named '{name}'")
        return items[name]
    candidates = [v for v in items.values() if keep(v)]
    if len(candidates) != 1:
        raise CliInputError(f"document has {len(candidates)} {what}s; choose one by name")
    return candidates[0]


def _need(doc: InputDocument | None, command: str) -> InputDocument:
    if doc is None:
        raise CliInputError(f"'{command}' needs an input document")
    return doc


def _real(b: Bundle) -> bool:
    return b.field_kind is FieldKind.REAL


def _complex(b: Bundle) -> bool:
    return b.field_kind is FieldKind.COMPLEX


def _solutions_text(value: RationalClass) -> tuple[str, list[tuple[str, str]]]:
    count = value.solution_count()
    if count == 0:
        return "not integral", [("integral", "false")]
    if count == 1:
        x = value.unique()
        return f"integral class {x.render()}", [("integral", "true"), ("class", x.render())]
    return f"integral up to {count} torsion choices", [("integral", "ambiguous"), ("solutions", str(count))]


# -- commands -------------------------------------------------------------------


def cmd_check(f: dict, doc: InputDocument | None) -> CommandResult:
    model = _need(doc, "check").model
    tx = _pick(model.bundles, f.get("tx"), "real bundle", _real)
    mode = f.get("mode") or ("pair" if f.get("e") else "manifold")
    e = _pick(model.bundles, f.get("e"), "complex bundle", _complex) if mode == "pair" else None
    report = structure_ladder(tx.base, tx, e, mode, f.get("normalization"))
    status = EXIT_OBSTRUCTED if report.any_obstructed() and not f.get("report_only") else EXIT_OK
    head = f"space {tx.base.name}, tangent bundle {tx.name}" + (f", gauge bundle {e.name}" if e else "")
    kv = [("command", "check"), ("space", tx.base.name), ("tx", tx.name)]
    if e is not None:
        kv.append(("e", e.name))
    kv += report.key_values() + [("status", str(status))]
    return CommandResult(status, head + "\n" + report.render(), tuple(kv))


def cmd_anomaly(f: dict, doc: InputDocument | None) -> CommandResult:
    model = _need(doc, "anomaly").model
    if not f.get("model"):
        raise CliInputError("anomaly needs --model=iia|heterotic|reduced|gs")
    tx = _pick(model.bundles, f.get("tx"), "real bundle", _real)
    complexes = [b for b in model.bundles.values() if _complex(b)]
    e = None
    if f.get("e") or len(complexes) == 1:
        e = _pick(model.bundles, f.get("e"), "complex bundle", _complex)
    ap = anomaly_polynomial(f["model"])
    value = evaluate_anomaly(ap.model, tx, e)
    verdict, extra = _solutions_text(value)
    lines = [
        f"anomaly model {ap.model.value} (prefactor {ap.normalization.render()})",
        f"  polynomial = {ap.value.render_common_denominator()}",
        f"  value on ({tx.name}, {e.name if e else 'no gauge bundle'}) = {value.render()} in H^{ap.degree}",
        f"  {verdict}",
    ]
    kv = [
        ("command", "anomaly"),
        ("model", ap.model.value),
        ("prefactor", ap.normalization.render()),
        ("polynomial", ap.value.render()),
        ("degree", str(ap.degree)),
        ("value", value.render()),
    ] + extra
    return CommandResult(EXIT_OK, "\n".join(lines), tuple(kv))


def _default_maxdeg(doc: InputDocument | None, fallback: int) -> int:
    if doc is not None and len(doc.model.spaces) == 1:
        (x,) = doc.model.spaces.values()
        return max(2 * x.dimension, 1)
    return fallback


def cmd_covers(f: dict, doc: InputDocument | None) -> CommandResult:
    series = (f.get("series") or "").upper()
    if not series or f.get("stage") is None:
        raise CliInputError("covers needs --series=bu|bso and --stage=S")
    maxdeg = f.get("maxdeg")
    maxdeg = _default_maxdeg(doc, 16) if maxdeg is None else maxdeg
    ring = rational_cover_cohomology(series, f["stage"], maxdeg)
    betti = betti_table(ring, maxdeg)
    lines = [ring.render()]
    for step in ring.steps:
        lines.append(f"  killed {step.removed} (pi_{step.homotopy_degree}); Koszul check {step.check.render()}")
    lines.append("  degree  betti")
    for d, b in betti.items():
        if b:
            lines.append(f"  {d:>6}  {b:>5}")
    kv = [
        ("command", "covers"),
        ("series", ring.series),
        ("stage", str(ring.kill_level)),
        ("maxdeg", str(maxdeg)),
        ("generators", ", ".join(n for n, _ in ring.generators) or "none"),
        ("killed", ", ".join(s.removed for s in ring.steps) or "none"),
    ] + [(f"betti.{d}", str(b)) for d, b in betti.items()]
    return CommandResult(EXIT_OK, "\n".join(lines), tuple(kv))


def cmd_cs_verify(f: dict, doc: InputDocument | None) -> CommandResult:
    model = _need(doc, "cs-verify").model
    conn = _pick(model.connections, f.get("connection"), "connection")
    j = f.get("j")
    if j is None or j < 1:
        raise CliInputError("cs-verify needs --j=J with J >= 1")
    form = conn.form
    check = verify_transgression(form, j)
    t = cs_transgression(form, j)
    label = f"dT{2 * j - 1} = Tr(F^{j})"
    status = EXIT_OK if check.exact else EXIT_INTERNAL
    lines = [
        f"connection {conn.name} on patch {conn.patch.name} (dim {form.n}, {form.m}x{form.m} matrices)",
        f"{label}: {'exact' if check.exact else 'MISMATCH'}",
        f"  normalized transgression = {t.prefactor.render()} * T{2 * j - 1}",
        f"  homotopy prefactor = {t.homotopy_prefactor.render()}",
    ]
    if 2 * j > form.n:
        lines.append(f"  both sides vanish: a {2 * j}-form on a {form.n}-dimensional patch")
    kv = (
        ("command", "cs-verify"),
        ("connection", conn.name),
        ("j", str(j)),
        ("identity", label),
        ("exact", "true" if check.exact else "false"),
        ("prefactor", t.prefactor.render()),
        ("homotopy_prefactor", t.homotopy_prefactor.render()),
        ("components", str(len(check.rhs.comps))),
    )
    return CommandResult(status, "\n".join(lines), kv)


def cmd_ch_expand(f: dict, doc: InputDocument | None) -> CommandResult:
    k = f.get("k")
    if k is None or not 1 <= k <= 16:
        raise CliInputError("ch-expand needs --k=K with 1 <= K <= 16")
    maxdeg = f.get("maxdeg")
    maxdeg = 2 * k if maxdeg is None else maxdeg
    poly = ch_expansion(k, max(maxdeg, 2 * k))
    if maxdeg < 2 * k:
        poly = poly.ring.zero()
    text = f"ch{k} = {poly.render_common_denominator()}"
    kv = (
        ("command", "ch-expand"),
        ("k", str(k)),
        (f"ch{k}", poly.render()),
        (f"ch{k}.common", poly.render_common_denominator()),
    )
    return CommandResult(EXIT_OK, text, kv)


def cmd_count(f: dict, doc: InputDocument | None) -> CommandResult:
    model = _need(doc, "count").model
    level = f.get("level")
    if level not in ("string", "fivebrane"):
        raise CliInputError("count needs --level=string|fivebrane")
    x = _pick(model.spaces, f.get("space"), "space")
    image = None
    if f.get("quotient"):
        degree = 3 if level == "string" else 7
        image = []
        for piece in f["quotient"].split(";"):
            entry = Entry("quotient", piece.strip())
            try:
                image.append(class_expression(entry, x, degree))
            except ParseError as err:
                raise CliInputError(f"--quotient: {err.message}") from None
    torsor = count_structures(x, level, image)
    text = f"{level} structures on {x.name}: {torsor.render()}"
    kv = (
        ("command", "count"),
        ("space", x.name),
        ("level", level),
        ("group", torsor.group.render()),
        ("exact", "true" if torsor.quotient_applied else "false"),
        ("unique", "true" if torsor.unique else "false"),
    )
    return CommandResult(EXIT_OK, text, kv)


COMMANDS: dict[str, Callable[[dict, InputDocument | None], CommandResult]] = {
    "check": cmd_check,
    "anomaly": cmd_anomaly,
    "covers": cmd_covers,
    "cs-verify": cmd_cs_verify,
    "ch-expand": cmd_ch_expand,
    "count": cmd_count,
}

# section kinds a document must contain for a batch run to apply the command
_RELEVANT = {
    "check": "bundle",
    "anomaly": "bundle",
    "cs-verify": "connection",
    "count": "space",
}


def run(command: str, flags, document: InputDocument | None = None) -> CommandResult:
    """Dispatch ``command``; module errors become exit status 2 or 3 with a message."""
    if command not in COMMANDS:
        return CommandResult(EXIT_INPUT, f"error: unknown command '{command}'", (("error", "unknown command"),))
    try:
        return COMMANDS[command](_flags(flags), document)
    except (ValueError, KeyError) as err:
        msg = err.args[0] if isinstance(err, KeyError) and err.args else err
        return CommandResult(EXIT_INPUT, f"error: {msg}", (("command", command), ("error", str(msg))))
    except (AssertionError, ArithmeticError) as err:
        return CommandResult(
            EXIT_INTERNAL, f"internal invariant violated: {err}", (("command", command), ("error", str(err)))
        )


# -- argument parsing -----------------------------------------------------------


def _stage(text: str):
    return int(text) if text.isdigit() else text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="charclass", description="Exact characteristic-class calculator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("file", nargs="?", help="input document ('-' for stdin)")
        p.add_argument("--all", metavar="DIR", help=f"run on every *{DOCUMENT_SUFFIX} document in DIR")
        p.add_argument("--format", choices=("both", "text", "kv"), default="both")
        p.add_argument("--maxdeg", type=int, help="truncation degree (default 2 x space dimension)")
        return p

    p = add("check", "structure ladder oriented -> spin -> string -> fivebrane")
    p.add_argument("--tx", help="real bundle playing the tangent bundle")
    p.add_argument("--e", help="complex gauge bundle (pair mode)")
    p.add_argument("--mode", choices=("manifold", "pair"))
    p.add_argument("--normalization", choices=("six", "fortyeight"))
    p.add_argument("--report-only", action="store_true", help="exit 0 even when obstructed")

    p = add("anomaly", "evaluate an anomaly polynomial")
    p.add_argument("--model", choices=("iia", "heterotic", "reduced", "gs"))
    p.add_argument("--tx")
    p.add_argument("--e")

    p = add("covers", "rational cohomology of a connected cover")
    p.add_argument("--series", type=str.lower, choices=("bu", "bso"))
    names = sorted({n for stages in NAMED_STAGES.values() for n in stages})
    p.add_argument("--stage", type=_stage, help=f"integer or one of {', '.join(names)}")

    p = add("cs-verify", "verify the transgression identity")
    p.add_argument("--j", type=int)
    p.add_argument("--connection")

    p = add("ch-expand", "Chern character component in Chern classes")
    p.add_argument("--k", type=int)

    p = add("count", "torsor of string or fivebrane structures")
    p.add_argument("--level", choices=("string", "fivebrane"))
    p.add_argument("--space")
    p.add_argument("--quotient", help="';'-separated classes generating the subgroup to divide out")
    return parser


def _load(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _run_file(command: str, args: argparse.Namespace, path: str | None, out, err) -> int:
    doc = None
    if path is not None:
        try:
            doc = parse(_load(path))
        except OSError as exc:
            err.write(f"{path}: error: {exc.strerror or exc}\n")
            return EXIT_INPUT
        except ParseError as exc:
            err.write(f"{path}:{exc.line}:{exc.column}: error: {exc.message}\n")
            return EXIT_INPUT
    result = run(command, args, doc)
    if result.status in (EXIT_INPUT, EXIT_INTERNAL):
        err.write((f"{path}: " if path else "") + result.text + "\n")
        return result.status
    out.write(result.render(args.format))
    return result.status


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    if args.all is None:
        return _run_file(args.command, args, args.file, out, err)
    if args.file is not None:
        err.write("error: give either FILE or --all DIR\n")
        return EXIT_INPUT
    folder = Path(args.all)
    if not folder.is_dir():
        err.write(f"{folder}: error: not a directory\n")
        return EXIT_INPUT
    status = EXIT_OK
    for path in sorted(folder.glob(f"*{DOCUMENT_SUFFIX}")):
        out.write(f"== {path.name} ==\n")
        kind = _RELEVANT.get(args.command)
        if kind is not None:
            try:
                if not parse(_load(str(path))).of_kind(kind):
                    out.write(f"skipped: no {kind} section\n\n")
                    continue
            except ParseError:
                pass  # reported by the run below
        status = max(status, _run_file(args.command, args, str(path), out, err))
        out.write("\n")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
