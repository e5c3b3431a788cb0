import io
import subprocess
import sys
from pathlib import Path

import pytest

from charclass.cli import EXIT_INPUT, EXIT_OBSTRUCTED, EXIT_OK, main, run
from charclass.document import parse, parse_syntax, render

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def call(*argv: str) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    status = main(list(argv), out, err)
    return status, out.getvalue(), err.getvalue()


def result_block(text: str) -> dict[str, str]:
    doc = parse_syntax(text[text.index("[result]") :])
    return {e.key: e.value for e in doc.section("result").entries}


def sample(name: str) -> str:
    return str(SAMPLES / name)


def test_ch_expand():
    status, out, _ = call("ch-expand", "--k=4")
    assert status == EXIT_OK
    assert out.splitlines()[0] == "ch4 = (c1^4 - 4*c1^2*c2 + 4*c1*c3 + 2*c2^2 - 4*c4)/24"
    assert result_block(out)["ch4.common"] == "(c1^4 - 4*c1^2*c2 + 4*c1*c3 + 2*c2^2 - 4*c4)/24"


def test_covers():
    status, out, _ = call("covers", "--series=bu", "--stage=6", "--maxdeg=12")
    assert status == EXIT_OK
    assert result_block(out)["generators"] == "c3, c4, c5, c6"
    status, out, _ = call("covers", "--series=bso", "--stage=string", "--maxdeg=16", "--format=kv")
    kv = result_block(out)
    assert (kv["betti.8"], kv["betti.12"], kv["betti.16"]) == ("1", "1", "2")


def test_check_exit_codes():
    status, out, _ = call("check", sample("string_obstructed.txt"))
    assert status == EXIT_OBSTRUCTED
    assert result_block(out)["string"] == "obstructed"
    status, _, _ = call("check", sample("string_obstructed.txt"), "--report-only")
    assert status == EXIT_OK
    status, out, _ = call("check", sample("four_connected_pair.txt"), "--mode=pair")
    assert status == EXIT_OK
    assert result_block(out)["fivebrane"] == "admits"


def test_check_needs_a_choice_between_bundles():
    status, _, err = call("check", sample("torsion_h8.txt"))
    assert status == EXIT_INPUT
    assert "choose one by name" in err
    status, out, _ = call("check", sample("torsion_h8.txt"), "--tx=TX", "--format=kv")
    assert result_block(out)["fivebrane"] == "undetermined"


def test_cs_verify():
    status, out, _ = call("cs-verify", sample("abelian_patch.txt"), "--j=2")
    assert status == EXIT_OK
    assert "dT3 = Tr(F^2): exact" in out
    assert result_block(out)["exact"] == "true"


def test_anomaly_and_count():
    status, out, _ = call("anomaly", sample("four_connected_pair.txt"), "--model=reduced")
    assert status == EXIT_OK
    assert result_block(out)["value"] == "0"
    status, out, _ = call("count", sample("torsion_h8.txt"), "--level=fivebrane")
    assert result_block(out)["group"] == "Z<b> + Z/2<s>"
    status, out, _ = call("count", sample("torsion_h8.txt"), "--level=fivebrane", "--quotient=b")
    assert result_block(out)["group"] == "Z/2<q0>"
    status, _, err = call("count", sample("torsion_h8.txt"), "--level=string", "--quotient=u")
    assert status == EXIT_INPUT and "degree mismatch" in err
    status, _, err = call("count", sample("torsion_h8.txt"), "--level=string", "--quotient=zz")
    assert status == EXIT_INPUT and "undeclared generator" in err


def test_parse_errors_are_located(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("[space X]\ndim = 4\nH4 = Z<u>\n[bundle T]\nspace = X\nkind = real\nrank = 4\np1 = u8\n")
    status, _, err = call("check", str(bad))
    assert status == EXIT_INPUT
    assert err.startswith(f"{bad}:8:6: error: undeclared generator 'u8'")


def test_missing_file_and_document():
    status, _, err = call("check", "/nonexistent/doc.txt")
    assert status == EXIT_INPUT
    assert call("check")[0] == EXIT_INPUT


def test_machine_block_round_trips():
    for argv in (
        ["check", sample("trivial_s10.txt")],
        ["covers", "--series=bu", "--stage=su", "--maxdeg=8"],
        ["cs-verify", sample("su2_patch.txt"), "--j=3"],
        ["anomaly", sample("four_connected_pair.txt"), "--model=heterotic"],
    ):
        _, out, _ = call(*argv, "--format=kv")
        doc = parse(out)
        assert parse(render(doc)) == doc


def test_output_is_deterministic():
    first = call("check", sample("torsion_h8.txt"), "--tx=TX_designated")
    second = call("check", sample("torsion_h8.txt"), "--tx=TX_designated")
    assert first == second


def test_batch_mode():
    status, out, _ = call("check", "--all", str(SAMPLES), "--report-only", "--tx=TX")
    assert "== abelian_patch.txt ==\nskipped: no bundle section" in out
    assert "== trivial_s10.txt ==" in out
    assert status == EXIT_OK


def test_run_reports_module_errors():
    doc = parse((SAMPLES / "trivial_s10.txt").read_bytes())
    result = run("anomaly", {"model": "reduced"}, doc)
    assert result.status == EXIT_OK
    result = run("count", {"level": "string"}, doc)
    assert result.status == EXIT_INPUT and "not presented" in result.text
    assert run("frobnicate", {}, doc).status == EXIT_INPUT


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "charclass.cli", "ch-expand", "--k=2", "--format=text"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "ch2 = (c1^2 - 2*c2)/2"


def test_unknown_flag_is_input_error():
    with pytest.raises(SystemExit) as info:
        main(["check", "--bogus"], io.StringIO(), io.StringIO())
    assert info.value.code == 2
