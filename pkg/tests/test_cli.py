from __future__ import annotations

import json

import pytest

from quasirigid.cli import main, parse_lambda, parse_slice
from quasirigid.errors import InputError

PENTA = ["--pentagrid", "0.1,0.15,0.2,0.25,-0.7"]


def run(tmp_path, *args):
    out = tmp_path / "out.json"
    code = main([*args, "--out", str(out)])
    return code, out.read_text() if out.exists() else None


def test_generate_and_reload(tmp_path):
    svg = tmp_path / "t.svg"
    code, text = run(tmp_path, "generate", *PENTA, "--svg", str(svg), "--pattern", "thin",
                     "--highlight-ribbon", "2")
    assert code == 0
    doc = json.loads(text)
    assert "multigrid" in doc and len(doc["tiles"]) == 600
    assert svg.read_text().startswith("<svg")
    (tmp_path / "t.json").write_text(text)
    code, text = run(tmp_path, "rigidity", "--tiling", str(tmp_path / "t.json"), "--pattern", "thick")
    assert code == 0 and json.loads(text)["rigid"] is True


def test_report_square(tmp_path):
    code, text = run(tmp_path, "report", "--square", "3,3")
    doc = json.loads(text)
    assert code == 0
    assert (doc["flex_dim"], doc["ribbons"], doc["prediction_dim"], doc["agree"]) == (8, 6, 8, True)
    assert doc["schema"].startswith("quasirigid.report/")


def test_report_checkered(tmp_path):
    code, text = run(tmp_path, "report", *PENTA, "--pattern", "checkered:2")
    br = json.loads(text)["bracing"]
    assert code == 0 and (br["c"], br["oracle_dim"], br["agree"]) == (2, 4, True)


def test_report_is_byte_identical(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    for p in (a, b):
        assert main(["report", "--tetragrid", "0.11,0.23,0.36,0.05", "--pattern", "random:0.1",
                     "--seed", "3", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_zero_mode_and_spectrum(tmp_path):
    code, text = run(tmp_path, "zero-mode", *PENTA, "--grid-id", "2", "--lambda", "0.25turns")
    assert code == 0 and len(json.loads(text)["fields"]) > 0
    code, text = run(tmp_path, "spectrum", "--square", "3,3", "--slice", "torus:n=4")
    rows = text.strip().splitlines()
    assert rows[0] == "t1,t2,min_sv,kernel_dim" and len(rows) == 17


def test_brace_and_expand(tmp_path):
    code, text = run(tmp_path, "brace", "--square", "2,2", "--pattern", "checkered:2")
    doc = json.loads(text)
    assert code == 0 and doc["c"] == 2 and doc["oracle_dim"] == 4
    code, text = run(tmp_path, "expand", "--square", "2,3", "--order", "random")
    assert code == 0 and json.loads(text)["reconstruction_error"] < 1e-10
    code, text = run(tmp_path, "ribbon-figure", *PENTA)
    assert code == 0 and len(json.loads(text)["angles_deg"]) == 5


def test_exit_codes(tmp_path, capsys):
    assert main(["rigidity", "--pentagrid", "1,2"]) == 1
    assert main(["rigidity", "--tiling", str(tmp_path / "missing.json")]) == 1
    assert main(["generate", "--pentagrid", "0,0,0,0,0"]) == 2
    assert main(["zero-mode", "--square", "2,2", "--grid-id", "3"]) == 1


def test_parsers():
    assert parse_lambda("0.5turns") == pytest.approx(-1)
    assert parse_lambda("0,1") == 1j
    assert parse_slice("circle:i=1:n=256") == {"kind": "circle", "i": 1, "n": 256}
    with pytest.raises(InputError):
        parse_slice("sphere")
    with pytest.raises(InputError):
        parse_lambda("abc")
