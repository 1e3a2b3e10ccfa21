import subprocess
import sys
from importlib import resources

import pytest

from perceptlang.cli import EXIT_DIAGNOSTICS, EXIT_IO, EXIT_OK, EXIT_RUNTIME, TRACE_ENV, convert_arg, default_local_name, main, parse_endpoint
from perceptlang.sema import types as t
from perceptlang.values import Aid

CORPUS = resources.files("perceptlang") / "corpus"
SHAPES = str(CORPUS / "shapes.jas")
ROBOME = [str(CORPUS / f) for f in ("robome_ontology.jas", "robome_agent.jas", "robome_behaviour.jas")]
SHAPES_RUN = ["run", SHAPES, "--entry", "ShapeRequester", "--arg", "providerName=provider", "--arg", "x=1.0", "--arg", "y=2.0", "--trace-out", "-"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestCheck:
    def test_clean(self, capsys):
        code, out, err = run(capsys, "check", SHAPES)
        assert code == EXIT_OK and out.startswith("ok: 1 file(s)") and err == ""
        assert run(capsys, "check", "--quiet", *ROBOME)[:2] == (EXIT_OK, "")

    def test_diagnostics(self, capsys, tmp_path):
        bad = tmp_path / "bad.jas"
        bad.write_text("agent A\n\ton create do\n\t\tlog nope\n")
        code, out, err = run(capsys, "check", str(bad))
        assert code == EXIT_DIAGNOSTICS and out == ""
        assert f"{bad}:3:" in err and "unknown identifier" in err

    def test_syntax_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.jas"
        bad.write_text("agent\n")
        assert run(capsys, "check", str(bad))[0] == EXIT_DIAGNOSTICS

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "check", str(tmp_path / "none.jas"))
        assert code == EXIT_IO and "none.jas" in err

    def test_usage_error(self, capsys):
        assert run(capsys, "frobnicate")[0] == EXIT_IO


class TestRun:
    def test_shapes(self, capsys):
        code, out, _ = run(capsys, *SHAPES_RUN)
        assert code == EXIT_OK
        kinds = [line.split("\t")[2] for line in out.splitlines()]
        assert kinds.count("message") == 2
        assert "request" in out and "inform" in out
        assert "(shape (p (position (x 1.0) (y 2.0))) (area 1.0))" in out

    def test_deterministic_repeatable(self, capsys):
        first = run(capsys, *SHAPES_RUN)
        second = run(capsys, *SHAPES_RUN)
        assert first == second

    def test_unknown_entry(self, capsys):
        code, _, err = run(capsys, "run", SHAPES, "--entry", "Nobody")
        assert code == EXIT_IO and "Nobody" in err

    def test_bad_arg(self, capsys):
        code, _, _ = run(capsys, "run", SHAPES, "--entry", "ShapeRequester", "--arg", "x=abc", "--arg", "y=1", "--arg", "providerName=p")
        assert code == EXIT_IO

    def test_trace_env(self, capsys, tmp_path, monkeypatch):
        dest = tmp_path / "trace.tsv"
        monkeypatch.setenv(TRACE_ENV, str(dest))
        code, out, _ = run(capsys, *SHAPES_RUN)
        assert code == EXIT_OK and out == ""
        assert "(area 1.0)" in dest.read_text()

    def test_live_mode(self, capsys):
        code, out, _ = run(capsys, *SHAPES_RUN, "--mode", "live", "--platform-id", "cli-live")
        assert code == EXIT_OK and "(area 1.0)" in out

    def test_handler_error_exit(self, capsys, tmp_path):
        src = tmp_path / "div.jas"
        src.write_text("agent A\n\tproperty n = 0\n\ton create do\n\t\tactivate behaviour B\n\none shot behaviour B for agent A\n\tdo\n\t\tlog 1 / n\n")
        code, _, err = run(capsys, "run", str(src), "--entry", "A")
        assert code == EXIT_RUNTIME and "handler error" in err


class TestSimulate:
    def test_seed(self, capsys, tmp_path):
        report = tmp_path / "report.tsv"
        code, out, err = run(capsys, "simulate", "--seed", "7", "--report-out", str(report), "--trace-out", str(tmp_path / "t.tsv"))
        assert code == EXIT_OK and out == "" and err == ""
        text = report.read_text()
        assert "reached-end\ttrue" in text and "intersections\t0" in text

    def test_inject(self, capsys, tmp_path):
        code, out, _ = run(capsys, "simulate", "--max-steps", "30", "--inject", "at 1.0 inject falling", "--trace-out", "-")
        assert code == EXIT_OK
        assert any("(falling)" in line and line.endswith("\t10") for line in out.splitlines())

    def test_inject_file(self, capsys, tmp_path):
        f = tmp_path / "inj.txt"
        f.write_text("# script\n0.5 (position (x 3.0) (y 1.0)) priority 9\n")
        code, out, _ = run(capsys, "simulate", "--max-steps", "10", "--inject-file", str(f), "--trace-out", "-")
        assert code == EXIT_OK and "(position (x 3.0) (y 1.0))\t9" in out

    def test_missing_scenario(self, capsys, tmp_path):
        code, _, err = run(capsys, "simulate", "--scenario", str(tmp_path / "none.txt"))
        assert code == EXIT_IO and err

    def test_bad_scenario(self, capsys, tmp_path):
        f = tmp_path / "s.txt"
        f.write_text("obstacle 25 1 0.6 X\n")
        assert run(capsys, "simulate", "--scenario", str(f))[0] == EXIT_IO


class TestHelpers:
    def test_endpoint(self):
        assert parse_endpoint("127.0.0.1:7000") == ("127.0.0.1", 7000)
        with pytest.raises(Exception):
            parse_endpoint("nowhere")

    def test_convert(self, shapes):
        table = shapes.table
        assert convert_arg("2", t.DOUBLE, table, "p1") == 2.0
        assert convert_arg("hi", t.TEXT, table, "p1") == "hi"
        assert convert_arg("prov", t.AID, table, "p1") == Aid("prov", "p1")
        assert convert_arg("(position (x 1.0) (y 2.0))", t.schema("position"), table, "p1").get("y") == 2.0

    def test_local_names(self):
        assert default_local_name("ShapeProvider") == "provider"
        assert default_local_name("RoboMe") == "me"
        assert default_local_name("agent") == "agent"


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "perceptlang.cli", "check", SHAPES], capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0 and proc.stdout.startswith("ok:")


def test_repo_corpus_matches_packaged():
    from pathlib import Path

    repo = Path(__file__).resolve().parent.parent / "corpus"
    for f in sorted(p.name for p in repo.glob("*.jas")):
        assert (repo / f).read_text() == (CORPUS / f).read_text(), f
