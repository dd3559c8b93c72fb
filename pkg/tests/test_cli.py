import subprocess
import sys

import pytest

from dedlog.cli import main

from conftest import CORPUS


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestCheck:
    def test_valid_program_silent(self, capsys):
        code, out, err = run_cli(["check", str(CORPUS / "touchblink.dl")], capsys)
        assert code == 0
        assert out == "" and err == ""

    def test_invalid_program_diagnoses(self, tmp_path, capsys):
        bad = tmp_path / "bad.dl"
        bad.write_text(".decl p\np :- !q.\nq :- p.\n")
        code, out, err = run_cli(["check", str(bad)], capsys)
        assert code == 1
        assert "error" in err

    def test_diagnostic_format(self, tmp_path, capsys):
        bad = tmp_path / "bad.dl"
        bad.write_text(".decl p(int)\np(5)@3.\n")
        code, out, err = run_cli(["check", str(bad)], capsys)
        assert code == 1
        assert err.startswith(f"{bad}:2:5: error:")


class TestExpand:
    def test_output_reparses_and_rechecks(self, tmp_path, capsys):
        code, out, err = run_cli(["expand", str(CORPUS / "macroblink.dl")], capsys)
        assert code == 0
        expanded = tmp_path / "expanded.dl"
        expanded.write_text(out)
        code2, out2, err2 = run_cli(["check", str(expanded)], capsys)
        assert code2 == 0
        # expanding again is the identity
        code3, out3, _ = run_cli(["expand", str(expanded)], capsys)
        assert code3 == 0 and out3 == out

    def test_contains_delay_machinery(self, capsys):
        _, out, _ = run_cli(["expand", str(CORPUS / "macroblink.dl")], capsys)
        assert "now(T)@next :- #millis(T)." in out
        assert "delayed_turn_on" in out


class TestCompile:
    def test_writes_c_file(self, tmp_path, capsys):
        out_c = tmp_path / "out.c"
        code, _, err = run_cli(
            ["compile", str(CORPUS / "blink.dl"), "-o", str(out_c)], capsys
        )
        assert code == 0, err
        text = out_c.read_text()
        assert "#include <Arduino.h>" in text
        assert "void loop(void)" in text

    def test_buffer_size_flag(self, tmp_path, capsys):
        out_c = tmp_path / "out.c"
        code, _, _ = run_cli(
            ["compile", str(CORPUS / "blink.dl"), "-o", str(out_c), "--buffer-size", "256"],
            capsys,
        )
        assert code == 0
        assert "#define BUFFER_SIZE 256" in out_c.read_text()

    def test_too_many_predicates(self, tmp_path, capsys):
        src = tmp_path / "big.dl"
        src.write_text("\n".join(f".decl p{i}" for i in range(256)) + "\np0@0.\n")
        code, _, err = run_cli(["compile", str(src), "-o", str(tmp_path / "o.c")], capsys)
        assert code == 1
        assert "too many predicates" in err


class TestRun:
    def test_blink_alternates(self, capsys):
        code, out, err = run_cli(
            ["run", str(CORPUS / "blink.dl"), "--trace", str(CORPUS / "idle10000.trace")],
            capsys,
        )
        assert code == 0
        writes = [l for l in out.splitlines() if "digitalWrite" in l]
        assert len(writes) >= 8
        assert "HIGH" in writes[0]
        for a, b in zip(writes, writes[1:]):
            assert ("HIGH" in a) != ("HIGH" in b)

    def test_dump_facts_to_stderr(self, capsys):
        code, out, err = run_cli(
            [
                "run",
                str(CORPUS / "touchblink.dl"),
                "--trace",
                str(CORPUS / "touch.trace"),
                "--dump-facts",
            ],
            capsys,
        )
        assert code == 0
        assert err.splitlines()[0] == "step 0: setup"
        assert "pinMode(2, INPUT)" in out

    def test_max_steps(self, capsys):
        code, out, err = run_cli(
            [
                "run",
                str(CORPUS / "blink.dl"),
                "--trace",
                str(CORPUS / "idle10000.trace"),
                "--max-steps",
                "3",
                "--dump-facts",
            ],
            capsys,
        )
        assert code == 0
        assert len(err.splitlines()) == 3

    def test_fault_exit_code(self, tmp_path, capsys):
        src = tmp_path / "over.dl"
        src.write_text(
            ".decl a(int)\n.decl pair(int, int)\n"
            "a(0)@0.\na(1)@0.\na(2)@0.\na(3)@0.\n"
            "pair(X, Y) :- a(X), a(Y).\n"
        )
        trace = tmp_path / "t.trace"
        trace.write_text("tick 10\nend 50\n")
        code, out, err = run_cli(
            ["run", str(src), "--trace", str(trace), "--buffer-size", "30"], capsys
        )
        assert code == 1
        assert "FAULT buffer overflow inserting pair" in out

    def test_bad_trace_reports(self, tmp_path, capsys):
        trace = tmp_path / "bad.trace"
        trace.write_text("tick ten\n")
        code, _, err = run_cli(
            ["run", str(CORPUS / "blink.dl"), "--trace", str(trace)], capsys
        )
        assert code == 1
        assert "bad.trace:1" in err


class TestUsage:
    def test_missing_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 2

    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as info:
            main(["run", "x.dl", "--frobnicate"])
        assert info.value.code == 2

    def test_installed_entry_point(self):
        result = subprocess.run(
            [sys.executable, "-m", "dedlog.cli", "check", str(CORPUS / "blink.dl")],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
