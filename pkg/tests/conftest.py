import pathlib
import subprocess
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from dedlog.analyzer import analyze
from dedlog.diagnostics import has_errors
from dedlog.macros import expand_macros
from dedlog.parser import parse_program

TESTS_DIR = pathlib.Path(__file__).parent
CORPUS = TESTS_DIR / "corpus"
GOLDEN = TESTS_DIR / "golden"
HARNESS = TESTS_DIR.parent / "harness"


def load_program(text: str, buffer_size: int = 400):
    """parse + expand + analyze; asserts the program is clean."""
    result = parse_program(text)
    assert result.ok, result.diagnostics
    expanded, diags = expand_macros(result.program)
    assert not has_errors(diags), diags
    analysis = analyze(expanded, buffer_size)
    assert analysis.ok, analysis.diagnostics
    return analysis


def corpus_program(name: str, buffer_size: int = 400):
    return load_program((CORPUS / name).read_text())


@pytest.fixture(scope="session")
def cc():
    gcc = subprocess.run(["gcc", "--version"], capture_output=True)
    if gcc.returncode != 0:
        pytest.skip("gcc not available")
    return "gcc"
