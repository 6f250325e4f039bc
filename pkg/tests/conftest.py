import subprocess
from pathlib import Path

import pytest

from hmppgen.lexer import token_stream
from hmppgen.parser import parse_translation_unit

DATA = Path(__file__).parent / "data"


def load(name: str) -> str:
    return (DATA / name).read_text(encoding="utf-8")


def parse_fixture(name: str):
    return parse_translation_unit(load(name), str(DATA / name))


def tokens(text: str):
    return token_stream(text)


def structurally_equal(a: str, b: str) -> bool:
    """Token-level equality; pragma text compares with whitespace folded."""
    return token_stream(a) == token_stream(b)


def cc_run(source: str, tmp_path: Path, name: str = "prog",
           compiler: str = "gcc") -> str:
    """Compiles and runs one translation unit, returning stdout."""
    suffix = ".cpp" if compiler == "g++" else ".c"
    src = tmp_path / (name + suffix)
    exe = tmp_path / (name + ".bin")
    src.write_text(source, encoding="utf-8")
    build = subprocess.run(
        [compiler, "-O1", "-w", str(src), "-o", str(exe), "-lm"],
        capture_output=True, text=True)
    if build.returncode != 0:
        raise AssertionError("compile failed:\n%s" % build.stderr)
    run = subprocess.run([str(exe)], capture_output=True, text=True, timeout=60)
    assert run.returncode == 0, "run failed: %s" % run.stderr
    return run.stdout


@pytest.fixture
def data_dir() -> Path:
    return DATA
