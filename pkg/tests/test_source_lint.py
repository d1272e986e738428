"""Source lint test: no literal backslash-n sequences in written text.

Report tables, CSV headers and log lines are built from string literals. A
literal written as a double backslash followed by 'n' ends up as the two
characters ``\\n`` in a data file instead of a line break, which breaks
every downstream reader of that file.

This test scans the source text of every module in ``svweno`` for the
three-character sequence backslash, backslash, 'n'.
"""

from pathlib import Path

import pytest

PACKAGE_DIR = Path(__file__).resolve().parent.parent / "src" / "svweno"

# The three characters: backslash, backslash, 'n' - as they appear in the
# source text of a buggy string literal like "line1\\nline2".
LITERAL_BACKSLASH_N = "\\\\n"

SOURCES = sorted(PACKAGE_DIR.rglob("*.py"))


def test_package_directory_found():
    """Sanity check so the parametrized test below cannot pass vacuously."""
    assert PACKAGE_DIR.is_dir(), f"Package directory not found: {PACKAGE_DIR}"
    assert SOURCES, f"No Python sources found in {PACKAGE_DIR}"


@pytest.mark.parametrize("source_file", SOURCES, ids=lambda p: str(p.relative_to(PACKAGE_DIR)))
def test_no_literal_backslash_n_in_sources(source_file):
    text = source_file.read_text(encoding="utf-8")

    offending = [
        (lineno, line.strip())
        for lineno, line in enumerate(text.splitlines(), start=1)
        if LITERAL_BACKSLASH_N in line
    ]

    assert not offending, (
        f"{source_file.name} contains literal backslash-n sequences "
        f"(these render as '\\n' text instead of a newline): {offending}"
    )
