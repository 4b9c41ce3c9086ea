"""Shared test utilities: in-process CLI runner and the desk engine profile."""

import contextlib
import io
import json
from importlib.resources import files
from pathlib import Path

from egen.cli import main

DESK_TEMPLATES = str(files("egen") / "data" / "templates" / "desk.txt")

# the calibrated desk engine profile: enough iterations to saturate the small
# seeds, capped enumeration so every cluster stays within budget
DESK_FLAGS = [
    "--rules", "full",
    "--iterations", "7",
    "--max-enodes", "2000",
    "--token-limit", "25",
    "--max-rewrites", "100",
    "--seed", "0",
]

# one line per acceptance criterion, echoed after the test summary
ACCEPTANCE_LINES: list[str] = []


def run_cli(*argv: str) -> tuple[int, dict]:
    """Invoke the CLI in-process and parse its JSON stdout."""
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        rc = main(list(argv))
    text = buf.getvalue().strip()
    return rc, json.loads(text) if text else {}


def desk_corpus_argv(out_dir: Path) -> list[str]:
    return [
        "corpus",
        "--templates", DESK_TEMPLATES,
        "--out-dir", str(out_dir),
        "--jobs", "1",
        *DESK_FLAGS,
    ]
