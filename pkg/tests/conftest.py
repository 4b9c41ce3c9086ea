"""Shared fixtures. The desk corpus is expensive, so it is built once per
session via the same CLI invocation the acceptance criteria exercise."""

import time
from dataclasses import dataclass
from pathlib import Path

import pytest

from _helpers import ACCEPTANCE_LINES, desk_corpus_argv, run_cli
from egen.corpus import Cluster, read_clusters


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@dataclass
class DeskCorpus:
    out_dir: Path
    clusters_path: Path
    clusters: list[Cluster]
    payload: dict
    elapsed_s: float


@pytest.fixture(scope="session")
def desk_corpus(tmp_path_factory) -> DeskCorpus:
    out_dir = tmp_path_factory.mktemp("desk")
    t0 = time.perf_counter()
    rc, payload = run_cli(*desk_corpus_argv(out_dir))
    elapsed = time.perf_counter() - t0
    assert rc == 0, "desk corpus build failed"
    clusters_path = out_dir / "clusters.jsonl"
    return DeskCorpus(
        out_dir=out_dir,
        clusters_path=clusters_path,
        clusters=read_clusters(clusters_path),
        payload=payload,
        elapsed_s=elapsed,
    )
