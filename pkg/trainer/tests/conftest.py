"""Session fixtures for the trainer tests."""

from dataclasses import dataclass
from pathlib import Path

import pytest

from _trainer_helpers import SECONDARY_LINES, build_training_corpus, run_egen
from egen.corpus import Cluster, read_clusters


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if SECONDARY_LINES:
        terminalreporter.section("secondary acceptance criteria")
        for line in SECONDARY_LINES:
            terminalreporter.write_line(line)


@dataclass
class TrainingCorpus:
    clusters_path: Path
    triplets_path: Path
    pairs_path: Path
    clusters: list[Cluster]

    @property
    def members(self) -> list[str]:
        return [e for c in self.clusters for e in c.exprs]


@pytest.fixture(scope="session")
def training_corpus(tmp_path_factory) -> TrainingCorpus:
    out = tmp_path_factory.mktemp("trainer_corpus")
    clusters_path = build_training_corpus(out)
    triplets_path = out / "triplets.tsv"
    pairs_path = out / "pairs.tsv"
    run_egen(
        "triplets", "--clusters", str(clusters_path),
        "--out", str(triplets_path), "--count", "4000", "--seed", "0",
    )
    run_egen("pairs", "--clusters", str(clusters_path), "--out", str(pairs_path))
    return TrainingCorpus(
        clusters_path=clusters_path,
        triplets_path=triplets_path,
        pairs_path=pairs_path,
        clusters=read_clusters(clusters_path),
    )
