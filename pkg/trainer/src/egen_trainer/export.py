"""Embedding export in the evaluation toolkit's TSV format.

One line per expression: the prefix token string, a tab, then the vector as
comma-separated floats written with repr() so a reload is bit-exact.
"""

from pathlib import Path
from typing import Iterable, Sequence, Union

from .model import EncoderArtifact


def collect_expressions(path: Union[str, Path]) -> list[str]:
    """Unique expressions from a dataset file, in first-seen order.

    `.tsv` files (pairs/triplets) contribute every column; any other file is
    read as one expression per line, with blanks and #-comments skipped.
    """
    path = Path(path)
    seen: dict[str, None] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cells = line.split("\t") if path.suffix == ".tsv" else [line]
        for cell in cells:
            if cell:
                seen.setdefault(cell, None)
    return list(seen)


def export_embeddings(
    artifact: EncoderArtifact,
    expressions: Sequence[str],
    path: Union[str, Path],
    batch_size: int = 128,
) -> int:
    """Embed and write unique expressions; returns the line count."""
    unique: dict[str, None] = {}
    for e in expressions:
        unique.setdefault(e, None)
    exprs = list(unique)
    vectors = artifact.embed_expressions(exprs, batch_size=batch_size)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for expr, vec in zip(exprs, vectors):
            fh.write(expr + "\t" + ",".join(repr(float(v)) for v in vec) + "\n")
    return len(exprs)
