"""Vocabulary and dataset readers for prefix-token expression files.

Expressions arrive as whitespace-separated prefix token strings
(`- + x 8 8`), the format the corpus engine writes to pairs.tsv and
triplets.tsv. The vocabulary is fixed by the expression language itself:
operator tokens, the variable, the two named constants, and small integer
literals — not by whatever happens to appear in one dataset, so an encoder
trained on one corpus can embed expressions from another.
"""

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import torch

PAD, BOS, EOS = "<pad>", "<bos>", "<eos>"
SPECIAL_TOKENS = (PAD, BOS, EOS)

# mirrors the corpus engine's operator registry (its on-disk token set)
OPERATOR_TOKENS = (
    "+", "-", "*", "/", "pow", "abs", "sqrt",
    "d/dx", "ln",
    "sin", "cos", "tan", "csc", "sec", "cot",
    "asin", "acos", "atan", "acsc", "asec", "acot",
    "sinh", "cosh", "tanh", "csch", "sech", "coth",
    "asinh", "acosh", "atanh", "acsch", "asech", "acoth",
)
LEAF_TOKENS = ("x", "pi", "e")
INT_SPAN = (-200, 200)


class TrainerError(Exception):
    """Base class for training input errors."""


class EmptyDataset(TrainerError):
    pass


class MalformedLine(TrainerError):
    pass


class VocabularyMismatch(TrainerError):
    pass


class SequenceTooLong(TrainerError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def bos_id(self) -> int:
        return 1

    @property
    def eos_id(self) -> int:
        return 2

    def __len__(self) -> int:
        return len(self.tokens)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_ids", {t: i for i, t in enumerate(self.tokens)})

    def encode(self, expr: str, max_seq_len: int = 0) -> list[int]:
        """Token ids as <bos> ... <eos>; raises on out-of-vocabulary tokens."""
        ids = [self.bos_id]
        for tok in expr.split():
            tid = self._ids.get(tok)
            if tid is None:
                raise VocabularyMismatch(f"token {tok!r} in {expr!r} is outside the vocabulary")
            ids.append(tid)
        ids.append(self.eos_id)
        if max_seq_len and len(ids) > max_seq_len:
            raise SequenceTooLong(
                f"{expr!r} encodes to {len(ids)} tokens; limit is {max_seq_len}"
            )
        return ids

    def decode(self, ids: Sequence[int]) -> str:
        return " ".join(
            self.tokens[i] for i in ids if i not in (self.pad_id, self.bos_id, self.eos_id)
        )


def build_vocabulary(int_span: tuple[int, int] = INT_SPAN) -> Vocabulary:
    lo, hi = int_span
    ints = tuple(str(i) for i in range(lo, hi + 1))
    return Vocabulary(SPECIAL_TOKENS + OPERATOR_TOKENS + LEAF_TOKENS + ints)


def _read_columns(path: Union[str, Path], n_cols: int, what: str) -> list[tuple[str, ...]]:
    rows: list[tuple[str, ...]] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = tuple(line.split("\t"))
        if len(parts) != n_cols or not all(p.strip() for p in parts):
            raise MalformedLine(f"{path}:{lineno}: expected {n_cols} tab-separated {what}")
        rows.append(parts)
    if not rows:
        raise EmptyDataset(f"{path}: no {what} rows")
    return rows


def read_pairs(path: Union[str, Path]) -> list[tuple[str, str]]:
    """source/target expression pairs from a pairs.tsv."""
    return _read_columns(path, 2, "expressions")  # type: ignore[return-value]


def read_triplets(path: Union[str, Path]) -> list[tuple[str, str, str]]:
    """anchor/positive/negative rows from a triplets.tsv."""
    return _read_columns(path, 3, "expressions")  # type: ignore[return-value]


def pad_batch(token_lists: Sequence[Sequence[int]], pad_id: int) -> torch.Tensor:
    """Right-pad to a [B, L] LongTensor."""
    width = max(len(t) for t in token_lists)
    out = torch.full((len(token_lists), width), pad_id, dtype=torch.long)
    for i, toks in enumerate(token_lists):
        out[i, : len(toks)] = torch.tensor(toks, dtype=torch.long)
    return out


def batched(items: Sequence, batch_size: int, rng: random.Random) -> list[list]:
    """Deterministically shuffled batches."""
    order = list(items)
    rng.shuffle(order)
    return [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
