"""Toy encoder training over expression pairs/triplets.

Reads the corpus engine's pairs.tsv / triplets.tsv, trains a small
transformer (seq2seq generation or contrastive representation learning),
and exports embeddings in the evaluation toolkit's TSV format.
"""

from .config import TrainConfig
from .data import (
    EmptyDataset,
    MalformedLine,
    SequenceTooLong,
    TrainerError,
    VocabularyMismatch,
    Vocabulary,
    build_vocabulary,
    read_pairs,
    read_triplets,
)
from .export import collect_expressions, export_embeddings
from .losses import contrastive_loss, contrastive_loss_from_similarities
from .model import EncoderArtifact, Seq2SeqTransformer, pool_hidden
from .train import init_artifact, train_contrastive, train_seq2seq

__version__ = "0.1.0"

__all__ = [
    "TrainConfig",
    "TrainerError",
    "EmptyDataset",
    "MalformedLine",
    "SequenceTooLong",
    "VocabularyMismatch",
    "Vocabulary",
    "build_vocabulary",
    "read_pairs",
    "read_triplets",
    "contrastive_loss",
    "contrastive_loss_from_similarities",
    "EncoderArtifact",
    "Seq2SeqTransformer",
    "pool_hidden",
    "init_artifact",
    "train_contrastive",
    "train_seq2seq",
    "collect_expressions",
    "export_embeddings",
    "__version__",
]
