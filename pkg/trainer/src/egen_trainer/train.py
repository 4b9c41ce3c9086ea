"""Training loops: sequence-to-sequence generation and contrastive learning."""

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import torch
from torch import nn

from .config import TrainConfig
from .data import Vocabulary, batched, build_vocabulary, pad_batch, read_pairs, read_triplets
from .losses import contrastive_loss, seq2seq_criterion
from .model import EncoderArtifact, Seq2SeqTransformer, content_mask, pool_hidden


@dataclass
class TrainResult:
    artifact: EncoderArtifact
    epoch_losses: list[float]


def _seed_everything(seed: int) -> None:
    random.seed(seed)
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)


def init_artifact(cfg: TrainConfig, vocab: Vocabulary | None = None) -> EncoderArtifact:
    """A freshly initialized encoder — the untrained baseline."""
    _seed_everything(cfg.seed)
    vocab = vocab or build_vocabulary()
    model = Seq2SeqTransformer(cfg, len(vocab), vocab.pad_id)
    return EncoderArtifact(model=model, vocab=vocab, config=cfg)


def _optimizer_and_schedule(model: nn.Module, cfg: TrainConfig, total_steps: int):
    opt = torch.optim.AdamW(
        model.parameters(), lr=cfg.learning_rate, weight_decay=cfg.weight_decay
    )
    schedule = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=max(total_steps, 1))
    return opt, schedule


def train_seq2seq(pairs_path: Union[str, Path], cfg: TrainConfig) -> TrainResult:
    """Teacher-forced source-to-target generation with smoothed cross-entropy."""
    pairs = read_pairs(pairs_path)
    artifact = init_artifact(cfg)
    model, vocab = artifact.model, artifact.vocab
    encoded = [
        (vocab.encode(src, cfg.max_seq_len), vocab.encode(tgt, cfg.max_seq_len))
        for src, tgt in pairs
    ]
    criterion = seq2seq_criterion(vocab.pad_id)
    rng = random.Random(cfg.seed)
    steps_per_epoch = (len(encoded) + cfg.batch_size - 1) // cfg.batch_size
    opt, schedule = _optimizer_and_schedule(model, cfg, cfg.epochs * steps_per_epoch)

    losses = []
    model.train()
    for _ in range(cfg.epochs):
        total = 0.0
        batches = batched(encoded, cfg.batch_size, rng)
        for batch in batches:
            src = pad_batch([s for s, _ in batch], vocab.pad_id)
            tgt = pad_batch([t for _, t in batch], vocab.pad_id)
            tgt_in, tgt_out = tgt[:, :-1], tgt[:, 1:]
            logits = model(src, tgt_in)
            loss = criterion(logits.reshape(-1, logits.size(-1)), tgt_out.reshape(-1))
            opt.zero_grad()
            loss.backward()
            opt.step()
            schedule.step()
            total += loss.item()
        losses.append(total / len(batches))
    return TrainResult(artifact=artifact, epoch_losses=losses)


def train_contrastive(triplets_path: Union[str, Path], cfg: TrainConfig) -> TrainResult:
    """Anchor/positive/negative contrastive training of the encoder."""
    triplets = read_triplets(triplets_path)
    artifact = init_artifact(cfg)
    model, vocab = artifact.model, artifact.vocab
    encoded = [
        tuple(vocab.encode(e, cfg.max_seq_len) for e in row) for row in triplets
    ]
    rng = random.Random(cfg.seed)
    steps_per_epoch = (len(encoded) + cfg.batch_size - 1) // cfg.batch_size
    opt, schedule = _optimizer_and_schedule(model, cfg, cfg.epochs * steps_per_epoch)

    def embed(rows: list, col: int) -> torch.Tensor:
        ids = pad_batch([row[col] for row in rows], vocab.pad_id)
        return pool_hidden(model.encode(ids), content_mask(ids, vocab), cfg.pooling)

    losses = []
    model.train()
    for _ in range(cfg.epochs):
        total = 0.0
        batches = batched(encoded, cfg.batch_size, rng)
        for batch in batches:
            loss = contrastive_loss(
                embed(batch, 0), embed(batch, 1), embed(batch, 2), cfg.temperature
            )
            opt.zero_grad()
            loss.backward()
            opt.step()
            schedule.step()
            total += loss.item()
        losses.append(total / len(batches))
    return TrainResult(artifact=artifact, epoch_losses=losses)
