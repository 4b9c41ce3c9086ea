"""A small transformer for expression sequences.

One module serves both training modes: the full encoder-decoder for
sequence-to-sequence generation, and the encoder alone for contrastive
representation learning. Embeddings are pooled encoder states over content
positions only — padding and the <bos>/<eos> markers never contribute.
"""

import math
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Sequence, Union

import torch
from torch import nn

from .config import TrainConfig
from .data import Vocabulary, pad_batch


class SinusoidalPositions(nn.Module):
    def __init__(self, dim: int, max_len: int):
        super().__init__()
        position = torch.arange(max_len).unsqueeze(1)
        div = torch.exp(torch.arange(0, dim, 2) * (-math.log(10000.0) / dim))
        table = torch.zeros(max_len, dim)
        table[:, 0::2] = torch.sin(position * div)
        table[:, 1::2] = torch.cos(position * div)
        self.register_buffer("table", table)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.table[: x.size(1)]


class Seq2SeqTransformer(nn.Module):
    def __init__(self, cfg: TrainConfig, vocab_size: int, pad_id: int):
        super().__init__()
        self.pad_id = pad_id
        self.embed = nn.Embedding(vocab_size, cfg.model_dim, padding_idx=pad_id)
        self.positions = SinusoidalPositions(cfg.model_dim, cfg.max_seq_len)
        self.scale = math.sqrt(cfg.model_dim)
        self.transformer = nn.Transformer(
            d_model=cfg.model_dim,
            nhead=cfg.heads,
            num_encoder_layers=cfg.encoder_layers,
            num_decoder_layers=cfg.decoder_layers,
            dim_feedforward=cfg.ff_dim,
            dropout=cfg.dropout,
            batch_first=True,
        )
        # keep one code path for train and eval: the fused nested-tensor
        # shortcut would make padded eval batches take a different kernel
        self.transformer.encoder.enable_nested_tensor = False
        if hasattr(self.transformer.encoder, "use_nested_tensor"):
            self.transformer.encoder.use_nested_tensor = False
        self.generator = nn.Linear(cfg.model_dim, vocab_size)

    def _prepare(self, ids: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        pad_mask = ids == self.pad_id
        return self.positions(self.embed(ids) * self.scale), pad_mask

    def encode(self, src: torch.Tensor) -> torch.Tensor:
        """Last encoder-layer states, [B, L, D]."""
        x, pad_mask = self._prepare(src)
        return self.transformer.encoder(x, src_key_padding_mask=pad_mask)

    def forward(self, src: torch.Tensor, tgt_in: torch.Tensor) -> torch.Tensor:
        """Logits over the vocabulary for each target position, [B, L, V]."""
        x, src_pad = self._prepare(src)
        y, tgt_pad = self._prepare(tgt_in)
        causal = nn.Transformer.generate_square_subsequent_mask(
            tgt_in.size(1), dtype=torch.bool
        )
        out = self.transformer(
            x,
            y,
            tgt_mask=causal,
            src_key_padding_mask=src_pad,
            tgt_key_padding_mask=tgt_pad,
            memory_key_padding_mask=src_pad,
        )
        return self.generator(out)


def content_mask(ids: torch.Tensor, vocab: Vocabulary) -> torch.Tensor:
    """True at positions that carry expression tokens (no pad/bos/eos)."""
    return (ids != vocab.pad_id) & (ids != vocab.bos_id) & (ids != vocab.eos_id)


def pool_hidden(hidden: torch.Tensor, mask: torch.Tensor, mode: str) -> torch.Tensor:
    """Pool [B, L, D] states into [B, D] over masked-in positions."""
    if not bool(mask.any(dim=1).all()):
        raise ValueError("every sequence must have at least one content position")
    expanded = mask.unsqueeze(-1)
    if mode == "max":
        filled = hidden.masked_fill(~expanded, float("-inf"))
        return filled.max(dim=1).values
    if mode == "mean":
        total = (hidden * expanded).sum(dim=1)
        return total / expanded.sum(dim=1)
    raise ValueError(f"unknown pooling mode {mode!r}")


@dataclass
class EncoderArtifact:
    """Trained (or freshly initialized) weights plus the tokenizer."""

    model: Seq2SeqTransformer
    vocab: Vocabulary
    config: TrainConfig

    @property
    def dimension(self) -> int:
        return self.config.model_dim

    def embed_expressions(
        self, expressions: Sequence[str], batch_size: int = 128
    ) -> torch.Tensor:
        """Pooled embeddings, [N, D]; deterministic (eval mode, no grad)."""
        self.model.eval()
        chunks = []
        with torch.no_grad():
            for i in range(0, len(expressions), batch_size):
                batch = expressions[i : i + batch_size]
                ids = pad_batch(
                    [self.vocab.encode(e, self.config.max_seq_len) for e in batch],
                    self.vocab.pad_id,
                )
                hidden = self.model.encode(ids)
                chunks.append(
                    pool_hidden(hidden, content_mask(ids, self.vocab), self.config.pooling)
                )
        return torch.cat(chunks, dim=0)

    def save(self, path: Union[str, Path]) -> None:
        torch.save(
            {
                "state_dict": self.model.state_dict(),
                "config": asdict(self.config),
                "vocab_tokens": list(self.vocab.tokens),
            },
            path,
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EncoderArtifact":
        payload = torch.load(path, map_location="cpu", weights_only=True)
        cfg = TrainConfig(**payload["config"])
        vocab = Vocabulary(tuple(payload["vocab_tokens"]))
        model = Seq2SeqTransformer(cfg, len(vocab), vocab.pad_id)
        model.load_state_dict(payload["state_dict"])
        return cls(model=model, vocab=vocab, config=cfg)
